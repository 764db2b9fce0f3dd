// Single-binary entry point: toy data generation, split manifests, training,
// evaluation, folder scoring, and frozen-generator translation.

#include <omp.h>

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "plcutseg/data/image_io.hpp"
#include "plcutseg/data/manifest.hpp"
#include "plcutseg/data/toy_generator.hpp"
#include "plcutseg/eval/report.hpp"
#include "plcutseg/trainer/trainer.hpp"
#include "plcutseg/translation/losses.hpp"

namespace fs = std::filesystem;
using namespace plcutseg;

namespace {

std::string variant_label(const trainer::TrainConfig& t) {
  std::string label = data::training_mode_name(t.mode);
  label += " " + std::to_string(static_cast<int>(t.beta)) + "%";
  if (!t.pseudo_labels) return label + " baseline";
  label += " +pl";
  if (t.mixup) label += "+mixup";
  if (t.confidence_mask) label += "+conf";
  return label;
}

eval::ReportGrid single_row_grid(const std::string& row_label,
                                 const std::vector<eval::BenchmarkResult>& results) {
  eval::ReportGrid grid;
  grid.row_labels.push_back(row_label);
  grid.cells.emplace_back();
  for (const auto& r : results) {
    grid.datasets.push_back(r.dataset);
    grid.cells[0].push_back({r.mdice, r.iou});
  }
  return grid;
}

void emit_report(const eval::ReportGrid& grid, const std::string& csv_path) {
  std::cout << eval::render_report(grid);
  if (csv_path.empty()) return;
  fs::path p(csv_path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p);
  require(out.good(), "cannot open csv output: " + csv_path);
  out << eval::render_report_csv(grid);
}

void run_gen_toy(const std::string& out, std::uint64_t seed, const std::string& counts_arg,
                 int size) {
  data::ToyCounts counts;
  if (std::sscanf(counts_arg.c_str(), "%d,%d,%d", &counts.synthetic, &counts.real,
                  &counts.test) != 3)
    throw ContractError("--counts must be A,B,C (synthetic,real,test)");
  data::generate_toy_dataset(out, counts, size, seed);
  std::cout << "generated " << counts.synthetic << " synthetic / " << counts.real << " real / "
            << counts.test << " test samples at " << size << "x" << size << " under " << out
            << "\n";
}

void run_split(const std::string& real_dir, const std::string& synthetic_dir, double beta,
               std::uint64_t seed, const std::string& out, const std::string& real_masks,
               const std::string& dataset) {
  auto reals = data::ingest_dataset(real_dir, data::Provenance::UnlabeledReal);
  auto synth = data::ingest_dataset(synthetic_dir, data::Provenance::Synthetic);
  std::optional<fs::path> masks_dir;
  if (!real_masks.empty()) masks_dir = fs::path(real_masks);
  auto manifest = data::make_split(std::move(reals), std::move(synth), beta, seed, dataset,
                                   masks_dir);
  data::save_manifest(manifest, out);
  std::cout << "labeled: " << manifest.labeled.size() << "\nunlabeled: "
            << manifest.unlabeled.size() << "\nsynthetic: " << manifest.synthetic.size()
            << "\nmanifest: " << out << "\n";
}

void run_train(const std::string& config_path, const std::string& manifest_path,
               const std::string& resume_path, std::int64_t seed_override) {
  trainer::RunConfig cfg;
  if (!resume_path.empty()) {
    auto state = trainer::load_checkpoint(resume_path);
    cfg = trainer::parse_run_config(state.config);
    if (!config_path.empty()) {
      auto given = trainer::load_run_config(config_path);
      require(trainer::run_config_to_json(given) == trainer::run_config_to_json(cfg),
              "--config disagrees with the checkpoint's config snapshot; drop --config or "
              "point --resume at a matching run");
    }
  } else {
    require(!config_path.empty(), "train requires --config (or --resume)");
    cfg = trainer::load_run_config(config_path);
  }
  if (seed_override >= 0) {
    require(resume_path.empty(), "--seed cannot change a resumed run");
    cfg.train.seed = static_cast<std::uint64_t>(seed_override);
  }
  std::string mpath = !manifest_path.empty() ? manifest_path : cfg.manifest;
  require(!mpath.empty(), "no manifest given: set data.manifest in the config or pass --manifest");
  cfg.manifest = mpath;

  auto manifest = data::load_manifest(mpath);
  trainer::Trainer t(cfg, std::move(manifest));
  if (!resume_path.empty()) t.resume_from(resume_path);

  std::cout << "training " << variant_label(cfg.train) << " for " << cfg.train.epochs
            << " epochs (" << t.completed_epochs() << " done), " << t.steps_per_epoch()
            << " steps/epoch, output: " << cfg.output_dir << "\n";
  auto reports = t.train();
  for (const auto& r : reports) {
    std::cout << "epoch " << r.epoch << ": ";
    for (const auto& e : r.evals) std::cout << e.dataset << " mDICE " << e.mdice << " ";
    std::cout << "(" << r.seconds << "s)\n";
  }

  const auto& results = !t.best_evals().empty()
                            ? t.best_evals()
                            : (reports.empty() ? std::vector<eval::BenchmarkResult>{}
                                               : reports.back().evals);
  if (!results.empty()) {
    auto grid = single_row_grid(variant_label(cfg.train), results);
    fs::path out_dir(cfg.output_dir);
    std::ofstream txt(out_dir / "report.txt");
    txt << eval::render_report(grid);
    emit_report(grid, (out_dir / "report.csv").string());
    std::cout << "best mDICE: " << t.best_mdice() << "\n";
  }
}

void run_eval(const std::string& ckpt, const std::vector<std::string>& datasets,
              const std::string& csv_path) {
  auto model = trainer::load_frozen_model(ckpt);
  const auto& known = model.config.eval_datasets;
  require(!known.empty(), "checkpoint config defines no eval datasets");

  std::vector<trainer::EvalDataset> chosen;
  if (datasets.empty()) {
    chosen = known;
  } else {
    for (const auto& name : datasets) {
      auto it = std::find_if(known.begin(), known.end(),
                             [&](const auto& d) { return d.name == name; });
      if (it == known.end()) {
        std::string names;
        for (const auto& d : known) names += (names.empty() ? "" : ", ") + d.name;
        throw ContractError("unknown dataset '" + name + "' (known: " + names + ")");
      }
      chosen.push_back(*it);
    }
  }
  std::vector<eval::BenchmarkResult> results;
  for (const auto& ds : chosen) {
    auto refs = data::ingest_dataset(ds.root, data::Provenance::LabeledReal);
    results.push_back(eval::evaluate_model(*model.U, refs, model.config.augment, ds.name));
  }
  emit_report(single_row_grid("epoch " + std::to_string(model.epoch), results), csv_path);
}

void run_score(const std::string& pred, const std::string& gt, const std::string& csv_path) {
  auto result = eval::score_folders(pred, gt);
  emit_report(single_row_grid("score", {result}), csv_path);
}

void run_translate(const std::string& ckpt, const std::string& in_dir,
                   const std::string& out_dir) {
  auto model = trainer::load_frozen_model(ckpt);
  const int size = model.config.augment.source_size;
  fs::create_directories(out_dir);
  std::vector<fs::path> inputs;
  for (const auto& entry : fs::directory_iterator(in_dir)) {
    if (!entry.is_regular_file()) continue;
    const auto ext = entry.path().extension().string();
    if (ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".bmp")
      inputs.push_back(entry.path());
  }
  require(!inputs.empty(), "no images found under " + in_dir);
  std::sort(inputs.begin(), inputs.end());
  for (const auto& p : inputs) {
    auto img = data::standardize(data::read_image(p), size).normalize();
    auto translated = translation::translate(*model.G, img);
    data::write_image(fs::path(out_dir) / (p.stem().string() + ".png"),
                      translated.denormalize());
  }
  std::cout << "translated " << inputs.size() << " images to " << out_dir << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"synthetic-to-real translation + polyp segmentation pipeline"};
  app.require_subcommand(1);
  int workers = 0;
  app.add_option("--workers", workers, "thread count for internal parallelism (0 = library default)");

  auto* gen = app.add_subcommand("gen-toy", "generate the deterministic toy dataset");
  std::string gen_out;
  std::uint64_t gen_seed = 1;
  std::string gen_counts = "200,100,40";
  int gen_size = 64;
  gen->add_option("--out", gen_out, "output root directory")->required();
  gen->add_option("--seed", gen_seed, "rng seed")->capture_default_str();
  gen->add_option("--counts", gen_counts, "synthetic,real,test counts")->capture_default_str();
  gen->add_option("--size", gen_size, "square image size")->capture_default_str();

  auto* split = app.add_subcommand("split", "build a labeled/unlabeled/synthetic manifest");
  std::string sp_real, sp_syn, sp_out, sp_masks, sp_dataset = "dataset";
  double sp_beta = 0.0;
  std::uint64_t sp_seed = 1;
  split->add_option("--real", sp_real, "real dataset root (images/ inside)")->required();
  split->add_option("--synthetic", sp_syn, "synthetic dataset root (images/ + masks/)")->required();
  split->add_option("--beta", sp_beta, "percentage of reals with labels")->capture_default_str();
  split->add_option("--seed", sp_seed, "rng seed")->capture_default_str();
  split->add_option("--out", sp_out, "manifest output path")->required();
  split->add_option("--real-masks", sp_masks, "directory with real ground-truth masks");
  split->add_option("--dataset", sp_dataset, "dataset name recorded in the manifest")->capture_default_str();

  auto* train = app.add_subcommand("train", "run the two-step training loop");
  std::string tr_config, tr_manifest, tr_resume;
  std::int64_t tr_seed = -1;
  train->add_option("--config", tr_config, "run config (json)");
  train->add_option("--manifest", tr_manifest, "split manifest (overrides data.manifest)");
  train->add_option("--resume", tr_resume, "checkpoint to resume from");
  train->add_option("--seed", tr_seed, "seed override (new runs only)");

  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on configured datasets");
  std::string ev_ckpt, ev_csv;
  std::vector<std::string> ev_datasets;
  ev->add_option("--checkpoint", ev_ckpt, "checkpoint file")->required();
  ev->add_option("--datasets", ev_datasets, "dataset names (default: all configured)");
  ev->add_option("--csv", ev_csv, "write the machine-readable grid here");

  auto* sc = app.add_subcommand("score", "score a folder of predictions against ground truth");
  std::string sc_pred, sc_gt, sc_csv;
  sc->add_option("--pred", sc_pred, "prediction mask directory")->required();
  sc->add_option("--gt", sc_gt, "ground-truth mask directory")->required();
  sc->add_option("--csv", sc_csv, "write the machine-readable grid here");

  auto* tl = app.add_subcommand("translate", "translate a folder with a frozen generator");
  std::string tl_ckpt, tl_in, tl_out;
  tl->add_option("--checkpoint", tl_ckpt, "checkpoint file")->required();
  tl->add_option("--in", tl_in, "input image directory")->required();
  tl->add_option("--out", tl_out, "output directory")->required();

  CLI11_PARSE(app, argc, argv);
  if (workers > 0) omp_set_num_threads(workers);

  try {
    if (gen->parsed()) run_gen_toy(gen_out, gen_seed, gen_counts, gen_size);
    if (split->parsed()) run_split(sp_real, sp_syn, sp_beta, sp_seed, sp_out, sp_masks, sp_dataset);
    if (train->parsed()) run_train(tr_config, tr_manifest, tr_resume, tr_seed);
    if (ev->parsed()) run_eval(ev_ckpt, ev_datasets, ev_csv);
    if (sc->parsed()) run_score(sc_pred, sc_gt, sc_csv);
    if (tl->parsed()) run_translate(tl_ckpt, tl_in, tl_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
