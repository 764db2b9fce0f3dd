#include "plcutseg/trainer/trainer.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "plcutseg/segmentation/objective.hpp"
#include "plcutseg/tensor/autograd.hpp"

namespace plcutseg::trainer {

namespace fs = std::filesystem;
using nlohmann::json;
using tensor::Tensor;
using tensor::Var;

double EpochReport::mean_mdice() const {
  if (evals.empty()) return -1.0;
  double s = 0.0;
  for (const auto& e : evals) s += e.mdice;
  return s / static_cast<double>(evals.size());
}

namespace {

void check_finite(const core::LossValue& v, const char* where) {
  bool ok = std::isfinite(v.scalar());
  for (const auto& t : v.terms()) ok = ok && std::isfinite(t.value);
  if (ok) return;
  std::ostringstream msg;
  msg << "non-finite loss in " << where << ':';
  for (const auto& t : v.terms()) msg << ' ' << t.name << '=' << t.value << " (w=" << t.weight << ')';
  msg << " total=" << (v.is_sentinel() ? std::nan("") : v.scalar());
  throw RuntimeError(msg.str());
}

Tensor stack_images(const std::vector<const Tensor*>& rows) {
  require(!rows.empty(), "stack_images: empty list");
  const auto& s0 = rows[0]->shape();
  require(s0.size() == 3, "stack_images: rows must be CHW");
  Tensor out({static_cast<int>(rows.size()), s0[0], s0[1], s0[2]});
  const std::size_t stride = rows[0]->numel();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    require(rows[i]->shape() == s0, "stack_images: mixed shapes");
    std::copy(rows[i]->data(), rows[i]->data() + stride, out.data() + i * stride);
  }
  return out;
}

std::vector<Var> vars_of_params(const std::vector<tensor::Param>& ps) {
  std::vector<Var> vs;
  vs.reserve(ps.size());
  for (const auto& p : ps) vs.push_back(p.var);
  return vs;
}

}  // namespace

Trainer::Trainer(RunConfig cfg, data::SplitManifest manifest)
    : cfg_(std::move(cfg)), manifest_(std::move(manifest)) {
  cfg_.validate();
  const auto& t = cfg_.train;

  Rng rng_g = seeded_rng(t.seed, "init:G");
  Rng rng_d = seeded_rng(t.seed, "init:D");
  Rng rng_h = seeded_rng(t.seed, "init:H");
  Rng rng_u = seeded_rng(t.seed, "init:U");

  translation::GeneratorConfig gcfg{cfg_.translation.ngf, cfg_.translation.n_res};
  G_ = std::make_unique<translation::GeneratorNet>(gcfg, rng_g);
  translation::DiscriminatorConfig dcfg{cfg_.translation.ndf};
  D_ = std::make_unique<translation::DiscriminatorNet>(dcfg, rng_d);
  translation::ProjectorConfig hcfg{cfg_.translation.embed_dim, cfg_.translation.n_patches,
                                    cfg_.translation.tau};
  H_ = std::make_unique<translation::PatchProjector>(G_->feature_channels(), hcfg, rng_h);
  U_ = segmentation::make_backbone(cfg_.segmentation.backbone, cfg_.segmentation.base_channels,
                                   rng_u);
  require(cfg_.augment.crop_size % G_->downsampling_factor() == 0 &&
              cfg_.augment.crop_size % U_->stride_requirement() == 0,
          "crop_size must be divisible by the network strides");

  params_G_ = G_->params("G");
  params_D_ = D_->params("D");
  params_H_ = H_->params("H");
  params_U_ = U_->params("U");
  opt_G_ = std::make_unique<tensor::Adam>(vars_of_params(params_G_), t.lr_translation,
                                          t.adam_beta1, t.adam_beta2);
  opt_D_ = std::make_unique<tensor::Adam>(vars_of_params(params_D_), t.lr_translation,
                                          t.adam_beta1, t.adam_beta2);
  opt_H_ = std::make_unique<tensor::Adam>(vars_of_params(params_H_), t.lr_translation,
                                          t.adam_beta1, t.adam_beta2);
  opt_U_ = std::make_unique<tensor::Adam>(vars_of_params(params_U_), t.lr_segmentation,
                                          t.adam_beta1, t.adam_beta2);

  composer_ = std::make_unique<data::BatchComposer>(manifest_, t.mode, t.pseudo_labels,
                                                    t.confidence_mask, t.confidence_threshold,
                                                    cfg_.augment, t.seed);
  if (t.pseudo_labels) {
    std::vector<std::string> ids;
    ids.reserve(manifest_.unlabeled.size());
    for (const auto& r : manifest_.unlabeled) ids.push_back(r.id);
    store_ = data::PseudoLabelStore::initial(ids, cfg_.augment.crop_size, cfg_.augment.crop_size);
  }
}

const std::vector<tensor::Param>& Trainer::group(const std::string& name) const {
  if (name == "G") return params_G_;
  if (name == "D") return params_D_;
  if (name == "H") return params_H_;
  if (name == "U") return params_U_;
  throw ContractError("unknown parameter group: " + name + " (known: G, D, H, U)");
}

std::uint64_t Trainer::param_hash(const std::string& name) const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& p : group(name)) {
    h = fnv1a(p.name, h);
    const Tensor& t = p.var->value;
    h = fnv1a(t.data(), t.numel() * sizeof(double), h);
  }
  return h;
}

Trainer::LiftedBatch Trainer::lift(const data::TrainingBatch& batch) const {
  std::vector<const Tensor*> syn_rows;
  for (int i = 0; i < batch.original_m; ++i) {
    const auto& e = batch.entries[static_cast<std::size_t>(i)];
    if (e.tag != data::DomainTag::Synthetic) continue;
    require(e.image.normalized(), "lift: synthetic entry image must be normalized: " + e.id);
    syn_rows.push_back(&e.image.values());
  }
  require(!syn_rows.empty(), "lift: batch has no synthetic entries");
  require(!batch.translation_reals.empty(), "lift: batch has no translation reals");
  std::vector<const Tensor*> real_rows;
  for (const auto& img : batch.translation_reals) {
    require(img.normalized(), "lift: translation real must be normalized");
    real_rows.push_back(&img.values());
  }
  return {tensor::constant(stack_images(syn_rows)), tensor::constant(stack_images(real_rows))};
}

core::LossValue Trainer::discriminator_step(const Var& z, const Var& x_r) {
  opt_D_->zero_grad();
  auto gan = translation::gan_losses(*D_, x_r, z);
  core::LossValue value(gan.d->value.item(), {{"gan_d", 1.0, gan.d->value.item()}});
  check_finite(value, "discriminator step");
  tensor::backward(gan.d);
  opt_D_->step();
  return value;
}

Var Trainer::assemble_seg_inputs(const Var& z, const data::TrainingBatch& batch) const {
  require(batch.entries.size() ==
              static_cast<std::size_t>(batch.original_m) + batch.mixup_log.size(),
          "assemble_seg_inputs: entry count does not match original_m + mixup_log");
  std::vector<Var> rows(batch.entries.size());
  std::size_t syn_row = 0;
  for (int i = 0; i < batch.original_m; ++i) {
    const auto& e = batch.entries[static_cast<std::size_t>(i)];
    if (e.tag == data::DomainTag::Synthetic) {
      rows[static_cast<std::size_t>(i)] = tensor::select_row(z, syn_row++);
    } else {
      require(e.image.normalized(), "assemble_seg_inputs: entry image must be normalized");
      rows[static_cast<std::size_t>(i)] = tensor::constant(e.image.values());
    }
  }
  require(syn_row == static_cast<std::size_t>(z->value.dim(0)),
          "assemble_seg_inputs: translated rows do not match synthetic entries");
  for (std::size_t k = 0; k < batch.mixup_log.size(); ++k) {
    const auto& mr = batch.mixup_log[k];
    require(mr.p >= 0 && mr.p < batch.original_m && mr.q >= 0 && mr.q < batch.original_m,
            "assemble_seg_inputs: mixup record indexes outside the originals");
    rows[static_cast<std::size_t>(batch.original_m) + k] =
        tensor::axpby(mr.lambda, rows[static_cast<std::size_t>(mr.p)], 1.0 - mr.lambda,
                      rows[static_cast<std::size_t>(mr.q)]);
  }
  return tensor::stack_rows(rows);
}

core::LossValue Trainer::joint_step(const Var& z, const LiftedBatch& lifted,
                                    const data::TrainingBatch& batch) {
  const auto& t = cfg_.train;
  opt_G_->zero_grad();
  opt_H_->zero_grad();
  opt_U_->zero_grad();

  // Generator GAN term against the step-1-updated discriminator.
  Var d_on_z = D_->forward(z);
  Var g_gan = tensor::mean_all(tensor::square(tensor::add_scalar(d_on_z, -1.0)));
  Var nce_s = translation::patchnce_loss(*G_, *H_, lifted.x_s, z, nce_rng_);
  Var z_r = G_->forward(lifted.x_r);
  Var nce_r = translation::patchnce_loss(*G_, *H_, lifted.x_r, z_r, nce_rng_);

  std::vector<Var> parts{g_gan, nce_s, nce_r};
  std::vector<double> weights{1.0, t.lambda_xs, t.lambda_xr};
  std::vector<core::LossTerm> logged{{"gan_g", 1.0, g_gan->value.item()},
                                     {"patchnce_syn", t.lambda_xs, nce_s->value.item()},
                                     {"patchnce_real", t.lambda_xr, nce_r->value.item()}};
  if (t.lambda_s > 0.0) {
    Var images = assemble_seg_inputs(z, batch);
    auto seg = segmentation::segmentation_objective(*U_, images, batch);
    parts.push_back(seg.loss);
    weights.push_back(t.lambda_s);
    logged.push_back({"seg_dice", t.lambda_s, seg.loss->value.item()});
  }
  Var total = tensor::weighted_sum(parts, weights);
  core::LossValue value(total->value.item(), std::move(logged));
  check_finite(value, "joint step");

  tensor::backward(total);
  opt_G_->step();
  opt_H_->step();
  if (t.lambda_s > 0.0) opt_U_->step();
  return value;
}

StepResult Trainer::train_step(const data::TrainingBatch& batch) {
  LiftedBatch lifted = lift(batch);
  Var z = G_->forward(lifted.x_s);
  core::LossValue d = discriminator_step(z, lifted.x_r);
  core::LossValue g = joint_step(z, lifted, batch);
  return {std::move(d), std::move(g)};
}

void Trainer::start_epoch(int epoch) {
  composer_->start_epoch(epoch);
  nce_rng_ = seeded_rng(cfg_.train.seed, "patchnce", static_cast<std::uint64_t>(epoch));
  mixup_rng_ = seeded_rng(cfg_.train.seed, "mixup", static_cast<std::uint64_t>(epoch));
}

data::TrainingBatch Trainer::next_batch() {
  auto batch = composer_->compose_batch(store_ ? &*store_ : nullptr, cfg_.train.batch_size);
  if (cfg_.train.mixup && batch.entries.size() >= 2)
    batch = data::extend_with_mixup(std::move(batch), cfg_.train.mixup_alpha, mixup_rng_);
  return batch;
}

int Trainer::steps_per_epoch() const { return composer_->steps_per_epoch(cfg_.train.batch_size); }

void Trainer::refresh_store() {
  if (!store_) return;
  auto preds = segmentation::predict_for_pseudo_labels(*U_, manifest_.unlabeled, cfg_.augment);
  store_ = data::refresh_pseudo_labels(*store_, preds);
}

eval::BenchmarkResult Trainer::evaluate_dataset(const EvalDataset& ds) {
  auto refs = data::ingest_dataset(ds.root, data::Provenance::LabeledReal);
  return eval::evaluate_model(*U_, refs, cfg_.augment, ds.name);
}

std::vector<EpochReport> Trainer::train() {
  const fs::path out_dir(cfg_.output_dir);
  fs::create_directories(out_dir);
  std::ofstream log(epoch_log_path(out_dir), std::ios::app);
  require(log.good(), "cannot open epoch log under " + out_dir.string());

  std::vector<EpochReport> reports;
  for (int epoch = completed_epochs_; epoch < cfg_.train.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    start_epoch(epoch);
    const int steps = steps_per_epoch();

    std::map<std::string, double> sums;
    for (int s = 0; s < steps; ++s) {
      auto batch = next_batch();
      StepResult res = train_step(batch);
      for (const auto& term : res.d.terms()) sums[term.name] += term.value;
      for (const auto& term : res.g.terms()) sums[term.name] += term.value;
      sums["step2_total"] += res.g.scalar();
    }

    // Exactly one store write per epoch: after the last batch, before eval.
    refresh_store();

    EpochReport rep;
    rep.epoch = epoch + 1;
    for (auto& [name, sum] : sums) rep.losses[name] = sum / static_cast<double>(steps);
    for (const auto& ds : cfg_.eval_datasets) rep.evals.push_back(evaluate_dataset(ds));
    rep.store_version = store_ ? store_->version() : 0;
    rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    completed_epochs_ = epoch + 1;
    const double metric = rep.mean_mdice();
    const bool improved = cfg_.eval_datasets.empty() || metric > best_mdice_;
    if (improved && !cfg_.eval_datasets.empty()) {
      best_mdice_ = metric;
      best_evals_ = rep.evals;
    }

    CheckpointState state = snapshot();
    save_checkpoint(last_checkpoint_path(out_dir), state);
    if (improved) save_checkpoint(best_checkpoint_path(out_dir), state);

    json rec;
    rec["epoch"] = rep.epoch;
    rec["seconds"] = rep.seconds;
    rec["losses"] = rep.losses;
    rec["store_version"] = rep.store_version;
    json evals = json::array();
    for (const auto& e : rep.evals)
      evals.push_back(
          {{"dataset", e.dataset}, {"mdice", e.mdice}, {"iou", e.iou}, {"count", e.count}});
    rec["eval"] = evals;
    log << rec.dump() << '\n';
    log.flush();

    reports.push_back(std::move(rep));
  }
  return reports;
}

CheckpointState Trainer::snapshot() const {
  CheckpointState state;
  state.config = run_config_to_json(cfg_);
  state.epoch = completed_epochs_;
  state.best_mdice = best_mdice_;
  for (const auto* ps : {&params_G_, &params_D_, &params_H_, &params_U_})
    for (const auto& p : *ps) state.groups.emplace_back(p.name, p.var->value);

  auto opt_state = [](const char* name, const tensor::Adam& opt) {
    OptimizerState os;
    os.name = name;
    os.step_count = opt.step_count();
    os.m = opt.first_moments();
    os.v = opt.second_moments();
    return os;
  };
  state.optimizers.push_back(opt_state("G", *opt_G_));
  state.optimizers.push_back(opt_state("D", *opt_D_));
  state.optimizers.push_back(opt_state("H", *opt_H_));
  state.optimizers.push_back(opt_state("U", *opt_U_));

  if (store_) {
    state.pl_version = store_->version();
    state.pl_h = store_->mask_h();
    state.pl_w = store_->mask_w();
    for (const auto& [id, mask] : store_->masks())
      state.pseudo_labels.emplace_back(id, mask.values());
  }
  return state;
}

void Trainer::resume_from(const fs::path& ckpt_file) {
  CheckpointState state = load_checkpoint(ckpt_file);

  std::map<std::string, Var> by_name;
  for (const auto* ps : {&params_G_, &params_D_, &params_H_, &params_U_})
    for (const auto& p : *ps) by_name[p.name] = p.var;
  require(state.groups.size() == by_name.size(),
          "checkpoint parameter group count does not match this configuration");
  for (const auto& [name, values] : state.groups) {
    auto it = by_name.find(name);
    require(it != by_name.end(), "checkpoint has unknown parameter group: " + name);
    require(it->second->value.shape() == values.shape(),
            "checkpoint shape mismatch for parameter: " + name);
    it->second->value = values;
  }

  require(state.optimizers.size() == 4, "checkpoint must carry four optimizer states");
  for (auto& os : state.optimizers) {
    tensor::Adam* opt = os.name == "G"   ? opt_G_.get()
                        : os.name == "D" ? opt_D_.get()
                        : os.name == "H" ? opt_H_.get()
                        : os.name == "U" ? opt_U_.get()
                                         : nullptr;
    require(opt != nullptr, "checkpoint has unknown optimizer state: " + os.name);
    opt->restore(os.step_count, std::move(os.m), std::move(os.v));
  }

  if (cfg_.train.pseudo_labels) {
    require(state.pl_h > 0 && state.pl_w > 0,
            "checkpoint lacks a pseudo-label store but pseudo-labels are enabled");
    std::map<std::string, core::SegMask> masks;
    for (auto& [id, values] : state.pseudo_labels)
      masks.emplace(id, core::SegMask(std::move(values)));
    store_ = data::PseudoLabelStore::restore(state.pl_version, state.pl_h, state.pl_w,
                                             std::move(masks));
  } else {
    require(state.pl_h == 0 && state.pseudo_labels.empty(),
            "checkpoint carries a pseudo-label store but pseudo-labels are disabled");
  }

  completed_epochs_ = state.epoch;
  best_mdice_ = state.best_mdice;
}

fs::path last_checkpoint_path(const fs::path& output_dir) { return output_dir / "last.ckpt"; }
fs::path best_checkpoint_path(const fs::path& output_dir) { return output_dir / "best.ckpt"; }
fs::path epoch_log_path(const fs::path& output_dir) { return output_dir / "epoch_log.jsonl"; }

FrozenModel load_frozen_model(const fs::path& ckpt_file) {
  CheckpointState state = load_checkpoint(ckpt_file);
  FrozenModel m;
  m.config = parse_run_config(state.config);
  m.epoch = state.epoch;
  m.best_mdice = state.best_mdice;

  const auto& t = m.config.train;
  Rng rng_g = seeded_rng(t.seed, "init:G");
  Rng rng_d = seeded_rng(t.seed, "init:D");
  Rng rng_h = seeded_rng(t.seed, "init:H");
  Rng rng_u = seeded_rng(t.seed, "init:U");
  translation::GeneratorConfig gcfg{m.config.translation.ngf, m.config.translation.n_res};
  m.G = std::make_unique<translation::GeneratorNet>(gcfg, rng_g);
  translation::DiscriminatorConfig dcfg{m.config.translation.ndf};
  m.D = std::make_unique<translation::DiscriminatorNet>(dcfg, rng_d);
  translation::ProjectorConfig hcfg{m.config.translation.embed_dim, m.config.translation.n_patches,
                                    m.config.translation.tau};
  m.H = std::make_unique<translation::PatchProjector>(m.G->feature_channels(), hcfg, rng_h);
  m.U = segmentation::make_backbone(m.config.segmentation.backbone,
                                    m.config.segmentation.base_channels, rng_u);

  std::map<std::string, Var> by_name;
  for (const auto& p : m.G->params("G")) by_name[p.name] = p.var;
  for (const auto& p : m.D->params("D")) by_name[p.name] = p.var;
  for (const auto& p : m.H->params("H")) by_name[p.name] = p.var;
  for (const auto& p : m.U->params("U")) by_name[p.name] = p.var;
  require(state.groups.size() == by_name.size(),
          "checkpoint parameter group count does not match its own config snapshot");
  for (auto& [name, values] : state.groups) {
    auto it = by_name.find(name);
    require(it != by_name.end(), "checkpoint has unknown parameter group: " + name);
    require(it->second->value.shape() == values.shape(),
            "checkpoint shape mismatch for parameter: " + name);
    it->second->value = std::move(values);
  }
  return m;
}

}  // namespace plcutseg::trainer
