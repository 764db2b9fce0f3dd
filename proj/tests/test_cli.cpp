// Drives the installed binary as a subprocess; PLCUTSEG_CLI_PATH is injected
// by the build so the tests always exercise the freshly built executable.

#include <doctest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "plcutseg/eval/report.hpp"

namespace fs = std::filesystem;

namespace {

struct CliResult {
  int exit_code = -1;
  std::string output;  // stdout and stderr interleaved
};

const fs::path& work_root() {
  static fs::path root = [] {
    fs::path p = fs::temp_directory_path() / "plcutseg_cli_test";
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return root;
}

CliResult run_cli(const std::string& args) {
  static int counter = 0;
  fs::path capture = work_root() / ("out_" + std::to_string(counter++) + ".txt");
  std::string cmd = std::string(PLCUTSEG_CLI_PATH) + " " + args + " > " + capture.string() +
                    " 2>&1";
  int status = std::system(cmd.c_str());
  CliResult r;
  if (WIFEXITED(status)) r.exit_code = WEXITSTATUS(status);
  std::ifstream in(capture);
  std::ostringstream buf;
  buf << in.rdbuf();
  r.output = buf.str();
  return r;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// stable content fingerprint of a directory tree: relative path + bytes
std::uint64_t tree_hash(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(root))
    if (entry.is_regular_file())
      files[fs::relative(entry.path(), root).generic_string()] = read_file(entry.path());
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&](const std::string& s) {
    for (unsigned char c : s) h = (h ^ c) * 1099511628211ull;
  };
  for (const auto& [rel, bytes] : files) {
    mix(rel);
    mix(bytes);
  }
  return h;
}

int count_files(const fs::path& dir) {
  int n = 0;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file()) ++n;
  return n;
}

// Shared pipeline fixture: toy data, a manifest, and one completed 1-epoch
// run whose checkpoints feed the eval/translate cases.
struct Pipeline {
  fs::path toy, manifest, run_dir, config;
};

const Pipeline& pipeline() {
  static Pipeline p = [] {
    Pipeline f;
    f.toy = work_root() / "toy";
    f.manifest = work_root() / "split.jsonl";
    f.run_dir = work_root() / "run";
    f.config = work_root() / "cfg.json";

    auto gen = run_cli("gen-toy --out " + f.toy.string() + " --seed 11 --counts 6,4,2 --size 16");
    REQUIRE(gen.exit_code == 0);
    auto split = run_cli("split --real " + (f.toy / "real").string() + " --synthetic " +
                         (f.toy / "synthetic").string() + " --beta 0 --seed 2 --out " +
                         f.manifest.string());
    REQUIRE(split.exit_code == 0);

    std::ofstream cfg(f.config);
    cfg << R"({
  "output_dir": ")" << f.run_dir.string() << R"(",
  "data": { "manifest": ")" << f.manifest.string() << R"(" },
  "train": {
    "mode": "self-sup", "epochs": 1, "batch_size": 4, "seed": 9,
    "lr_translation": 0.001, "lr_segmentation": 0.001,
    "pseudo_labels": true, "mixup": true, "confidence_mask": true
  },
  "augment": { "source_size": 16, "crop_size": 16 },
  "translation": { "ngf": 2, "n_res": 1, "ndf": 2, "embed_dim": 4, "n_patches": 4 },
  "segmentation": { "backbone": "tiny_unet", "base_channels": 2 },
  "eval": { "datasets": [ { "name": "toy-test", "root": ")"
        << (f.toy / "test").string() << R"(" } ] }
})";
    cfg.close();
    auto train = run_cli("train --config " + f.config.string());
    REQUIRE_MESSAGE(train.exit_code == 0, train.output);
    return f;
  }();
  return p;
}

}  // namespace

TEST_CASE("cli: help text and argument validation") {
  CHECK(run_cli("--help").exit_code == 0);
  for (const char* sub : {"gen-toy", "split", "train", "eval", "score", "translate"}) {
    CliResult r = run_cli(std::string(sub) + " --help");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("--") != std::string::npos);
  }
  CHECK(run_cli("").exit_code != 0);            // a subcommand is required
  CHECK(run_cli("frobnicate").exit_code != 0);  // unknown subcommand
  CHECK(run_cli("gen-toy").exit_code != 0);     // --out is required
}

TEST_CASE("cli gen-toy: layout, counts and byte determinism") {
  fs::path a = work_root() / "gen_a", b = work_root() / "gen_b", c = work_root() / "gen_c";
  CHECK(run_cli("gen-toy --out " + a.string() + " --seed 5 --counts 4,3,2 --size 16").exit_code == 0);
  CHECK(run_cli("gen-toy --out " + b.string() + " --seed 5 --counts 4,3,2 --size 16").exit_code == 0);
  CHECK(run_cli("gen-toy --out " + c.string() + " --seed 6 --counts 4,3,2 --size 16").exit_code == 0);

  CHECK(count_files(a / "synthetic" / "images") == 4);
  CHECK(count_files(a / "synthetic" / "masks") == 4);
  CHECK(count_files(a / "real" / "images") == 3);
  CHECK(count_files(a / "real_masks") == 3);
  CHECK(count_files(a / "test" / "images") == 2);
  CHECK(count_files(a / "test" / "masks") == 2);

  CHECK(tree_hash(a) == tree_hash(b));
  CHECK(tree_hash(a) != tree_hash(c));

  CliResult bad = run_cli("gen-toy --out " + (work_root() / "gen_bad").string() + " --counts 4,3");
  CHECK(bad.exit_code != 0);
  CHECK(bad.output.find("--counts") != std::string::npos);
}

TEST_CASE("cli split: deterministic manifests and labeled accounting") {
  const Pipeline& f = pipeline();
  fs::path m1 = work_root() / "m1.jsonl", m2 = work_root() / "m2.jsonl";
  std::string base = "split --real " + (f.toy / "real").string() + " --synthetic " +
                     (f.toy / "synthetic").string() + " --seed 4 --out ";

  CliResult r1 = run_cli(base + m1.string() + " --beta 0");
  CHECK(r1.exit_code == 0);
  CHECK(r1.output.find("labeled: 0") != std::string::npos);
  CHECK(r1.output.find("unlabeled: 4") != std::string::npos);
  CHECK(r1.output.find("synthetic: 6") != std::string::npos);

  CliResult r2 = run_cli(base + m2.string() + " --beta 0");
  CHECK(r2.exit_code == 0);
  CHECK(read_file(m1) == read_file(m2));

  // labeling reals needs their ground truth
  CliResult nomasks = run_cli(base + (work_root() / "m3.jsonl").string() + " --beta 50");
  CHECK(nomasks.exit_code != 0);

  CliResult labeled = run_cli(base + (work_root() / "m4.jsonl").string() + " --beta 50" +
                              " --real-masks " + (f.toy / "real_masks").string());
  CHECK(labeled.exit_code == 0);
  CHECK(labeled.output.find("labeled: 2") != std::string::npos);
  CHECK(labeled.output.find("unlabeled: 2") != std::string::npos);
}

TEST_CASE("cli train: artifacts of a completed run") {
  const Pipeline& f = pipeline();
  CHECK(fs::exists(f.run_dir / "last.ckpt"));
  CHECK(fs::exists(f.run_dir / "best.ckpt"));
  CHECK(fs::exists(f.run_dir / "epoch_log.jsonl"));
  CHECK(fs::exists(f.run_dir / "report.txt"));
  CHECK(fs::exists(f.run_dir / "report.csv"));

  auto grid = plcutseg::eval::parse_report_csv(read_file(f.run_dir / "report.csv"));
  REQUIRE(grid.datasets.size() == 1);
  CHECK(grid.datasets[0] == "toy-test");
  REQUIRE(grid.cells.size() == 1);
  CHECK(grid.cells[0][0].mdice >= 0.0);
  CHECK(grid.cells[0][0].mdice <= 1.0);
  CHECK(grid.row_labels[0].find("self-sup") != std::string::npos);
}

TEST_CASE("cli train: a config without a manifest is rejected up front") {
  fs::path cfg = work_root() / "no_manifest.json";
  std::ofstream(cfg) << R"({ "output_dir": ")" << (work_root() / "nm_run").string() << R"(" })";
  CliResult r = run_cli("train --config " + cfg.string());
  CHECK(r.exit_code != 0);
  CHECK(r.output.find("data.manifest") != std::string::npos);

  CHECK(run_cli("train").exit_code != 0);  // neither --config nor --resume
}

TEST_CASE("cli score: identical folders are a perfect match") {
  const Pipeline& f = pipeline();
  fs::path masks = f.toy / "synthetic" / "masks";
  fs::path csv = work_root() / "score.csv";
  CliResult r = run_cli("score --pred " + masks.string() + " --gt " + masks.string() +
                        " --csv " + csv.string());
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("100.00") != std::string::npos);

  auto grid = plcutseg::eval::parse_report_csv(read_file(csv));
  CHECK(grid.cells[0][0].mdice == 1.0);
  CHECK(grid.cells[0][0].iou == 1.0);

  CliResult mismatch = run_cli("score --pred " + masks.string() + " --gt " +
                               (f.toy / "test" / "masks").string());
  CHECK(mismatch.exit_code != 0);
  CHECK(mismatch.output.find("unmatched") != std::string::npos);
}

TEST_CASE("cli eval: runs configured datasets and rejects unknown names") {
  const Pipeline& f = pipeline();
  fs::path ckpt = f.run_dir / "last.ckpt";
  fs::path csv = work_root() / "eval.csv";

  CliResult ok = run_cli("eval --checkpoint " + ckpt.string() + " --csv " + csv.string());
  CHECK(ok.exit_code == 0);
  CHECK(ok.output.find("toy-test") != std::string::npos);
  auto grid = plcutseg::eval::parse_report_csv(read_file(csv));
  CHECK(grid.datasets == std::vector<std::string>{"toy-test"});

  CliResult named = run_cli("eval --checkpoint " + ckpt.string() + " --datasets toy-test");
  CHECK(named.exit_code == 0);

  CliResult bad = run_cli("eval --checkpoint " + ckpt.string() + " --datasets nope");
  CHECK(bad.exit_code != 0);
  CHECK(bad.output.find("unknown dataset 'nope'") != std::string::npos);
  CHECK(bad.output.find("toy-test") != std::string::npos);  // lists the known names

  CHECK(run_cli("eval --checkpoint " + (work_root() / "missing.ckpt").string()).exit_code != 0);
}

TEST_CASE("cli translate: mirrors input names and reruns byte-identically") {
  const Pipeline& f = pipeline();
  fs::path ckpt = f.run_dir / "last.ckpt";
  fs::path in_dir = f.toy / "real" / "images";
  fs::path out1 = work_root() / "trans1", out2 = work_root() / "trans2";

  CliResult r1 = run_cli("translate --checkpoint " + ckpt.string() + " --in " + in_dir.string() +
                         " --out " + out1.string());
  CHECK(r1.exit_code == 0);
  CHECK(count_files(out1) == count_files(in_dir));
  for (const auto& entry : fs::directory_iterator(in_dir))
    CHECK(fs::exists(out1 / (entry.path().stem().string() + ".png")));

  CliResult r2 = run_cli("translate --checkpoint " + ckpt.string() + " --in " + in_dir.string() +
                         " --out " + out2.string());
  CHECK(r2.exit_code == 0);
  CHECK(tree_hash(out1) == tree_hash(out2));

  CliResult empty = run_cli("translate --checkpoint " + ckpt.string() + " --in " +
                            (work_root() / "nothing").string() + " --out " +
                            (work_root() / "trans3").string());
  CHECK(empty.exit_code != 0);
}
