#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "plcutseg/data/augment.hpp"
#include "plcutseg/data/batch.hpp"

namespace plcutseg::trainer {

/// Optimization hyperparameters and ablation switches.
struct TrainConfig {
  data::TrainingMode mode = data::TrainingMode::SelfSup;
  double beta = 0.0;  // labeled-real percentage; informational, the manifest decides the split
  int epochs = 300;
  int batch_size = 4;  // M, half real + half synthetic
  double lr_translation = 1e-5;   // shared by G, D, H
  double lr_segmentation = 1e-5;  // U
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double lambda_xs = 1.0;
  double lambda_xr = 1.0;
  double lambda_s = 1.0;
  bool pseudo_labels = true;
  bool mixup = true;
  double mixup_alpha = 2.0;
  bool confidence_mask = true;
  double confidence_threshold = 0.999;
  std::uint64_t seed = 1;

  void validate() const;
};

struct TranslationConfig {
  int ngf = 16;
  int n_res = 2;
  int ndf = 16;
  int embed_dim = 256;
  int n_patches = 256;
  double tau = 0.07;

  void validate() const;
};

struct SegmentationConfig {
  std::string backbone = "tiny_unet";
  int base_channels = 16;

  void validate() const;
};

/// Evaluation target: a directory with images/ and masks/ subdirectories.
struct EvalDataset {
  std::string name;
  std::string root;
};

/// Full run configuration. Every field defaults except the data paths.
struct RunConfig {
  std::string output_dir = "runs/default";
  std::string manifest;  // path to a split manifest, required for training
  int workers = 1;
  TrainConfig train;
  data::AugmentationConfig augment;
  TranslationConfig translation;
  SegmentationConfig segmentation;
  std::vector<EvalDataset> eval_datasets;

  void validate() const;
};

/// Parses a JSON run config. Unknown keys anywhere in the document are a
/// hard error. Paths stay as written (resolution is the caller's business).
/// The PLCUTSEG_OUTPUT_DIR environment variable, when set and non-empty,
/// overrides output_dir.
RunConfig parse_run_config(const nlohmann::json& doc);
RunConfig load_run_config(const std::filesystem::path& file);
nlohmann::json run_config_to_json(const RunConfig& cfg);

/// The four ablation variants (baseline without pseudo-labels, +PL,
/// +PL+mixup, +PL+mixup+confidence) crossed with label levels {0,15,30}%.
/// Only the flags and mode/beta vary; everything else copies base.
struct AblationEntry {
  std::string variant;
  double beta;
  RunConfig config;
};
std::vector<AblationEntry> ablation_grid(const RunConfig& base);

}  // namespace plcutseg::trainer
