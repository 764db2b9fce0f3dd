#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>

#include "plcutseg/data/batch.hpp"
#include "plcutseg/eval/evaluate.hpp"
#include "plcutseg/segmentation/backbone.hpp"
#include "plcutseg/tensor/optim.hpp"
#include "plcutseg/trainer/checkpoint.hpp"
#include "plcutseg/trainer/config.hpp"
#include "plcutseg/translation/losses.hpp"

namespace plcutseg::trainer {

struct EpochReport {
  int epoch = 0;  // 1-based, counts completed epochs
  double seconds = 0.0;
  std::map<std::string, double> losses;  // per-term means over the epoch's steps
  std::vector<eval::BenchmarkResult> evals;
  int store_version = 0;

  double mean_mdice() const;  // across eval datasets; -1 when there are none
};

struct StepResult {
  core::LossValue d;  // step 1, discriminator objective
  core::LossValue g;  // step 2, translation terms + weighted segmentation term
};

/// The two-step adversarial loop. Step 1 backpropagates the discriminator
/// loss (translated batch detached) and steps D's optimizer only. Step 2
/// backpropagates the generator GAN term, both patch-contrastive terms, and
/// lambda_s times the segmentation objective jointly, stepping G, H, and U
/// (U only when lambda_s > 0); D is never stepped in step 2. The
/// segmentation loss reaches G because synthetic rows of U's input are the
/// live translated batch.
class Trainer {
public:
  Trainer(RunConfig cfg, data::SplitManifest manifest);

  /// Restores parameters, optimizer states, pseudo-label store, progress.
  void resume_from(const std::filesystem::path& ckpt_file);

  /// Runs the remaining epochs. Per epoch: all steps, then exactly one
  /// pseudo-label refresh, then evaluation, then checkpoints (last + best).
  std::vector<EpochReport> train();

  // Pieces of one update, exposed so tests can observe parameter state
  // between the steps.
  struct LiftedBatch {
    tensor::Var x_s;  // synthetic rows, graph leaves
    tensor::Var x_r;  // translation-stage real rows
  };
  LiftedBatch lift(const data::TrainingBatch& batch) const;
  core::LossValue discriminator_step(const tensor::Var& z, const tensor::Var& x_r);
  core::LossValue joint_step(const tensor::Var& z, const LiftedBatch& lifted,
                             const data::TrainingBatch& batch);
  StepResult train_step(const data::TrainingBatch& batch);

  void start_epoch(int epoch);
  data::TrainingBatch next_batch();
  int steps_per_epoch() const;

  /// Content hash of a parameter group, for routing checks. Group is one of
  /// "G", "D", "H", "U".
  std::uint64_t param_hash(const std::string& group) const;

  CheckpointState snapshot() const;
  eval::BenchmarkResult evaluate_dataset(const EvalDataset& ds);

  const RunConfig& config() const { return cfg_; }
  const data::SplitManifest& manifest() const { return manifest_; }
  const data::PseudoLabelStore* store() const { return store_ ? &*store_ : nullptr; }
  int completed_epochs() const { return completed_epochs_; }
  double best_mdice() const { return best_mdice_; }
  const std::vector<eval::BenchmarkResult>& best_evals() const { return best_evals_; }
  translation::GeneratorNet& generator() { return *G_; }
  segmentation::SegmentationBackbone& backbone() { return *U_; }

private:
  tensor::Var assemble_seg_inputs(const tensor::Var& z, const data::TrainingBatch& batch) const;
  void refresh_store();
  const std::vector<tensor::Param>& group(const std::string& name) const;

  RunConfig cfg_;
  data::SplitManifest manifest_;
  std::unique_ptr<translation::GeneratorNet> G_;
  std::unique_ptr<translation::DiscriminatorNet> D_;
  std::unique_ptr<translation::PatchProjector> H_;
  std::unique_ptr<segmentation::SegmentationBackbone> U_;
  std::vector<tensor::Param> params_G_, params_D_, params_H_, params_U_;
  std::unique_ptr<tensor::Adam> opt_G_, opt_D_, opt_H_, opt_U_;
  std::unique_ptr<data::BatchComposer> composer_;
  std::optional<data::PseudoLabelStore> store_;
  Rng nce_rng_;
  Rng mixup_rng_;
  int completed_epochs_ = 0;
  double best_mdice_ = -1.0;
  std::vector<eval::BenchmarkResult> best_evals_;
};

std::filesystem::path last_checkpoint_path(const std::filesystem::path& output_dir);
std::filesystem::path best_checkpoint_path(const std::filesystem::path& output_dir);
std::filesystem::path epoch_log_path(const std::filesystem::path& output_dir);

/// Networks rebuilt from a checkpoint's config snapshot with parameters
/// loaded from its payload; for inference-only commands that need no
/// training data.
struct FrozenModel {
  RunConfig config;
  int epoch = 0;
  double best_mdice = -1.0;
  std::unique_ptr<translation::GeneratorNet> G;
  std::unique_ptr<translation::DiscriminatorNet> D;
  std::unique_ptr<translation::PatchProjector> H;
  std::unique_ptr<segmentation::SegmentationBackbone> U;
};
FrozenModel load_frozen_model(const std::filesystem::path& ckpt_file);

}  // namespace plcutseg::trainer
