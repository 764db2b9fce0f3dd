#pragma once

#include "plcutseg/core/ops.hpp"
#include "plcutseg/data/augment.hpp"
#include "plcutseg/data/manifest.hpp"
#include "plcutseg/data/pseudo_label_store.hpp"

namespace plcutseg::data {

using core::ValidityMask;

enum class DomainTag { RealLabeled, RealPseudo, Synthetic, Interpolated };
const char* domain_tag_name(DomainTag t);

enum class TrainingMode { SelfSup, SemiSup };
const char* training_mode_name(TrainingMode m);
TrainingMode training_mode_from(const std::string& name);

/// One segmentation training example: augmented normalized image, its target
/// mask, and the per-pixel validity applied to the loss.
struct BatchEntry {
  std::string id;
  DomainTag tag = DomainTag::Synthetic;
  ImageTensor image;
  SegMask target;
  ValidityMask validity;
};

/// Provenance of one interpolated entry: entries[p], entries[q] of the
/// original batch mixed with coefficient lambda on p.
struct MixupRecord {
  int p = 0;
  int q = 0;
  double lambda = 0.0;
};

struct TrainingBatch {
  std::vector<BatchEntry> entries;
  int original_m = 0;  // entries before mixup extension
  std::vector<MixupRecord> mixup_log;

  // Real-domain images for the translation stage (always batch_size/2 of
  // them). When pseudo-labels are on these alias the real entries' images;
  // otherwise they are drawn separately, since translation needs no labels.
  std::vector<ImageTensor> translation_reals;
};

/// Draws batches per the half-real/half-synthetic discipline. Sampling is
/// without replacement within a batch and cycles with reshuffle across
/// batches; start_epoch(e) derives the epoch's rng from (seed, e), so batch
/// content is a function of (seed, epoch, step) and survives resume.
class BatchComposer {
public:
  BatchComposer(const SplitManifest& manifest, TrainingMode mode, bool use_pseudo_labels,
                bool confidence_mask_enabled, double confidence_threshold,
                AugmentationConfig aug, std::uint64_t seed);

  void start_epoch(int epoch);
  int steps_per_epoch(int batch_size) const;  // ceil(|D^S| / (batch_size/2))

  /// Composes the next batch. `store` may be null only when pseudo-labels
  /// are disabled. Entry order: real-labeled, real-pseudo, then synthetic.
  TrainingBatch compose_batch(const PseudoLabelStore* store, int batch_size);

  TrainingMode mode() const { return mode_; }
  bool use_pseudo_labels() const { return use_pseudo_labels_; }
  const AugmentationConfig& aug() const { return aug_; }

private:
  struct Cycler {
    std::vector<int> order;
    std::size_t cursor = 0;
    void reset(std::size_t n, Rng& rng);
    int next(Rng& rng);
  };

  BatchEntry make_gt_entry(const SampleRef& ref, DomainTag tag);
  BatchEntry make_pseudo_entry(const SampleRef& ref, const PseudoLabelStore& store);
  ImageTensor make_translation_real(const SampleRef& ref);

  const SplitManifest& manifest_;
  TrainingMode mode_;
  bool use_pseudo_labels_;
  bool conf_enabled_;
  double conf_threshold_;
  AugmentationConfig aug_;
  std::uint64_t seed_;
  Rng epoch_rng_;
  bool epoch_started_ = false;
  Cycler synthetic_;
  Cycler labeled_;
  Cycler pseudo_;
  Cycler pooled_real_;  // labeled + unlabeled, for label-free translation draws
};

/// Appends one interpolated entry per original (batch size doubles). Pairs
/// (p,q), p != q, are drawn uniformly from the originals; lambda ~
/// Beta(alpha,alpha). Originals stay unchanged and first.
TrainingBatch extend_with_mixup(TrainingBatch batch, double alpha, Rng& rng);

}  // namespace plcutseg::data
