#pragma once

#include "plcutseg/data/batch.hpp"
#include "plcutseg/segmentation/backbone.hpp"

namespace plcutseg::segmentation {

/// Mean DICE loss over the batch with per-entry validity masking.
struct SegObjective {
  tensor::Var loss;       // scalar, differentiable
  core::LossValue value;  // per-domain-tag term breakdown
  int contributing = 0;   // entries whose validity selects at least one pixel
};

/// `images` is the live network input, one [3,H,W] row per batch entry (the
/// trainer substitutes translated rows for synthetic entries so gradients
/// reach the generator). Entries whose validity is all-false contribute the
/// sentinel and are excluded from the mean; an all-sentinel batch is a hard
/// error. Term weights are per-tag contribution counts over the total, so
/// the recorded scalar equals the weighted term sum.
SegObjective segmentation_objective(SegmentationBackbone& U, const tensor::Var& images,
                                    const data::TrainingBatch& batch, double eps = 1.0);

/// Same objective over the batch's stored (data-level) images.
SegObjective segmentation_objective(SegmentationBackbone& U,
                                    const data::TrainingBatch& batch, double eps = 1.0);

}  // namespace plcutseg::segmentation
