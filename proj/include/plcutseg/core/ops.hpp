#pragma once

#include <tuple>

#include "plcutseg/common.hpp"
#include "plcutseg/core/types.hpp"

namespace plcutseg::core {

/// Soft DICE loss over the validity-selected pixels:
/// 1 - (2*sum(p*t) + eps) / (sum(p) + sum(t) + eps), sums over valid pixels.
/// All-false validity yields LossValue::sentinel() (no 0/0, caller skips it).
LossValue dice_loss(const SegMask& pred, const SegMask& target, const ValidityMask& validity,
                    double eps = 1.0);

/// Intersection-over-union after binarizing both masks at the threshold.
/// Both-empty counts as 1.0.
double iou(const SegMask& pred, const SegMask& target, double binarize_threshold = 0.5);

/// Per-image DICE score, 2|P&T|/(|P|+|T|), binarized at 0.5, both-empty = 1.0.
double dice_score(const SegMask& pred, const SegMask& target);

/// A pixel is valid iff the model is confident either way:
/// pred >= threshold (polyp) or pred <= 1 - threshold (background).
ValidityMask confidence_mask(const SegMask& pred, double threshold);

/// Convex combination lambda*a + (1-lambda)*b of image and mask; validity is
/// the pixel-wise AND of the inputs (an interpolation with an untrusted
/// operand is untrusted).
std::tuple<ImageTensor, SegMask, ValidityMask> mixup_pair(
    const ImageTensor& a_img, const SegMask& a_mask, const ValidityMask& a_valid,
    const ImageTensor& b_img, const SegMask& b_mask, const ValidityMask& b_valid,
    double lambda);

/// lambda ~ Beta(alpha, alpha), drawn as g1/(g1+g2) with g ~ Gamma(alpha, 1).
double sample_mixup_lambda(double alpha, Rng& rng);

}  // namespace plcutseg::core
