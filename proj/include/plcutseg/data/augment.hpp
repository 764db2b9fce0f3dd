#pragma once

#include <utility>

#include "plcutseg/data/image_io.hpp"

namespace plcutseg::data {

/// Training-time augmentation settings. Normalization is fixed to the
/// (0.5, 0.5, 0.5) mean/std scheme; images are standardized (resized) to
/// source_size at load time, then augment() crops to crop_size.
struct AugmentationConfig {
  int source_size = 320;
  int crop_size = 256;
  double hflip_prob = 0.5;
  double vflip_prob = 0.5;
  double rot_min_deg = -360.0;
  double rot_max_deg = 360.0;

  void validate() const;
};

/// One concrete draw of the augmentation randomness. Applying the same
/// params to paired inputs yields the identical geometric transform.
struct AugmentParams {
  int crop_y = 0;
  int crop_x = 0;
  bool hflip = false;
  bool vflip = false;
  double angle_deg = 0.0;
};

AugmentParams sample_augment_params(const AugmentationConfig& cfg, int in_h, int in_w,
                                    Rng& rng);

/// Deterministic core: crop -> flips -> rotation (bilinear, zero fill),
/// identical for image and mask; the image is then normalized unless
/// normalize is false. angle_deg == 0 is a bit-exact identity (no
/// resampling). Inputs must be at least crop_size in both dims.
std::pair<ImageTensor, SegMask> augment_with_params(const ImageTensor& raw_image,
                                                    const SegMask& mask,
                                                    const AugmentationConfig& cfg,
                                                    const AugmentParams& params,
                                                    bool normalize = true);

std::pair<ImageTensor, SegMask> augment(const ImageTensor& raw_image, const SegMask& mask,
                                        const AugmentationConfig& cfg, Rng& rng);

// Deterministic analog of the training pipeline: resize to source_size, then
// center-crop to crop_size. Used for pseudo-label inference and evaluation;
// pseudo-labels are stored at this geometry. No normalization, no flips, no
// rotation.
ImageTensor deterministic_preprocess(const ImageTensor& raw, const AugmentationConfig& cfg);
SegMask deterministic_preprocess(const SegMask& mask, const AugmentationConfig& cfg);

}  // namespace plcutseg::data
