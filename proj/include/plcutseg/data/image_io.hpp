#pragma once

#include <filesystem>

#include "plcutseg/core/types.hpp"

namespace plcutseg::data {

namespace fs = std::filesystem;
using core::ImageTensor;
using core::SegMask;
using tensor::Tensor;

/// Decodes a 3-channel image file into a raw [0,1] CHW tensor (RGB order).
ImageTensor read_image(const fs::path& path);

/// Decodes an 8-bit grayscale mask and binarizes at 127.5 into {0,1}.
SegMask read_mask_file(const fs::path& path);

/// Encodes a raw image as PNG, rounding to 8-bit.
void write_image(const fs::path& path, const ImageTensor& raw);

/// Encodes a mask as 8-bit grayscale PNG, round(v * 255).
void write_mask(const fs::path& path, const SegMask& mask);

// Own resampling code so training math stays in double precision end to end.
// Bilinear maps output pixel centers onto input pixel centers (align-corners
// off); nearest picks the covering input pixel.
Tensor resize_bilinear_hw(const Tensor& hw, int oh, int ow);
Tensor resize_bilinear_chw(const Tensor& chw, int oh, int ow);
Tensor resize_nearest_hw(const Tensor& hw, int oh, int ow);

/// Deterministic load-time standardization: resize to size x size. Identity
/// (bit-exact, no resampling) when already that size.
ImageTensor standardize(const ImageTensor& raw, int size);
SegMask standardize(const SegMask& mask, int size);

}  // namespace plcutseg::data
