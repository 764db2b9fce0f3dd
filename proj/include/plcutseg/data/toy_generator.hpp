#pragma once

#include "plcutseg/data/image_io.hpp"

namespace plcutseg::data {

struct ToyCounts {
  int synthetic = 200;
  int real = 100;
  int test = 40;
};

/// Writes a desk-scale stand-in dataset:
///   <root>/synthetic/{images,masks}   textured tube walls + 0-2 elliptical
///                                     polyp blobs with exact hard masks
///   <root>/real/images                same scenes under a shifted palette,
///                                     pixel noise and specular streaks
///   <root>/real_masks                 withheld real ground truth (eval and
///                                     labeled-split source only; never a
///                                     training masks/ directory)
///   <root>/test/{images,masks}        real-style held-out set
/// Deterministic under seed down to file bytes.
void generate_toy_dataset(const fs::path& root, const ToyCounts& counts, int image_size,
                          std::uint64_t seed);

}  // namespace plcutseg::data
