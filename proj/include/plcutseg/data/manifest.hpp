#pragma once

#include <optional>

#include "plcutseg/data/ingest.hpp"

namespace plcutseg::data {

/// The beta-parameterized partition of a dataset: labeled reals, unlabeled
/// reals, and the synthetic set. Regenerating with the same inputs and seed
/// reproduces the identical partition.
struct SplitManifest {
  std::string dataset;
  double beta = 0.0;  // percentage of reals that are labeled, in [0,100]
  std::uint64_t seed = 0;
  std::vector<SampleRef> labeled;    // D_l
  std::vector<SampleRef> unlabeled;  // D_u
  std::vector<SampleRef> synthetic;  // D^S
};

/// Partitions real refs uniformly at random into labeled (beta%) and
/// unlabeled; synthetic refs pass through. Selected labeled refs get their
/// mask path from `real_masks_dir` (stem-matched); beta > 0 without a mask
/// source or a matching file is a hard error. beta > 0 rounding to zero
/// labeled samples proceeds with a warning (self-supervised semantics).
SplitManifest make_split(std::vector<SampleRef> real_refs,
                         std::vector<SampleRef> synthetic_refs, double beta,
                         std::uint64_t seed, const std::string& dataset,
                         const std::optional<fs::path>& real_masks_dir = std::nullopt);

/// Line-delimited format: one JSON header record carrying dataset/beta/seed,
/// then one record per ref with paths stored relative to the manifest file.
void save_manifest(const SplitManifest& m, const fs::path& path);
SplitManifest load_manifest(const fs::path& path);

}  // namespace plcutseg::data
