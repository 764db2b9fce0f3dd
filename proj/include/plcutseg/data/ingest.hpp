#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "plcutseg/data/image_io.hpp"

namespace plcutseg::data {

enum class Provenance { LabeledReal, UnlabeledReal, Synthetic };

const char* provenance_name(Provenance p);
Provenance provenance_from(const std::string& name);

/// Pointer to one sample on disk. Labeled-real and synthetic refs carry a
/// mask path; unlabeled-real refs must not.
struct SampleRef {
  std::string id;
  fs::path image;
  fs::path mask;  // empty for unlabeled-real
  Provenance provenance = Provenance::UnlabeledReal;

  bool has_mask() const { return !mask.empty(); }
};

/// Scans <root>/images (and <root>/masks for mask-bearing provenances) and
/// produces one ref per image, sorted by filename. Labeled or synthetic
/// images without a filename-matched mask are a hard error naming the file.
std::vector<SampleRef> ingest_dataset(const fs::path& root, Provenance provenance);

// Ground-truth mask reads are counted by provenance so tests can prove that
// unlabeled-real masks are never touched during training.
struct MaskReadCounts {
  std::uint64_t labeled_real = 0;
  std::uint64_t unlabeled_real = 0;
  std::uint64_t synthetic = 0;
};
MaskReadCounts mask_read_counts();
void reset_mask_read_counts();

/// Loads the ref's ground-truth mask, bumping the provenance counter.
SegMask load_mask(const SampleRef& ref);

/// Loads the ref's image (raw [0,1]).
ImageTensor load_image(const SampleRef& ref);

}  // namespace plcutseg::data
