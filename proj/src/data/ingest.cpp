#include "plcutseg/data/ingest.hpp"

#include <algorithm>
#include <atomic>
#include <map>

namespace plcutseg::data {

const char* provenance_name(Provenance p) {
  switch (p) {
    case Provenance::LabeledReal: return "labeled-real";
    case Provenance::UnlabeledReal: return "unlabeled-real";
    case Provenance::Synthetic: return "synthetic";
  }
  throw ContractError("provenance_name: bad enum value");
}

Provenance provenance_from(const std::string& name) {
  if (name == "labeled-real") return Provenance::LabeledReal;
  if (name == "unlabeled-real") return Provenance::UnlabeledReal;
  if (name == "synthetic") return Provenance::Synthetic;
  throw RuntimeError("unknown provenance: " + name);
}

namespace {
bool is_image_file(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".bmp";
}

std::vector<fs::path> list_images(const fs::path& dir) {
  expect(fs::is_directory(dir), "not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && is_image_file(e.path())) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}
}  // namespace

std::vector<SampleRef> ingest_dataset(const fs::path& root, Provenance provenance) {
  const auto images = list_images(root / "images");
  expect(!images.empty(), "ingest_dataset: no images under " + (root / "images").string());

  std::map<std::string, fs::path> masks_by_stem;
  const bool wants_masks = provenance != Provenance::UnlabeledReal;
  if (wants_masks)
    for (const auto& m : list_images(root / "masks")) masks_by_stem[m.stem().string()] = m;

  const std::string id_prefix = provenance == Provenance::Synthetic ? "syn:" : "real:";
  std::vector<SampleRef> refs;
  refs.reserve(images.size());
  for (const auto& img : images) {
    SampleRef ref;
    ref.id = id_prefix + img.stem().string();
    ref.image = img;
    ref.provenance = provenance;
    if (wants_masks) {
      auto it = masks_by_stem.find(img.stem().string());
      expect(it != masks_by_stem.end(),
             "ingest_dataset: no mask matching image " + img.string());
      ref.mask = it->second;
    }
    refs.push_back(std::move(ref));
  }
  return refs;
}

namespace {
std::atomic<std::uint64_t> g_reads_labeled{0};
std::atomic<std::uint64_t> g_reads_unlabeled{0};
std::atomic<std::uint64_t> g_reads_synthetic{0};
}  // namespace

MaskReadCounts mask_read_counts() {
  return {g_reads_labeled.load(), g_reads_unlabeled.load(), g_reads_synthetic.load()};
}

void reset_mask_read_counts() {
  g_reads_labeled = 0;
  g_reads_unlabeled = 0;
  g_reads_synthetic = 0;
}

SegMask load_mask(const SampleRef& ref) {
  require(ref.has_mask(), "load_mask: ref " + ref.id + " has no mask path");
  switch (ref.provenance) {
    case Provenance::LabeledReal: ++g_reads_labeled; break;
    case Provenance::UnlabeledReal: ++g_reads_unlabeled; break;
    case Provenance::Synthetic: ++g_reads_synthetic; break;
  }
  return read_mask_file(ref.mask);
}

ImageTensor load_image(const SampleRef& ref) { return read_image(ref.image); }

}  // namespace plcutseg::data
