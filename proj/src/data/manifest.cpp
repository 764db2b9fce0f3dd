#include "plcutseg/data/manifest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

#include <json.hpp>

namespace plcutseg::data {

using nlohmann::json;

SplitManifest make_split(std::vector<SampleRef> real_refs,
                         std::vector<SampleRef> synthetic_refs, double beta,
                         std::uint64_t seed, const std::string& dataset,
                         const std::optional<fs::path>& real_masks_dir) {
  require(beta >= 0.0 && beta <= 100.0, "make_split: beta outside [0,100]");
  for (const auto& r : real_refs)
    require(r.provenance != Provenance::Synthetic, "make_split: synthetic ref in real list");
  for (const auto& r : synthetic_refs)
    require(r.provenance == Provenance::Synthetic,
            "make_split: non-synthetic ref in synthetic list");

  const auto n_real = real_refs.size();
  auto n_labeled =
      static_cast<std::size_t>(std::llround(beta / 100.0 * static_cast<double>(n_real)));
  if (beta > 0.0 && n_labeled == 0)
    std::cerr << "warning: beta " << beta << "% of " << n_real
              << " reals rounds to zero labeled samples; proceeding self-supervised\n";

  std::vector<std::size_t> order(n_real);
  for (std::size_t i = 0; i < n_real; ++i) order[i] = i;
  Rng rng = seeded_rng(seed, "split");
  std::shuffle(order.begin(), order.end(), rng);

  std::map<std::string, fs::path> masks_by_stem;
  if (n_labeled > 0) {
    expect(real_masks_dir.has_value(),
           "make_split: beta > 0 requires a real ground-truth mask directory");
    expect(fs::is_directory(*real_masks_dir),
           "make_split: not a directory: " + real_masks_dir->string());
    for (const auto& e : fs::directory_iterator(*real_masks_dir))
      if (e.is_regular_file()) masks_by_stem[e.path().stem().string()] = e.path();
  }

  std::set<std::size_t> labeled_idx(order.begin(), order.begin() + n_labeled);
  SplitManifest m;
  m.dataset = dataset;
  m.beta = beta;
  m.seed = seed;
  for (std::size_t i = 0; i < n_real; ++i) {
    SampleRef ref = real_refs[i];
    if (labeled_idx.count(i)) {
      const std::string stem = ref.image.stem().string();
      auto it = masks_by_stem.find(stem);
      expect(it != masks_by_stem.end(),
             "make_split: no ground-truth mask for labeled sample " + ref.image.string());
      ref.mask = it->second;
      ref.provenance = Provenance::LabeledReal;
      m.labeled.push_back(std::move(ref));
    } else {
      ref.mask.clear();
      ref.provenance = Provenance::UnlabeledReal;
      m.unlabeled.push_back(std::move(ref));
    }
  }
  m.synthetic = std::move(synthetic_refs);
  return m;
}

namespace {
std::string relativize(const fs::path& p, const fs::path& base) {
  const auto rel = fs::relative(fs::absolute(p), base);
  return rel.generic_string();
}

void write_ref(std::ostream& os, const SampleRef& ref, const char* split,
               const fs::path& base) {
  json j;
  j["id"] = ref.id;
  j["image"] = relativize(ref.image, base);
  if (ref.has_mask()) j["mask"] = relativize(ref.mask, base);
  j["provenance"] = provenance_name(ref.provenance);
  j["split"] = split;
  os << j.dump() << "\n";
}
}  // namespace

void save_manifest(const SplitManifest& m, const fs::path& path) {
  std::set<std::string> ids;
  for (const auto* list : {&m.labeled, &m.unlabeled, &m.synthetic})
    for (const auto& r : *list)
      require(ids.insert(r.id).second, "save_manifest: duplicate id " + r.id);

  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path base = fs::absolute(path).parent_path();
  std::ofstream os(path);
  expect(os.good(), "save_manifest: cannot open " + path.string());
  json header;
  header["format"] = "plcutseg-manifest";
  header["version"] = 1;
  header["dataset"] = m.dataset;
  header["beta"] = m.beta;
  header["seed"] = m.seed;
  os << header.dump() << "\n";
  for (const auto& r : m.labeled) write_ref(os, r, "labeled", base);
  for (const auto& r : m.unlabeled) write_ref(os, r, "unlabeled", base);
  for (const auto& r : m.synthetic) write_ref(os, r, "synthetic", base);
  expect(os.good(), "save_manifest: write failed for " + path.string());
}

SplitManifest load_manifest(const fs::path& path) {
  std::ifstream is(path);
  expect(is.good(), "load_manifest: cannot open " + path.string());
  const fs::path base = fs::absolute(path).parent_path();

  std::string line;
  expect(static_cast<bool>(std::getline(is, line)), "load_manifest: empty file");
  json header = json::parse(line, nullptr, false);
  expect(!header.is_discarded() && header.value("format", "") == "plcutseg-manifest",
         "load_manifest: not a manifest file: " + path.string());
  expect(header.value("version", 0) == 1, "load_manifest: unsupported version");

  SplitManifest m;
  m.dataset = header.value("dataset", "");
  m.beta = header.value("beta", 0.0);
  m.seed = header.value("seed", std::uint64_t{0});

  std::set<std::string> ids;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    expect(!j.is_discarded(),
           "load_manifest: bad record at line " + std::to_string(line_no));
    SampleRef ref;
    ref.id = j.at("id").get<std::string>();
    expect(ids.insert(ref.id).second, "load_manifest: duplicate id " + ref.id);
    ref.image = base / fs::path(j.at("image").get<std::string>());
    if (j.contains("mask")) ref.mask = base / fs::path(j.at("mask").get<std::string>());
    ref.provenance = provenance_from(j.at("provenance").get<std::string>());
    const std::string split = j.at("split").get<std::string>();
    if (split == "labeled") {
      expect(ref.provenance == Provenance::LabeledReal && ref.has_mask(),
             "load_manifest: labeled record must be labeled-real with a mask: " + ref.id);
      m.labeled.push_back(std::move(ref));
    } else if (split == "unlabeled") {
      expect(ref.provenance == Provenance::UnlabeledReal && !ref.has_mask(),
             "load_manifest: unlabeled record must be unlabeled-real without a mask: " +
                 ref.id);
      m.unlabeled.push_back(std::move(ref));
    } else if (split == "synthetic") {
      expect(ref.provenance == Provenance::Synthetic && ref.has_mask(),
             "load_manifest: synthetic record must carry a mask: " + ref.id);
      m.synthetic.push_back(std::move(ref));
    } else {
      throw RuntimeError("load_manifest: unknown split " + split);
    }
  }
  return m;
}

}  // namespace plcutseg::data
