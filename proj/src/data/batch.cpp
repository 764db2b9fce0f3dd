#include "plcutseg/data/batch.hpp"

#include <algorithm>
#include <numeric>
#include <set>

namespace plcutseg::data {

const char* domain_tag_name(DomainTag t) {
  switch (t) {
    case DomainTag::RealLabeled: return "real-labeled";
    case DomainTag::RealPseudo: return "real-pseudo";
    case DomainTag::Synthetic: return "synthetic";
    case DomainTag::Interpolated: return "interpolated";
  }
  throw ContractError("domain_tag_name: bad enum value");
}

const char* training_mode_name(TrainingMode m) {
  return m == TrainingMode::SelfSup ? "self-sup" : "semi-sup";
}

TrainingMode training_mode_from(const std::string& name) {
  if (name == "self-sup") return TrainingMode::SelfSup;
  if (name == "semi-sup") return TrainingMode::SemiSup;
  throw RuntimeError("unknown training mode: " + name);
}

void BatchComposer::Cycler::reset(std::size_t n, Rng& rng) {
  order.resize(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  cursor = 0;
}

int BatchComposer::Cycler::next(Rng& rng) {
  require(!order.empty(), "Cycler: drawing from an empty set");
  if (cursor >= order.size()) {
    std::shuffle(order.begin(), order.end(), rng);
    cursor = 0;
  }
  return order[cursor++];
}

BatchComposer::BatchComposer(const SplitManifest& manifest, TrainingMode mode,
                             bool use_pseudo_labels, bool confidence_mask_enabled,
                             double confidence_threshold, AugmentationConfig aug,
                             std::uint64_t seed)
    : manifest_(manifest),
      mode_(mode),
      use_pseudo_labels_(use_pseudo_labels),
      conf_enabled_(confidence_mask_enabled),
      conf_threshold_(confidence_threshold),
      aug_(aug),
      seed_(seed) {
  aug_.validate();
  if (conf_enabled_)
    require(conf_threshold_ > 0.5 && conf_threshold_ < 1.0,
            "BatchComposer: confidence threshold outside (0.5,1)");
  require(!manifest_.synthetic.empty(), "BatchComposer: manifest has no synthetic set");
  require(!manifest_.labeled.empty() || !manifest_.unlabeled.empty(),
          "BatchComposer: manifest has no real images");
  if (mode_ == TrainingMode::SemiSup)
    require(!manifest_.labeled.empty(), "BatchComposer: semi-sup mode with empty labeled set");
  if (mode_ == TrainingMode::SelfSup && use_pseudo_labels_)
    require(!manifest_.unlabeled.empty(),
            "BatchComposer: self-sup pseudo-labeling with empty unlabeled set");
}

void BatchComposer::start_epoch(int epoch) {
  require(epoch >= 0, "start_epoch: negative epoch");
  epoch_rng_ = seeded_rng(seed_, "composer", static_cast<std::uint64_t>(epoch));
  synthetic_.reset(manifest_.synthetic.size(), epoch_rng_);
  if (!manifest_.labeled.empty()) labeled_.reset(manifest_.labeled.size(), epoch_rng_);
  if (!manifest_.unlabeled.empty()) pseudo_.reset(manifest_.unlabeled.size(), epoch_rng_);
  pooled_real_.reset(manifest_.labeled.size() + manifest_.unlabeled.size(), epoch_rng_);
  epoch_started_ = true;
}

int BatchComposer::steps_per_epoch(int batch_size) const {
  require(batch_size >= 2 && batch_size % 2 == 0, "steps_per_epoch: batch size must be even");
  const auto half = static_cast<std::size_t>(batch_size) / 2;
  return static_cast<int>((manifest_.synthetic.size() + half - 1) / half);
}

BatchEntry BatchComposer::make_gt_entry(const SampleRef& ref, DomainTag tag) {
  const ImageTensor raw = standardize(load_image(ref), aug_.source_size);
  const SegMask mask = standardize(load_mask(ref), aug_.source_size);
  auto [img, m] = augment(raw, mask, aug_, epoch_rng_);
  BatchEntry e;
  e.id = ref.id;
  e.tag = tag;
  e.validity = ValidityMask::all_true(m.h(), m.w());
  e.image = std::move(img);
  e.target = std::move(m);
  return e;
}

BatchEntry BatchComposer::make_pseudo_entry(const SampleRef& ref,
                                            const PseudoLabelStore& store) {
  require(store.mask_h() == aug_.crop_size && store.mask_w() == aug_.crop_size,
          "BatchComposer: pseudo-label store geometry differs from crop size");
  // The stored pseudo-label lives at the deterministic-preprocess geometry,
  // so the image goes through the same preprocess before the shared random
  // flips/rotation. The crop draw degenerates to (0,0) on a crop-sized input.
  const ImageTensor pre = deterministic_preprocess(load_image(ref), aug_);
  const SegMask& pl = store.get(ref.id);
  auto [img, m] = augment(pre, pl, aug_, epoch_rng_);
  BatchEntry e;
  e.id = ref.id;
  e.tag = DomainTag::RealPseudo;
  e.validity = conf_enabled_ ? core::confidence_mask(m, conf_threshold_)
                             : ValidityMask::all_true(m.h(), m.w());
  e.image = std::move(img);
  e.target = std::move(m);
  return e;
}

ImageTensor BatchComposer::make_translation_real(const SampleRef& ref) {
  const ImageTensor raw = standardize(load_image(ref), aug_.source_size);
  SegMask dummy = SegMask::zeros(aug_.source_size, aug_.source_size);
  auto [img, m] = augment(raw, dummy, aug_, epoch_rng_);
  return img;
}

TrainingBatch BatchComposer::compose_batch(const PseudoLabelStore* store, int batch_size) {
  require(epoch_started_, "compose_batch: call start_epoch first");
  require(batch_size >= 2 && batch_size % 2 == 0, "compose_batch: batch size must be even");
  const int half = batch_size / 2;

  int n_labeled = 0, n_pseudo = 0;
  if (use_pseudo_labels_) {
    require(store != nullptr, "compose_batch: pseudo-labeling needs a store");
    if (mode_ == TrainingMode::SemiSup) {
      n_labeled = (half + 1) / 2;
      n_pseudo = half - n_labeled;
      if (manifest_.unlabeled.empty()) {
        n_labeled = half;
        n_pseudo = 0;
      }
    } else {
      n_pseudo = half;
    }
  } else if (mode_ == TrainingMode::SemiSup) {
    n_labeled = half;
  }

  auto draw_distinct = [this](Cycler& c, std::set<int>& used) {
    for (std::size_t i = 0; i < c.order.size(); ++i) {
      const int idx = c.next(epoch_rng_);
      if (used.insert(idx).second) return idx;
    }
    return c.next(epoch_rng_);  // set smaller than the demand; repeats allowed
  };

  TrainingBatch batch;
  std::set<int> used_labeled, used_pseudo, used_syn, used_pooled;
  for (int i = 0; i < n_labeled; ++i)
    batch.entries.push_back(make_gt_entry(
        manifest_.labeled[draw_distinct(labeled_, used_labeled)], DomainTag::RealLabeled));
  for (int i = 0; i < n_pseudo; ++i)
    batch.entries.push_back(
        make_pseudo_entry(manifest_.unlabeled[draw_distinct(pseudo_, used_pseudo)], *store));
  for (int i = 0; i < half; ++i)
    batch.entries.push_back(make_gt_entry(
        manifest_.synthetic[draw_distinct(synthetic_, used_syn)], DomainTag::Synthetic));
  batch.original_m = static_cast<int>(batch.entries.size());

  if (use_pseudo_labels_) {
    for (const auto& e : batch.entries)
      if (e.tag == DomainTag::RealLabeled || e.tag == DomainTag::RealPseudo)
        batch.translation_reals.push_back(e.image);
  } else {
    const auto& lab = manifest_.labeled;
    for (int i = 0; i < half; ++i) {
      const int idx = draw_distinct(pooled_real_, used_pooled);
      const SampleRef& ref = idx < static_cast<int>(lab.size())
                                 ? lab[idx]
                                 : manifest_.unlabeled[idx - static_cast<int>(lab.size())];
      batch.translation_reals.push_back(make_translation_real(ref));
    }
  }
  require(static_cast<int>(batch.translation_reals.size()) == half,
          "compose_batch: translation real count mismatch");
  return batch;
}

TrainingBatch extend_with_mixup(TrainingBatch batch, double alpha, Rng& rng) {
  require(batch.mixup_log.empty() &&
              batch.original_m == static_cast<int>(batch.entries.size()),
          "extend_with_mixup: batch already extended");
  const int m = batch.original_m;
  require(m >= 2, "extend_with_mixup: need at least 2 originals");
  std::uniform_int_distribution<int> pick_p(0, m - 1);
  std::uniform_int_distribution<int> pick_q(0, m - 2);
  for (int n = 0; n < m; ++n) {
    const int p = pick_p(rng);
    int q = pick_q(rng);
    if (q >= p) ++q;
    const double lambda = core::sample_mixup_lambda(alpha, rng);
    const BatchEntry& a = batch.entries[p];
    const BatchEntry& b = batch.entries[q];
    auto [img, mask, valid] =
        core::mixup_pair(a.image, a.target, a.validity, b.image, b.target, b.validity, lambda);
    BatchEntry e;
    e.id = "mix:" + a.id + "+" + b.id;
    e.tag = DomainTag::Interpolated;
    e.image = std::move(img);
    e.target = std::move(mask);
    e.validity = std::move(valid);
    batch.entries.push_back(std::move(e));
    batch.mixup_log.push_back({p, q, lambda});
  }
  return batch;
}

}  // namespace plcutseg::data
