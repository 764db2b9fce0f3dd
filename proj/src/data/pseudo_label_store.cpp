#include "plcutseg/data/pseudo_label_store.hpp"

#include "plcutseg/common.hpp"

namespace plcutseg::data {

PseudoLabelStore PseudoLabelStore::initial(const std::vector<std::string>& unlabeled_ids,
                                           int h, int w) {
  require(h > 0 && w > 0, "PseudoLabelStore: bad mask dims");
  PseudoLabelStore s;
  s.h_ = h;
  s.w_ = w;
  for (const auto& id : unlabeled_ids) {
    require(s.masks_.emplace(id, SegMask::zeros(h, w)).second,
            "PseudoLabelStore: duplicate id " + id);
  }
  return s;
}

const SegMask& PseudoLabelStore::get(const std::string& id) const {
  auto it = masks_.find(id);
  require(it != masks_.end(), "PseudoLabelStore: no entry for id " + id);
  return it->second;
}

PseudoLabelStore PseudoLabelStore::restore(int version, int h, int w,
                                           std::map<std::string, SegMask> masks) {
  require(version >= 0 && h > 0 && w > 0, "PseudoLabelStore::restore: bad header");
  for (const auto& [id, m] : masks)
    require(m.h() == h && m.w() == w, "PseudoLabelStore::restore: mask dims differ for " + id);
  PseudoLabelStore s;
  s.version_ = version;
  s.h_ = h;
  s.w_ = w;
  s.masks_ = std::move(masks);
  return s;
}

PseudoLabelStore refresh_pseudo_labels(const PseudoLabelStore& store,
                                       const std::map<std::string, SegMask>& predictions) {
  PseudoLabelStore next = store;
  next.version_ = store.version_ + 1;
  for (const auto& [id, mask] : predictions) {
    auto it = next.masks_.find(id);
    require(it != next.masks_.end(),
            "refresh_pseudo_labels: prediction for non-unlabeled id " + id);
    require(mask.h() == store.h_ && mask.w() == store.w_,
            "refresh_pseudo_labels: mask dims differ for " + id);
    it->second = mask;
  }
  return next;
}

}  // namespace plcutseg::data
