#pragma once

#include <map>
#include <string>
#include <vector>

#include "plcutseg/core/types.hpp"

namespace plcutseg::data {

using core::SegMask;

/// Epoch-versioned map from unlabeled sample id to its current soft
/// pseudo-label. Version 0 holds all-background (all-zero) masks. The store
/// is immutable; refresh_pseudo_labels produces the next version. It holds
/// exactly the unlabeled ids, which guards against label leakage.
class PseudoLabelStore {
public:
  PseudoLabelStore() = default;

  static PseudoLabelStore initial(const std::vector<std::string>& unlabeled_ids, int h,
                                  int w);

  int version() const { return version_; }
  int mask_h() const { return h_; }
  int mask_w() const { return w_; }
  std::size_t size() const { return masks_.size(); }
  bool contains(const std::string& id) const { return masks_.count(id) > 0; }
  const SegMask& get(const std::string& id) const;
  const std::map<std::string, SegMask>& masks() const { return masks_; }

  /// Rebuilds a store from persisted state (checkpoint loading).
  static PseudoLabelStore restore(int version, int h, int w,
                                  std::map<std::string, SegMask> masks);

  friend PseudoLabelStore refresh_pseudo_labels(
      const PseudoLabelStore& store, const std::map<std::string, SegMask>& predictions);

private:
  int version_ = 0;
  int h_ = 0;
  int w_ = 0;
  std::map<std::string, SegMask> masks_;  // ordered for deterministic iteration
};

/// Returns a new store at version + 1. Ids without a prediction keep their
/// previous mask; a prediction for an id outside the store is a hard error
/// (it would mean a labeled or synthetic sample leaked into the refresh).
PseudoLabelStore refresh_pseudo_labels(const PseudoLabelStore& store,
                                       const std::map<std::string, SegMask>& predictions);

}  // namespace plcutseg::data
