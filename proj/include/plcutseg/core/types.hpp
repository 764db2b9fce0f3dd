#pragma once

#include <string>
#include <vector>

#include "plcutseg/tensor/tensor.hpp"

namespace plcutseg::core {

using tensor::Tensor;

/// Soft per-pixel polyp probability map, H x W, every value in [0,1].
/// Predictions, ground-truth labels and pseudo-labels all use this type;
/// a hard mask is the special case where every value is exactly 0 or 1.
class SegMask {
public:
  SegMask() = default;
  explicit SegMask(Tensor values);
  static SegMask zeros(int h, int w);
  static SegMask ones(int h, int w);

  int h() const { return values_.dim(0); }
  int w() const { return values_.dim(1); }
  bool empty() const { return values_.numel() == 0; }
  double at(int y, int x) const { return values_.at(y, x); }
  void set(int y, int x, double v);
  bool is_hard() const;

  const Tensor& values() const { return values_; }

private:
  Tensor values_;
};

/// Per-pixel trust flags paired with a SegMask, stored as 0/1 doubles so it
/// can feed masked arithmetic directly.
class ValidityMask {
public:
  ValidityMask() = default;
  explicit ValidityMask(Tensor zero_one);
  static ValidityMask all_true(int h, int w);
  static ValidityMask all_false(int h, int w);

  int h() const { return values_.dim(0); }
  int w() const { return values_.dim(1); }
  bool empty() const { return values_.numel() == 0; }
  bool at(int y, int x) const { return values_.at(y, x) != 0.0; }
  void set(int y, int x, bool v);
  std::size_t count_valid() const;
  bool any() const { return count_valid() > 0; }
  bool all() const { return count_valid() == values_.numel(); }

  const Tensor& values() const { return values_; }

private:
  Tensor values_;
};

/// 3-channel image, CHW. Raw images live in [0,1]; normalized images are
/// (v - 0.5) / 0.5 per channel, so they live in [-1,1].
class ImageTensor {
public:
  ImageTensor() = default;
  ImageTensor(Tensor chw, bool normalized);

  int h() const { return values_.dim(1); }
  int w() const { return values_.dim(2); }
  bool empty() const { return values_.numel() == 0; }
  bool normalized() const { return normalized_; }
  double at(int c, int y, int x) const { return values_.at(c, y, x); }

  ImageTensor normalize() const;    // raw -> normalized
  ImageTensor denormalize() const;  // normalized -> raw

  const Tensor& values() const { return values_; }
  Tensor& values() { return values_; }

private:
  Tensor values_;
  bool normalized_ = false;
};

struct LossTerm {
  std::string name;
  double weight = 1.0;
  double value = 0.0;
};

/// A scalar objective with its recorded weighted breakdown. The scalar must
/// equal the weighted term sum within 1e-6 relative tolerance; a sentinel
/// LossValue carries no contribution and must be skipped by batch averaging.
class LossValue {
public:
  LossValue() = default;
  LossValue(double scalar, std::vector<LossTerm> terms);
  static LossValue sentinel();

  bool is_sentinel() const { return sentinel_; }
  double scalar() const;
  const std::vector<LossTerm>& terms() const { return terms_; }
  double term(const std::string& name) const;  // value of a named term

private:
  double scalar_ = 0.0;
  std::vector<LossTerm> terms_;
  bool sentinel_ = false;
};

}  // namespace plcutseg::core
