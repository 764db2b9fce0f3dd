#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

#include "plcutseg/common.hpp"

namespace plcutseg::tensor {

/// Dense row-major tensor of doubles. Rank 0 (scalar) through 4 (NCHW).
class Tensor {
public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape, double fill = 0.0);
  Tensor(std::initializer_list<int> shape, double fill = 0.0);

  static Tensor scalar(double v);
  static Tensor from_vector(std::vector<int> shape, std::vector<double> values);
  static Tensor randn(std::vector<int> shape, Rng& rng, double stddev = 1.0);
  static Tensor uniform(std::vector<int> shape, Rng& rng, double lo, double hi);

  const std::vector<int>& shape() const { return shape_; }
  int dim(int i) const { return shape_[static_cast<std::size_t>(i)]; }
  int rank() const { return static_cast<int>(shape_.size()); }
  std::size_t numel() const { return data_.size(); }
  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
  std::string shape_str() const;

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  // NCHW accessors for rank-4, CHW for rank-3, HW for rank-2.
  double& at(int n, int c, int h, int w);
  double at(int n, int c, int h, int w) const;
  double& at(int c, int h, int w);
  double at(int c, int h, int w) const;
  double& at(int h, int w);
  double at(int h, int w) const;

  double item() const;  // rank-0/size-1 only
  void fill(double v);
  void add_(const Tensor& o);           // in-place accumulate, shapes must match
  void scale_(double s);
  double sum() const;
  double min() const;
  double max() const;

  std::uint64_t byte_hash() const;      // FNV-1a over the raw double bytes

private:
  std::vector<int> shape_;
  std::vector<double> data_;
};

std::size_t shape_numel(const std::vector<int>& shape);

}  // namespace plcutseg::tensor
