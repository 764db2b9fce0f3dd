#include "plcutseg/tensor/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace plcutseg::tensor {

std::size_t shape_numel(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    require(d >= 0, "tensor dims must be non-negative");
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

Tensor::Tensor(std::vector<int> shape, double fill)
    : shape_(std::move(shape)), data_(shape_numel(shape_), fill) {
  require(shape_.size() <= 4, "tensors are rank 0..4");
}

Tensor::Tensor(std::initializer_list<int> shape, double fill)
    : Tensor(std::vector<int>(shape), fill) {}

Tensor Tensor::scalar(double v) {
  Tensor t(std::vector<int>{});
  t.data_.assign(1, v);
  return t;
}

Tensor Tensor::from_vector(std::vector<int> shape, std::vector<double> values) {
  Tensor t;
  t.shape_ = std::move(shape);
  require(shape_numel(t.shape_) == values.size(), "from_vector: size mismatch");
  t.data_ = std::move(values);
  return t;
}

Tensor Tensor::randn(std::vector<int> shape, Rng& rng, double stddev) {
  Tensor t(std::move(shape));
  std::normal_distribution<double> d(0.0, stddev);
  for (auto& v : t.data_) v = d(rng);
  return t;
}

Tensor Tensor::uniform(std::vector<int> shape, Rng& rng, double lo, double hi) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> d(lo, hi);
  for (auto& v : t.data_) v = d(rng);
  return t;
}

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape_.size(); ++i) os << (i ? "," : "") << shape_[i];
  os << "]";
  return os.str();
}

double& Tensor::at(int n, int c, int h, int w) {
  return data_[((static_cast<std::size_t>(n) * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
}
double Tensor::at(int n, int c, int h, int w) const {
  return data_[((static_cast<std::size_t>(n) * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
}
double& Tensor::at(int c, int h, int w) {
  return data_[(static_cast<std::size_t>(c) * shape_[1] + h) * shape_[2] + w];
}
double Tensor::at(int c, int h, int w) const {
  return data_[(static_cast<std::size_t>(c) * shape_[1] + h) * shape_[2] + w];
}
double& Tensor::at(int h, int w) {
  return data_[static_cast<std::size_t>(h) * shape_[1] + w];
}
double Tensor::at(int h, int w) const {
  return data_[static_cast<std::size_t>(h) * shape_[1] + w];
}

double Tensor::item() const {
  require(data_.size() == 1, "item() requires a single-element tensor");
  return data_[0];
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

void Tensor::add_(const Tensor& o) {
  require(same_shape(o), "add_: shape mismatch " + shape_str() + " vs " + o.shape_str());
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
}

void Tensor::scale_(double s) {
  for (auto& v : data_) v *= s;
}

double Tensor::sum() const { return std::accumulate(data_.begin(), data_.end(), 0.0); }

double Tensor::min() const { return *std::min_element(data_.begin(), data_.end()); }
double Tensor::max() const { return *std::max_element(data_.begin(), data_.end()); }

std::uint64_t Tensor::byte_hash() const {
  return fnv1a(data_.data(), data_.size() * sizeof(double));
}

}  // namespace plcutseg::tensor
