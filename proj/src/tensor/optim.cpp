#include "plcutseg/tensor/optim.hpp"

#include <cmath>

namespace plcutseg::tensor {

Adam::Adam(std::vector<Var> params, double lr, double beta1, double beta2, double eps)
    : params_(std::move(params)), lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {
  require(!params_.empty(), "Adam: no parameters");
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const auto& p : params_) {
    require(p && p->requires_grad, "Adam: every entry must be a learnable parameter");
    m_.emplace_back(p->value.shape());
    v_.emplace_back(p->value.shape());
  }
}

void Adam::zero_grad() {
  for (auto& p : params_)
    if (p->grad.numel() != 0) p->grad.fill(0.0);
}

void Adam::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor& w = params_[i]->value;
    const Tensor& g = params_[i]->grad;
    const bool has_grad = g.numel() != 0;
    Tensor& m = m_[i];
    Tensor& v = v_[i];
    for (std::size_t j = 0; j < w.numel(); ++j) {
      const double gj = has_grad ? g[j] : 0.0;
      m[j] = b1_ * m[j] + (1.0 - b1_) * gj;
      v[j] = b2_ * v[j] + (1.0 - b2_) * gj * gj;
      const double mh = m[j] / bc1;
      const double vh = v[j] / bc2;
      w[j] -= lr_ * mh / (std::sqrt(vh) + eps_);
    }
  }
}

void Adam::restore(long long t, std::vector<Tensor> m, std::vector<Tensor> v) {
  require(t >= 0 && m.size() == params_.size() && v.size() == params_.size(),
          "Adam::restore: state arity mismatch");
  for (std::size_t i = 0; i < params_.size(); ++i)
    require(m[i].same_shape(params_[i]->value) && v[i].same_shape(params_[i]->value),
            "Adam::restore: moment shape mismatch");
  t_ = t;
  m_ = std::move(m);
  v_ = std::move(v);
}

}  // namespace plcutseg::tensor
