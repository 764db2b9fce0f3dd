#include "plcutseg/tensor/nn.hpp"

#include <cmath>

namespace plcutseg::tensor {

std::vector<Var> vars_of(const std::vector<Param>& params) {
  std::vector<Var> out;
  out.reserve(params.size());
  for (const auto& p : params) out.push_back(p.var);
  return out;
}

std::size_t param_count(const std::vector<Param>& params) {
  std::size_t n = 0;
  for (const auto& p : params) n += p.var->value.numel();
  return n;
}

Conv2d::Conv2d(int ci, int co, int k, int stride, int pad, Rng& rng, bool with_bias)
    : stride_(stride), pad_(pad) {
  require(ci > 0 && co > 0 && k > 0 && stride > 0 && pad >= 0, "Conv2d: bad geometry");
  const double stddev = std::sqrt(2.0 / (static_cast<double>(ci) * k * k));
  weight = parameter(Tensor::randn({co, ci, k, k}, rng, stddev));
  if (with_bias) bias = parameter(Tensor({co}));
}

Var Conv2d::forward(const Var& x) const { return conv2d(x, weight, bias, stride_, pad_); }

void Conv2d::collect(const std::string& prefix, std::vector<Param>& out) const {
  out.push_back({prefix + ".weight", weight});
  if (bias) out.push_back({prefix + ".bias", bias});
}

Linear::Linear(int ci, int co, Rng& rng, bool with_bias) {
  require(ci > 0 && co > 0, "Linear: bad geometry");
  const double stddev = std::sqrt(2.0 / static_cast<double>(ci));
  weight = parameter(Tensor::randn({ci, co}, rng, stddev));
  if (with_bias) bias = parameter(Tensor({co}));
}

Var Linear::forward(const Var& x) const { return linear(x, weight, bias); }

void Linear::collect(const std::string& prefix, std::vector<Param>& out) const {
  out.push_back({prefix + ".weight", weight});
  if (bias) out.push_back({prefix + ".bias", bias});
}

}  // namespace plcutseg::tensor
