#pragma once

#include <doctest.h>

#include <cmath>
#include <functional>

#include "plcutseg/tensor/autograd.hpp"

namespace testutil {

using plcutseg::Rng;
using plcutseg::tensor::Tensor;
using plcutseg::tensor::Var;

inline double rel_err(double a, double b) {
  return std::fabs(a - b) / std::max({1.0, std::fabs(a), std::fabs(b)});
}

inline Tensor random_tensor(const std::vector<int>& shape, Rng& rng, double lo = -1.0,
                            double hi = 1.0) {
  Tensor t(shape);
  std::uniform_real_distribution<double> d(lo, hi);
  for (std::size_t i = 0; i < t.numel(); ++i) t.data()[i] = d(rng);
  return t;
}

/// Central finite differences against the analytic gradient. `build` must
/// reconstruct the scalar loss from the live parameter values; parameters
/// are perturbed in place. Checks every element when a parameter is small,
/// otherwise a strided subset.
inline void gradcheck(const std::function<Var()>& build, const std::vector<Var>& params,
                      double tol = 1e-5, double eps = 1e-6) {
  for (const auto& p : params) p->grad = Tensor();
  Var loss = build();
  REQUIRE(loss->value.numel() == 1);
  plcutseg::tensor::backward(loss);

  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    const auto& p = params[pi];
    REQUIRE(p->grad.numel() == p->value.numel());
    const std::size_t n = p->value.numel();
    const std::size_t stride = n <= 48 ? 1 : n / 48 + 1;
    for (std::size_t i = 0; i < n; i += stride) {
      double* slot = p->value.data() + i;
      const double orig = *slot;
      double fp, fm;
      {
        plcutseg::tensor::NoGradGuard ng;
        *slot = orig + eps;
        fp = build()->value.item();
        *slot = orig - eps;
        fm = build()->value.item();
        *slot = orig;
      }
      const double numeric = (fp - fm) / (2.0 * eps);
      const double analytic = p->grad.data()[i];
      INFO("param ", pi, " element ", i, " analytic ", analytic, " numeric ", numeric);
      CHECK(rel_err(analytic, numeric) < tol);
    }
  }
}

}  // namespace testutil
