#pragma once

#include <vector>

#include "plcutseg/tensor/autograd.hpp"

namespace plcutseg::tensor {

/// Adam with bias correction. One shared step counter per optimizer; a
/// parameter whose grad is empty at step() time is treated as zero gradient.
class Adam {
public:
  Adam(std::vector<Var> params, double lr, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8);

  void zero_grad();
  void step();

  double lr() const { return lr_; }
  void set_lr(double lr) { lr_ = lr; }

  const std::vector<Var>& params() const { return params_; }

  // Checkpoint access. restore() requires moment shapes matching the params.
  long long step_count() const { return t_; }
  const std::vector<Tensor>& first_moments() const { return m_; }
  const std::vector<Tensor>& second_moments() const { return v_; }
  void restore(long long t, std::vector<Tensor> m, std::vector<Tensor> v);

private:
  std::vector<Var> params_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  double lr_;
  double b1_;
  double b2_;
  double eps_;
  long long t_ = 0;
};

}  // namespace plcutseg::tensor
