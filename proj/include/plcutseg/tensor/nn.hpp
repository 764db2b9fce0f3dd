#pragma once

#include <string>
#include <vector>

#include "plcutseg/tensor/autograd.hpp"

namespace plcutseg::tensor {

/// A learnable leaf with a stable name. Names key checkpoint records and the
/// parameter hashes used to audit which nets a training step touched.
struct Param {
  std::string name;
  Var var;
};

std::vector<Var> vars_of(const std::vector<Param>& params);
std::size_t param_count(const std::vector<Param>& params);

/// 2-D convolution layer. Weight [co,ci,k,k], He-normal init, zero bias.
class Conv2d {
public:
  Conv2d(int ci, int co, int k, int stride, int pad, Rng& rng, bool with_bias = true);

  Var forward(const Var& x) const;
  void collect(const std::string& prefix, std::vector<Param>& out) const;

  Var weight;
  Var bias;  // null when constructed without bias

private:
  int stride_;
  int pad_;
};

/// Fully connected layer over row vectors. Weight [ci,co].
class Linear {
public:
  Linear(int ci, int co, Rng& rng, bool with_bias = true);

  Var forward(const Var& x) const;
  void collect(const std::string& prefix, std::vector<Param>& out) const;

  Var weight;
  Var bias;
};

}  // namespace plcutseg::tensor
