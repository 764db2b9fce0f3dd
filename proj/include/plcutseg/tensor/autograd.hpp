#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "plcutseg/tensor/tensor.hpp"

namespace plcutseg::tensor {

// Tape-free reverse-mode autodiff: each op returns a Node holding its value
// and a closure that routes the node's gradient into its parents. backward()
// walks the graph in reverse topological order. Graphs are per-step and die
// when the loss Var goes out of scope; parameters are long-lived leaves.

struct Node;
using Var = std::shared_ptr<Node>;

struct Node {
  Tensor value;
  Tensor grad;  // empty until first accumulation
  bool requires_grad = false;
  std::vector<Var> parents;
  std::function<void(Node&)> backward_fn;

  Tensor& ensure_grad() {
    if (grad.numel() == 0) grad = Tensor(value.shape());
    return grad;
  }
  void accumulate(const Tensor& g) { ensure_grad().add_(g); }
};

bool grad_enabled();

/// Disables graph construction in scope (inference mode).
class NoGradGuard {
public:
  NoGradGuard();
  ~NoGradGuard();

private:
  bool prev_;
};

Var constant(Tensor v);
Var parameter(Tensor v);
Var detach(const Var& x);

/// Backpropagates from a scalar root. Seeds d(root)/d(root) = 1.
void backward(const Var& root);

// --- ops ----------------------------------------------------------------

Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad);
Var instance_norm(const Var& x, double eps = 1e-5);
Var relu(const Var& x);
Var leaky_relu(const Var& x, double slope);
Var tanh_op(const Var& x);
Var sigmoid_op(const Var& x);
Var upsample2(const Var& x);
Var linear(const Var& x, const Var& w, const Var& b);  // x:[R,Ci] w:[Ci,Co]
Var matmul_nt(const Var& a, const Var& b);             // [R,K]x[C,K] -> [R,C]

Var add(const Var& a, const Var& b);
Var axpby(double alpha, const Var& a, double beta, const Var& b);
Var add_scalar(const Var& x, double c);
Var mul_scalar(const Var& x, double c);
Var affine_scalar(const Var& x, const Var& w, const Var& b);  // w*x + b, w/b scalar leaves
Var square(const Var& x);
Var mean_all(const Var& x);
Var weighted_sum(const std::vector<Var>& scalars, const std::vector<double>& weights);

Var concat_channels(const Var& a, const Var& b);       // NCHW along C
Var stack_rows(const std::vector<Var>& xs);            // k tensors S -> [k,S...]
Var select_row(const Var& x, int i);                   // [N,S...] -> [S...]
Var slice_rows(const Var& x, int from, int count);     // [R,C] -> [count,C]

/// Gathers feature vectors at fixed spatial locations: [N,C,H,W] + P flat
/// indices -> [N*P, C] (rows grouped by image).
Var gather_spatial(const Var& x, const std::vector<int>& locs);

Var l2_normalize_rows(const Var& x);

/// Mean over rows of cross-entropy where row i's positive logit is column i.
Var ce_diagonal(const Var& sims);  // [P,P] -> scalar

/// Soft DICE loss over validity-selected pixels:
/// 1 - (2*sum(v*p*t)+eps) / (sum(v*p)+sum(v*t)+eps). Requires >=1 valid pixel.
Var masked_dice(const Var& pred, const Tensor& target, const Tensor& valid, double eps);

}  // namespace plcutseg::tensor
