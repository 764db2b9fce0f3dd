#include "plcutseg/tensor/autograd.hpp"

#include <cmath>
#include <cstring>
#include <unordered_set>

#include "plcutseg/tensor/kernels.hpp"

namespace plcutseg::tensor {

using kernels::Backend;
using kernels::ConvDims;

#define PLCUTSEG_DISPATCH(fn, ...)                              \
  do {                                                          \
    if (kernels::active_backend() == Backend::Omp)              \
      kernels::omp::fn(__VA_ARGS__);                            \
    else                                                        \
      kernels::ref::fn(__VA_ARGS__);                            \
  } while (0)

namespace {
thread_local bool g_grad_enabled = true;

Var make_node(Tensor value, std::vector<Var> parents,
              std::function<void(Node&)> backward_fn) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  if (g_grad_enabled) {
    for (const auto& p : parents) n->requires_grad |= p->requires_grad;
    if (n->requires_grad) {
      n->parents = std::move(parents);
      n->backward_fn = std::move(backward_fn);
    }
  }
  return n;
}
}  // namespace

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }

Var constant(Tensor v) {
  auto n = std::make_shared<Node>();
  n->value = std::move(v);
  return n;
}

Var parameter(Tensor v) {
  auto n = std::make_shared<Node>();
  n->value = std::move(v);
  n->requires_grad = true;
  return n;
}

Var detach(const Var& x) { return constant(x->value); }

void backward(const Var& root) {
  require(root->value.numel() == 1, "backward: root must be scalar");
  // Post-order DFS, then replay reversed so each node's grad is complete
  // before it pushes into its parents.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root.get(), 0);
  seen.insert(root.get());
  while (!stack.empty()) {
    auto& [node, idx] = stack.back();
    if (idx < node->parents.size()) {
      Node* p = node->parents[idx++].get();
      if (p->requires_grad && !seen.count(p)) {
        seen.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  root->ensure_grad().fill(1.0);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward_fn && n->grad.numel() != 0) n->backward_fn(*n);
  }
}

// --- ops ----------------------------------------------------------------

Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad) {
  const auto& xs = x->value.shape();
  const auto& ws = w->value.shape();
  require(xs.size() == 4 && ws.size() == 4, "conv2d: expects NCHW input and OIKK weight");
  require(xs[1] == ws[1], "conv2d: channel mismatch");
  ConvDims d = ConvDims::make(xs[0], xs[1], xs[2], xs[3], ws[0], ws[2], stride, pad);
  require(d.ho > 0 && d.wo > 0, "conv2d: output would be empty");
  Tensor y({d.n, d.co, d.ho, d.wo});
  PLCUTSEG_DISPATCH(conv2d_forward, d, x->value.data(), w->value.data(),
                    b ? b->value.data() : nullptr, y.data());
  std::vector<Var> parents{x, w};
  if (b) parents.push_back(b);
  return make_node(std::move(y), std::move(parents),
                   [x, w, b, d](Node& n) {
                     if (x->requires_grad)
                       PLCUTSEG_DISPATCH(conv2d_backward_input, d, w->value.data(),
                                         n.grad.data(), x->ensure_grad().data());
                     if (w->requires_grad || (b && b->requires_grad))
                       PLCUTSEG_DISPATCH(conv2d_backward_weights, d, x->value.data(),
                                         n.grad.data(), w->ensure_grad().data(),
                                         b ? b->ensure_grad().data() : nullptr);
                   });
}

Var instance_norm(const Var& x, double eps) {
  const auto& s = x->value.shape();
  require(s.size() == 4, "instance_norm: expects NCHW");
  const int n = s[0], c = s[1], hw = s[2] * s[3];
  Tensor y(s);
  auto inv_std = std::make_shared<Tensor>(std::vector<int>{n, c});
  PLCUTSEG_DISPATCH(instance_norm_forward, n, c, hw, eps, x->value.data(), y.data(),
                    inv_std->data());
  return make_node(std::move(y), {x}, [x, inv_std, n, c, hw](Node& out) {
    if (!x->requires_grad) return;
    PLCUTSEG_DISPATCH(instance_norm_backward, n, c, hw, out.value.data(),
                      inv_std->data(), out.grad.data(), x->ensure_grad().data());
  });
}

Var relu(const Var& x) {
  Tensor y(x->value.shape());
  PLCUTSEG_DISPATCH(relu_forward, x->value.numel(), x->value.data(), y.data());
  return make_node(std::move(y), {x}, [x](Node& out) {
    if (!x->requires_grad) return;
    PLCUTSEG_DISPATCH(relu_backward, x->value.numel(), x->value.data(), out.grad.data(),
                      x->ensure_grad().data());
  });
}

Var leaky_relu(const Var& x, double slope) {
  Tensor y(x->value.shape());
  PLCUTSEG_DISPATCH(leaky_relu_forward, x->value.numel(), slope, x->value.data(), y.data());
  return make_node(std::move(y), {x}, [x, slope](Node& out) {
    if (!x->requires_grad) return;
    PLCUTSEG_DISPATCH(leaky_relu_backward, x->value.numel(), slope, x->value.data(),
                      out.grad.data(), x->ensure_grad().data());
  });
}

Var tanh_op(const Var& x) {
  Tensor y(x->value.shape());
  PLCUTSEG_DISPATCH(tanh_forward, x->value.numel(), x->value.data(), y.data());
  return make_node(std::move(y), {x}, [x](Node& out) {
    if (!x->requires_grad) return;
    PLCUTSEG_DISPATCH(tanh_backward, x->value.numel(), out.value.data(), out.grad.data(),
                      x->ensure_grad().data());
  });
}

Var sigmoid_op(const Var& x) {
  Tensor y(x->value.shape());
  PLCUTSEG_DISPATCH(sigmoid_forward, x->value.numel(), x->value.data(), y.data());
  return make_node(std::move(y), {x}, [x](Node& out) {
    if (!x->requires_grad) return;
    PLCUTSEG_DISPATCH(sigmoid_backward, x->value.numel(), out.value.data(), out.grad.data(),
                      x->ensure_grad().data());
  });
}

Var upsample2(const Var& x) {
  const auto& s = x->value.shape();
  require(s.size() == 4, "upsample2: expects NCHW");
  Tensor y({s[0], s[1], s[2] * 2, s[3] * 2});
  PLCUTSEG_DISPATCH(upsample2_forward, s[0], s[1], s[2], s[3], x->value.data(), y.data());
  return make_node(std::move(y), {x}, [x, s](Node& out) {
    if (!x->requires_grad) return;
    PLCUTSEG_DISPATCH(upsample2_backward, s[0], s[1], s[2], s[3], out.grad.data(),
                      x->ensure_grad().data());
  });
}

Var linear(const Var& x, const Var& w, const Var& b) {
  const auto& xs = x->value.shape();
  const auto& ws = w->value.shape();
  require(xs.size() == 2 && ws.size() == 2 && xs[1] == ws[0], "linear: shape mismatch");
  const int rows = xs[0], ci = xs[1], co = ws[1];
  Tensor y({rows, co});
  PLCUTSEG_DISPATCH(linear_forward, rows, ci, co, x->value.data(), w->value.data(),
                    b ? b->value.data() : nullptr, y.data());
  std::vector<Var> parents{x, w};
  if (b) parents.push_back(b);
  return make_node(std::move(y), std::move(parents), [x, w, b, rows, ci, co](Node& out) {
    PLCUTSEG_DISPATCH(linear_backward, rows, ci, co, x->value.data(), w->value.data(),
                      out.grad.data(),
                      x->requires_grad ? x->ensure_grad().data() : nullptr,
                      w->requires_grad ? w->ensure_grad().data() : nullptr,
                      (b && b->requires_grad) ? b->ensure_grad().data() : nullptr);
  });
}

Var matmul_nt(const Var& a, const Var& b) {
  const auto& as = a->value.shape();
  const auto& bs = b->value.shape();
  require(as.size() == 2 && bs.size() == 2 && as[1] == bs[1], "matmul_nt: shape mismatch");
  const int r = as[0], c = bs[0], k = as[1];
  Tensor y({r, c});
  PLCUTSEG_DISPATCH(matmul_nt_forward, r, c, k, a->value.data(), b->value.data(), y.data());
  return make_node(std::move(y), {a, b}, [a, b, r, c, k](Node& out) {
    PLCUTSEG_DISPATCH(matmul_nt_backward, r, c, k, a->value.data(), b->value.data(),
                      out.grad.data(),
                      a->requires_grad ? a->ensure_grad().data() : nullptr,
                      b->requires_grad ? b->ensure_grad().data() : nullptr);
  });
}

Var add(const Var& a, const Var& b) { return axpby(1.0, a, 1.0, b); }

Var axpby(double alpha, const Var& a, double beta, const Var& b) {
  require(a->value.same_shape(b->value), "axpby: shape mismatch");
  Tensor y(a->value.shape());
  const double* pa = a->value.data();
  const double* pb = b->value.data();
  for (std::size_t i = 0; i < y.numel(); ++i) y[i] = alpha * pa[i] + beta * pb[i];
  return make_node(std::move(y), {a, b}, [a, b, alpha, beta](Node& out) {
    if (a->requires_grad) {
      Tensor& g = a->ensure_grad();
      for (std::size_t i = 0; i < g.numel(); ++i) g[i] += alpha * out.grad[i];
    }
    if (b->requires_grad) {
      Tensor& g = b->ensure_grad();
      for (std::size_t i = 0; i < g.numel(); ++i) g[i] += beta * out.grad[i];
    }
  });
}

Var add_scalar(const Var& x, double c) {
  Tensor y = x->value;
  for (std::size_t i = 0; i < y.numel(); ++i) y[i] += c;
  return make_node(std::move(y), {x}, [x](Node& out) {
    if (x->requires_grad) x->accumulate(out.grad);
  });
}

Var mul_scalar(const Var& x, double c) {
  Tensor y = x->value;
  y.scale_(c);
  return make_node(std::move(y), {x}, [x, c](Node& out) {
    if (!x->requires_grad) return;
    Tensor& g = x->ensure_grad();
    for (std::size_t i = 0; i < g.numel(); ++i) g[i] += c * out.grad[i];
  });
}

Var affine_scalar(const Var& x, const Var& w, const Var& b) {
  require(w->value.numel() == 1 && b->value.numel() == 1,
          "affine_scalar: w and b must be scalars");
  const double wv = w->value[0], bv = b->value[0];
  Tensor y(x->value.shape());
  for (std::size_t i = 0; i < y.numel(); ++i) y[i] = wv * x->value[i] + bv;
  return make_node(std::move(y), {x, w, b}, [x, w, b, wv](Node& out) {
    if (x->requires_grad) {
      Tensor& g = x->ensure_grad();
      for (std::size_t i = 0; i < g.numel(); ++i) g[i] += wv * out.grad[i];
    }
    if (w->requires_grad) {
      double acc = 0.0;
      for (std::size_t i = 0; i < out.grad.numel(); ++i) acc += x->value[i] * out.grad[i];
      w->ensure_grad()[0] += acc;
    }
    if (b->requires_grad) {
      double acc = 0.0;
      for (std::size_t i = 0; i < out.grad.numel(); ++i) acc += out.grad[i];
      b->ensure_grad()[0] += acc;
    }
  });
}

Var square(const Var& x) {
  Tensor y(x->value.shape());
  for (std::size_t i = 0; i < y.numel(); ++i) y[i] = x->value[i] * x->value[i];
  return make_node(std::move(y), {x}, [x](Node& out) {
    if (!x->requires_grad) return;
    Tensor& g = x->ensure_grad();
    for (std::size_t i = 0; i < g.numel(); ++i) g[i] += 2.0 * x->value[i] * out.grad[i];
  });
}

Var mean_all(const Var& x) {
  const double inv = 1.0 / static_cast<double>(x->value.numel());
  Tensor y = Tensor::scalar(x->value.sum() * inv);
  return make_node(std::move(y), {x}, [x, inv](Node& out) {
    if (!x->requires_grad) return;
    const double g = out.grad[0] * inv;
    Tensor& gx = x->ensure_grad();
    for (std::size_t i = 0; i < gx.numel(); ++i) gx[i] += g;
  });
}

Var weighted_sum(const std::vector<Var>& scalars, const std::vector<double>& weights) {
  require(scalars.size() == weights.size() && !scalars.empty(), "weighted_sum: size mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < scalars.size(); ++i) {
    require(scalars[i]->value.numel() == 1, "weighted_sum: non-scalar term");
    acc += weights[i] * scalars[i]->value[0];
  }
  return make_node(Tensor::scalar(acc), scalars, [scalars, weights](Node& out) {
    for (std::size_t i = 0; i < scalars.size(); ++i)
      if (scalars[i]->requires_grad) {
        scalars[i]->ensure_grad()[0] += weights[i] * out.grad[0];
      }
  });
}

Var concat_channels(const Var& a, const Var& b) {
  const auto& as = a->value.shape();
  const auto& bs = b->value.shape();
  require(as.size() == 4 && bs.size() == 4 && as[0] == bs[0] && as[2] == bs[2] &&
              as[3] == bs[3],
          "concat_channels: shape mismatch");
  const int n = as[0], ca = as[1], cb = bs[1], hw = as[2] * as[3];
  Tensor y({n, ca + cb, as[2], as[3]});
  for (int i = 0; i < n; ++i) {
    std::memcpy(y.data() + static_cast<std::size_t>(i) * (ca + cb) * hw,
                a->value.data() + static_cast<std::size_t>(i) * ca * hw,
                sizeof(double) * ca * hw);
    std::memcpy(y.data() + (static_cast<std::size_t>(i) * (ca + cb) + ca) * hw,
                b->value.data() + static_cast<std::size_t>(i) * cb * hw,
                sizeof(double) * cb * hw);
  }
  return make_node(std::move(y), {a, b}, [a, b, n, ca, cb, hw](Node& out) {
    for (int i = 0; i < n; ++i) {
      if (a->requires_grad) {
        double* g = a->ensure_grad().data() + static_cast<std::size_t>(i) * ca * hw;
        const double* og = out.grad.data() + static_cast<std::size_t>(i) * (ca + cb) * hw;
        for (int j = 0; j < ca * hw; ++j) g[j] += og[j];
      }
      if (b->requires_grad) {
        double* g = b->ensure_grad().data() + static_cast<std::size_t>(i) * cb * hw;
        const double* og =
            out.grad.data() + (static_cast<std::size_t>(i) * (ca + cb) + ca) * hw;
        for (int j = 0; j < cb * hw; ++j) g[j] += og[j];
      }
    }
  });
}

Var stack_rows(const std::vector<Var>& xs) {
  require(!xs.empty(), "stack_rows: empty input");
  const auto& s0 = xs[0]->value.shape();
  std::vector<int> out_shape;
  out_shape.push_back(static_cast<int>(xs.size()));
  for (int d : s0) out_shape.push_back(d);
  const std::size_t stride = xs[0]->value.numel();
  Tensor y(out_shape);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    require(xs[i]->value.same_shape(xs[0]->value), "stack_rows: ragged shapes");
    std::memcpy(y.data() + i * stride, xs[i]->value.data(), sizeof(double) * stride);
  }
  return make_node(std::move(y), xs, [xs, stride](Node& out) {
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (!xs[i]->requires_grad) continue;
      Tensor& g = xs[i]->ensure_grad();
      const double* og = out.grad.data() + i * stride;
      for (std::size_t j = 0; j < stride; ++j) g[j] += og[j];
    }
  });
}

Var select_row(const Var& x, int i) {
  const auto& s = x->value.shape();
  require(!s.empty() && i >= 0 && i < s[0], "select_row: index out of range");
  std::vector<int> out_shape(s.begin() + 1, s.end());
  const std::size_t stride = shape_numel(out_shape);
  Tensor y(out_shape);
  std::memcpy(y.data(), x->value.data() + static_cast<std::size_t>(i) * stride,
              sizeof(double) * stride);
  return make_node(std::move(y), {x}, [x, i, stride](Node& out) {
    if (!x->requires_grad) return;
    double* g = x->ensure_grad().data() + static_cast<std::size_t>(i) * stride;
    for (std::size_t j = 0; j < stride; ++j) g[j] += out.grad[j];
  });
}

Var slice_rows(const Var& x, int from, int count) {
  const auto& s = x->value.shape();
  require(s.size() == 2 && from >= 0 && from + count <= s[0], "slice_rows: bad range");
  const int c = s[1];
  Tensor y({count, c});
  std::memcpy(y.data(), x->value.data() + static_cast<std::size_t>(from) * c,
              sizeof(double) * count * c);
  return make_node(std::move(y), {x}, [x, from, count, c](Node& out) {
    if (!x->requires_grad) return;
    double* g = x->ensure_grad().data() + static_cast<std::size_t>(from) * c;
    for (std::size_t j = 0; j < static_cast<std::size_t>(count) * c; ++j) g[j] += out.grad[j];
  });
}

Var gather_spatial(const Var& x, const std::vector<int>& locs) {
  const auto& s = x->value.shape();
  require(s.size() == 4, "gather_spatial: expects NCHW");
  const int n = s[0], c = s[1];
  const std::size_t hw = static_cast<std::size_t>(s[2]) * s[3];
  const int p = static_cast<int>(locs.size());
  for (int l : locs) require(l >= 0 && l < static_cast<int>(hw), "gather_spatial: loc out of range");
  Tensor y({n * p, c});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j)
      for (int ch = 0; ch < c; ++ch)
        y.data()[(static_cast<std::size_t>(i) * p + j) * c + ch] =
            x->value.data()[(static_cast<std::size_t>(i) * c + ch) * hw + locs[j]];
  return make_node(std::move(y), {x}, [x, locs, n, c, hw, p](Node& out) {
    if (!x->requires_grad) return;
    Tensor& g = x->ensure_grad();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < p; ++j)
        for (int ch = 0; ch < c; ++ch)
          g.data()[(static_cast<std::size_t>(i) * c + ch) * hw + locs[j]] +=
              out.grad.data()[(static_cast<std::size_t>(i) * p + j) * c + ch];
  });
}

Var l2_normalize_rows(const Var& x) {
  const auto& s = x->value.shape();
  require(s.size() == 2, "l2_normalize_rows: expects 2-D");
  const int rows = s[0], c = s[1];
  Tensor y(s);
  auto norms = std::make_shared<std::vector<double>>(rows);
  for (int r = 0; r < rows; ++r) {
    const double* xr = x->value.data() + static_cast<std::size_t>(r) * c;
    double sq = 0.0;
    for (int i = 0; i < c; ++i) sq += xr[i] * xr[i];
    const double nrm = std::sqrt(sq + 1e-12);
    (*norms)[r] = nrm;
    double* yr = y.data() + static_cast<std::size_t>(r) * c;
    for (int i = 0; i < c; ++i) yr[i] = xr[i] / nrm;
  }
  return make_node(std::move(y), {x}, [x, norms, rows, c](Node& out) {
    if (!x->requires_grad) return;
    Tensor& g = x->ensure_grad();
    for (int r = 0; r < rows; ++r) {
      const double* yr = out.value.data() + static_cast<std::size_t>(r) * c;
      const double* gr = out.grad.data() + static_cast<std::size_t>(r) * c;
      double dot = 0.0;
      for (int i = 0; i < c; ++i) dot += yr[i] * gr[i];
      double* gx = g.data() + static_cast<std::size_t>(r) * c;
      for (int i = 0; i < c; ++i) gx[i] += (gr[i] - yr[i] * dot) / (*norms)[r];
    }
  });
}

Var ce_diagonal(const Var& sims) {
  const auto& s = sims->value.shape();
  require(s.size() == 2 && s[0] == s[1], "ce_diagonal: expects square matrix");
  const int p = s[0];
  auto softmax = std::make_shared<Tensor>(s);
  double loss = 0.0;
  for (int i = 0; i < p; ++i) {
    const double* row = sims->value.data() + static_cast<std::size_t>(i) * p;
    double mx = row[0];
    for (int j = 1; j < p; ++j) mx = std::max(mx, row[j]);
    double denom = 0.0;
    for (int j = 0; j < p; ++j) denom += std::exp(row[j] - mx);
    const double lse = mx + std::log(denom);
    loss += lse - row[i];
    double* sm = softmax->data() + static_cast<std::size_t>(i) * p;
    for (int j = 0; j < p; ++j) sm[j] = std::exp(row[j] - lse);
  }
  loss /= p;
  return make_node(Tensor::scalar(loss), {sims}, [sims, softmax, p](Node& out) {
    if (!sims->requires_grad) return;
    const double g = out.grad[0] / p;
    Tensor& gx = sims->ensure_grad();
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < p; ++j)
        gx.data()[static_cast<std::size_t>(i) * p + j] +=
            g * (softmax->data()[static_cast<std::size_t>(i) * p + j] - (i == j ? 1.0 : 0.0));
  });
}

Var masked_dice(const Var& pred, const Tensor& target, const Tensor& valid, double eps) {
  require(pred->value.numel() == target.numel() && target.numel() == valid.numel(),
          "masked_dice: size mismatch");
  require(eps > 0.0, "masked_dice: eps must be positive");
  const std::size_t n = pred->value.numel();
  double inter = 0.0, sp = 0.0, st = 0.0;
  bool any_valid = false;
  for (std::size_t i = 0; i < n; ++i) {
    if (valid[i] == 0.0) continue;
    any_valid = true;
    inter += pred->value[i] * target[i];
    sp += pred->value[i];
    st += target[i];
  }
  require(any_valid, "masked_dice: validity mask excludes every pixel");
  const double num = 2.0 * inter + eps;
  const double den = sp + st + eps;
  const double loss = 1.0 - num / den;
  auto tcopy = std::make_shared<Tensor>(target);
  auto vcopy = std::make_shared<Tensor>(valid);
  return make_node(Tensor::scalar(loss), {pred}, [pred, tcopy, vcopy, num, den](Node& out) {
    if (!pred->requires_grad) return;
    const double g = out.grad[0];
    Tensor& gx = pred->ensure_grad();
    const double den2 = den * den;
    for (std::size_t i = 0; i < gx.numel(); ++i) {
      if ((*vcopy)[i] == 0.0) continue;
      // d/dp_i of (1 - num/den) = -(2*t_i*den - num) / den^2
      gx[i] += g * (-(2.0 * (*tcopy)[i] * den - num) / den2);
    }
  });
}

#undef PLCUTSEG_DISPATCH

}  // namespace plcutseg::tensor
