#pragma once

#include <cstddef>

namespace plcutseg::kernels {

/// Geometry of a 2-D convolution. Square kernels, symmetric zero padding.
struct ConvDims {
  int n;        // batch
  int ci, co;   // channels in/out
  int h, w;     // input spatial
  int k;        // kernel size
  int stride;
  int pad;
  int ho, wo;   // output spatial

  static ConvDims make(int n, int ci, int h, int w, int co, int k, int stride, int pad) {
    ConvDims d{n, ci, co, h, w, k, stride, pad, 0, 0};
    d.ho = (h + 2 * pad - k) / stride + 1;
    d.wo = (w + 2 * pad - k) / stride + 1;
    return d;
  }
};

// Every kernel exists twice with the same signature: kernels::ref holds the
// plain serial loops used as the testing oracle, kernels::omp the parallel
// implementations used in production. Gradient kernels accumulate (+=) into
// their output buffers. All omp variants assign each output element to exactly
// one thread, so results are identical for any thread count. Forward kernels
// keep ref's per-element accumulation order and match it bit for bit, except
// matmul_nt_forward whose simd-reduced dot products (like the gradient
// kernels' reductions) regroup additions and agree only within rounding.

#define PLCUTSEG_KERNEL_DECLS                                                              \
  void conv2d_forward(const ConvDims& d, const double* x, const double* w,                 \
                      const double* bias, double* y);                                      \
  void conv2d_backward_input(const ConvDims& d, const double* w, const double* gy,         \
                             double* gx);                                                  \
  void conv2d_backward_weights(const ConvDims& d, const double* x, const double* gy,       \
                               double* gw, double* gb);                                    \
  void linear_forward(int rows, int ci, int co, const double* x, const double* w,          \
                      const double* bias, double* y);                                      \
  void linear_backward(int rows, int ci, int co, const double* x, const double* w,         \
                       const double* gy, double* gx, double* gw, double* gb);              \
  void matmul_nt_forward(int r, int c, int k, const double* a, const double* b,            \
                         double* y);                                                       \
  void matmul_nt_backward(int r, int c, int k, const double* a, const double* b,           \
                          const double* gy, double* ga, double* gb);                       \
  void instance_norm_forward(int n, int c, int hw, double eps, const double* x,            \
                             double* y, double* inv_std);                                  \
  void instance_norm_backward(int n, int c, int hw, const double* y,                       \
                              const double* inv_std, const double* gy, double* gx);        \
  void relu_forward(std::size_t n, const double* x, double* y);                            \
  void relu_backward(std::size_t n, const double* x, const double* gy, double* gx);        \
  void leaky_relu_forward(std::size_t n, double slope, const double* x, double* y);        \
  void leaky_relu_backward(std::size_t n, double slope, const double* x,                   \
                           const double* gy, double* gx);                                  \
  void tanh_forward(std::size_t n, const double* x, double* y);                            \
  void tanh_backward(std::size_t n, const double* y, const double* gy, double* gx);        \
  void sigmoid_forward(std::size_t n, const double* x, double* y);                         \
  void sigmoid_backward(std::size_t n, const double* y, const double* gy, double* gx);     \
  void upsample2_forward(int n, int c, int h, int w, const double* x, double* y);          \
  void upsample2_backward(int n, int c, int h, int w, const double* gy, double* gx);

namespace ref {
PLCUTSEG_KERNEL_DECLS
}
namespace omp {
PLCUTSEG_KERNEL_DECLS
}

#undef PLCUTSEG_KERNEL_DECLS

enum class Backend { Ref, Omp };

/// Process-wide kernel backend. Defaults to Omp; the PLCUTSEG_KERNELS
/// environment variable ("ref"/"omp") overrides at startup.
Backend active_backend();
void set_backend(Backend b);

}  // namespace plcutseg::kernels
