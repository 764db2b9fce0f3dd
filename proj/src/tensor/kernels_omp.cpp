// OpenMP kernels. Loops are restructured so the innermost dimension is
// contiguous and every output element is written by exactly one thread, so
// results are bit-identical across thread counts. Forward kernels reproduce
// kernels::ref bit-for-bit (same per-element accumulation chain); gradient
// kernels accumulate taps directly into the output buffer, which regroups
// the additions, so they match ref only within rounding.

#include <cmath>

#include "plcutseg/tensor/kernels.hpp"

namespace plcutseg::kernels::omp {

namespace {
inline int ceil_div(int a, int b) { return a >= 0 ? (a + b - 1) / b : -((-a) / b); }
inline int floor_div(int a, int b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }
inline int clamp(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }
}  // namespace

void conv2d_forward(const ConvDims& d, const double* x, const double* w,
                    const double* bias, double* y) {
  const std::size_t in_plane = static_cast<std::size_t>(d.h) * d.w;
  const std::size_t out_plane = static_cast<std::size_t>(d.ho) * d.wo;
#pragma omp parallel for schedule(static)
  for (int nc = 0; nc < d.n * d.co; ++nc) {
    const int n = nc / d.co;
    const int co = nc % d.co;
    double* __restrict yp = y + (static_cast<std::size_t>(n) * d.co + co) * out_plane;
    const double b = bias ? bias[co] : 0.0;
    for (std::size_t i = 0; i < out_plane; ++i) yp[i] = b;
    for (int ci = 0; ci < d.ci; ++ci) {
      const double* __restrict xp = x + (static_cast<std::size_t>(n) * d.ci + ci) * in_plane;
      const double* __restrict wp =
          w + (static_cast<std::size_t>(co) * d.ci + ci) * d.k * d.k;
      for (int kh = 0; kh < d.k; ++kh) {
        const int oh_lo = clamp(ceil_div(d.pad - kh, d.stride), 0, d.ho);
        const int oh_hi = clamp(floor_div(d.h - 1 + d.pad - kh, d.stride) + 1, 0, d.ho);
        for (int kw = 0; kw < d.k; ++kw) {
          const double wv = wp[kh * d.k + kw];
          const int ow_lo = clamp(ceil_div(d.pad - kw, d.stride), 0, d.wo);
          const int ow_hi = clamp(floor_div(d.w - 1 + d.pad - kw, d.stride) + 1, 0, d.wo);
          for (int oh = oh_lo; oh < oh_hi; ++oh) {
            const int ih = oh * d.stride - d.pad + kh;
            const double* __restrict xrow = xp + static_cast<std::size_t>(ih) * d.w - d.pad + kw;
            double* __restrict yrow = yp + static_cast<std::size_t>(oh) * d.wo;
            if (d.stride == 1) {
#pragma omp simd
              for (int ow = ow_lo; ow < ow_hi; ++ow) yrow[ow] += wv * xrow[ow];
            } else {
#pragma omp simd
              for (int ow = ow_lo; ow < ow_hi; ++ow) yrow[ow] += wv * xrow[ow * d.stride];
            }
          }
        }
      }
    }
  }
}

void conv2d_backward_input(const ConvDims& d, const double* w, const double* gy,
                           double* gx) {
  const std::size_t in_plane = static_cast<std::size_t>(d.h) * d.w;
  const std::size_t out_plane = static_cast<std::size_t>(d.ho) * d.wo;
#pragma omp parallel for schedule(static)
  for (int nc = 0; nc < d.n * d.ci; ++nc) {
    const int n = nc / d.ci;
    const int ci = nc % d.ci;
    double* __restrict gxp = gx + (static_cast<std::size_t>(n) * d.ci + ci) * in_plane;
    for (int co = 0; co < d.co; ++co) {
      const double* __restrict gyp =
          gy + (static_cast<std::size_t>(n) * d.co + co) * out_plane;
      const double* __restrict wp =
          w + (static_cast<std::size_t>(co) * d.ci + ci) * d.k * d.k;
      for (int kh = 0; kh < d.k; ++kh) {
        const int oh_lo = clamp(ceil_div(d.pad - kh, d.stride), 0, d.ho);
        const int oh_hi = clamp(floor_div(d.h - 1 + d.pad - kh, d.stride) + 1, 0, d.ho);
        for (int kw = 0; kw < d.k; ++kw) {
          const double wv = wp[kh * d.k + kw];
          const int ow_lo = clamp(ceil_div(d.pad - kw, d.stride), 0, d.wo);
          const int ow_hi = clamp(floor_div(d.w - 1 + d.pad - kw, d.stride) + 1, 0, d.wo);
          for (int oh = oh_lo; oh < oh_hi; ++oh) {
            const int ih = oh * d.stride - d.pad + kh;
            double* __restrict gxrow = gxp + static_cast<std::size_t>(ih) * d.w - d.pad + kw;
            const double* __restrict gyrow = gyp + static_cast<std::size_t>(oh) * d.wo;
            if (d.stride == 1) {
#pragma omp simd
              for (int ow = ow_lo; ow < ow_hi; ++ow) gxrow[ow] += wv * gyrow[ow];
            } else {
              for (int ow = ow_lo; ow < ow_hi; ++ow) gxrow[ow * d.stride] += wv * gyrow[ow];
            }
          }
        }
      }
    }
  }
}

void conv2d_backward_weights(const ConvDims& d, const double* x, const double* gy,
                             double* gw, double* gb) {
  const std::size_t in_plane = static_cast<std::size_t>(d.h) * d.w;
  const std::size_t out_plane = static_cast<std::size_t>(d.ho) * d.wo;
#pragma omp parallel for schedule(static)
  for (int co = 0; co < d.co; ++co) {
    double* __restrict gwp = gw + static_cast<std::size_t>(co) * d.ci * d.k * d.k;
    double bacc = 0.0;
    for (int n = 0; n < d.n; ++n) {
      const double* __restrict gyp =
          gy + (static_cast<std::size_t>(n) * d.co + co) * out_plane;
      if (gb)
        for (std::size_t i = 0; i < out_plane; ++i) bacc += gyp[i];
      for (int ci = 0; ci < d.ci; ++ci) {
        const double* __restrict xp = x + (static_cast<std::size_t>(n) * d.ci + ci) * in_plane;
        for (int kh = 0; kh < d.k; ++kh) {
          const int oh_lo = clamp(ceil_div(d.pad - kh, d.stride), 0, d.ho);
          const int oh_hi = clamp(floor_div(d.h - 1 + d.pad - kh, d.stride) + 1, 0, d.ho);
          for (int kw = 0; kw < d.k; ++kw) {
            const int ow_lo = clamp(ceil_div(d.pad - kw, d.stride), 0, d.wo);
            const int ow_hi = clamp(floor_div(d.w - 1 + d.pad - kw, d.stride) + 1, 0, d.wo);
            double acc = 0.0;
            for (int oh = oh_lo; oh < oh_hi; ++oh) {
              const int ih = oh * d.stride - d.pad + kh;
              const double* __restrict xrow =
                  xp + static_cast<std::size_t>(ih) * d.w - d.pad + kw;
              const double* __restrict gyrow = gyp + static_cast<std::size_t>(oh) * d.wo;
              if (d.stride == 1) {
#pragma omp simd reduction(+ : acc)
                for (int ow = ow_lo; ow < ow_hi; ++ow) acc += xrow[ow] * gyrow[ow];
              } else {
#pragma omp simd reduction(+ : acc)
                for (int ow = ow_lo; ow < ow_hi; ++ow) acc += xrow[ow * d.stride] * gyrow[ow];
              }
            }
            gwp[(ci * d.k + kh) * d.k + kw] += acc;
          }
        }
      }
    }
    if (gb) gb[co] += bacc;
  }
}

void linear_forward(int rows, int ci, int co, const double* x, const double* w,
                    const double* bias, double* y) {
#pragma omp parallel for schedule(static)
  for (int r = 0; r < rows; ++r) {
    const double* __restrict xr = x + static_cast<std::size_t>(r) * ci;
    double* __restrict yr = y + static_cast<std::size_t>(r) * co;
    for (int o = 0; o < co; ++o) yr[o] = bias ? bias[o] : 0.0;
    for (int i = 0; i < ci; ++i) {
      const double xv = xr[i];
      const double* __restrict wr = w + static_cast<std::size_t>(i) * co;
#pragma omp simd
      for (int o = 0; o < co; ++o) yr[o] += xv * wr[o];
    }
  }
}

void linear_backward(int rows, int ci, int co, const double* x, const double* w,
                     const double* gy, double* gx, double* gw, double* gb) {
  if (gx) {
#pragma omp parallel for schedule(static)
    for (int r = 0; r < rows; ++r) {
      const double* __restrict gyr = gy + static_cast<std::size_t>(r) * co;
      double* __restrict gxr = gx + static_cast<std::size_t>(r) * ci;
      for (int i = 0; i < ci; ++i) {
        const double* __restrict wr = w + static_cast<std::size_t>(i) * co;
        double acc = 0.0;
#pragma omp simd reduction(+ : acc)
        for (int o = 0; o < co; ++o) acc += gyr[o] * wr[o];
        gxr[i] += acc;
      }
    }
  }
  if (gw) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < ci; ++i) {
      double* __restrict gwr = gw + static_cast<std::size_t>(i) * co;
      for (int r = 0; r < rows; ++r) {
        const double xv = x[static_cast<std::size_t>(r) * ci + i];
        const double* __restrict gyr = gy + static_cast<std::size_t>(r) * co;
#pragma omp simd
        for (int o = 0; o < co; ++o) gwr[o] += xv * gyr[o];
      }
    }
  }
  if (gb) {
    for (int r = 0; r < rows; ++r) {
      const double* __restrict gyr = gy + static_cast<std::size_t>(r) * co;
      for (int o = 0; o < co; ++o) gb[o] += gyr[o];
    }
  }
}

void matmul_nt_forward(int r, int c, int k, const double* a, const double* b, double* y) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < r; ++i) {
    const double* __restrict ar = a + static_cast<std::size_t>(i) * k;
    double* __restrict yr = y + static_cast<std::size_t>(i) * c;
    for (int j = 0; j < c; ++j) {
      const double* __restrict br = b + static_cast<std::size_t>(j) * k;
      double acc = 0.0;
#pragma omp simd reduction(+ : acc)
      for (int t = 0; t < k; ++t) acc += ar[t] * br[t];
      yr[j] = acc;
    }
  }
}

void matmul_nt_backward(int r, int c, int k, const double* a, const double* b,
                        const double* gy, double* ga, double* gb) {
  if (ga) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < r; ++i) {
      const double* __restrict gyr = gy + static_cast<std::size_t>(i) * c;
      double* __restrict gar = ga + static_cast<std::size_t>(i) * k;
      for (int j = 0; j < c; ++j) {
        const double gv = gyr[j];
        const double* __restrict br = b + static_cast<std::size_t>(j) * k;
#pragma omp simd
        for (int t = 0; t < k; ++t) gar[t] += gv * br[t];
      }
    }
  }
  if (gb) {
#pragma omp parallel for schedule(static)
    for (int j = 0; j < c; ++j) {
      double* __restrict gbr = gb + static_cast<std::size_t>(j) * k;
      for (int i = 0; i < r; ++i) {
        const double gv = gy[static_cast<std::size_t>(i) * c + j];
        const double* __restrict ar = a + static_cast<std::size_t>(i) * k;
#pragma omp simd
        for (int t = 0; t < k; ++t) gbr[t] += gv * ar[t];
      }
    }
  }
}

void instance_norm_forward(int n, int c, int hw, double eps, const double* x,
                           double* y, double* inv_std) {
#pragma omp parallel for schedule(static)
  for (int g = 0; g < n * c; ++g) {
    const double* __restrict xs = x + static_cast<std::size_t>(g) * hw;
    double* __restrict ys = y + static_cast<std::size_t>(g) * hw;
    double mean = 0.0;
#pragma omp simd reduction(+ : mean)
    for (int i = 0; i < hw; ++i) mean += xs[i];
    mean /= hw;
    double var = 0.0;
#pragma omp simd reduction(+ : var)
    for (int i = 0; i < hw; ++i) var += (xs[i] - mean) * (xs[i] - mean);
    var /= hw;
    const double is = 1.0 / std::sqrt(var + eps);
    inv_std[g] = is;
#pragma omp simd
    for (int i = 0; i < hw; ++i) ys[i] = (xs[i] - mean) * is;
  }
}

void instance_norm_backward(int n, int c, int hw, const double* y,
                            const double* inv_std, const double* gy, double* gx) {
#pragma omp parallel for schedule(static)
  for (int g = 0; g < n * c; ++g) {
    const double* __restrict ys = y + static_cast<std::size_t>(g) * hw;
    const double* __restrict gs = gy + static_cast<std::size_t>(g) * hw;
    double* __restrict xs = gx + static_cast<std::size_t>(g) * hw;
    double m1 = 0.0, m2 = 0.0;
#pragma omp simd reduction(+ : m1, m2)
    for (int i = 0; i < hw; ++i) {
      m1 += gs[i];
      m2 += gs[i] * ys[i];
    }
    m1 /= hw;
    m2 /= hw;
    const double is = inv_std[g];
#pragma omp simd
    for (int i = 0; i < hw; ++i) xs[i] += is * (gs[i] - m1 - ys[i] * m2);
  }
}

void relu_forward(std::size_t n, const double* x, double* y) {
#pragma omp parallel for simd schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
    y[i] = x[i] > 0.0 ? x[i] : 0.0;
}
void relu_backward(std::size_t n, const double* x, const double* gy, double* gx) {
#pragma omp parallel for simd schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
    gx[i] += x[i] > 0.0 ? gy[i] : 0.0;
}
void leaky_relu_forward(std::size_t n, double slope, const double* x, double* y) {
#pragma omp parallel for simd schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
    y[i] = x[i] > 0.0 ? x[i] : slope * x[i];
}
void leaky_relu_backward(std::size_t n, double slope, const double* x,
                         const double* gy, double* gx) {
#pragma omp parallel for simd schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
    gx[i] += x[i] > 0.0 ? gy[i] : slope * gy[i];
}
void tanh_forward(std::size_t n, const double* x, double* y) {
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) y[i] = std::tanh(x[i]);
}
void tanh_backward(std::size_t n, const double* y, const double* gy, double* gx) {
#pragma omp parallel for simd schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
    gx[i] += gy[i] * (1.0 - y[i] * y[i]);
}
void sigmoid_forward(std::size_t n, const double* x, double* y) {
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
    y[i] = 1.0 / (1.0 + std::exp(-x[i]));
}
void sigmoid_backward(std::size_t n, const double* y, const double* gy, double* gx) {
#pragma omp parallel for simd schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
    gx[i] += gy[i] * y[i] * (1.0 - y[i]);
}

void upsample2_forward(int n, int c, int h, int w, const double* x, double* y) {
#pragma omp parallel for schedule(static)
  for (int g = 0; g < n * c; ++g) {
    const double* __restrict xp = x + static_cast<std::size_t>(g) * h * w;
    double* __restrict yp = y + static_cast<std::size_t>(g) * 4 * h * w;
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j) {
        const double v = xp[static_cast<std::size_t>(i) * w + j];
        double* base = yp + (static_cast<std::size_t>(2 * i) * 2 * w) + 2 * j;
        base[0] = v;
        base[1] = v;
        base[2 * w] = v;
        base[2 * w + 1] = v;
      }
  }
}
void upsample2_backward(int n, int c, int h, int w, const double* gy, double* gx) {
#pragma omp parallel for schedule(static)
  for (int g = 0; g < n * c; ++g) {
    const double* __restrict gyp = gy + static_cast<std::size_t>(g) * 4 * h * w;
    double* __restrict gxp = gx + static_cast<std::size_t>(g) * h * w;
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j) {
        const double* base = gyp + (static_cast<std::size_t>(2 * i) * 2 * w) + 2 * j;
        gxp[static_cast<std::size_t>(i) * w + j] += base[0] + base[1] + base[2 * w] + base[2 * w + 1];
      }
  }
}

}  // namespace plcutseg::kernels::omp
