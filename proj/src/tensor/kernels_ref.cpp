// Serial reference kernels. Straight-line loops with bounds checks in the
// innermost position; these are the oracle the omp kernels are tested against.

#include <cmath>

#include "plcutseg/tensor/kernels.hpp"

namespace plcutseg::kernels::ref {

void conv2d_forward(const ConvDims& d, const double* x, const double* w,
                    const double* bias, double* y) {
  for (int n = 0; n < d.n; ++n)
    for (int co = 0; co < d.co; ++co)
      for (int oh = 0; oh < d.ho; ++oh)
        for (int ow = 0; ow < d.wo; ++ow) {
          double acc = bias ? bias[co] : 0.0;
          for (int ci = 0; ci < d.ci; ++ci)
            for (int kh = 0; kh < d.k; ++kh)
              for (int kw = 0; kw < d.k; ++kw) {
                const int ih = oh * d.stride - d.pad + kh;
                const int iw = ow * d.stride - d.pad + kw;
                if (ih < 0 || ih >= d.h || iw < 0 || iw >= d.w) continue;
                acc += x[((static_cast<std::size_t>(n) * d.ci + ci) * d.h + ih) * d.w + iw] *
                       w[((static_cast<std::size_t>(co) * d.ci + ci) * d.k + kh) * d.k + kw];
              }
          y[((static_cast<std::size_t>(n) * d.co + co) * d.ho + oh) * d.wo + ow] = acc;
        }
}

void conv2d_backward_input(const ConvDims& d, const double* w, const double* gy,
                           double* gx) {
  for (int n = 0; n < d.n; ++n)
    for (int ci = 0; ci < d.ci; ++ci)
      for (int ih = 0; ih < d.h; ++ih)
        for (int iw = 0; iw < d.w; ++iw) {
          double acc = 0.0;
          for (int co = 0; co < d.co; ++co)
            for (int kh = 0; kh < d.k; ++kh)
              for (int kw = 0; kw < d.k; ++kw) {
                const int oh_num = ih + d.pad - kh;
                const int ow_num = iw + d.pad - kw;
                if (oh_num % d.stride || ow_num % d.stride) continue;
                const int oh = oh_num / d.stride;
                const int ow = ow_num / d.stride;
                if (oh < 0 || oh >= d.ho || ow < 0 || ow >= d.wo) continue;
                acc += w[((static_cast<std::size_t>(co) * d.ci + ci) * d.k + kh) * d.k + kw] *
                       gy[((static_cast<std::size_t>(n) * d.co + co) * d.ho + oh) * d.wo + ow];
              }
          gx[((static_cast<std::size_t>(n) * d.ci + ci) * d.h + ih) * d.w + iw] += acc;
        }
}

void conv2d_backward_weights(const ConvDims& d, const double* x, const double* gy,
                             double* gw, double* gb) {
  for (int co = 0; co < d.co; ++co) {
    for (int ci = 0; ci < d.ci; ++ci)
      for (int kh = 0; kh < d.k; ++kh)
        for (int kw = 0; kw < d.k; ++kw) {
          double acc = 0.0;
          for (int n = 0; n < d.n; ++n)
            for (int oh = 0; oh < d.ho; ++oh)
              for (int ow = 0; ow < d.wo; ++ow) {
                const int ih = oh * d.stride - d.pad + kh;
                const int iw = ow * d.stride - d.pad + kw;
                if (ih < 0 || ih >= d.h || iw < 0 || iw >= d.w) continue;
                acc += x[((static_cast<std::size_t>(n) * d.ci + ci) * d.h + ih) * d.w + iw] *
                       gy[((static_cast<std::size_t>(n) * d.co + co) * d.ho + oh) * d.wo + ow];
              }
          gw[((static_cast<std::size_t>(co) * d.ci + ci) * d.k + kh) * d.k + kw] += acc;
        }
    if (gb) {
      double acc = 0.0;
      for (int n = 0; n < d.n; ++n)
        for (int oh = 0; oh < d.ho; ++oh)
          for (int ow = 0; ow < d.wo; ++ow)
            acc += gy[((static_cast<std::size_t>(n) * d.co + co) * d.ho + oh) * d.wo + ow];
      gb[co] += acc;
    }
  }
}

void linear_forward(int rows, int ci, int co, const double* x, const double* w,
                    const double* bias, double* y) {
  for (int r = 0; r < rows; ++r)
    for (int o = 0; o < co; ++o) {
      double acc = bias ? bias[o] : 0.0;
      for (int i = 0; i < ci; ++i) acc += x[static_cast<std::size_t>(r) * ci + i] * w[static_cast<std::size_t>(i) * co + o];
      y[static_cast<std::size_t>(r) * co + o] = acc;
    }
}

void linear_backward(int rows, int ci, int co, const double* x, const double* w,
                     const double* gy, double* gx, double* gw, double* gb) {
  if (gx)
    for (int r = 0; r < rows; ++r)
      for (int i = 0; i < ci; ++i) {
        double acc = 0.0;
        for (int o = 0; o < co; ++o)
          acc += gy[static_cast<std::size_t>(r) * co + o] * w[static_cast<std::size_t>(i) * co + o];
        gx[static_cast<std::size_t>(r) * ci + i] += acc;
      }
  if (gw)
    for (int i = 0; i < ci; ++i)
      for (int o = 0; o < co; ++o) {
        double acc = 0.0;
        for (int r = 0; r < rows; ++r)
          acc += x[static_cast<std::size_t>(r) * ci + i] * gy[static_cast<std::size_t>(r) * co + o];
        gw[static_cast<std::size_t>(i) * co + o] += acc;
      }
  if (gb)
    for (int o = 0; o < co; ++o) {
      double acc = 0.0;
      for (int r = 0; r < rows; ++r) acc += gy[static_cast<std::size_t>(r) * co + o];
      gb[o] += acc;
    }
}

void matmul_nt_forward(int r, int c, int k, const double* a, const double* b, double* y) {
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) {
      double acc = 0.0;
      for (int t = 0; t < k; ++t)
        acc += a[static_cast<std::size_t>(i) * k + t] * b[static_cast<std::size_t>(j) * k + t];
      y[static_cast<std::size_t>(i) * c + j] = acc;
    }
}

void matmul_nt_backward(int r, int c, int k, const double* a, const double* b,
                        const double* gy, double* ga, double* gb) {
  if (ga)
    for (int i = 0; i < r; ++i)
      for (int t = 0; t < k; ++t) {
        double acc = 0.0;
        for (int j = 0; j < c; ++j)
          acc += gy[static_cast<std::size_t>(i) * c + j] * b[static_cast<std::size_t>(j) * k + t];
        ga[static_cast<std::size_t>(i) * k + t] += acc;
      }
  if (gb)
    for (int j = 0; j < c; ++j)
      for (int t = 0; t < k; ++t) {
        double acc = 0.0;
        for (int i = 0; i < r; ++i)
          acc += gy[static_cast<std::size_t>(i) * c + j] * a[static_cast<std::size_t>(i) * k + t];
        gb[static_cast<std::size_t>(j) * k + t] += acc;
      }
}

void instance_norm_forward(int n, int c, int hw, double eps, const double* x,
                           double* y, double* inv_std) {
  for (int g = 0; g < n * c; ++g) {
    const double* xs = x + static_cast<std::size_t>(g) * hw;
    double* ys = y + static_cast<std::size_t>(g) * hw;
    double mean = 0.0;
    for (int i = 0; i < hw; ++i) mean += xs[i];
    mean /= hw;
    double var = 0.0;
    for (int i = 0; i < hw; ++i) var += (xs[i] - mean) * (xs[i] - mean);
    var /= hw;
    const double is = 1.0 / std::sqrt(var + eps);
    inv_std[g] = is;
    for (int i = 0; i < hw; ++i) ys[i] = (xs[i] - mean) * is;
  }
}

void instance_norm_backward(int n, int c, int hw, const double* y,
                            const double* inv_std, const double* gy, double* gx) {
  for (int g = 0; g < n * c; ++g) {
    const double* ys = y + static_cast<std::size_t>(g) * hw;
    const double* gs = gy + static_cast<std::size_t>(g) * hw;
    double* xs = gx + static_cast<std::size_t>(g) * hw;
    double m1 = 0.0, m2 = 0.0;
    for (int i = 0; i < hw; ++i) {
      m1 += gs[i];
      m2 += gs[i] * ys[i];
    }
    m1 /= hw;
    m2 /= hw;
    for (int i = 0; i < hw; ++i) xs[i] += inv_std[g] * (gs[i] - m1 - ys[i] * m2);
  }
}

void relu_forward(std::size_t n, const double* x, double* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}
void relu_backward(std::size_t n, const double* x, const double* gy, double* gx) {
  for (std::size_t i = 0; i < n; ++i) gx[i] += x[i] > 0.0 ? gy[i] : 0.0;
}
void leaky_relu_forward(std::size_t n, double slope, const double* x, double* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : slope * x[i];
}
void leaky_relu_backward(std::size_t n, double slope, const double* x,
                         const double* gy, double* gx) {
  for (std::size_t i = 0; i < n; ++i) gx[i] += x[i] > 0.0 ? gy[i] : slope * gy[i];
}
void tanh_forward(std::size_t n, const double* x, double* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] = std::tanh(x[i]);
}
void tanh_backward(std::size_t n, const double* y, const double* gy, double* gx) {
  for (std::size_t i = 0; i < n; ++i) gx[i] += gy[i] * (1.0 - y[i] * y[i]);
}
void sigmoid_forward(std::size_t n, const double* x, double* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] = 1.0 / (1.0 + std::exp(-x[i]));
}
void sigmoid_backward(std::size_t n, const double* y, const double* gy, double* gx) {
  for (std::size_t i = 0; i < n; ++i) gx[i] += gy[i] * y[i] * (1.0 - y[i]);
}

void upsample2_forward(int n, int c, int h, int w, const double* x, double* y) {
  for (int g = 0; g < n * c; ++g)
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j) {
        const double v = x[(static_cast<std::size_t>(g) * h + i) * w + j];
        double* base = y + (static_cast<std::size_t>(g) * 2 * h + 2 * i) * 2 * w + 2 * j;
        base[0] = v;
        base[1] = v;
        base[2 * w] = v;
        base[2 * w + 1] = v;
      }
}
void upsample2_backward(int n, int c, int h, int w, const double* gy, double* gx) {
  for (int g = 0; g < n * c; ++g)
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j) {
        const double* base = gy + (static_cast<std::size_t>(g) * 2 * h + 2 * i) * 2 * w + 2 * j;
        gx[(static_cast<std::size_t>(g) * h + i) * w + j] +=
            base[0] + base[1] + base[2 * w] + base[2 * w + 1];
      }
}

}  // namespace plcutseg::kernels::ref
