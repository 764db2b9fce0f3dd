// Times the serial reference kernels against the OpenMP implementations on
// representative shapes and reports the speedup plus the max element
// difference (which must be exactly zero).

#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <vector>

#include "plcutseg/tensor/kernels.hpp"

using plcutseg::kernels::ConvDims;

namespace {

std::vector<double> randu(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

double time_ms(const std::function<void()>& fn, int reps) {
  fn();  // warmup
  auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) fn();
  auto dt = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0);
  return dt.count() / reps;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

void report(const char* name, double ref_ms, double omp_ms, double diff) {
  std::printf("%-28s ref %9.3f ms   omp %9.3f ms   speedup %5.2fx   max|diff| %g\n", name, ref_ms,
              omp_ms, ref_ms / omp_ms, diff);
}

}  // namespace

int main() {
  std::mt19937_64 rng(7);
  std::printf("threads: %d\n\n", omp_get_max_threads());

  {
    auto d = ConvDims::make(4, 16, 64, 64, 32, 3, 1, 1);
    auto x = randu(static_cast<std::size_t>(d.n) * d.ci * d.h * d.w, rng);
    auto w = randu(static_cast<std::size_t>(d.co) * d.ci * d.k * d.k, rng);
    auto b = randu(static_cast<std::size_t>(d.co), rng);
    std::vector<double> y_ref(static_cast<std::size_t>(d.n) * d.co * d.ho * d.wo);
    std::vector<double> y_omp(y_ref.size());
    double r = time_ms([&] { plcutseg::kernels::ref::conv2d_forward(d, x.data(), w.data(),
                                                                    b.data(), y_ref.data()); },
                       5);
    double o = time_ms([&] { plcutseg::kernels::omp::conv2d_forward(d, x.data(), w.data(),
                                                                    b.data(), y_omp.data()); },
                       5);
    report("conv2d_forward 4x16x64x64", r, o, max_abs_diff(y_ref, y_omp));

    auto gy = randu(y_ref.size(), rng);
    std::vector<double> gx_ref(x.size()), gx_omp(x.size());
    r = time_ms([&] { plcutseg::kernels::ref::conv2d_backward_input(d, w.data(), gy.data(),
                                                                    gx_ref.data()); },
                5);
    o = time_ms([&] { plcutseg::kernels::omp::conv2d_backward_input(d, w.data(), gy.data(),
                                                                    gx_omp.data()); },
                5);
    report("conv2d_backward_input", r, o, max_abs_diff(gx_ref, gx_omp));

    std::vector<double> gw_ref(w.size()), gb_ref(b.size()), gw_omp(w.size()), gb_omp(b.size());
    r = time_ms([&] { plcutseg::kernels::ref::conv2d_backward_weights(d, x.data(), gy.data(),
                                                                      gw_ref.data(),
                                                                      gb_ref.data()); },
                5);
    o = time_ms([&] { plcutseg::kernels::omp::conv2d_backward_weights(d, x.data(), gy.data(),
                                                                      gw_omp.data(),
                                                                      gb_omp.data()); },
                5);
    report("conv2d_backward_weights", r, o, max_abs_diff(gw_ref, gw_omp));
  }

  {
    const int rows = 4096, ci = 256, co = 256;
    auto x = randu(static_cast<std::size_t>(rows) * ci, rng);
    auto w = randu(static_cast<std::size_t>(ci) * co, rng);
    auto b = randu(static_cast<std::size_t>(co), rng);
    std::vector<double> y_ref(static_cast<std::size_t>(rows) * co), y_omp(y_ref.size());
    double r = time_ms([&] { plcutseg::kernels::ref::linear_forward(rows, ci, co, x.data(),
                                                                    w.data(), b.data(),
                                                                    y_ref.data()); },
                       3);
    double o = time_ms([&] { plcutseg::kernels::omp::linear_forward(rows, ci, co, x.data(),
                                                                    w.data(), b.data(),
                                                                    y_omp.data()); },
                       3);
    report("linear_forward 4096x256", r, o, max_abs_diff(y_ref, y_omp));
  }

  {
    const int n = 8, c = 64, hw = 64 * 64;
    auto x = randu(static_cast<std::size_t>(n) * c * hw, rng);
    std::vector<double> y_ref(x.size()), y_omp(x.size());
    std::vector<double> s_ref(static_cast<std::size_t>(n) * c), s_omp(s_ref.size());
    double r = time_ms([&] { plcutseg::kernels::ref::instance_norm_forward(
                           n, c, hw, 1e-5, x.data(), y_ref.data(), s_ref.data()); },
                       5);
    double o = time_ms([&] { plcutseg::kernels::omp::instance_norm_forward(
                           n, c, hw, 1e-5, x.data(), y_omp.data(), s_omp.data()); },
                       5);
    report("instance_norm 8x64x64x64", r, o, max_abs_diff(y_ref, y_omp));
  }

  {
    const std::size_t n = 1 << 22;
    auto x = randu(n, rng);
    std::vector<double> y_ref(n), y_omp(n);
    double r = time_ms([&] { plcutseg::kernels::ref::tanh_forward(n, x.data(), y_ref.data()); }, 5);
    double o = time_ms([&] { plcutseg::kernels::omp::tanh_forward(n, x.data(), y_omp.data()); }, 5);
    report("tanh_forward 4M", r, o, max_abs_diff(y_ref, y_omp));
  }

  return 0;
}
