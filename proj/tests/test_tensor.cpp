#include <doctest.h>
#include <omp.h>

#include <random>

#include "helpers.hpp"
#include "plcutseg/tensor/kernels.hpp"
#include "plcutseg/tensor/nn.hpp"
#include "plcutseg/tensor/optim.hpp"

using namespace plcutseg;
using tensor::Tensor;
using tensor::Var;
using testutil::gradcheck;
using testutil::random_tensor;
using testutil::rel_err;
namespace K = plcutseg::kernels;

namespace {

std::vector<double> randv(std::size_t n, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  REQUIRE(a.size() == b.size());
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("tensor basics: shape, accessors, hashing") {
  Tensor t({2, 3});
  CHECK(t.numel() == 6);
  t.at(1, 2) = 5.0;
  CHECK(t.at(1, 2) == 5.0);
  CHECK(t.dim(0) == 2);

  Tensor a = Tensor::from_vector({3}, {1.0, 2.0, 3.0});
  auto h1 = a.byte_hash();
  a.data()[1] = 2.5;
  CHECK(a.byte_hash() != h1);

  Tensor s = Tensor::scalar(4.5);
  CHECK(s.item() == 4.5);
  CHECK_THROWS(a.item());
}

TEST_CASE("kernels: conv2d ref vs omp across geometries") {
  Rng rng = seeded_rng(101, "conv-sweep");
  struct Geo {
    int n, ci, h, w, co, k, stride, pad;
  };
  const Geo geos[] = {
      {1, 1, 5, 5, 1, 3, 1, 1},  {2, 3, 8, 8, 4, 3, 1, 1},  {2, 4, 9, 7, 3, 3, 2, 1},
      {1, 2, 6, 6, 5, 1, 1, 0},  {3, 2, 10, 5, 2, 4, 2, 1}, {1, 3, 7, 9, 2, 3, 1, 0},
      {2, 2, 6, 8, 3, 5, 1, 2},  {1, 4, 12, 12, 4, 3, 2, 0},
  };
  for (const auto& g : geos) {
    CAPTURE(g.n);
    CAPTURE(g.k);
    CAPTURE(g.stride);
    CAPTURE(g.pad);
    auto d = K::ConvDims::make(g.n, g.ci, g.h, g.w, g.co, g.k, g.stride, g.pad);
    auto x = randv(static_cast<std::size_t>(d.n) * d.ci * d.h * d.w, rng);
    auto w = randv(static_cast<std::size_t>(d.co) * d.ci * d.k * d.k, rng);
    auto b = randv(static_cast<std::size_t>(d.co), rng);
    const std::size_t ysz = static_cast<std::size_t>(d.n) * d.co * d.ho * d.wo;

    std::vector<double> y1(ysz), y2(ysz);
    K::ref::conv2d_forward(d, x.data(), w.data(), b.data(), y1.data());
    K::omp::conv2d_forward(d, x.data(), w.data(), b.data(), y2.data());
    CHECK(max_abs_diff(y1, y2) == 0.0);  // same accumulation chain: bit-identical

    // gradient kernels accumulate into preloaded buffers; omp regroups the
    // additions so agreement is within rounding, not bit-exact
    auto gy = randv(ysz, rng);
    auto gx1 = randv(x.size(), rng, 0.1, 0.2);
    auto gx2 = gx1;
    K::ref::conv2d_backward_input(d, w.data(), gy.data(), gx1.data());
    K::omp::conv2d_backward_input(d, w.data(), gy.data(), gx2.data());
    CHECK(max_abs_diff(gx1, gx2) < 1e-9);

    auto gw1 = randv(w.size(), rng, 0.1, 0.2);
    auto gw2 = gw1;
    auto gb1 = randv(b.size(), rng, 0.1, 0.2);
    auto gb2 = gb1;
    K::ref::conv2d_backward_weights(d, x.data(), gy.data(), gw1.data(), gb1.data());
    K::omp::conv2d_backward_weights(d, x.data(), gy.data(), gw2.data(), gb2.data());
    CHECK(max_abs_diff(gw1, gw2) < 1e-9);
    CHECK(max_abs_diff(gb1, gb2) < 1e-9);
  }
}

TEST_CASE("kernels: remaining ops ref vs omp") {
  Rng rng = seeded_rng(102, "misc-sweep");
  const int rows = 17, ci = 9, co = 13;
  auto x = randv(static_cast<std::size_t>(rows) * ci, rng);
  auto w = randv(static_cast<std::size_t>(ci) * co, rng);
  auto b = randv(co, rng);
  std::vector<double> y1(static_cast<std::size_t>(rows) * co), y2(y1.size());
  K::ref::linear_forward(rows, ci, co, x.data(), w.data(), b.data(), y1.data());
  K::omp::linear_forward(rows, ci, co, x.data(), w.data(), b.data(), y2.data());
  CHECK(max_abs_diff(y1, y2) == 0.0);

  auto gy = randv(y1.size(), rng);
  auto gx1 = randv(x.size(), rng, 0.1, 0.2);
  auto gx2 = gx1;
  auto gw1 = randv(w.size(), rng, 0.1, 0.2);
  auto gw2 = gw1;
  auto gb1 = randv(b.size(), rng, 0.1, 0.2);
  auto gb2 = gb1;
  K::ref::linear_backward(rows, ci, co, x.data(), w.data(), gy.data(), gx1.data(), gw1.data(),
                          gb1.data());
  K::omp::linear_backward(rows, ci, co, x.data(), w.data(), gy.data(), gx2.data(), gw2.data(),
                          gb2.data());
  CHECK(max_abs_diff(gx1, gx2) < 1e-9);
  CHECK(max_abs_diff(gw1, gw2) < 1e-9);
  CHECK(max_abs_diff(gb1, gb2) < 1e-9);

  const int r = 7, c = 11, k = 5;
  auto a = randv(static_cast<std::size_t>(r) * k, rng);
  auto bb = randv(static_cast<std::size_t>(c) * k, rng);
  std::vector<double> m1(static_cast<std::size_t>(r) * c), m2(m1.size());
  K::ref::matmul_nt_forward(r, c, k, a.data(), bb.data(), m1.data());
  K::omp::matmul_nt_forward(r, c, k, a.data(), bb.data(), m2.data());
  // the omp dot product is simd-reduced, so only rounding-level agreement here
  CHECK(max_abs_diff(m1, m2) < 1e-12);

  auto gym = randv(m1.size(), rng);
  auto ga1 = randv(a.size(), rng, 0.1, 0.2);
  auto ga2 = ga1;
  auto gbb1 = randv(bb.size(), rng, 0.1, 0.2);
  auto gbb2 = gbb1;
  K::ref::matmul_nt_backward(r, c, k, a.data(), bb.data(), gym.data(), ga1.data(), gbb1.data());
  K::omp::matmul_nt_backward(r, c, k, a.data(), bb.data(), gym.data(), ga2.data(), gbb2.data());
  CHECK(max_abs_diff(ga1, ga2) < 1e-9);
  CHECK(max_abs_diff(gbb1, gbb2) < 1e-9);

  const int n = 3, ch = 4, hw = 25;
  auto xi = randv(static_cast<std::size_t>(n) * ch * hw, rng);
  std::vector<double> yi1(xi.size()), yi2(xi.size());
  std::vector<double> s1(static_cast<std::size_t>(n) * ch), s2(s1.size());
  K::ref::instance_norm_forward(n, ch, hw, 1e-5, xi.data(), yi1.data(), s1.data());
  K::omp::instance_norm_forward(n, ch, hw, 1e-5, xi.data(), yi2.data(), s2.data());
  CHECK(max_abs_diff(yi1, yi2) < 1e-12);
  CHECK(max_abs_diff(s1, s2) < 1e-12);

  const std::size_t len = 1001;
  auto xa = randv(len, rng);
  std::vector<double> ya1(len), ya2(len);
  K::ref::tanh_forward(len, xa.data(), ya1.data());
  K::omp::tanh_forward(len, xa.data(), ya2.data());
  CHECK(max_abs_diff(ya1, ya2) == 0.0);
  K::ref::sigmoid_forward(len, xa.data(), ya1.data());
  K::omp::sigmoid_forward(len, xa.data(), ya2.data());
  CHECK(max_abs_diff(ya1, ya2) == 0.0);
  K::ref::leaky_relu_forward(len, 0.2, xa.data(), ya1.data());
  K::omp::leaky_relu_forward(len, 0.2, xa.data(), ya2.data());
  CHECK(max_abs_diff(ya1, ya2) == 0.0);

  const int uh = 6, uw = 7;
  auto xu = randv(static_cast<std::size_t>(n) * ch * uh * uw, rng);
  std::vector<double> yu1(xu.size() * 4), yu2(xu.size() * 4);
  K::ref::upsample2_forward(n, ch, uh, uw, xu.data(), yu1.data());
  K::omp::upsample2_forward(n, ch, uh, uw, xu.data(), yu2.data());
  CHECK(max_abs_diff(yu1, yu2) == 0.0);
}

TEST_CASE("kernels: omp results independent of thread count") {
  Rng rng = seeded_rng(103, "threads");
  auto d = K::ConvDims::make(2, 5, 11, 13, 4, 3, 1, 1);
  auto x = randv(static_cast<std::size_t>(d.n) * d.ci * d.h * d.w, rng);
  auto w = randv(static_cast<std::size_t>(d.co) * d.ci * d.k * d.k, rng);
  auto gy = randv(static_cast<std::size_t>(d.n) * d.co * d.ho * d.wo, rng);

  const int saved = omp_get_max_threads();
  std::vector<double> y1(gy.size()), y4(gy.size());
  std::vector<double> gx1(x.size(), 0.25), gx4(x.size(), 0.25);
  std::vector<double> gw1(w.size(), 0.25), gw4(w.size(), 0.25);

  omp_set_num_threads(1);
  K::omp::conv2d_forward(d, x.data(), w.data(), nullptr, y1.data());
  K::omp::conv2d_backward_input(d, w.data(), gy.data(), gx1.data());
  K::omp::conv2d_backward_weights(d, x.data(), gy.data(), gw1.data(), nullptr);
  omp_set_num_threads(4);
  K::omp::conv2d_forward(d, x.data(), w.data(), nullptr, y4.data());
  K::omp::conv2d_backward_input(d, w.data(), gy.data(), gx4.data());
  K::omp::conv2d_backward_weights(d, x.data(), gy.data(), gw4.data(), nullptr);
  omp_set_num_threads(saved);

  CHECK(max_abs_diff(y1, y4) == 0.0);
  CHECK(max_abs_diff(gx1, gx4) == 0.0);
  CHECK(max_abs_diff(gw1, gw4) == 0.0);
}

TEST_CASE("autograd: finite-difference checks for every op") {
  Rng rng = seeded_rng(7, "gradcheck");

  SUBCASE("conv2d with bias, stride 1 pad 1") {
    Var x = tensor::parameter(random_tensor({2, 3, 6, 6}, rng));
    Var w = tensor::parameter(random_tensor({4, 3, 3, 3}, rng));
    Var b = tensor::parameter(random_tensor({4}, rng));
    gradcheck([&] { return tensor::mean_all(tensor::square(tensor::conv2d(x, w, b, 1, 1))); },
              {x, w, b});
  }
  SUBCASE("conv2d no bias, stride 2 pad 0") {
    Var x = tensor::parameter(random_tensor({1, 2, 8, 8}, rng));
    Var w = tensor::parameter(random_tensor({3, 2, 3, 3}, rng));
    gradcheck(
        [&] { return tensor::mean_all(tensor::square(tensor::conv2d(x, w, nullptr, 2, 0))); },
        {x, w});
  }
  SUBCASE("instance_norm") {
    Var x = tensor::parameter(random_tensor({2, 3, 4, 4}, rng));
    gradcheck([&] { return tensor::mean_all(tensor::square(tensor::instance_norm(x))); }, {x},
              1e-4);
  }
  SUBCASE("activations away from kinks") {
    Tensor base = random_tensor({40}, rng, 0.2, 1.2);
    for (std::size_t i = 0; i < base.numel(); i += 2) base.data()[i] = -base.data()[i];
    Var x = tensor::parameter(base);
    gradcheck([&] { return tensor::mean_all(tensor::square(tensor::relu(x))); }, {x});
    gradcheck([&] { return tensor::mean_all(tensor::square(tensor::leaky_relu(x, 0.2))); }, {x});
    gradcheck([&] { return tensor::mean_all(tensor::square(tensor::tanh_op(x))); }, {x});
    gradcheck([&] { return tensor::mean_all(tensor::square(tensor::sigmoid_op(x))); }, {x});
  }
  SUBCASE("upsample2") {
    Var x = tensor::parameter(random_tensor({2, 2, 3, 3}, rng));
    gradcheck([&] { return tensor::mean_all(tensor::square(tensor::upsample2(x))); }, {x});
  }
  SUBCASE("linear and matmul_nt") {
    Var x = tensor::parameter(random_tensor({5, 4}, rng));
    Var w = tensor::parameter(random_tensor({4, 3}, rng));
    Var b = tensor::parameter(random_tensor({3}, rng));
    gradcheck([&] { return tensor::mean_all(tensor::square(tensor::linear(x, w, b))); },
              {x, w, b});
    Var a = tensor::parameter(random_tensor({4, 6}, rng));
    Var c = tensor::parameter(random_tensor({5, 6}, rng));
    gradcheck([&] { return tensor::mean_all(tensor::square(tensor::matmul_nt(a, c))); }, {a, c});
  }
  SUBCASE("scalar arithmetic chain") {
    Var x = tensor::parameter(random_tensor({3, 3}, rng));
    Var y = tensor::parameter(random_tensor({3, 3}, rng));
    gradcheck(
        [&] {
          Var s = tensor::axpby(0.7, x, -1.3, y);
          s = tensor::add(s, tensor::mul_scalar(x, 0.5));
          s = tensor::add_scalar(s, 0.25);
          return tensor::mean_all(tensor::square(s));
        },
        {x, y});
  }
  SUBCASE("affine_scalar") {
    Var x = tensor::parameter(random_tensor({2, 5}, rng));
    Var w = tensor::parameter(Tensor::scalar(0.8));
    Var b = tensor::parameter(Tensor::scalar(-0.3));
    gradcheck(
        [&] { return tensor::mean_all(tensor::square(tensor::affine_scalar(x, w, b))); },
        {x, w, b});
  }
  SUBCASE("weighted_sum") {
    Var a = tensor::parameter(random_tensor({4}, rng));
    Var b = tensor::parameter(random_tensor({4}, rng));
    gradcheck(
        [&] {
          Var s1 = tensor::mean_all(tensor::square(a));
          Var s2 = tensor::mean_all(tensor::square(b));
          return tensor::weighted_sum({s1, s2}, {0.3, 1.7});
        },
        {a, b});
  }
  SUBCASE("structure ops: concat, stack, select, slice") {
    Var a = tensor::parameter(random_tensor({1, 2, 3, 3}, rng));
    Var b = tensor::parameter(random_tensor({1, 3, 3, 3}, rng));
    gradcheck([&] { return tensor::mean_all(tensor::square(tensor::concat_channels(a, b))); },
              {a, b});
    Var r0 = tensor::parameter(random_tensor({2, 3}, rng));
    Var r1 = tensor::parameter(random_tensor({2, 3}, rng));
    gradcheck(
        [&] {
          Var s = tensor::stack_rows({r0, r1});
          Var sel = tensor::select_row(s, 1);
          return tensor::mean_all(tensor::square(sel));
        },
        {r0, r1});
    Var m = tensor::parameter(random_tensor({6, 4}, rng));
    gradcheck([&] { return tensor::mean_all(tensor::square(tensor::slice_rows(m, 2, 3))); }, {m});
  }
  SUBCASE("gather_spatial and l2_normalize_rows") {
    Var x = tensor::parameter(random_tensor({2, 3, 4, 4}, rng));
    const std::vector<int> locs{0, 5, 9, 15};
    gradcheck(
        [&] {
          Var g = tensor::gather_spatial(x, locs);
          return tensor::mean_all(tensor::square(tensor::l2_normalize_rows(g)));
        },
        {x}, 1e-4);
  }
  SUBCASE("ce_diagonal") {
    Var sims = tensor::parameter(random_tensor({5, 5}, rng, -2.0, 2.0));
    gradcheck([&] { return tensor::ce_diagonal(sims); }, {sims}, 1e-4);
  }
  SUBCASE("masked_dice") {
    Rng mrng = seeded_rng(8, "dice-fd");
    Var pred = tensor::parameter(random_tensor({1, 4, 4}, mrng, 0.05, 0.95));
    Tensor target = random_tensor({4, 4}, mrng, 0.0, 1.0);
    Tensor valid({4, 4});
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t i = 0; i < valid.numel(); ++i) valid.data()[i] = u(mrng) < 0.7 ? 1.0 : 0.0;
    valid.data()[0] = 1.0;
    gradcheck([&] { return tensor::masked_dice(pred, target, valid, 1.0); }, {pred}, 1e-4);
  }
}

TEST_CASE("autograd: structural behavior") {
  Rng rng = seeded_rng(9, "structure");

  SUBCASE("reused node accumulates both gradient paths") {
    Var x = tensor::parameter(Tensor::scalar(3.0));
    Var y = tensor::add(tensor::mul_scalar(x, 2.0), tensor::mul_scalar(x, 5.0));
    tensor::backward(y);
    CHECK(x->grad.item() == doctest::Approx(7.0));
  }
  SUBCASE("detach blocks gradient flow") {
    Var x = tensor::parameter(Tensor::scalar(2.0));
    Var d = tensor::detach(tensor::mul_scalar(x, 4.0));
    CHECK(d->value.item() == 8.0);
    Var y = tensor::mul_scalar(d, 3.0);
    tensor::backward(y);
    CHECK(x->grad.numel() == 0);
  }
  SUBCASE("NoGradGuard builds no graph") {
    Var x = tensor::parameter(random_tensor({3}, rng));
    tensor::NoGradGuard ng;
    Var y = tensor::mul_scalar(x, 2.0);
    CHECK(y->parents.empty());
    CHECK_FALSE(y->requires_grad);
  }
  SUBCASE("constants never require grad") {
    Var c = tensor::constant(random_tensor({3}, rng));
    Var y = tensor::mul_scalar(c, 2.0);
    CHECK_FALSE(y->requires_grad);
  }
}

TEST_CASE("optim: Adam matches the reference update and restores exactly") {
  // one parameter, hand-computed first two steps
  Var p = tensor::parameter(Tensor::from_vector({2}, {1.0, -2.0}));
  tensor::Adam opt({p}, 0.1, 0.9, 0.999, 1e-8);

  auto run_step = [&](const std::vector<double>& g) {
    opt.zero_grad();
    p->accumulate(Tensor::from_vector({2}, g));
    opt.step();
  };

  // reference implementation of the same formula
  double m[2] = {0, 0}, v[2] = {0, 0}, ref[2] = {1.0, -2.0};
  auto ref_step = [&](const std::vector<double>& g, int t) {
    for (int i = 0; i < 2; ++i) {
      m[i] = 0.9 * m[i] + 0.1 * g[i];
      v[i] = 0.999 * v[i] + 0.001 * g[i] * g[i];
      const double mh = m[i] / (1.0 - std::pow(0.9, t));
      const double vh = v[i] / (1.0 - std::pow(0.999, t));
      ref[i] -= 0.1 * mh / (std::sqrt(vh) + 1e-8);
    }
  };

  run_step({0.5, -1.5});
  ref_step({0.5, -1.5}, 1);
  run_step({-0.25, 2.0});
  ref_step({-0.25, 2.0}, 2);
  CHECK(p->value.data()[0] == doctest::Approx(ref[0]).epsilon(1e-12));
  CHECK(p->value.data()[1] == doctest::Approx(ref[1]).epsilon(1e-12));
  CHECK(opt.step_count() == 2);

  // snapshot, keep stepping, restore, re-step: identical trajectories
  auto saved_m = opt.first_moments();
  auto saved_v = opt.second_moments();
  auto saved_t = opt.step_count();
  Tensor saved_p = p->value;

  run_step({1.0, 1.0});
  Tensor after = p->value;

  p->value = saved_p;
  opt.restore(saved_t, saved_m, saved_v);
  run_step({1.0, 1.0});
  CHECK(p->value.data()[0] == after.data()[0]);
  CHECK(p->value.data()[1] == after.data()[1]);
}

TEST_CASE("nn: layer shapes and parameter naming") {
  Rng rng = seeded_rng(10, "nn");
  tensor::Conv2d conv(3, 8, 3, 1, 1, rng);
  Var x = tensor::constant(random_tensor({2, 3, 8, 8}, rng));
  Var y = conv.forward(x);
  CHECK(y->value.shape() == std::vector<int>({2, 8, 8, 8}));

  std::vector<tensor::Param> ps;
  conv.collect("enc", ps);
  REQUIRE(ps.size() == 2);
  CHECK(ps[0].name == "enc.weight");
  CHECK(ps[1].name == "enc.bias");

  tensor::Linear lin(4, 6, rng);
  Var z = lin.forward(tensor::constant(random_tensor({3, 4}, rng)));
  CHECK(z->value.shape() == std::vector<int>({3, 6}));
}
