#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "plcutseg/translation/losses.hpp"

using namespace plcutseg;
using namespace plcutseg::translation;
using tensor::Tensor;
using tensor::Var;

namespace {

GeneratorConfig tiny_g() {
  GeneratorConfig c;
  c.ngf = 4;
  c.n_res = 1;
  return c;
}

DiscriminatorConfig tiny_d() {
  DiscriminatorConfig c;
  c.ndf = 4;
  return c;
}

ProjectorConfig tiny_h(int patches) {
  ProjectorConfig c;
  c.embed_dim = 8;
  c.n_patches = patches;
  return c;
}

}  // namespace

TEST_CASE("generator: shape-preserving, tanh-bounded, tapped features") {
  Rng rng = seeded_rng(41, "gen");
  GeneratorNet G(tiny_g(), rng);
  Var x = tensor::constant(testutil::random_tensor({2, 3, 16, 16}, rng));
  Var z = G.forward(x);
  CHECK(z->value.shape() == std::vector<int>({2, 3, 16, 16}));
  CHECK(z->value.min() >= -1.0);
  CHECK(z->value.max() <= 1.0);
  CHECK(G.downsampling_factor() == 4);

  auto taps = G.encode_features(x);
  REQUIRE(taps.size() == G.feature_channels().size());
  for (std::size_t i = 0; i < taps.size(); ++i)
    CHECK(taps[i]->value.dim(1) == G.feature_channels()[static_cast<std::size_t>(i)]);
  // first tap is the input itself
  CHECK(taps[0]->value.byte_hash() == x->value.byte_hash());

  auto ps = G.params();
  CHECK(!ps.empty());
  for (const auto& p : ps) CHECK(p.name.rfind("G.", 0) == 0);
}

TEST_CASE("discriminator: quarter-resolution realness grid") {
  Rng rng = seeded_rng(42, "disc");
  DiscriminatorNet D(tiny_d(), rng);
  Var x = tensor::constant(testutil::random_tensor({3, 3, 16, 16}, rng));
  Var s = D.forward(x);
  CHECK(s->value.shape() == std::vector<int>({3, 1, 4, 4}));
}

TEST_CASE("gan_losses: least-squares formulas against direct evaluation") {
  Rng rng = seeded_rng(43, "gan");
  DiscriminatorNet D(tiny_d(), rng);
  Var real = tensor::constant(testutil::random_tensor({2, 3, 8, 8}, rng));
  Var gen = tensor::constant(testutil::random_tensor({2, 3, 8, 8}, rng));

  GanLossPair pair = gan_losses(D, real, gen);

  Tensor dr, dg;
  {
    tensor::NoGradGuard ng;
    dr = D.forward(real)->value;
    dg = D.forward(gen)->value;
  }
  double dsum = 0.0, gsum = 0.0;
  for (std::size_t i = 0; i < dr.numel(); ++i) {
    dsum += (dr[i] - 1.0) * (dr[i] - 1.0) + dg[i] * dg[i];
    gsum += (dg[i] - 1.0) * (dg[i] - 1.0);
  }
  const double n = static_cast<double>(dr.numel());
  CHECK(testutil::rel_err(pair.d->value.item(), dsum / n / 2.0) < 1e-12);
  CHECK(testutil::rel_err(pair.g->value.item(), gsum / n) < 1e-12);
}

TEST_CASE("gan_losses: a flat 0.5 discriminator scores 0.25 / 0.25") {
  Rng rng = seeded_rng(44, "gan-flat");
  DiscriminatorNet D(tiny_d(), rng);
  bool forced = false;
  for (auto& p : D.params()) {
    p.var->value.fill(0.0);
    if (p.name.find("head") != std::string::npos &&
        p.name.find("bias") != std::string::npos) {
      p.var->value.fill(0.5);
      forced = true;
    }
  }
  REQUIRE(forced);

  Var real = tensor::constant(testutil::random_tensor({1, 3, 8, 8}, rng));
  Var gen = tensor::constant(testutil::random_tensor({1, 3, 8, 8}, rng));
  GanLossPair pair = gan_losses(D, real, gen);
  // D == 0.5 everywhere: d = ((0.5-1)^2 + 0.5^2)/2, g = (0.5-1)^2
  CHECK(pair.d->value.item() == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(pair.g->value.item() == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("gan_losses: discriminator loss detaches the generated batch") {
  Rng rng = seeded_rng(45, "gan-detach");
  DiscriminatorNet D(tiny_d(), rng);
  GeneratorNet G(tiny_g(), rng);
  Var x = tensor::constant(testutil::random_tensor({1, 3, 8, 8}, rng));
  Var z = G.forward(x);
  Var real = tensor::constant(testutil::random_tensor({1, 3, 8, 8}, rng));

  GanLossPair pair = gan_losses(D, real, z);
  tensor::backward(pair.d);
  for (const auto& p : G.params()) CHECK(p.var->grad.numel() == 0);

  tensor::backward(pair.g);
  double total = 0.0;
  for (const auto& p : G.params())
    if (p.var->grad.numel()) total += std::fabs(p.var->grad.sum());
  CHECK(total > 0.0);
}

TEST_CASE("projector: rows land on the unit sphere") {
  Rng rng = seeded_rng(46, "proj");
  GeneratorNet G(tiny_g(), rng);
  PatchProjector H(G.feature_channels(), tiny_h(16), rng);
  CHECK(H.n_layers() == static_cast<int>(G.feature_channels().size()));

  Var rows = tensor::constant(
      testutil::random_tensor({6, G.feature_channels()[1]}, rng, -2.0, 2.0));
  Var out = H.project(1, rows);
  REQUIRE(out->value.dim(0) == 6);
  for (int r = 0; r < 6; ++r) {
    double sq = 0.0;
    for (int c = 0; c < out->value.dim(1); ++c)
      sq += out->value.at(r, c) * out->value.at(r, c);
    CHECK(std::sqrt(sq) == doctest::Approx(1.0).epsilon(1e-9));
  }

  for (const auto& p : H.params()) CHECK(p.name.rfind("H.", 0) == 0);
}

TEST_CASE("patchnce: identical features per location degenerate to ln(n_patches)") {
  Rng rng = seeded_rng(47, "nce-degenerate");
  GeneratorNet G(tiny_g(), rng);
  PatchProjector H(G.feature_channels(), tiny_h(16), rng);

  // zeroed generator weights make every tap spatially constant (a constant
  // input alone would not: zero padding distinguishes border locations), a
  // constant input keeps tap 0 flat too; all similarities then tie and the
  // cross-entropy is uniform over the patch set
  for (auto& p : G.params()) p.var->value.fill(0.0);
  Tensor flat({1, 3, 16, 16});
  flat.fill(0.3);
  Var x = tensor::constant(flat);
  Var z = tensor::constant(flat);
  Rng nce_rng = seeded_rng(47, "nce-draw");
  Var loss = patchnce_loss(G, H, x, z, nce_rng);
  CHECK(std::fabs(loss->value.item() - std::log(16.0)) < 1e-5);
}

TEST_CASE("patchnce: deterministic under the rng and differentiable into G and H") {
  Rng rng = seeded_rng(48, "nce");
  GeneratorNet G(tiny_g(), rng);
  PatchProjector H(G.feature_channels(), tiny_h(8), rng);
  Tensor xi = testutil::random_tensor({1, 3, 16, 16}, rng);

  auto eval = [&](Rng r) {
    Var x = tensor::constant(xi);
    Var z = G.forward(x);
    return patchnce_loss(G, H, x, z, r);
  };
  Var l1 = eval(seeded_rng(5, "draw"));
  Var l2 = eval(seeded_rng(5, "draw"));
  CHECK(l1->value.item() == l2->value.item());
  CHECK(l1->value.item() > 0.0);

  tensor::backward(l1);
  double gsum = 0.0, hsum = 0.0;
  for (const auto& p : G.params())
    if (p.var->grad.numel()) gsum += std::fabs(p.var->grad.sum());
  for (const auto& p : H.params())
    if (p.var->grad.numel()) hsum += std::fabs(p.var->grad.sum());
  CHECK(gsum > 0.0);
  CHECK(hsum > 0.0);
}

TEST_CASE("patchnce: asking for more patches than a layer offers is an error") {
  Rng rng = seeded_rng(49, "nce-overdraw");
  GeneratorNet G(tiny_g(), rng);
  // input 8x8 bottlenecks to 2x2 = 4 locations, far fewer than 64 patches
  PatchProjector H(G.feature_channels(), tiny_h(64), rng);
  Tensor xi = testutil::random_tensor({1, 3, 8, 8}, rng);
  Var x = tensor::constant(xi);
  Var z = tensor::constant(xi);
  Rng draw = seeded_rng(49, "draw");
  CHECK_THROWS_WITH_AS(patchnce_loss(G, H, x, z, draw), doctest::Contains("layer"),
                       ContractError);
}

TEST_CASE("translate: inference helper round-trips geometry without a graph") {
  Rng rng = seeded_rng(50, "translate");
  GeneratorNet G(tiny_g(), rng);
  Tensor raw = testutil::random_tensor({3, 16, 16}, rng, 0.0, 1.0);
  core::ImageTensor img(raw, false);
  core::ImageTensor out = translate(G, img.normalize());
  CHECK(out.normalized());
  CHECK(out.h() == 16);
  CHECK(out.w() == 16);
  CHECK(out.values().min() >= -1.0);
  CHECK(out.values().max() <= 1.0);
}

TEST_CASE("translation_objective: weighted breakdown matches the lambdas") {
  Rng rng = seeded_rng(51, "objective");
  GeneratorNet G(tiny_g(), rng);
  DiscriminatorNet D(tiny_d(), rng);
  PatchProjector H(G.feature_channels(), tiny_h(8), rng);
  Var xs = tensor::constant(testutil::random_tensor({1, 3, 16, 16}, rng));
  Var xr = tensor::constant(testutil::random_tensor({1, 3, 16, 16}, rng));

  Rng draw = seeded_rng(51, "draw");
  TranslationObjective obj = translation_objective(G, D, H, xs, xr, 0.5, 2.0, draw);

  CHECK(obj.z->value.shape() == xs->value.shape());
  CHECK(std::isfinite(obj.d_value.scalar()));
  CHECK(std::isfinite(obj.g_value.scalar()));

  double expected = 0.0;
  bool saw_xs = false, saw_xr = false;
  for (const auto& t : obj.g_value.terms()) {
    expected += t.weight * t.value;
    if (t.name == "patchnce_syn") {
      CHECK(t.weight == 0.5);
      saw_xs = true;
    }
    if (t.name == "patchnce_real") {
      CHECK(t.weight == 2.0);
      saw_xr = true;
    }
  }
  CHECK(saw_xs);
  CHECK(saw_xr);
  CHECK(testutil::rel_err(obj.g_value.scalar(), expected) < 1e-9);
  CHECK(obj.g_total->value.item() == doctest::Approx(obj.g_value.scalar()));
}
