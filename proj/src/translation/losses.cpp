#include "plcutseg/translation/losses.hpp"

#include <algorithm>
#include <numeric>

#include "plcutseg/tensor/autograd.hpp"

namespace plcutseg::translation {

using namespace tensor;

core::ImageTensor translate(GeneratorNet& G, const core::ImageTensor& x_s) {
  require(x_s.normalized(), "translate: input must be normalized");
  NoGradGuard ng;
  Tensor in({1, 3, x_s.h(), x_s.w()});
  std::copy(x_s.values().data(), x_s.values().data() + x_s.values().numel(), in.data());
  Var out = G.forward(constant(std::move(in)));
  Tensor chw({3, x_s.h(), x_s.w()});
  std::copy(out->value.data(), out->value.data() + chw.numel(), chw.data());
  return core::ImageTensor(std::move(chw), true);
}

GanLossPair gan_losses(DiscriminatorNet& D, const Var& real, const Var& generated) {
  require(real->value.rank() == 4 && generated->value.rank() == 4 &&
              real->value.dim(0) > 0 && generated->value.dim(0) > 0,
          "gan_losses: expects non-empty NCHW batches");
  GanLossPair out;
  // Step-1 objective: generated images enter as constants.
  Var d_real = D.forward(real);
  Var d_fake = D.forward(detach(generated));
  out.d = mul_scalar(
      add(mean_all(square(add_scalar(d_real, -1.0))), mean_all(square(d_fake))), 0.5);
  // Step-2 objective: gradients flow through `generated` into G.
  out.g = mean_all(square(add_scalar(D.forward(generated), -1.0)));
  return out;
}

Var patchnce_loss(GeneratorNet& G, PatchProjector& H, const Var& x, const Var& z,
                  Rng& rng) {
  require(x->value.dim(2) == z->value.dim(2) && x->value.dim(3) == z->value.dim(3) &&
              x->value.dim(0) == z->value.dim(0),
          "patchnce_loss: x and z dims differ");
  const auto feats_x = G.encode_features(x);
  const auto feats_z = G.encode_features(z);
  require(static_cast<int>(feats_x.size()) == H.n_layers(),
          "patchnce_loss: projector layer count differs from generator taps");

  const int n_images = x->value.dim(0);
  const int p = H.n_patches();
  std::vector<Var> layer_losses;
  for (int l = 0; l < H.n_layers(); ++l) {
    const auto& fs = feats_x[static_cast<std::size_t>(l)]->value.shape();
    const int avail = fs[2] * fs[3];
    require(p <= avail, "patchnce_loss: layer " + std::to_string(l) + " has only " +
                            std::to_string(avail) + " locations for " + std::to_string(p) +
                            " patches");
    // One shared location draw per layer keeps query/positive correspondence.
    std::vector<int> all(static_cast<std::size_t>(avail));
    std::iota(all.begin(), all.end(), 0);
    std::shuffle(all.begin(), all.end(), rng);
    std::vector<int> locs(all.begin(), all.begin() + p);

    Var q = H.project(l, gather_spatial(feats_z[static_cast<std::size_t>(l)], locs));
    Var k = H.project(l, gather_spatial(feats_x[static_cast<std::size_t>(l)], locs));
    std::vector<Var> image_losses;
    for (int i = 0; i < n_images; ++i) {
      Var qi = slice_rows(q, i * p, p);
      Var ki = slice_rows(k, i * p, p);
      image_losses.push_back(ce_diagonal(mul_scalar(matmul_nt(qi, ki), 1.0 / H.tau())));
    }
    layer_losses.push_back(weighted_sum(
        image_losses, std::vector<double>(image_losses.size(), 1.0 / n_images)));
  }
  return weighted_sum(layer_losses,
                      std::vector<double>(layer_losses.size(), 1.0 / layer_losses.size()));
}

TranslationObjective translation_objective(GeneratorNet& G, DiscriminatorNet& D,
                                           PatchProjector& H, const Var& x_s,
                                           const Var& x_r, double lambda_xs,
                                           double lambda_xr, Rng& rng) {
  require(lambda_xs >= 0.0 && lambda_xr >= 0.0, "translation_objective: negative lambda");
  TranslationObjective out;
  out.z = G.forward(x_s);
  GanLossPair gan = gan_losses(D, x_r, out.z);
  Var nce_s = patchnce_loss(G, H, x_s, out.z, rng);
  Var z_r = G.forward(x_r);
  Var nce_r = patchnce_loss(G, H, x_r, z_r, rng);

  out.d_loss = gan.d;
  out.g_total =
      weighted_sum({gan.g, nce_s, nce_r}, {1.0, lambda_xs, lambda_xr});
  out.d_value =
      LossValue(gan.d->value.item(), {{"gan_d", 1.0, gan.d->value.item()}});
  out.g_value = LossValue(out.g_total->value.item(),
                          {{"gan_g", 1.0, gan.g->value.item()},
                           {"patchnce_syn", lambda_xs, nce_s->value.item()},
                           {"patchnce_real", lambda_xr, nce_r->value.item()}});
  return out;
}

}  // namespace plcutseg::translation
