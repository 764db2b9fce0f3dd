#pragma once

#include "plcutseg/core/types.hpp"
#include "plcutseg/translation/nets.hpp"

namespace plcutseg::translation {

using core::LossValue;


/// Inference-mode translation of one normalized image; graph-free.
core::ImageTensor translate(GeneratorNet& G, const core::ImageTensor& x_s);

/// Least-squares adversarial pair. The discriminator loss sees the generated
/// batch as a constant (detached); the generator loss keeps gradients open
/// through `generated` into G.
///   d: mean((D(real)-1)^2 + D(gen)^2) / 2      g: mean((D(gen)-1)^2)
struct GanLossPair {
  tensor::Var d;
  tensor::Var g;
};
GanLossPair gan_losses(DiscriminatorNet& D, const tensor::Var& real,
                       const tensor::Var& generated);

/// Multilayer patch-contrastive loss between source x and translation z.
/// Per tap layer, n_patches locations are sampled once and shared between x
/// and z; z's projected feature at a location is the query, x's at the same
/// location the positive, x's at the other locations the negatives. Returns
/// the mean over layers, images and locations of cross-entropy over cosine
/// similarities / tau. Requesting more patches than a layer has locations is
/// a hard error naming the layer.
tensor::Var patchnce_loss(GeneratorNet& G, PatchProjector& H, const tensor::Var& x,
                          const tensor::Var& z, Rng& rng);

/// Full translation objective for one (x_s, x_r) pair:
///   g_total = L_GAN_g + lambda_xs * L_NCE(x_s, z_s) + lambda_xr * L_NCE(x_r, z_r)
/// with z_s = G(x_s), z_r = G(x_r). d_loss is the matching discriminator
/// objective evaluated at the same parameters. Logged values carry the term
/// breakdown with the lambdas as weights.
struct TranslationObjective {
  tensor::Var d_loss;
  tensor::Var g_total;
  tensor::Var z;  // translated synthetic batch, differentiable
  LossValue d_value;
  LossValue g_value;
};
TranslationObjective translation_objective(GeneratorNet& G, DiscriminatorNet& D,
                                           PatchProjector& H, const tensor::Var& x_s,
                                           const tensor::Var& x_r, double lambda_xs,
                                           double lambda_xr, Rng& rng);

}  // namespace plcutseg::translation
