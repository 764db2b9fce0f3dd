#include "plcutseg/translation/nets.hpp"

#include "plcutseg/tensor/autograd.hpp"

namespace plcutseg::translation {

using namespace tensor;

GeneratorNet::GeneratorNet(const GeneratorConfig& cfg, Rng& rng) : cfg_(cfg) {
  require(cfg.ngf > 0 && cfg.n_res >= 0, "GeneratorNet: bad config");
  const int n = cfg.ngf;
  stem_ = std::make_unique<Conv2d>(3, n, 3, 1, 1, rng);
  down1_ = std::make_unique<Conv2d>(n, 2 * n, 3, 2, 1, rng);
  down2_ = std::make_unique<Conv2d>(2 * n, 4 * n, 3, 2, 1, rng);
  for (int i = 0; i < cfg.n_res; ++i)
    res_.push_back({std::make_unique<Conv2d>(4 * n, 4 * n, 3, 1, 1, rng),
                    std::make_unique<Conv2d>(4 * n, 4 * n, 3, 1, 1, rng)});
  up1_ = std::make_unique<Conv2d>(4 * n, 2 * n, 3, 1, 1, rng);
  up2_ = std::make_unique<Conv2d>(2 * n, n, 3, 1, 1, rng);
  head_ = std::make_unique<Conv2d>(n, 3, 3, 1, 1, rng);
  feature_channels_ = {3, n, 2 * n, 4 * n, 4 * n};
}

GeneratorNet::Encoded GeneratorNet::encode(const Var& x) {
  const auto& s = x->value.shape();
  require(s.size() == 4 && s[1] == 3, "GeneratorNet: expects NCHW with 3 channels");
  require(s[2] % downsampling_factor() == 0 && s[3] % downsampling_factor() == 0,
          "GeneratorNet: input dims must be divisible by " +
              std::to_string(downsampling_factor()));
  Encoded e;
  e.taps.push_back(x);
  Var h = relu(instance_norm(stem_->forward(x)));
  e.taps.push_back(h);
  h = relu(instance_norm(down1_->forward(h)));
  e.taps.push_back(h);
  h = relu(instance_norm(down2_->forward(h)));
  e.taps.push_back(h);
  for (auto& rb : res_) {
    Var r = relu(instance_norm(rb.c1->forward(h)));
    r = instance_norm(rb.c2->forward(r));
    h = relu(add(h, r));
  }
  e.taps.push_back(h);
  e.bottleneck = h;
  return e;
}

Var GeneratorNet::forward(const Var& x) {
  Encoded e = encode(x);
  Var h = relu(instance_norm(up1_->forward(upsample2(e.bottleneck))));
  h = relu(instance_norm(up2_->forward(upsample2(h))));
  return tanh_op(head_->forward(h));
}

std::vector<Var> GeneratorNet::encode_features(const Var& x) { return encode(x).taps; }

std::vector<Param> GeneratorNet::params(const std::string& prefix) const {
  std::vector<Param> out;
  stem_->collect(prefix + ".stem", out);
  down1_->collect(prefix + ".down1", out);
  down2_->collect(prefix + ".down2", out);
  for (std::size_t i = 0; i < res_.size(); ++i) {
    res_[i].c1->collect(prefix + ".res" + std::to_string(i) + ".c1", out);
    res_[i].c2->collect(prefix + ".res" + std::to_string(i) + ".c2", out);
  }
  up1_->collect(prefix + ".up1", out);
  up2_->collect(prefix + ".up2", out);
  head_->collect(prefix + ".head", out);
  return out;
}

DiscriminatorNet::DiscriminatorNet(const DiscriminatorConfig& cfg, Rng& rng) {
  require(cfg.ndf > 0, "DiscriminatorNet: bad config");
  c1_ = std::make_unique<Conv2d>(3, cfg.ndf, 3, 2, 1, rng);
  c2_ = std::make_unique<Conv2d>(cfg.ndf, 2 * cfg.ndf, 3, 2, 1, rng);
  head_ = std::make_unique<Conv2d>(2 * cfg.ndf, 1, 3, 1, 1, rng);
}

Var DiscriminatorNet::forward(const Var& x) {
  const auto& s = x->value.shape();
  require(s.size() == 4 && s[1] == 3, "DiscriminatorNet: expects NCHW with 3 channels");
  require(s[2] % 4 == 0 && s[3] % 4 == 0,
          "DiscriminatorNet: input dims must be divisible by 4");
  Var h = leaky_relu(c1_->forward(x), 0.2);
  h = leaky_relu(instance_norm(c2_->forward(h)), 0.2);
  return head_->forward(h);
}

std::vector<Param> DiscriminatorNet::params(const std::string& prefix) const {
  std::vector<Param> out;
  c1_->collect(prefix + ".c1", out);
  c2_->collect(prefix + ".c2", out);
  head_->collect(prefix + ".head", out);
  return out;
}

PatchProjector::PatchProjector(const std::vector<int>& feature_channels,
                               const ProjectorConfig& cfg, Rng& rng)
    : cfg_(cfg) {
  require(!feature_channels.empty(), "PatchProjector: no feature layers");
  require(cfg.embed_dim > 0 && cfg.n_patches > 0 && cfg.tau > 0.0,
          "PatchProjector: bad config");
  for (int c : feature_channels)
    mlps_.push_back({std::make_unique<Linear>(c, cfg.embed_dim, rng),
                     std::make_unique<Linear>(cfg.embed_dim, cfg.embed_dim, rng)});
}

Var PatchProjector::project(int layer, const Var& rows) const {
  require(layer >= 0 && layer < n_layers(), "PatchProjector: layer index out of range");
  const auto& mlp = mlps_[static_cast<std::size_t>(layer)];
  return l2_normalize_rows(mlp.l2->forward(relu(mlp.l1->forward(rows))));
}

std::vector<Param> PatchProjector::params(const std::string& prefix) const {
  std::vector<Param> out;
  for (std::size_t i = 0; i < mlps_.size(); ++i) {
    mlps_[i].l1->collect(prefix + ".layer" + std::to_string(i) + ".l1", out);
    mlps_[i].l2->collect(prefix + ".layer" + std::to_string(i) + ".l2", out);
  }
  return out;
}

}  // namespace plcutseg::translation
