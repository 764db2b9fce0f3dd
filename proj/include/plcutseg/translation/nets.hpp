#pragma once

#include <memory>

#include "plcutseg/tensor/nn.hpp"

namespace plcutseg::translation {

using tensor::Param;
using tensor::Var;

struct GeneratorConfig {
  int ngf = 16;    // base channel width
  int n_res = 2;   // residual blocks at the bottleneck
};

/// Residual encoder-decoder translating normalized images within [-1,1]
/// (tanh output). Patch features are tapped at five encoder depths: the
/// input itself, the stem, both downsampling stages, and the bottleneck.
class GeneratorNet {
public:
  GeneratorNet(const GeneratorConfig& cfg, Rng& rng);

  Var forward(const Var& x);
  std::vector<Var> encode_features(const Var& x);
  const std::vector<int>& feature_channels() const { return feature_channels_; }
  int downsampling_factor() const { return 4; }
  std::vector<Param> params(const std::string& prefix = "G") const;

private:
  struct ResBlock {
    std::unique_ptr<tensor::Conv2d> c1, c2;
  };

  struct Encoded {
    std::vector<Var> taps;
    Var bottleneck;
  };
  Encoded encode(const Var& x);

  GeneratorConfig cfg_;
  std::unique_ptr<tensor::Conv2d> stem_, down1_, down2_, up1_, up2_, head_;
  std::vector<ResBlock> res_;
  std::vector<int> feature_channels_;
};

struct DiscriminatorConfig {
  int ndf = 16;
};

/// Patch classifier: two stride-2 stages then a 1-channel score head, so the
/// realness grid is input_dims / 4 on each side.
class DiscriminatorNet {
public:
  DiscriminatorNet(const DiscriminatorConfig& cfg, Rng& rng);

  Var forward(const Var& x);
  std::vector<Param> params(const std::string& prefix = "D") const;

private:
  std::unique_ptr<tensor::Conv2d> c1_, c2_, head_;
};

struct ProjectorConfig {
  int embed_dim = 256;
  int n_patches = 256;
  double tau = 0.07;
};

/// Per-tap-layer two-layer perceptrons mapping patch feature rows to the
/// unit sphere. project() output rows always have unit Euclidean norm.
class PatchProjector {
public:
  PatchProjector(const std::vector<int>& feature_channels, const ProjectorConfig& cfg,
                 Rng& rng);

  Var project(int layer, const Var& rows) const;
  int n_layers() const { return static_cast<int>(mlps_.size()); }
  int n_patches() const { return cfg_.n_patches; }
  double tau() const { return cfg_.tau; }
  std::vector<Param> params(const std::string& prefix = "H") const;

private:
  struct Mlp {
    std::unique_ptr<tensor::Linear> l1, l2;
  };
  ProjectorConfig cfg_;
  std::vector<Mlp> mlps_;
};

}  // namespace plcutseg::translation
