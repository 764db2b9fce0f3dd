#pragma once

#include <map>
#include <memory>

#include "plcutseg/core/types.hpp"
#include "plcutseg/data/augment.hpp"
#include "plcutseg/data/ingest.hpp"
#include "plcutseg/tensor/nn.hpp"

namespace plcutseg::segmentation {

using core::ImageTensor;
using core::SegMask;
using tensor::Param;
using tensor::Var;

/// Pluggable segmentation network contract: normalized NCHW in, per-pixel
/// polyp probability (logistic, strictly inside (0,1)) out at the same
/// spatial dims. The paper-scale architecture is a configuration of this
/// contract, not a separate code path.
class SegmentationBackbone {
public:
  virtual ~SegmentationBackbone() = default;
  virtual Var forward(const Var& x) = 0;  // [N,3,H,W] -> [N,1,H,W]
  virtual std::vector<Param> params(const std::string& prefix) const = 0;
  virtual int stride_requirement() const = 0;
  virtual const char* name() const = 0;
};

/// Registry: "tiny_unet" (default, ~0.5M params at base 32), "toy_linear"
/// (2 learnable scalars, for finite-difference checks), "constant" (stub
/// emitting one value everywhere).
std::unique_ptr<SegmentationBackbone> make_backbone(const std::string& name,
                                                    int base_channels, Rng& rng);

/// Inference-mode prediction for one image.
SegMask predict(SegmentationBackbone& U, const ImageTensor& image);

/// Epoch-end pseudo-label inference: deterministic preprocessing (resize +
/// center crop per cfg), no augmentation, graph-free. Keys equal the input
/// ref ids. Never touches ground-truth masks or U's parameters.
std::map<std::string, SegMask> predict_for_pseudo_labels(
    SegmentationBackbone& U, const std::vector<data::SampleRef>& refs,
    const data::AugmentationConfig& cfg);

}  // namespace plcutseg::segmentation
