#include "plcutseg/segmentation/backbone.hpp"

#include <algorithm>

#include "plcutseg/tensor/autograd.hpp"

namespace plcutseg::segmentation {

using namespace tensor;

namespace {

void check_input(const Var& x, int stride, const char* who) {
  const auto& s = x->value.shape();
  require(s.size() == 4 && s[1] == 3,
          std::string(who) + ": expects NCHW input with 3 channels");
  require(s[2] % stride == 0 && s[3] % stride == 0,
          std::string(who) + ": input dims must be divisible by " + std::to_string(stride));
}

/// 3-level encoder-decoder with skip connections and a logistic head.
class TinyUnet final : public SegmentationBackbone {
public:
  TinyUnet(int base, Rng& rng) {
    require(base > 0, "tiny_unet: base channels must be positive");
    enc_ = std::make_unique<Conv2d>(3, base, 3, 1, 1, rng);
    down1_ = std::make_unique<Conv2d>(base, 2 * base, 3, 2, 1, rng);
    down2_ = std::make_unique<Conv2d>(2 * base, 4 * base, 3, 2, 1, rng);
    mid_ = std::make_unique<Conv2d>(4 * base, 4 * base, 3, 1, 1, rng);
    up1_ = std::make_unique<Conv2d>(4 * base, 2 * base, 3, 1, 1, rng);
    fuse1_ = std::make_unique<Conv2d>(4 * base, 2 * base, 3, 1, 1, rng);
    up2_ = std::make_unique<Conv2d>(2 * base, base, 3, 1, 1, rng);
    fuse2_ = std::make_unique<Conv2d>(2 * base, base, 3, 1, 1, rng);
    head_ = std::make_unique<Conv2d>(base, 1, 3, 1, 1, rng);
  }

  Var forward(const Var& x) override {
    check_input(x, stride_requirement(), name());
    Var e0 = relu(instance_norm(enc_->forward(x)));
    Var e1 = relu(instance_norm(down1_->forward(e0)));
    Var e2 = relu(instance_norm(down2_->forward(e1)));
    Var m = relu(instance_norm(mid_->forward(e2)));
    Var u1 = relu(instance_norm(up1_->forward(upsample2(m))));
    u1 = relu(instance_norm(fuse1_->forward(concat_channels(u1, e1))));
    Var u2 = relu(instance_norm(up2_->forward(upsample2(u1))));
    u2 = relu(instance_norm(fuse2_->forward(concat_channels(u2, e0))));
    return sigmoid_op(head_->forward(u2));
  }

  std::vector<Param> params(const std::string& prefix) const override {
    std::vector<Param> out;
    enc_->collect(prefix + ".enc", out);
    down1_->collect(prefix + ".down1", out);
    down2_->collect(prefix + ".down2", out);
    mid_->collect(prefix + ".mid", out);
    up1_->collect(prefix + ".up1", out);
    fuse1_->collect(prefix + ".fuse1", out);
    up2_->collect(prefix + ".up2", out);
    fuse2_->collect(prefix + ".fuse2", out);
    head_->collect(prefix + ".head", out);
    return out;
  }

  int stride_requirement() const override { return 4; }
  const char* name() const override { return "tiny_unet"; }

private:
  std::unique_ptr<Conv2d> enc_, down1_, down2_, mid_, up1_, fuse1_, up2_, fuse2_, head_;
};

/// sigmoid(w * mean_channels(x) + b): exactly two learnable scalars, small
/// enough for central finite differences over every parameter.
class ToyLinear final : public SegmentationBackbone {
public:
  explicit ToyLinear(Rng& rng) {
    w_ = parameter(Tensor::randn({1}, rng, 0.5));
    b_ = parameter(Tensor::randn({1}, rng, 0.5));
    Tensor k({1, 3, 1, 1});
    k.fill(1.0 / 3.0);
    channel_mean_ = constant(std::move(k));
  }

  Var forward(const Var& x) override {
    check_input(x, 1, name());
    Var m = conv2d(x, channel_mean_, nullptr, 1, 0);
    return sigmoid_op(affine_scalar(m, w_, b_));
  }

  std::vector<Param> params(const std::string& prefix) const override {
    return {{prefix + ".w", w_}, {prefix + ".b", b_}};
  }

  int stride_requirement() const override { return 1; }
  const char* name() const override { return "toy_linear"; }

private:
  Var w_, b_, channel_mean_;
};

/// Emits sigmoid(c) at every pixel; a stub for harness tests.
class ConstantNet final : public SegmentationBackbone {
public:
  explicit ConstantNet(Rng& rng) { c_ = parameter(Tensor::randn({1}, rng, 0.5)); }

  Var forward(const Var& x) override {
    check_input(x, 1, name());
    const auto& s = x->value.shape();
    Var zeros = constant(Tensor({s[0], 1, s[2], s[3]}));
    return sigmoid_op(affine_scalar(zeros, c_, c_));
  }

  std::vector<Param> params(const std::string& prefix) const override {
    return {{prefix + ".c", c_}};
  }

  int stride_requirement() const override { return 1; }
  const char* name() const override { return "constant"; }

private:
  Var c_;
};

}  // namespace

std::unique_ptr<SegmentationBackbone> make_backbone(const std::string& name,
                                                    int base_channels, Rng& rng) {
  if (name == "tiny_unet") return std::make_unique<TinyUnet>(base_channels, rng);
  if (name == "toy_linear") return std::make_unique<ToyLinear>(rng);
  if (name == "constant") return std::make_unique<ConstantNet>(rng);
  throw RuntimeError("unknown backbone '" + name +
                     "' (known: tiny_unet, toy_linear, constant)");
}

SegMask predict(SegmentationBackbone& U, const ImageTensor& image) {
  require(image.normalized(), "predict: image must be normalized");
  NoGradGuard ng;
  Tensor in({1, 3, image.h(), image.w()});
  std::copy(image.values().data(), image.values().data() + image.values().numel(),
            in.data());
  Var out = U.forward(constant(std::move(in)));
  Tensor hw({image.h(), image.w()});
  std::copy(out->value.data(), out->value.data() + hw.numel(), hw.data());
  return SegMask(std::move(hw));
}

std::map<std::string, SegMask> predict_for_pseudo_labels(
    SegmentationBackbone& U, const std::vector<data::SampleRef>& refs,
    const data::AugmentationConfig& cfg) {
  std::map<std::string, SegMask> out;
  for (const auto& ref : refs) {
    const ImageTensor pre = data::deterministic_preprocess(data::load_image(ref), cfg);
    out.emplace(ref.id, predict(U, pre.normalize()));
  }
  return out;
}

}  // namespace plcutseg::segmentation
