#include "plcutseg/core/ops.hpp"

#include <cmath>

namespace plcutseg::core {

namespace {
void check_mask_range(const Tensor& t, const char* what) {
  for (std::size_t i = 0; i < t.numel(); ++i)
    require(t[i] >= 0.0 && t[i] <= 1.0, std::string(what) + ": value outside [0,1]");
}
}  // namespace

SegMask::SegMask(Tensor values) {
  require(values.rank() == 2 && values.dim(0) > 0 && values.dim(1) > 0,
          "SegMask: expects a non-empty H x W grid");
  check_mask_range(values, "SegMask");
  values_ = std::move(values);
}

SegMask SegMask::zeros(int h, int w) { return SegMask(Tensor({h, w}, 0.0)); }
SegMask SegMask::ones(int h, int w) { return SegMask(Tensor({h, w}, 1.0)); }

void SegMask::set(int y, int x, double v) {
  require(v >= 0.0 && v <= 1.0, "SegMask::set: value outside [0,1]");
  values_.at(y, x) = v;
}

bool SegMask::is_hard() const {
  for (std::size_t i = 0; i < values_.numel(); ++i)
    if (values_[i] != 0.0 && values_[i] != 1.0) return false;
  return true;
}

ValidityMask::ValidityMask(Tensor zero_one) {
  require(zero_one.rank() == 2 && zero_one.dim(0) > 0 && zero_one.dim(1) > 0,
          "ValidityMask: expects a non-empty H x W grid");
  for (std::size_t i = 0; i < zero_one.numel(); ++i)
    require(zero_one[i] == 0.0 || zero_one[i] == 1.0, "ValidityMask: values must be 0 or 1");
  values_ = std::move(zero_one);
}

ValidityMask ValidityMask::all_true(int h, int w) { return ValidityMask(Tensor({h, w}, 1.0)); }
ValidityMask ValidityMask::all_false(int h, int w) { return ValidityMask(Tensor({h, w}, 0.0)); }

void ValidityMask::set(int y, int x, bool v) { values_.at(y, x) = v ? 1.0 : 0.0; }

std::size_t ValidityMask::count_valid() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < values_.numel(); ++i) n += values_[i] != 0.0;
  return n;
}

ImageTensor::ImageTensor(Tensor chw, bool normalized) : normalized_(normalized) {
  require(chw.rank() == 3 && chw.dim(0) == 3 && chw.dim(1) > 0 && chw.dim(2) > 0,
          "ImageTensor: expects 3 x H x W");
  const double lo = normalized ? -1.0 : 0.0;
  for (std::size_t i = 0; i < chw.numel(); ++i)
    require(chw[i] >= lo && chw[i] <= 1.0, "ImageTensor: value outside range for its state");
  values_ = std::move(chw);
}

ImageTensor ImageTensor::normalize() const {
  require(!normalized_, "ImageTensor::normalize: already normalized");
  Tensor out = values_;
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = (out[i] - 0.5) / 0.5;
  return ImageTensor(std::move(out), true);
}

ImageTensor ImageTensor::denormalize() const {
  require(normalized_, "ImageTensor::denormalize: not normalized");
  Tensor out = values_;
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = out[i] * 0.5 + 0.5;
  return ImageTensor(std::move(out), false);
}

LossValue::LossValue(double scalar, std::vector<LossTerm> terms)
    : scalar_(scalar), terms_(std::move(terms)) {
  double weighted = 0.0;
  bool finite = std::isfinite(scalar);
  for (const auto& t : terms_) {
    weighted += t.weight * t.value;
    finite = finite && std::isfinite(t.value);
  }
  // non-finite values pass through so divergence reaches the trainer's
  // dedicated abort path instead of masquerading as a breakdown bug
  if (!finite) return;
  const double tol = 1e-6 * std::max(1.0, std::abs(scalar));
  require(std::abs(weighted - scalar) <= tol,
          "LossValue: scalar does not match the weighted term sum");
}

LossValue LossValue::sentinel() {
  LossValue v;
  v.sentinel_ = true;
  return v;
}

double LossValue::scalar() const {
  require(!sentinel_, "LossValue: sentinel has no scalar");
  return scalar_;
}

double LossValue::term(const std::string& name) const {
  for (const auto& t : terms_)
    if (t.name == name) return t.value;
  throw ContractError("LossValue: no term named " + name);
}

LossValue dice_loss(const SegMask& pred, const SegMask& target, const ValidityMask& validity,
                    double eps) {
  require(pred.values().same_shape(target.values()) &&
              pred.values().same_shape(validity.values()),
          "dice_loss: shape mismatch");
  require(eps > 0.0, "dice_loss: eps must be positive");
  if (!validity.any()) return LossValue::sentinel();
  const Tensor& p = pred.values();
  const Tensor& t = target.values();
  const Tensor& v = validity.values();
  double inter = 0.0, sp = 0.0, st = 0.0;
  for (std::size_t i = 0; i < p.numel(); ++i) {
    if (v[i] == 0.0) continue;
    inter += p[i] * t[i];
    sp += p[i];
    st += t[i];
  }
  const double loss = 1.0 - (2.0 * inter + eps) / (sp + st + eps);
  return LossValue(loss, {{"dice", 1.0, loss}});
}

namespace {
double overlap_metric(const SegMask& pred, const SegMask& target, double thr, bool use_dice) {
  require(pred.values().same_shape(target.values()), "overlap metric: shape mismatch");
  require(thr > 0.0 && thr < 1.0, "overlap metric: threshold outside (0,1)");
  std::size_t np = 0, nt = 0, ninter = 0;
  const Tensor& p = pred.values();
  const Tensor& t = target.values();
  for (std::size_t i = 0; i < p.numel(); ++i) {
    const bool bp = p[i] >= thr;
    const bool bt = t[i] >= thr;
    np += bp;
    nt += bt;
    ninter += bp && bt;
  }
  if (np + nt == 0) return 1.0;
  if (use_dice) return 2.0 * static_cast<double>(ninter) / static_cast<double>(np + nt);
  const std::size_t nunion = np + nt - ninter;
  return static_cast<double>(ninter) / static_cast<double>(nunion);
}
}  // namespace

double iou(const SegMask& pred, const SegMask& target, double binarize_threshold) {
  return overlap_metric(pred, target, binarize_threshold, false);
}

double dice_score(const SegMask& pred, const SegMask& target) {
  return overlap_metric(pred, target, 0.5, true);
}

ValidityMask confidence_mask(const SegMask& pred, double threshold) {
  require(threshold > 0.5 && threshold < 1.0, "confidence_mask: threshold outside (0.5,1)");
  Tensor out(pred.values().shape());
  const Tensor& p = pred.values();
  for (std::size_t i = 0; i < p.numel(); ++i)
    out[i] = (p[i] >= threshold || p[i] <= 1.0 - threshold) ? 1.0 : 0.0;
  return ValidityMask(std::move(out));
}

std::tuple<ImageTensor, SegMask, ValidityMask> mixup_pair(
    const ImageTensor& a_img, const SegMask& a_mask, const ValidityMask& a_valid,
    const ImageTensor& b_img, const SegMask& b_mask, const ValidityMask& b_valid,
    double lambda) {
  require(lambda >= 0.0 && lambda <= 1.0, "mixup_pair: lambda outside [0,1]");
  require(a_img.values().same_shape(b_img.values()), "mixup_pair: image shape mismatch");
  require(a_img.normalized() == b_img.normalized(),
          "mixup_pair: mixed normalization states");
  require(a_mask.values().same_shape(b_mask.values()), "mixup_pair: mask shape mismatch");
  require(a_valid.values().same_shape(b_valid.values()),
          "mixup_pair: validity shape mismatch");

  Tensor img(a_img.values().shape());
  for (std::size_t i = 0; i < img.numel(); ++i)
    img[i] = lambda * a_img.values()[i] + (1.0 - lambda) * b_img.values()[i];

  Tensor mask(a_mask.values().shape());
  for (std::size_t i = 0; i < mask.numel(); ++i)
    mask[i] = lambda * a_mask.values()[i] + (1.0 - lambda) * b_mask.values()[i];

  Tensor valid(a_valid.values().shape());
  for (std::size_t i = 0; i < valid.numel(); ++i)
    valid[i] = (a_valid.values()[i] != 0.0 && b_valid.values()[i] != 0.0) ? 1.0 : 0.0;

  return {ImageTensor(std::move(img), a_img.normalized()), SegMask(std::move(mask)),
          ValidityMask(std::move(valid))};
}

double sample_mixup_lambda(double alpha, Rng& rng) {
  require(alpha > 0.0, "sample_mixup_lambda: alpha must be positive");
  std::gamma_distribution<double> gamma(alpha, 1.0);
  const double g1 = gamma(rng);
  const double g2 = gamma(rng);
  const double denom = g1 + g2;
  if (denom == 0.0) return 0.5;  // both draws underflowed; the symmetric midpoint
  const double lam = g1 / denom;
  return std::min(1.0, std::max(0.0, lam));
}

}  // namespace plcutseg::core
