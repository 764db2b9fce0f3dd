#include "plcutseg/data/augment.hpp"

#include <cmath>

namespace plcutseg::data {

void AugmentationConfig::validate() const {
  require(source_size > 0 && crop_size > 0 && crop_size <= source_size,
          "AugmentationConfig: need 0 < crop_size <= source_size");
  require(hflip_prob >= 0.0 && hflip_prob <= 1.0 && vflip_prob >= 0.0 && vflip_prob <= 1.0,
          "AugmentationConfig: flip probabilities outside [0,1]");
  require(rot_min_deg <= rot_max_deg, "AugmentationConfig: empty rotation range");
}

AugmentParams sample_augment_params(const AugmentationConfig& cfg, int in_h, int in_w,
                                    Rng& rng) {
  cfg.validate();
  require(in_h >= cfg.crop_size && in_w >= cfg.crop_size,
          "sample_augment_params: input smaller than crop size");
  AugmentParams p;
  std::uniform_int_distribution<int> dy(0, in_h - cfg.crop_size);
  std::uniform_int_distribution<int> dx(0, in_w - cfg.crop_size);
  p.crop_y = dy(rng);
  p.crop_x = dx(rng);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  p.hflip = unit(rng) < cfg.hflip_prob;
  p.vflip = unit(rng) < cfg.vflip_prob;
  std::uniform_real_distribution<double> ang(cfg.rot_min_deg, cfg.rot_max_deg);
  p.angle_deg = ang(rng);
  return p;
}

namespace {
// plane(y, x) accessor over one channel of a CHW tensor or a HW mask.
struct Plane {
  const Tensor* t;
  int channel;  // -1 for rank-2
  double at(int y, int x) const {
    return channel < 0 ? t->at(y, x) : t->at(channel, y, x);
  }
};

Tensor crop_flip(const Plane& src, int size, const AugmentParams& p) {
  Tensor out({size, size});
  for (int y = 0; y < size; ++y) {
    const int sy = p.vflip ? p.crop_y + size - 1 - y : p.crop_y + y;
    for (int x = 0; x < size; ++x) {
      const int sx = p.hflip ? p.crop_x + size - 1 - x : p.crop_x + x;
      out.at(y, x) = src.at(sy, sx);
    }
  }
  return out;
}

// Inverse-map rotation about the center, bilinear sampling, zero outside the
// frame. Output values are convex combinations of inputs and 0, so a [0,1]
// input stays in [0,1] without clamping.
Tensor rotate_bilinear(const Tensor& hw, double angle_deg) {
  const int h = hw.dim(0), w = hw.dim(1);
  const double rad = angle_deg * std::acos(-1.0) / 180.0;
  const double c = std::cos(rad), s = std::sin(rad);
  const double cy = (h - 1) / 2.0, cx = (w - 1) / 2.0;
  Tensor out({h, w});
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double dy = y - cy, dx = x - cx;
      const double sy = c * dy + s * dx + cy;
      const double sx = -s * dy + c * dx + cx;
      const int y0 = static_cast<int>(std::floor(sy));
      const int x0 = static_cast<int>(std::floor(sx));
      const double wy = sy - y0, wx = sx - x0;
      double acc = 0.0;
      for (int oy = 0; oy <= 1; ++oy) {
        for (int ox = 0; ox <= 1; ++ox) {
          const int yy = y0 + oy, xx = x0 + ox;
          if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
          const double weight = (oy ? wy : 1.0 - wy) * (ox ? wx : 1.0 - wx);
          acc += weight * hw.at(yy, xx);
        }
      }
      out.at(y, x) = acc;
    }
  }
  return out;
}

Tensor transform_plane(const Plane& src, const AugmentationConfig& cfg,
                       const AugmentParams& p) {
  Tensor out = crop_flip(src, cfg.crop_size, p);
  if (p.angle_deg != 0.0) out = rotate_bilinear(out, p.angle_deg);
  return out;
}
}  // namespace

std::pair<ImageTensor, SegMask> augment_with_params(const ImageTensor& raw_image,
                                                    const SegMask& mask,
                                                    const AugmentationConfig& cfg,
                                                    const AugmentParams& params,
                                                    bool normalize) {
  cfg.validate();
  require(!raw_image.normalized(), "augment: expects a raw image");
  require(raw_image.h() == mask.h() && raw_image.w() == mask.w(),
          "augment: image and mask dims differ");
  require(raw_image.h() >= cfg.crop_size && raw_image.w() >= cfg.crop_size,
          "augment: input smaller than crop size");
  require(params.crop_y >= 0 && params.crop_y + cfg.crop_size <= raw_image.h() &&
              params.crop_x >= 0 && params.crop_x + cfg.crop_size <= raw_image.w(),
          "augment: crop window out of bounds");

  Tensor img({3, cfg.crop_size, cfg.crop_size});
  for (int ch = 0; ch < 3; ++ch) {
    Tensor plane = transform_plane({&raw_image.values(), ch}, cfg, params);
    for (int y = 0; y < cfg.crop_size; ++y)
      for (int x = 0; x < cfg.crop_size; ++x) img.at(ch, y, x) = plane.at(y, x);
  }
  Tensor m = transform_plane({&mask.values(), -1}, cfg, params);

  ImageTensor out_img(std::move(img), false);
  if (normalize) out_img = out_img.normalize();
  return {std::move(out_img), SegMask(std::move(m))};
}

std::pair<ImageTensor, SegMask> augment(const ImageTensor& raw_image, const SegMask& mask,
                                        const AugmentationConfig& cfg, Rng& rng) {
  const AugmentParams p = sample_augment_params(cfg, raw_image.h(), raw_image.w(), rng);
  return augment_with_params(raw_image, mask, cfg, p);
}

namespace {
AugmentParams center_params(const AugmentationConfig& cfg) {
  AugmentParams p;
  p.crop_y = (cfg.source_size - cfg.crop_size) / 2;
  p.crop_x = (cfg.source_size - cfg.crop_size) / 2;
  return p;
}
}  // namespace

ImageTensor deterministic_preprocess(const ImageTensor& raw, const AugmentationConfig& cfg) {
  cfg.validate();
  const ImageTensor std_img = standardize(raw, cfg.source_size);
  SegMask dummy = SegMask::zeros(cfg.source_size, cfg.source_size);
  auto [img, m] = augment_with_params(std_img, dummy, cfg, center_params(cfg), false);
  return img;
}

SegMask deterministic_preprocess(const SegMask& mask, const AugmentationConfig& cfg) {
  cfg.validate();
  const SegMask std_mask = standardize(mask, cfg.source_size);
  const AugmentParams p = center_params(cfg);
  Tensor out({cfg.crop_size, cfg.crop_size});
  for (int y = 0; y < cfg.crop_size; ++y)
    for (int x = 0; x < cfg.crop_size; ++x)
      out.at(y, x) = std_mask.values().at(p.crop_y + y, p.crop_x + x);
  return SegMask(std::move(out));
}

}  // namespace plcutseg::data
