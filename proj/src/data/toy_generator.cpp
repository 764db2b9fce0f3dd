#include "plcutseg/data/toy_generator.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace plcutseg::data {

namespace {
constexpr double kPi = 3.14159265358979323846;

struct Ellipse {
  double cy, cx, a, b, theta;

  // Signed normalized radius: <= 1 inside. Exact arithmetic drives the mask.
  double radius(double y, double x) const {
    const double dy = y - cy, dx = x - cx;
    const double c = std::cos(theta), s = std::sin(theta);
    const double u = c * dx + s * dy;
    const double v = -s * dx + c * dy;
    return std::sqrt((u * u) / (a * a) + (v * v) / (b * b));
  }
};

struct Palette {
  std::array<double, 3> wall;
  std::array<double, 3> polyp;
  double noise_sigma;
  int max_streaks;
};

// The real palette sits far from the synthetic one so an untranslated
// segmenter misreads real walls; streaks and noise exist only in the real
// domain, which is the headroom pseudo-labels exploit.
const Palette kSyntheticPalette{{0.82, 0.52, 0.56}, {0.58, 0.20, 0.24}, 0.0, 0};
const Palette kRealPalette{{0.52, 0.30, 0.22}, {0.33, 0.11, 0.09}, 0.03, 3};

double smoothstep(double e0, double e1, double x) {
  const double t = std::clamp((x - e0) / (e1 - e0), 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

void render_scene(int s, Rng& rng, const Palette& pal, Tensor& image, Tensor& mask) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  // Lumen: a dark sink somewhere near the middle of the frame.
  const double ly = s * (0.35 + 0.3 * unit(rng));
  const double lx = s * (0.35 + 0.3 * unit(rng));
  const double lr = s * (0.25 + 0.2 * unit(rng));

  // Low-frequency wall texture.
  const double fy = (1.0 + 2.0 * unit(rng)) / s;
  const double fx = (1.0 + 2.0 * unit(rng)) / s;
  const double phase = 2.0 * kPi * unit(rng);

  // 0-2 polyp blobs; semi-axes capped at 0.2*s, so the polyp-pixel fraction
  // stays below pi*0.04*2 = 0.26 of the frame by construction.
  const int n_polyps = std::uniform_int_distribution<int>(0, 2)(rng);
  std::vector<Ellipse> polyps;
  for (int i = 0; i < n_polyps; ++i) {
    Ellipse e;
    e.cy = s * (0.15 + 0.7 * unit(rng));
    e.cx = s * (0.15 + 0.7 * unit(rng));
    e.a = s * (0.07 + 0.13 * unit(rng));
    e.b = s * (0.07 + 0.13 * unit(rng));
    e.theta = kPi * unit(rng);
    polyps.push_back(e);
  }

  // Specular streaks: thin bright ellipses on the image only.
  std::vector<Ellipse> streaks;
  if (pal.max_streaks > 0) {
    const int n = std::uniform_int_distribution<int>(1, pal.max_streaks)(rng);
    for (int i = 0; i < n; ++i) {
      Ellipse e;
      e.cy = s * (0.1 + 0.8 * unit(rng));
      e.cx = s * (0.1 + 0.8 * unit(rng));
      e.a = s * (0.015 + 0.02 * unit(rng));
      e.b = s * (0.10 + 0.18 * unit(rng));
      e.theta = kPi * unit(rng);
      streaks.push_back(e);
    }
  }

  std::normal_distribution<double> noise(0.0, pal.noise_sigma);
  for (int y = 0; y < s; ++y) {
    for (int x = 0; x < s; ++x) {
      const double tex = 1.0 + 0.07 * std::sin(2.0 * kPi * (fy * y + fx * x) + phase);
      const double dl = std::hypot(y - ly, x - lx);
      const double lumen = 0.4 + 0.6 * smoothstep(0.2 * lr, lr, dl);

      bool inside = false;
      double shade = 0.0;  // how strongly the polyp colour takes over
      for (const auto& e : polyps) {
        const double r = e.radius(y + 0.5, x + 0.5);
        if (r <= 1.0) inside = true;
        shade = std::max(shade, 1.0 - smoothstep(0.75, 1.1, r));
      }
      mask.at(y, x) = inside ? 1.0 : 0.0;

      double spec = 0.0;
      for (const auto& e : streaks)
        spec = std::max(spec, 1.0 - smoothstep(0.6, 1.0, e.radius(y + 0.5, x + 0.5)));

      for (int c = 0; c < 3; ++c) {
        double v = pal.wall[c] * tex * lumen;
        v = (1.0 - shade) * v + shade * (pal.polyp[c] * lumen);
        v = (1.0 - spec) * v + spec * 0.97;
        if (pal.noise_sigma > 0.0) v += noise(rng);
        image.at(c, y, x) = std::clamp(v, 0.0, 1.0);
      }
    }
  }
}

std::string number(int i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d", i);
  return buf;
}
}  // namespace

void generate_toy_dataset(const fs::path& root, const ToyCounts& counts, int image_size,
                          std::uint64_t seed) {
  require(counts.synthetic > 0 && counts.real > 0 && counts.test > 0,
          "generate_toy_dataset: counts must be positive");
  require(image_size >= 16, "generate_toy_dataset: image size too small");

  struct Section {
    const char* name;
    int count;
    const Palette* palette;
    fs::path image_dir;
    fs::path mask_dir;
  };
  const std::array<Section, 3> sections{{
      {"synthetic", counts.synthetic, &kSyntheticPalette, root / "synthetic" / "images",
       root / "synthetic" / "masks"},
      {"real", counts.real, &kRealPalette, root / "real" / "images", root / "real_masks"},
      {"test", counts.test, &kRealPalette, root / "test" / "images",
       root / "test" / "masks"},
  }};

  for (const auto& sec : sections) {
    for (int i = 0; i < sec.count; ++i) {
      Rng rng = seeded_rng(seed, std::string("toy:") + sec.name, static_cast<std::uint64_t>(i));
      Tensor img({3, image_size, image_size});
      Tensor mask({image_size, image_size});
      render_scene(image_size, rng, *sec.palette, img, mask);
      const std::string stem = std::string(sec.name) + "_" + number(i);
      write_image(sec.image_dir / (stem + ".png"), ImageTensor(std::move(img), false));
      write_mask(sec.mask_dir / (stem + ".png"), SegMask(std::move(mask)));
    }
  }
}

}  // namespace plcutseg::data
