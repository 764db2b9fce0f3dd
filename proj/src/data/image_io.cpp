#include "plcutseg/data/image_io.hpp"

#include <algorithm>
#include <cmath>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

namespace plcutseg::data {

ImageTensor read_image(const fs::path& path) {
  cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
  expect(!bgr.empty(), "read_image: cannot decode " + path.string());
  Tensor out({3, bgr.rows, bgr.cols});
  for (int y = 0; y < bgr.rows; ++y) {
    const auto* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < bgr.cols; ++x) {
      out.at(0, y, x) = row[x][2] / 255.0;  // R
      out.at(1, y, x) = row[x][1] / 255.0;  // G
      out.at(2, y, x) = row[x][0] / 255.0;  // B
    }
  }
  return ImageTensor(std::move(out), false);
}

SegMask read_mask_file(const fs::path& path) {
  cv::Mat gray = cv::imread(path.string(), cv::IMREAD_GRAYSCALE);
  expect(!gray.empty(), "read_mask_file: cannot decode " + path.string());
  Tensor out({gray.rows, gray.cols});
  for (int y = 0; y < gray.rows; ++y) {
    const auto* row = gray.ptr<unsigned char>(y);
    for (int x = 0; x < gray.cols; ++x) out.at(y, x) = row[x] > 127.5 ? 1.0 : 0.0;
  }
  return SegMask(std::move(out));
}

namespace {
unsigned char to_byte(double v) {
  const double r = std::lround(std::clamp(v, 0.0, 1.0) * 255.0);
  return static_cast<unsigned char>(r);
}

void write_png(const fs::path& path, const cv::Mat& m) {
  fs::create_directories(path.parent_path());
  // Fixed compression level keeps output bytes reproducible across runs.
  const std::vector<int> params{cv::IMWRITE_PNG_COMPRESSION, 6};
  expect(cv::imwrite(path.string(), m, params), "cannot write " + path.string());
}
}  // namespace

void write_image(const fs::path& path, const ImageTensor& raw) {
  require(!raw.normalized(), "write_image: expects a raw [0,1] image");
  const Tensor& t = raw.values();
  cv::Mat bgr(t.dim(1), t.dim(2), CV_8UC3);
  for (int y = 0; y < t.dim(1); ++y) {
    auto* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < t.dim(2); ++x) {
      row[x][2] = to_byte(t.at(0, y, x));
      row[x][1] = to_byte(t.at(1, y, x));
      row[x][0] = to_byte(t.at(2, y, x));
    }
  }
  write_png(path, bgr);
}

void write_mask(const fs::path& path, const SegMask& mask) {
  const Tensor& t = mask.values();
  cv::Mat gray(t.dim(0), t.dim(1), CV_8UC1);
  for (int y = 0; y < t.dim(0); ++y) {
    auto* row = gray.ptr<unsigned char>(y);
    for (int x = 0; x < t.dim(1); ++x) row[x] = to_byte(t.at(y, x));
  }
  write_png(path, gray);
}

Tensor resize_bilinear_hw(const Tensor& hw, int oh, int ow) {
  require(hw.rank() == 2 && oh > 0 && ow > 0, "resize_bilinear_hw: bad arguments");
  const int ih = hw.dim(0), iw = hw.dim(1);
  if (ih == oh && iw == ow) return hw;
  Tensor out({oh, ow});
  const double sy = static_cast<double>(ih) / oh;
  const double sx = static_cast<double>(iw) / ow;
  for (int y = 0; y < oh; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, ih - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, ih - 1);
    const double wy = fy - y0;
    for (int x = 0; x < ow; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, iw - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, iw - 1);
      const double wx = fx - x0;
      out.at(y, x) = (1 - wy) * ((1 - wx) * hw.at(y0, x0) + wx * hw.at(y0, x1)) +
                     wy * ((1 - wx) * hw.at(y1, x0) + wx * hw.at(y1, x1));
    }
  }
  return out;
}

Tensor resize_bilinear_chw(const Tensor& chw, int oh, int ow) {
  require(chw.rank() == 3, "resize_bilinear_chw: expects CHW");
  const int c = chw.dim(0), ih = chw.dim(1), iw = chw.dim(2);
  if (ih == oh && iw == ow) return chw;
  Tensor out({c, oh, ow});
  for (int ch = 0; ch < c; ++ch) {
    Tensor plane({ih, iw});
    for (int y = 0; y < ih; ++y)
      for (int x = 0; x < iw; ++x) plane.at(y, x) = chw.at(ch, y, x);
    Tensor r = resize_bilinear_hw(plane, oh, ow);
    for (int y = 0; y < oh; ++y)
      for (int x = 0; x < ow; ++x) out.at(ch, y, x) = r.at(y, x);
  }
  return out;
}

Tensor resize_nearest_hw(const Tensor& hw, int oh, int ow) {
  require(hw.rank() == 2 && oh > 0 && ow > 0, "resize_nearest_hw: bad arguments");
  const int ih = hw.dim(0), iw = hw.dim(1);
  if (ih == oh && iw == ow) return hw;
  Tensor out({oh, ow});
  for (int y = 0; y < oh; ++y) {
    const int sy = std::min(static_cast<int>((y + 0.5) * ih / oh), ih - 1);
    for (int x = 0; x < ow; ++x) {
      const int sx = std::min(static_cast<int>((x + 0.5) * iw / ow), iw - 1);
      out.at(y, x) = hw.at(sy, sx);
    }
  }
  return out;
}

ImageTensor standardize(const ImageTensor& raw, int size) {
  require(!raw.normalized(), "standardize: expects a raw image");
  return ImageTensor(resize_bilinear_chw(raw.values(), size, size), false);
}

SegMask standardize(const SegMask& mask, int size) {
  return SegMask(resize_bilinear_hw(mask.values(), size, size));
}

}  // namespace plcutseg::data
