#include "plcutseg/eval/evaluate.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <sstream>

#include "plcutseg/core/ops.hpp"
#include "plcutseg/data/image_io.hpp"

namespace plcutseg::eval {

namespace fs = std::filesystem;
using core::SegMask;

BenchmarkResult make_result(std::string dataset, std::vector<double> dice, std::vector<double> iou) {
  require(dice.size() == iou.size(), "per-sample score lists must have equal length");
  require(!dice.empty(), "cannot aggregate an empty result: " + dataset);
  BenchmarkResult r;
  r.dataset = std::move(dataset);
  r.count = static_cast<int>(dice.size());
  r.mdice = std::accumulate(dice.begin(), dice.end(), 0.0) / static_cast<double>(dice.size());
  r.iou = std::accumulate(iou.begin(), iou.end(), 0.0) / static_cast<double>(iou.size());
  r.per_sample_dice = std::move(dice);
  r.per_sample_iou = std::move(iou);
  return r;
}

namespace {

SegMask resize_mask_nearest(const SegMask& m, int oh, int ow) {
  if (m.h() == oh && m.w() == ow) return m;
  return SegMask(data::resize_nearest_hw(m.values(), oh, ow));
}

}  // namespace

BenchmarkResult evaluate_model(segmentation::SegmentationBackbone& U,
                               const std::vector<data::SampleRef>& refs,
                               const data::AugmentationConfig& aug,
                               const std::string& dataset_name) {
  require(!refs.empty(), "evaluate_model: empty test set: " + dataset_name);
  const int size = aug.source_size;
  require(size % U.stride_requirement() == 0,
          "source_size must be divisible by the backbone stride");
  std::vector<double> dices, ious;
  dices.reserve(refs.size());
  ious.reserve(refs.size());
  for (const auto& ref : refs) {
    require(ref.has_mask(), "evaluate_model: test sample has no ground-truth mask: " + ref.id);
    core::ImageTensor img = data::standardize(data::load_image(ref), size).normalize();
    SegMask pred = segmentation::predict(U, img);
    SegMask gt = data::load_mask(ref);
    pred = resize_mask_nearest(pred, gt.h(), gt.w());
    dices.push_back(core::dice_score(pred, gt));
    ious.push_back(core::iou(pred, gt));
  }
  return make_result(dataset_name, std::move(dices), std::move(ious));
}

BenchmarkResult score_folders(const fs::path& pred_dir, const fs::path& gt_dir) {
  auto collect = [](const fs::path& dir) {
    expect(fs::is_directory(dir), "not a directory: " + dir.string());
    std::map<std::string, fs::path> by_stem;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (!entry.is_regular_file()) continue;
      const auto ext = entry.path().extension().string();
      if (ext != ".png" && ext != ".jpg" && ext != ".jpeg" && ext != ".bmp") continue;
      expect(by_stem.emplace(entry.path().stem().string(), entry.path()).second,
             "duplicate stem in " + dir.string() + ": " + entry.path().stem().string());
    }
    return by_stem;
  };
  const auto preds = collect(pred_dir);
  const auto gts = collect(gt_dir);

  std::vector<std::string> only_pred, only_gt;
  for (const auto& [stem, _] : preds)
    if (!gts.count(stem)) only_pred.push_back(stem);
  for (const auto& [stem, _] : gts)
    if (!preds.count(stem)) only_gt.push_back(stem);
  if (!only_pred.empty() || !only_gt.empty()) {
    std::ostringstream msg;
    msg << "score_folders: unmatched filenames.";
    if (!only_pred.empty()) {
      msg << " Prediction-only:";
      for (const auto& s : only_pred) msg << ' ' << s;
      msg << '.';
    }
    if (!only_gt.empty()) {
      msg << " Ground-truth-only:";
      for (const auto& s : only_gt) msg << ' ' << s;
      msg << '.';
    }
    throw RuntimeError(msg.str());
  }
  expect(!preds.empty(), "score_folders: no mask files found");

  std::vector<double> dices, ious;
  for (const auto& [stem, ppath] : preds) {
    SegMask pred = data::read_mask_file(ppath);
    SegMask gt = data::read_mask_file(gts.at(stem));
    pred = resize_mask_nearest(pred, gt.h(), gt.w());
    dices.push_back(core::dice_score(pred, gt));
    ious.push_back(core::iou(pred, gt));
  }
  return make_result(pred_dir.filename().string(), std::move(dices), std::move(ious));
}

}  // namespace plcutseg::eval
