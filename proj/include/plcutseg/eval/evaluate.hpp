#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "plcutseg/data/augment.hpp"
#include "plcutseg/data/ingest.hpp"
#include "plcutseg/segmentation/backbone.hpp"

namespace plcutseg::eval {

struct BenchmarkResult {
  std::string dataset;
  int count = 0;
  double mdice = 0.0;
  double iou = 0.0;
  std::vector<double> per_sample_dice;
  std::vector<double> per_sample_iou;
};

/// Builds the result from per-sample lists; means are computed here so the
/// aggregate always equals the list mean.
BenchmarkResult make_result(std::string dataset, std::vector<double> dice, std::vector<double> iou);

/// Deterministic evaluation: resize each image to source_size, predict,
/// resize the prediction back to the ground-truth dims (nearest-neighbor,
/// the GT is never resampled), binarize at 0.5, score. Every ref needs a mask.
BenchmarkResult evaluate_model(segmentation::SegmentationBackbone& U,
                               const std::vector<data::SampleRef>& refs,
                               const data::AugmentationConfig& aug,
                               const std::string& dataset_name);

/// Scores a folder of dumped prediction masks against ground truth by
/// matching file stems. Unmatched stems on either side are an error.
BenchmarkResult score_folders(const std::filesystem::path& pred_dir,
                              const std::filesystem::path& gt_dir);

}  // namespace plcutseg::eval
