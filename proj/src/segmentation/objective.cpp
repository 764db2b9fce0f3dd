#include "plcutseg/segmentation/objective.hpp"

#include <map>

namespace plcutseg::segmentation {

using tensor::Tensor;
using tensor::Var;

SegObjective segmentation_objective(SegmentationBackbone& U, const Var& images,
                                    const data::TrainingBatch& batch, double eps) {
  const auto& entries = batch.entries;
  require(!entries.empty(), "segmentation_objective: empty batch");
  const auto& shape = images->value.shape();
  require(shape.size() == 4 && shape[0] == entries.size() && shape[1] == 3,
          "segmentation_objective: images must be [B,3,H,W] with one row per entry");

  Var preds = U.forward(images);

  std::vector<Var> losses;
  std::vector<double> weights;
  // tag -> (sum of entry losses, count); used for the term breakdown only.
  std::map<data::DomainTag, std::pair<double, int>> by_tag;
  int contributing = 0;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    if (!e.validity.any()) continue;  // sentinel entry, excluded from the mean
    Var pred = tensor::select_row(preds, i);
    Var l = tensor::masked_dice(pred, e.target.values(), e.validity.values(), eps);
    losses.push_back(l);
    ++contributing;
    auto& acc = by_tag[e.tag];
    acc.first += l->value.item();
    acc.second += 1;
  }
  require(contributing > 0, "segmentation_objective: every entry in the batch is all-invalid");

  weights.assign(losses.size(), 1.0 / static_cast<double>(contributing));
  Var loss = tensor::weighted_sum(losses, weights);

  std::vector<core::LossTerm> terms;
  for (const auto& [tag, acc] : by_tag) {
    double sub_mean = acc.first / static_cast<double>(acc.second);
    double w = static_cast<double>(acc.second) / static_cast<double>(contributing);
    terms.push_back({std::string("dice_") + data::domain_tag_name(tag), w, sub_mean});
  }
  return {loss, core::LossValue(loss->value.item(), std::move(terms)), contributing};
}

SegObjective segmentation_objective(SegmentationBackbone& U,
                                    const data::TrainingBatch& batch, double eps) {
  require(!batch.entries.empty(), "segmentation_objective: empty batch");
  std::vector<Var> rows;
  rows.reserve(batch.entries.size());
  for (const auto& e : batch.entries) {
    require(e.image.normalized(), "segmentation_objective: entry images must be normalized");
    rows.push_back(tensor::constant(e.image.values()));
  }
  return segmentation_objective(U, tensor::stack_rows(rows), batch, eps);
}

}  // namespace plcutseg::segmentation
