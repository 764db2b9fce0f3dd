#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "plcutseg/tensor/tensor.hpp"

namespace plcutseg::trainer {

struct OptimizerState {
  std::string name;
  long long step_count = 0;
  std::vector<tensor::Tensor> m;  // first moments, one per parameter
  std::vector<tensor::Tensor> v;  // second moments
};

/// Everything needed to resume a run without the original config file.
/// Parameter values round-trip bit-identically (raw doubles on disk).
struct CheckpointState {
  nlohmann::json config;
  int epoch = 0;           // completed epochs
  double best_mdice = -1.0;
  std::vector<std::pair<std::string, tensor::Tensor>> groups;  // named parameters, G/D/H/U order
  std::vector<OptimizerState> optimizers;
  int pl_version = 0;
  int pl_h = 0, pl_w = 0;
  std::vector<std::pair<std::string, tensor::Tensor>> pseudo_labels;  // sample id -> soft mask
};

void save_checkpoint(const std::filesystem::path& file, const CheckpointState& state);
CheckpointState load_checkpoint(const std::filesystem::path& file);

}  // namespace plcutseg::trainer
