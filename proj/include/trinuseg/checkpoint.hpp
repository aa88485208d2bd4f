#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "trinuseg/config.hpp"
#include "trinuseg/image_io.hpp"
#include "trinuseg/losses.hpp"
#include "trinuseg/metrics.hpp"
#include "trinuseg/model.hpp"

namespace trinuseg {

struct EpochRecord {
  int epoch = 0;  // 0-based
  LossBreakdown loss;
  bool evaluated = false;
  MetricsReport eval;
};

struct NamedArray {
  std::string name;
  std::vector<int> shape;
  std::vector<float> data;
};

struct Checkpoint {
  ModelConfig model_config;
  TrainConfig train_config;
  int epoch = 0;  // epochs completed
  std::vector<EpochRecord> history;
  std::vector<NamedArray> weights;
};

/// Binary layout documented in docs/checkpoint_format.md.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::vector<NamedArray> export_weights(const Model<float>& model);
/// Copies weights by name; names and shapes must match the model exactly.
void import_weights(Model<float>& model, const std::vector<NamedArray>& weights);
Model<float> model_from_checkpoint(const Checkpoint& ckpt);

/// epoch,l_n,l_e,l_c,l_sd,gamma_sd,total,dsc,f1,acc,iou,ercnt
std::string history_csv(const std::vector<EpochRecord>& history);

}  // namespace trinuseg
