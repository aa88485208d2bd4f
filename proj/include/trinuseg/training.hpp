#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "trinuseg/checkpoint.hpp"
#include "trinuseg/image.hpp"
#include "trinuseg/labels.hpp"
#include "trinuseg/losses.hpp"
#include "trinuseg/metrics.hpp"
#include "trinuseg/model.hpp"

namespace trinuseg {

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Sample {
  std::string id;
  Image image;
  InstanceMask instances;
  LabelTriplet labels;
};

struct Dataset {
  std::vector<Sample> samples;
  std::size_t size() const { return samples.size(); }
};

/// Sample i uses seed `seed * 1000003 + i`; ids are zero-padded indices.
Dataset make_synthetic_dataset(int count, int size, double cluster_probability, std::uint64_t seed);
/// Reads images/ and instances/; labels are derived from the instance ids.
Dataset load_dataset(const std::filesystem::path& root);
void save_dataset(const std::filesystem::path& root, const Dataset& dataset);

struct Split {
  std::vector<int> train;
  std::vector<int> test;
};

/// Seeded permutation; the first round(fraction * n) indices train.
Split split_dataset(int n, double train_fraction, std::uint64_t seed);

/// [batch, h, w, channels]; gray and RGB inputs are converted to `channels`.
Tensor<float> batch_images(const Dataset& data, const std::vector<int>& indices, int channels);
TargetMaps<float> batch_targets(const Dataset& data, const std::vector<int>& indices);

struct BranchMasks {
  BinaryMask nuclei;
  BinaryMask edge;
  BinaryMask cluster_edge;
};

/// Per-branch argmax for each listed sample, run in mini-batches.
std::vector<BranchMasks> predict(const Model<float>& model, const Dataset& data,
                                 const std::vector<int>& indices, int batch_size = 4);
BranchMasks predict_image(const Model<float>& model, const Image& image);

struct Evaluation {
  MetricsReport report;
  std::vector<ImageMetrics> per_image;
  std::vector<ConsistencyOverlap> overlap;
  double mean_overlap = 0;  // mean frac_overlap over non-degenerate images
  double edge_dsc = 0;      // per-image mean pixel DSC of the edge branch
  double cluster_dsc = 0;
};

Evaluation evaluate(const Model<float>& model, const Dataset& data, const std::vector<int>& indices);

struct TrainCallbacks {
  std::function<void(Model<float>&)> on_start;  // after init, before the first step
  std::function<void(const EpochRecord&)> on_epoch;
};

struct TrainResult {
  Model<float> model;
  Checkpoint checkpoint;
  Split split;
};

TrainResult train(const ModelConfig& model_config, const TrainConfig& train_config,
                  const Dataset& dataset, const TrainCallbacks& callbacks = {});

/// Synthetic set from train_config when data_dir is empty, else load_dataset.
Dataset dataset_for(const TrainConfig& train_config);

struct AblationRow {
  bool mlp = false;
  bool as = false;
  bool sd = false;
  MetricsReport report;
  double mean_overlap = 0;
  std::size_t params = 0;
  double flops = 0;
};

struct ComplexityRow {
  std::string label;
  bool mlp = false;
  bool as = false;
  ComplexityReport report;
};

/// Four MLP x AS combinations, most parameters first.
std::vector<ComplexityRow> complexity_table(const ModelConfig& base, int flops_input_size);
std::string complexity_table_text(const std::vector<ComplexityRow>& rows);

struct AblationResult {
  std::vector<AblationRow> rows;  // 8 combinations
  std::vector<ComplexityRow> complexity;
};

AblationResult run_ablation_grid(const ModelConfig& model_config, const TrainConfig& train_config,
                                 const Dataset& dataset);
std::string ablation_csv(const AblationResult& result);

}  // namespace trinuseg
