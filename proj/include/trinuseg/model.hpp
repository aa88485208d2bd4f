#pragma once

#include <array>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "trinuseg/attention.hpp"
#include "trinuseg/config.hpp"
#include "trinuseg/layers.hpp"

namespace trinuseg {

enum Branch : int { kNuclei = 0, kEdge = 1, kCluster = 2 };

const char* branch_name(int branch);

/// Per-branch logits, each [batch, height, width, 2] at input resolution.
template <typename T>
struct TriPrediction {
  std::array<Tensor<T>, kNumBranches> logits;

  Tensor<T>& nuclei() { return logits[kNuclei]; }
  Tensor<T>& edge() { return logits[kEdge]; }
  Tensor<T>& cluster() { return logits[kCluster]; }
  const Tensor<T>& nuclei() const { return logits[kNuclei]; }
  const Tensor<T>& edge() const { return logits[kEdge]; }
  const Tensor<T>& cluster() const { return logits[kCluster]; }
};

/// Two-class softmax over the last axis.
template <typename T>
Tensor<T> softmax_classes(const Tensor<T>& logits);

template <typename T>
struct PatchEmbedCache {
  LinearCache<T> proj;
  LayerNormCache<T> norm;
};

/// Non-overlapping p x p patches -> linear embedding -> LayerNorm.
template <typename T>
class PatchEmbed {
 public:
  PatchEmbed() = default;
  PatchEmbed(Initializer& init, int patch, int in_channels, int dim);
  Tensor<T> forward(const Tensor<T>& images, PatchEmbedCache<T>* cache) const;
  void backward(const Tensor<T>& dy, const PatchEmbedCache<T>& cache);
  void collect(ParamList<T>& out) const;

 private:
  int patch_ = 0;
  int in_channels_ = 0;
  Linear<T> proj_;
  LayerNorm<T> norm_;
};

template <typename T>
struct PatchMergingCache {
  LayerNormCache<T> norm;
  LinearCache<T> reduce;
};

/// 2x2 neighborhood gather -> LayerNorm(4C) -> Linear(4C, 2C).
template <typename T>
class PatchMerging {
 public:
  PatchMerging() = default;
  PatchMerging(Initializer& init, const std::string& name, int dim);
  Tensor<T> forward(const Tensor<T>& x, PatchMergingCache<T>* cache) const;
  Tensor<T> backward(const Tensor<T>& dy, const PatchMergingCache<T>& cache);
  void collect(ParamList<T>& out) const;

 private:
  LayerNorm<T> norm_;
  Linear<T> reduce_;
};

template <typename T>
struct PatchExpandCache {
  LinearCache<T> expand;
  LayerNormCache<T> norm;
};

/// Linear(C, f^2 C_out) -> pixel shuffle by f -> LayerNorm(C_out).
template <typename T>
class PatchExpand {
 public:
  PatchExpand() = default;
  PatchExpand(Initializer& init, const std::string& name, int factor, int in_dim,
              int out_dim, Component component);
  Tensor<T> forward(const Tensor<T>& x, PatchExpandCache<T>* cache) const;
  Tensor<T> backward(const Tensor<T>& dy, const PatchExpandCache<T>& cache);
  void collect(ParamList<T>& out) const;

 private:
  int factor_ = 0;
  int out_dim_ = 0;
  Linear<T> expand_;
  LayerNorm<T> norm_;
};

template <typename T>
struct TokenMlpCache {
  LinearCache<T> mix_width;
  Tensor<T> pre_width;
  LinearCache<T> mix_height;
  Tensor<T> pre_height;
  LayerNormCache<T> norm;
  LinearCache<T> reproject;
};

/// Axial-shift token MLP: channel groups are rolled along width, mixed and
/// activated, rolled along height, mixed and activated, normalized, then
/// reprojected and added back to the input.
template <typename T>
class TokenMlpBottleneck {
 public:
  TokenMlpBottleneck() = default;
  TokenMlpBottleneck(Initializer& init, const std::string& name, int dim, int groups);
  Tensor<T> forward(const Tensor<T>& x, TokenMlpCache<T>* cache) const;
  Tensor<T> backward(const Tensor<T>& dy, const TokenMlpCache<T>& cache);
  void collect(ParamList<T>& out) const;
  std::size_t flops(int side) const;

  Linear<T>& mix_width() { return mix_width_; }
  Linear<T>& mix_height() { return mix_height_; }
  Linear<T>& reproject() { return reproject_; }

  /// Roll of channel group g by g - groups/2 along axis 2 (width) or 1 (height);
  /// sign -1 applies the inverse roll.
  static Tensor<T> shift(const Tensor<T>& x, int axis, int groups, int sign);

 private:
  int dim_ = 0;
  int groups_ = 0;
  Linear<T> mix_width_;
  Linear<T> mix_height_;
  LayerNorm<T> norm_;
  Linear<T> reproject_;
};

template <typename T>
struct DecoderCache {
  std::vector<PatchExpandCache<T>> expand;
  std::vector<LinearCache<T>> fuse;
  std::vector<std::vector<SwinBlockCache<T>>> blocks;
  LayerNormCache<T> norm;
  PatchExpandCache<T> final_expand;
  LinearCache<T> head;
};

template <typename T>
struct ModelCache {
  PatchEmbedCache<T> embed;
  std::vector<std::vector<SwinBlockCache<T>>> encoder_blocks;
  std::vector<PatchMergingCache<T>> merges;
  std::vector<SwinBlockCache<T>> bottleneck_blocks;
  LayerNormCache<T> bottleneck_norm;
  TokenMlpCache<T> token_mlp;
  std::array<DecoderCache<T>, kNumBranches> decoders;
  std::vector<std::vector<int>> skip_shapes;
  std::vector<int> bottom_shape;
};

template <typename T>
class Model;

/// One output path: patch expansion + skip fusion + Swin blocks per level,
/// then x4 expansion and a 2-class head.
template <typename T>
class Decoder {
 public:
  Decoder() = default;
  Decoder(Initializer& init, const ModelConfig& config, int branch,
          const std::vector<std::vector<SharedAttentionGroup<T>>>& groups);

  Tensor<T> forward(const Tensor<T>& bottom, const std::vector<Tensor<T>>& skips,
                    DecoderCache<T>* cache) const;
  /// Returns dL/d(bottom); adds skip gradients into skip_grads.
  Tensor<T> backward(const Tensor<T>& dlogits, const DecoderCache<T>& cache,
                     std::vector<Tensor<T>>& skip_grads);
  void collect(ParamList<T>& out) const;

 private:
  int stages_ = 0;
  std::vector<PatchExpand<T>> expand_;   // indexed by level
  std::vector<Linear<T>> fuse_;
  std::vector<std::vector<SwinBlock<T>>> blocks_;
  LayerNorm<T> norm_;
  PatchExpand<T> final_expand_;
  Linear<T> head_;
};

template <typename T>
struct NamedParam {
  std::string name;
  ParamPtr<T> param;
};

template <typename T>
class Model {
 public:
  /// Validates the config and initializes weights from config.seed.
  explicit Model(const ModelConfig& config);
  Model(Model&&) noexcept = default;
  Model& operator=(Model&&) noexcept = default;

  const ModelConfig& config() const { return config_; }

  /// images: [batch, input_size, input_size, in_channels].
  TriPrediction<T> forward(const Tensor<T>& images, ModelCache<T>* cache = nullptr) const;
  /// Accumulates parameter gradients from per-branch logit gradients.
  void backward(const std::array<Tensor<T>, kNumBranches>& dlogits, const ModelCache<T>& cache);

  /// Distinct parameters (shared arrays appear once), in construction order.
  const std::vector<NamedParam<T>>& parameters() const { return params_; }
  ParamPtr<T> find(const std::string& name) const;
  void zero_grad();

  const SharedAttentionGroup<T>& decoder_group(int level, int block) const {
    return groups_.at(level).at(block);
  }
  TokenMlpBottleneck<T>* token_mlp() { return token_mlp_.get(); }

 private:
  ModelConfig config_;
  PatchEmbed<T> embed_;
  std::vector<std::vector<SwinBlock<T>>> encoder_blocks_;
  std::vector<PatchMerging<T>> merges_;
  std::vector<SwinBlock<T>> bottleneck_blocks_;
  LayerNorm<T> bottleneck_norm_;
  std::unique_ptr<TokenMlpBottleneck<T>> token_mlp_;
  std::vector<std::vector<SharedAttentionGroup<T>>> groups_;
  std::array<Decoder<T>, kNumBranches> decoders_;
  std::vector<NamedParam<T>> params_;
};

template <typename T>
Model<T> build_model(const ModelConfig& config) {
  return Model<T>(config);
}

struct ComplexityReport {
  std::string label;
  std::size_t total_params = 0;
  std::map<std::string, std::size_t> params_by_component;
  int input_size = 0;  // resolution the FLOPs refer to
  double flops = 0;    // 2 x multiply-accumulates, one forward pass, batch 1
  std::map<std::string, double> flops_by_component;
};

/// Counts distinct learnable scalars by walking the model's parameter arrays.
template <typename T>
ComplexityReport count_parameters(const Model<T>& model);

/// Closed-form parameter count from layer dimensions.
ComplexityReport analytic_parameter_count(const ModelConfig& config);

/// Analytic forward FLOPs at the given input size, with parameter totals.
ComplexityReport estimate_flops(const ModelConfig& config, int input_size);

template <typename T>
ComplexityReport estimate_flops(const Model<T>& model, int input_size) {
  return estimate_flops(model.config(), input_size);
}

/// Analytic parameter count of one shared head set (what AS saves twice).
std::size_t shared_part_size(const ModelConfig& config, int level);

}  // namespace trinuseg
