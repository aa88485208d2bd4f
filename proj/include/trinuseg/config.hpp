#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace trinuseg {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class BottleneckKind { kTokenMlp, kSwin };

std::string to_string(BottleneckKind kind);
BottleneckKind parse_bottleneck(const std::string& text);

inline constexpr int kNumBranches = 3;
inline constexpr int kNumClasses = 2;

struct ModelConfig {
  int input_size = 128;
  int in_channels = 1;
  int patch_size = 4;
  int embed_dim = 96;
  std::vector<int> encoder_depths{2, 2, 2};
  std::vector<int> decoder_depths{2, 2, 2};
  std::vector<int> heads_per_stage{3, 6, 12};
  int window_size = 7;
  double shared_head_fraction = 0.5;
  BottleneckKind bottleneck = BottleneckKind::kTokenMlp;
  bool attention_sharing = true;

  // Backbone details with SwinUNet-tiny defaults.
  int mlp_ratio = 4;
  int bottleneck_depth = 2;
  int shift_groups = 5;
  unsigned long long seed = 0;

  int num_stages() const { return int(encoder_depths.size()); }
  int stage_width(int stage) const { return embed_dim << stage; }
  int stage_side(int stage) const { return input_size / patch_size >> stage; }
  int bottleneck_width() const { return stage_width(num_stages()); }
  int bottleneck_heads() const { return 2 * heads_per_stage.back(); }
  int bottleneck_side() const { return stage_side(num_stages()); }
  /// Heads shared across decoders at a decoder stage (m); 0 without sharing.
  int shared_heads(int stage) const;

  /// Throws ConfigError naming the first violated constraint.
  void validate() const;
};

/// Window actually used on a feature map of the given side: the configured
/// size when it divides the side, otherwise the largest divisor below it.
/// Maps no larger than the window get one window and no shift.
int effective_window(int configured, int side);
int effective_shift(int configured, int side);

struct TrainConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  int batch_size = 4;
  int epochs = 200;
  unsigned long long seed = 0;
  bool sd_enabled = true;
  bool sd_stop_grad_nuclei = false;
  int eval_every = 0;  // 0 disables periodic held-out evaluation
  double train_fraction = 0.8;
  std::string data_dir;
  // Used when data_dir is empty.
  int synthetic_count = 8;
  int synthetic_size = 128;
  double cluster_probability = 0.5;

  void validate() const;
};

/// Flat `key = value` file; `#` starts a comment. Lists are comma separated,
/// optionally bracketed.
using KeyValues = std::map<std::string, std::string>;
KeyValues parse_key_values(const std::string& text);
KeyValues read_key_values_file(const std::string& path);

/// Applies recognized keys; unknown keys throw ConfigError.
void apply_config(const KeyValues& kv, ModelConfig& model, TrainConfig& train);

std::string to_key_values(const ModelConfig& model);
std::string to_key_values(const TrainConfig& train);

}  // namespace trinuseg
