#include <array>

#include "trinuseg/model.hpp"

namespace trinuseg {
namespace {

using Count = std::size_t;

Count linear(Count in, Count out, bool bias) { return in * out + (bias ? out : 0); }
Count layer_norm(Count c) { return 2 * c; }
Count head_set(Count dim, Count heads, Count head_dim, Count window) {
  if (heads == 0) return 0;
  return linear(dim, 3 * heads * head_dim, true) + (2 * window - 1) * (2 * window - 1) * heads;
}
// Everything in a Swin block except the q/k/v head sets.
Count block_body(Count dim, Count mlp_ratio) {
  return 2 * layer_norm(dim) + linear(dim, dim, true) + linear(dim, mlp_ratio * dim, true) +
         linear(mlp_ratio * dim, dim, true);
}

double linear_flops(double tokens, double in, double out) { return 2.0 * tokens * in * out; }
double block_flops(double side, double dim, double window, double mlp_ratio) {
  const double tokens = side * side;
  const double n = window * window;
  return linear_flops(tokens, dim, 3 * dim) + linear_flops(tokens, dim, dim) +
         tokens / n * 4.0 * n * n * dim + linear_flops(tokens, dim, mlp_ratio * dim) +
         linear_flops(tokens, mlp_ratio * dim, dim);
}

const std::array<const char*, 5> kComponents = {"encoder", "bottleneck", "decoder-shared",
                                                 "decoder-private", "heads"};

}  // namespace

std::size_t shared_part_size(const ModelConfig& cfg, int level) {
  const Count width = cfg.stage_width(level);
  const Count heads = cfg.heads_per_stage[level];
  const Count window = effective_window(cfg.window_size, cfg.stage_side(level));
  return head_set(width, cfg.shared_heads(level), width / heads, window);
}

ComplexityReport analytic_parameter_count(const ModelConfig& cfg) {
  cfg.validate();
  ComplexityReport r;
  r.label = "analytic";
  for (const char* c : kComponents) r.params_by_component[c] = 0;
  const int stages = cfg.num_stages();
  const Count c0 = cfg.embed_dim;
  const Count ratio = cfg.mlp_ratio;

  Count enc = linear(Count(cfg.patch_size) * cfg.patch_size * cfg.in_channels, c0, true) +
              layer_norm(c0);
  for (int k = 0; k < stages; ++k) {
    const Count w = cfg.stage_width(k);
    const Count h = cfg.heads_per_stage[k];
    const Count win = effective_window(cfg.window_size, cfg.stage_side(k));
    enc += Count(cfg.encoder_depths[k]) * (block_body(w, ratio) + head_set(w, h, w / h, win));
    enc += layer_norm(4 * w) + linear(4 * w, 2 * w, false);
  }
  r.params_by_component["encoder"] = enc;

  const Count bw = cfg.bottleneck_width();
  Count bott = 0;
  if (cfg.bottleneck == BottleneckKind::kSwin) {
    const Count h = cfg.bottleneck_heads();
    const Count win = effective_window(cfg.window_size, cfg.bottleneck_side());
    bott = Count(cfg.bottleneck_depth) * (block_body(bw, ratio) + head_set(bw, h, bw / h, win)) +
           layer_norm(bw);
  } else {
    bott = 3 * linear(bw, bw, true) + layer_norm(bw);
  }
  r.params_by_component["bottleneck"] = bott;

  Count shared = 0;
  Count priv = 0;
  for (int k = 0; k < stages; ++k) {
    const Count w = cfg.stage_width(k);
    const Count h = cfg.heads_per_stage[k];
    const Count m = cfg.shared_heads(k);
    const Count win = effective_window(cfg.window_size, cfg.stage_side(k));
    const Count depth = cfg.decoder_depths[k];
    shared += depth * head_set(w, m, w / h, win);
    priv += kNumBranches * (linear(2 * w, 4 * w, false) + layer_norm(w) +  // upsample
                            linear(2 * w, w, true) +                      // skip fusion
                            depth * (block_body(w, ratio) + head_set(w, h - m, w / h, win)));
  }
  priv += kNumBranches * layer_norm(c0);
  r.params_by_component["decoder-shared"] = shared;
  r.params_by_component["decoder-private"] = priv;

  const Count p = cfg.patch_size;
  r.params_by_component["heads"] =
      kNumBranches * (linear(c0, p * p * c0, false) + layer_norm(c0) + linear(c0, kNumClasses, true));

  for (const auto& [_, n] : r.params_by_component) r.total_params += n;
  r.input_size = cfg.input_size;
  return r;
}

ComplexityReport estimate_flops(const ModelConfig& config, int input_size) {
  ModelConfig cfg = config;
  cfg.input_size = input_size;
  ComplexityReport r = analytic_parameter_count(cfg);
  r.label = "analytic";
  r.input_size = input_size;
  for (const char* c : kComponents) r.flops_by_component[c] = 0;
  const int stages = cfg.num_stages();
  const double c0 = cfg.embed_dim;
  const double ratio = cfg.mlp_ratio;
  auto side = [&](int k) { return double(cfg.stage_side(k)); };
  auto window = [&](int k) { return double(effective_window(cfg.window_size, cfg.stage_side(k))); };

  double enc = linear_flops(side(0) * side(0), double(cfg.patch_size) * cfg.patch_size * cfg.in_channels, c0);
  for (int k = 0; k < stages; ++k) {
    const double w = cfg.stage_width(k);
    enc += cfg.encoder_depths[k] * block_flops(side(k), w, window(k), ratio);
    enc += linear_flops(side(k + 1) * side(k + 1), 4 * w, 2 * w);
  }
  r.flops_by_component["encoder"] = enc;

  const double bw = cfg.bottleneck_width();
  const double bs = cfg.bottleneck_side();
  if (cfg.bottleneck == BottleneckKind::kSwin) {
    r.flops_by_component["bottleneck"] =
        cfg.bottleneck_depth * block_flops(bs, bw, window(stages), ratio);
  } else {
    r.flops_by_component["bottleneck"] = 3 * linear_flops(bs * bs, bw, bw);
  }

  double dec = 0;
  for (int k = 0; k < stages; ++k) {
    const double w = cfg.stage_width(k);
    dec += linear_flops(side(k + 1) * side(k + 1), 2 * w, 4 * w);
    dec += linear_flops(side(k) * side(k), 2 * w, w);
    dec += cfg.decoder_depths[k] * block_flops(side(k), w, window(k), ratio);
  }
  // Sharing changes ownership of weights, not the arithmetic.
  r.flops_by_component["decoder-private"] = kNumBranches * dec;
  const double pixels = double(input_size) * input_size;
  const double p = cfg.patch_size;
  r.flops_by_component["heads"] =
      kNumBranches * (linear_flops(side(0) * side(0), c0, p * p * c0) + linear_flops(pixels, c0, kNumClasses));
  r.flops = 0;
  for (const auto& [_, f] : r.flops_by_component) r.flops += f;
  return r;
}

}  // namespace trinuseg
