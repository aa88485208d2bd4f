#pragma once

#include <array>
#include <span>
#include <vector>

#include "trinuseg/model.hpp"
#include "trinuseg/tensor.hpp"

namespace trinuseg {

struct LossWeights {
  double gamma_n = 0.30;
  double gamma_e = 0.35;
  double gamma_c = 0.35;
  double branch_ce = 0.60;
  double branch_dice = 0.40;
};

inline constexpr double kDiceEps = 1e-5;
inline constexpr double kSobelDelta = 1e-12;

struct LossBreakdown {
  double l_n = 0;
  double l_e = 0;
  double l_c = 0;
  double l_sd = 0;
  double gamma_sd_used = 0;
  double total = 0;
};

struct LossOptions {
  bool sd_enabled = true;
  bool sd_stop_grad_nuclei = false;
  LossWeights weights{};
};

/// 1 - (2 sum(p t) + eps) / (sum p + sum t + eps). Gradients (scaled by
/// `scale`) are added into grad_probs / grad_target when non-empty.
template <typename T>
T dice_loss(std::span<const T> probs, std::span<const T> target, std::span<T> grad_probs = {},
            std::span<T> grad_target = {}, T scale = T(1));

/// Mean over rows of -log softmax(logits)[target]; logits are rows x 2.
template <typename T>
T cross_entropy_loss(const Tensor<T>& logits, std::span<const T> target,
                     Tensor<T>* grad_logits = nullptr, T scale = T(1));

/// Foreground (class 1) probability per pixel of one image's rows x 2 logits.
template <typename T>
std::vector<T> foreground_probs(std::span<const T> logits);

/// 0.60 cross-entropy + 0.40 dice on the foreground channel, one image.
template <typename T>
T branch_loss(const Tensor<T>& logits, std::span<const T> target,
              Tensor<T>* grad_logits = nullptr, T scale = T(1),
              const LossWeights& weights = {});

template <typename T>
struct SobelResult {
  std::vector<T> edges;  // rescaled magnitude in [0, 1]
  std::vector<T> gx, gy, magnitude;
  T max = 0;
  int argmax = -1;
  int height = 0, width = 0;
};

/// 3x3 Sobel magnitude with replicate padding, sqrt(gx^2 + gy^2 + delta) - sqrt(delta),
/// divided by its global max when that is positive.
template <typename T>
SobelResult<T> sobel_edge_map(std::span<const T> probs, int height, int width);

/// Gradient of the rescaled edge map w.r.t. its input probabilities.
template <typename T>
std::vector<T> sobel_backward(const SobelResult<T>& fwd, std::span<const T> grad_edges);

/// Dice between the Sobel contour of the nuclei foreground and the edge
/// foreground, one image (logits are rows x 2).
template <typename T>
T self_distillation_loss(const Tensor<T>& nuclei_logits, const Tensor<T>& edge_logits, int height,
                         int width, Tensor<T>* grad_nuclei = nullptr, Tensor<T>* grad_edge = nullptr,
                         T scale = T(1));

/// max(0.4, 1.0 - 0.3 * floor(epoch / 10)).
double gamma_sd_schedule(int epoch);

/// Per-branch binary targets, each [batch, height, width].
template <typename T>
using TargetMaps = std::array<Tensor<T>, kNumBranches>;

/// Batch-mean loss breakdown. When grads is non-null it receives dL/dlogits
/// for each branch (same shapes as pred).
template <typename T>
LossBreakdown total_loss(const TriPrediction<T>& pred, const TargetMaps<T>& targets, int epoch,
                         const LossOptions& options = {},
                         std::array<Tensor<T>, kNumBranches>* grads = nullptr);

}  // namespace trinuseg
