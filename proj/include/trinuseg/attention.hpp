#pragma once

#include <array>
#include <memory>
#include <vector>

#include "trinuseg/config.hpp"
#include "trinuseg/layers.hpp"

namespace trinuseg {

/// q/k/v projections and relative-position bias for a contiguous run of heads.
template <typename T>
struct HeadSet {
  HeadSet() = default;
  HeadSet(Initializer& init, const std::string& name, int dim, int heads,
          int head_dim, int window, Component component);

  int heads = 0;
  int head_dim = 0;
  int window = 0;
  Linear<T> qkv;               // dim -> 3 * heads * head_dim, layout [q | k | v]
  ParamPtr<T> relative_bias;   // [(2w-1)^2, heads]

  bool empty() const { return heads == 0; }
  void collect(ParamList<T>& out) const;
  std::size_t parameter_count() const;
};

template <typename T>
struct AttentionCache {
  LinearCache<T> shared_qkv;
  LinearCache<T> private_qkv;
  LinearCache<T> projection;
  Tensor<T> shared_out;   // qkv activations
  Tensor<T> private_out;
  std::vector<T> probs;   // [batch, window, head, n, n]
};

/// Windowed multi-head self-attention over [batch, height, width, dim].
/// Heads 0..m-1 read the (possibly globally shared) head set, heads m.. the
/// private one; the concatenation is projected by a private output matrix.
template <typename T>
class WindowAttention {
 public:
  WindowAttention() = default;
  WindowAttention(std::shared_ptr<HeadSet<T>> shared,
                  std::shared_ptr<HeadSet<T>> priv,
                  std::shared_ptr<Linear<T>> projection, int dim, int window,
                  int shift);

  Tensor<T> forward(const Tensor<T>& x, AttentionCache<T>* cache) const;
  Tensor<T> backward(const Tensor<T>& dy, const AttentionCache<T>& cache);
  void collect(ParamList<T>& out) const;

  int dim() const { return dim_; }
  int window() const { return window_; }
  int shift() const { return shift_; }
  int total_heads() const;
  /// Multiply-accumulate x2 for one image of the given side.
  std::size_t flops(int side) const;

  const std::shared_ptr<HeadSet<T>>& shared_heads() const { return shared_; }
  const std::shared_ptr<HeadSet<T>>& private_heads() const { return private_; }
  const std::shared_ptr<Linear<T>>& projection() const { return projection_; }

 private:
  struct Geometry;
  void check_input(const Tensor<T>& x) const;

  std::shared_ptr<HeadSet<T>> shared_;
  std::shared_ptr<HeadSet<T>> private_;
  std::shared_ptr<Linear<T>> projection_;
  int dim_ = 0;
  int window_ = 0;
  int shift_ = 0;
};

/// Attention weights at one (decoder stage, block index) position: a single
/// shared head set referenced by all decoders and per-decoder private heads
/// and output projections.
template <typename T>
struct SharedAttentionGroup {
  SharedAttentionGroup() = default;
  SharedAttentionGroup(Initializer& init, const std::string& name, int dim,
                       int heads, int shared_heads, int window, int shift);

  std::shared_ptr<HeadSet<T>> shared;
  std::array<std::shared_ptr<HeadSet<T>>, kNumBranches> private_heads;
  std::array<std::shared_ptr<Linear<T>>, kNumBranches> projection;
  int dim = 0;
  int window = 0;
  int shift = 0;

  WindowAttention<T> view(int decoder_id) const;
};

template <typename T>
Tensor<T> shared_window_attention(const Tensor<T>& z, const SharedAttentionGroup<T>& group,
                                  int decoder_id, AttentionCache<T>* cache = nullptr);

template <typename T>
struct SwinBlockCache {
  LayerNormCache<T> norm1;
  AttentionCache<T> attn;
  LayerNormCache<T> norm2;
  LinearCache<T> fc1;
  Tensor<T> hidden;  // pre-activation of the feed-forward
  LinearCache<T> fc2;
};

/// Pre-norm transformer block: x + attn(LN(x)), then x + MLP(LN(x)).
template <typename T>
class SwinBlock {
 public:
  SwinBlock() = default;
  SwinBlock(Initializer& init, const std::string& name, WindowAttention<T> attn,
            int mlp_ratio, Component component);

  Tensor<T> forward(const Tensor<T>& x, SwinBlockCache<T>* cache) const;
  Tensor<T> backward(const Tensor<T>& dy, const SwinBlockCache<T>& cache);
  void collect(ParamList<T>& out) const;
  std::size_t flops(int side) const;

  WindowAttention<T>& attention() { return attn_; }
  const WindowAttention<T>& attention() const { return attn_; }

 private:
  LayerNorm<T> norm1_;
  WindowAttention<T> attn_;
  LayerNorm<T> norm2_;
  Linear<T> fc1_;
  Linear<T> fc2_;
};

}  // namespace trinuseg
