#include "trinuseg/model.hpp"

#include <cmath>
#include <unordered_set>

namespace trinuseg {

const char* branch_name(int branch) {
  static const char* kNames[kNumBranches] = {"nuclei", "edge", "cluster"};
  return kNames[branch];
}

template <typename T>
Tensor<T> softmax_classes(const Tensor<T>& logits) {
  if (logits.cols() != kNumClasses) {
    throw ShapeError("softmax_classes: expected 2 classes, got shape " + shape_string(logits.shape));
  }
  Tensor<T> out(logits.shape);
  for (int r = 0; r < logits.rows(); ++r) {
    const T a = logits.data[2 * std::size_t(r)];
    const T b = logits.data[2 * std::size_t(r) + 1];
    const T mx = std::max(a, b);
    const T ea = std::exp(a - mx);
    const T eb = std::exp(b - mx);
    out.data[2 * std::size_t(r)] = ea / (ea + eb);
    out.data[2 * std::size_t(r) + 1] = eb / (ea + eb);
  }
  return out;
}

// ---------------------------------------------------------------- PatchEmbed

template <typename T>
PatchEmbed<T>::PatchEmbed(Initializer& init, int patch, int in_channels, int dim)
    : patch_(patch), in_channels_(in_channels) {
  proj_ = Linear<T>(init, "encoder.patch_embed.proj", patch * patch * in_channels, dim, true,
                    Component::kEncoder);
  norm_ = LayerNorm<T>(init, "encoder.patch_embed.norm", dim, Component::kEncoder);
}

template <typename T>
Tensor<T> PatchEmbed<T>::forward(const Tensor<T>& images, PatchEmbedCache<T>* cache) const {
  const int b = images.dim(0), h = images.dim(1), w = images.dim(2), c = images.dim(3);
  const int p = patch_;
  const int oh = h / p, ow = w / p;
  Tensor<T> patches({b, oh, ow, p * p * c});
  T* dst = patches.ptr();
  for (int n = 0; n < b; ++n) {
    for (int i = 0; i < oh; ++i) {
      for (int j = 0; j < ow; ++j) {
        for (int dy = 0; dy < p; ++dy) {
          const T* src = images.ptr() + ((std::size_t(n) * h + i * p + dy) * w + j * p) * c;
          dst = std::copy_n(src, std::size_t(p) * c, dst);
        }
      }
    }
  }
  Tensor<T> x = proj_.forward(patches, cache ? &cache->proj : nullptr);
  return norm_.forward(x, cache ? &cache->norm : nullptr);
}

template <typename T>
void PatchEmbed<T>::backward(const Tensor<T>& dy, const PatchEmbedCache<T>& cache) {
  Tensor<T> d = norm_.backward(dy, cache.norm);
  proj_.backward(d, cache.proj, false);
}

template <typename T>
void PatchEmbed<T>::collect(ParamList<T>& out) const {
  proj_.collect(out);
  norm_.collect(out);
}

// -------------------------------------------------------------- PatchMerging

template <typename T>
PatchMerging<T>::PatchMerging(Initializer& init, const std::string& name, int dim) {
  norm_ = LayerNorm<T>(init, name + ".norm", 4 * dim, Component::kEncoder);
  reduce_ = Linear<T>(init, name + ".reduction", 4 * dim, 2 * dim, false, Component::kEncoder);
}

namespace {

// Swin order: (0,0), (1,0), (0,1), (1,1) as (row, col) offsets.
constexpr int kMergeDy[4] = {0, 1, 0, 1};
constexpr int kMergeDx[4] = {0, 0, 1, 1};

}  // namespace

template <typename T>
Tensor<T> PatchMerging<T>::forward(const Tensor<T>& x, PatchMergingCache<T>* cache) const {
  const int b = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
  Tensor<T> g({b, h / 2, w / 2, 4 * c});
  for (int n = 0; n < b; ++n) {
    for (int i = 0; i < h / 2; ++i) {
      for (int j = 0; j < w / 2; ++j) {
        T* dst = g.ptr() + ((std::size_t(n) * (h / 2) + i) * (w / 2) + j) * 4 * c;
        for (int q = 0; q < 4; ++q) {
          const T* src = x.ptr() + ((std::size_t(n) * h + 2 * i + kMergeDy[q]) * w + 2 * j + kMergeDx[q]) * c;
          std::copy_n(src, c, dst + q * c);
        }
      }
    }
  }
  Tensor<T> nrm = norm_.forward(g, cache ? &cache->norm : nullptr);
  return reduce_.forward(nrm, cache ? &cache->reduce : nullptr);
}

template <typename T>
Tensor<T> PatchMerging<T>::backward(const Tensor<T>& dy, const PatchMergingCache<T>& cache) {
  Tensor<T> dn = reduce_.backward(dy, cache.reduce);
  Tensor<T> dg = norm_.backward(dn, cache.norm);
  const int b = dg.dim(0), h2 = dg.dim(1), w2 = dg.dim(2), c = dg.dim(3) / 4;
  const int h = 2 * h2, w = 2 * w2;
  Tensor<T> dx({b, h, w, c});
  for (int n = 0; n < b; ++n) {
    for (int i = 0; i < h2; ++i) {
      for (int j = 0; j < w2; ++j) {
        const T* src = dg.ptr() + ((std::size_t(n) * h2 + i) * w2 + j) * 4 * c;
        for (int q = 0; q < 4; ++q) {
          T* dst = dx.ptr() + ((std::size_t(n) * h + 2 * i + kMergeDy[q]) * w + 2 * j + kMergeDx[q]) * c;
          std::copy_n(src + q * c, c, dst);
        }
      }
    }
  }
  return dx;
}

template <typename T>
void PatchMerging<T>::collect(ParamList<T>& out) const {
  norm_.collect(out);
  reduce_.collect(out);
}

// --------------------------------------------------------------- PatchExpand

template <typename T>
PatchExpand<T>::PatchExpand(Initializer& init, const std::string& name, int factor,
                            int in_dim, int out_dim, Component component)
    : factor_(factor), out_dim_(out_dim) {
  expand_ = Linear<T>(init, name + ".expand", in_dim, factor * factor * out_dim, false, component);
  norm_ = LayerNorm<T>(init, name + ".norm", out_dim, component);
}

template <typename T>
Tensor<T> PatchExpand<T>::forward(const Tensor<T>& x, PatchExpandCache<T>* cache) const {
  Tensor<T> y = expand_.forward(x, cache ? &cache->expand : nullptr);
  const int b = x.dim(0), h = x.dim(1), w = x.dim(2), f = factor_, c = out_dim_;
  Tensor<T> z({b, h * f, w * f, c});
  for (int n = 0; n < b; ++n) {
    for (int i = 0; i < h; ++i) {
      for (int j = 0; j < w; ++j) {
        const T* src = y.ptr() + ((std::size_t(n) * h + i) * w + j) * f * f * c;
        for (int p1 = 0; p1 < f; ++p1) {
          for (int p2 = 0; p2 < f; ++p2) {
            T* dst = z.ptr() + ((std::size_t(n) * h * f + i * f + p1) * w * f + j * f + p2) * c;
            std::copy_n(src + (p1 * f + p2) * c, c, dst);
          }
        }
      }
    }
  }
  return norm_.forward(z, cache ? &cache->norm : nullptr);
}

template <typename T>
Tensor<T> PatchExpand<T>::backward(const Tensor<T>& dy, const PatchExpandCache<T>& cache) {
  Tensor<T> dz = norm_.backward(dy, cache.norm);
  const int f = factor_, c = out_dim_;
  const int b = dz.dim(0), h = dz.dim(1) / f, w = dz.dim(2) / f;
  Tensor<T> dyl({b, h, w, f * f * c});
  for (int n = 0; n < b; ++n) {
    for (int i = 0; i < h; ++i) {
      for (int j = 0; j < w; ++j) {
        T* dst = dyl.ptr() + ((std::size_t(n) * h + i) * w + j) * f * f * c;
        for (int p1 = 0; p1 < f; ++p1) {
          for (int p2 = 0; p2 < f; ++p2) {
            const T* src = dz.ptr() + ((std::size_t(n) * h * f + i * f + p1) * w * f + j * f + p2) * c;
            std::copy_n(src, c, dst + (p1 * f + p2) * c);
          }
        }
      }
    }
  }
  return expand_.backward(dyl, cache.expand);
}

template <typename T>
void PatchExpand<T>::collect(ParamList<T>& out) const {
  expand_.collect(out);
  norm_.collect(out);
}

// -------------------------------------------------------- TokenMlpBottleneck

template <typename T>
TokenMlpBottleneck<T>::TokenMlpBottleneck(Initializer& init, const std::string& name, int dim,
                                          int groups)
    : dim_(dim), groups_(groups) {
  mix_width_ = Linear<T>(init, name + ".mix_width", dim, dim, true, Component::kBottleneck);
  mix_height_ = Linear<T>(init, name + ".mix_height", dim, dim, true, Component::kBottleneck);
  norm_ = LayerNorm<T>(init, name + ".norm", dim, Component::kBottleneck);
  reproject_ = Linear<T>(init, name + ".reproject", dim, dim, true, Component::kBottleneck);
}

template <typename T>
Tensor<T> TokenMlpBottleneck<T>::shift(const Tensor<T>& x, int axis, int groups, int sign) {
  const int b = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
  const int chunk = (c + groups - 1) / groups;
  Tensor<T> out(x.shape);
  for (int g = 0; g < groups; ++g) {
    const int c0 = g * chunk;
    const int c1 = std::min(c, c0 + chunk);
    if (c0 >= c1) continue;
    const int offset = sign * (g - groups / 2);
    for (int n = 0; n < b; ++n) {
      for (int i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j) {
          int si = i, sj = j;
          if (axis == 2) {
            sj = ((j - offset) % w + w) % w;
          } else {
            si = ((i - offset) % h + h) % h;
          }
          const T* src = x.ptr() + ((std::size_t(n) * h + si) * w + sj) * c;
          T* dst = out.ptr() + ((std::size_t(n) * h + i) * w + j) * c;
          std::copy(src + c0, src + c1, dst + c0);
        }
      }
    }
  }
  return out;
}

template <typename T>
Tensor<T> TokenMlpBottleneck<T>::forward(const Tensor<T>& x, TokenMlpCache<T>* cache) const {
  if (x.shape.size() != 4 || x.cols() != dim_) {
    throw ShapeError("token MLP bottleneck: expected [batch, h, w, " + std::to_string(dim_) +
                     "], got " + shape_string(x.shape));
  }
  Tensor<T> a1 = mix_width_.forward(shift(x, 2, groups_, 1), cache ? &cache->mix_width : nullptr);
  Tensor<T> g1 = gelu_forward(a1);
  Tensor<T> a2 = mix_height_.forward(shift(g1, 1, groups_, 1), cache ? &cache->mix_height : nullptr);
  Tensor<T> g2 = gelu_forward(a2);
  Tensor<T> n = norm_.forward(g2, cache ? &cache->norm : nullptr);
  Tensor<T> out = reproject_.forward(n, cache ? &cache->reproject : nullptr);
  add_inplace(out, x);
  if (cache) {
    cache->pre_width = std::move(a1);
    cache->pre_height = std::move(a2);
  }
  return out;
}

template <typename T>
Tensor<T> TokenMlpBottleneck<T>::backward(const Tensor<T>& dy, const TokenMlpCache<T>& cache) {
  Tensor<T> d = reproject_.backward(dy, cache.reproject);
  d = norm_.backward(d, cache.norm);
  d = gelu_backward(d, cache.pre_height);
  d = mix_height_.backward(d, cache.mix_height);
  d = shift(d, 1, groups_, -1);
  d = gelu_backward(d, cache.pre_width);
  d = mix_width_.backward(d, cache.mix_width);
  d = shift(d, 2, groups_, -1);
  add_inplace(d, dy);
  return d;
}

template <typename T>
void TokenMlpBottleneck<T>::collect(ParamList<T>& out) const {
  mix_width_.collect(out);
  mix_height_.collect(out);
  norm_.collect(out);
  reproject_.collect(out);
}

template <typename T>
std::size_t TokenMlpBottleneck<T>::flops(int side) const {
  return std::size_t(side) * side * 3 * mix_width_.flops_per_token();
}

// ------------------------------------------------------------------- Decoder

template <typename T>
Decoder<T>::Decoder(Initializer& init, const ModelConfig& cfg, int branch,
                    const std::vector<std::vector<SharedAttentionGroup<T>>>& groups)
    : stages_(cfg.num_stages()) {
  const std::string prefix = std::string("decoders.") + branch_name(branch);
  expand_.resize(stages_);
  fuse_.resize(stages_);
  blocks_.resize(stages_);
  for (int level = stages_ - 1; level >= 0; --level) {
    const int width = cfg.stage_width(level);
    const std::string lp = prefix + ".stage" + std::to_string(level);
    expand_[level] = PatchExpand<T>(init, lp + ".upsample", 2, 2 * width, width,
                                    Component::kDecoderPrivate);
    fuse_[level] = Linear<T>(init, lp + ".skip_fuse", 2 * width, width, true,
                             Component::kDecoderPrivate);
    for (int blk = 0; blk < cfg.decoder_depths[level]; ++blk) {
      blocks_[level].emplace_back(init, lp + ".block" + std::to_string(blk),
                                  groups[level][blk].view(branch), cfg.mlp_ratio,
                                  Component::kDecoderPrivate);
    }
  }
  norm_ = LayerNorm<T>(init, prefix + ".norm", cfg.embed_dim, Component::kDecoderPrivate);
  final_expand_ = PatchExpand<T>(init, prefix + ".final_expand", cfg.patch_size, cfg.embed_dim,
                                 cfg.embed_dim, Component::kHeads);
  head_ = Linear<T>(init, prefix + ".head", cfg.embed_dim, kNumClasses, true, Component::kHeads);
}

template <typename T>
Tensor<T> Decoder<T>::forward(const Tensor<T>& bottom, const std::vector<Tensor<T>>& skips,
                              DecoderCache<T>* cache) const {
  if (cache) {
    cache->expand.assign(stages_, {});
    cache->fuse.assign(stages_, {});
    cache->blocks.assign(stages_, {});
  }
  Tensor<T> x = bottom;
  for (int level = stages_ - 1; level >= 0; --level) {
    x = expand_[level].forward(x, cache ? &cache->expand[level] : nullptr);
    x = fuse_[level].forward(concat_channels(x, skips[level]), cache ? &cache->fuse[level] : nullptr);
    if (cache) cache->blocks[level].resize(blocks_[level].size());
    for (std::size_t blk = 0; blk < blocks_[level].size(); ++blk) {
      x = blocks_[level][blk].forward(x, cache ? &cache->blocks[level][blk] : nullptr);
    }
  }
  x = norm_.forward(x, cache ? &cache->norm : nullptr);
  x = final_expand_.forward(x, cache ? &cache->final_expand : nullptr);
  return head_.forward(x, cache ? &cache->head : nullptr);
}

template <typename T>
Tensor<T> Decoder<T>::backward(const Tensor<T>& dlogits, const DecoderCache<T>& cache,
                               std::vector<Tensor<T>>& skip_grads) {
  Tensor<T> d = head_.backward(dlogits, cache.head);
  d = final_expand_.backward(d, cache.final_expand);
  d = norm_.backward(d, cache.norm);
  for (int level = 0; level < stages_; ++level) {
    for (int blk = int(blocks_[level].size()) - 1; blk >= 0; --blk) {
      d = blocks_[level][blk].backward(d, cache.blocks[level][blk]);
    }
    Tensor<T> dcat = fuse_[level].backward(d, cache.fuse[level]);
    Tensor<T> dup, dskip;
    split_channels(dcat, dcat.cols() / 2, dup, dskip);
    add_inplace(skip_grads[level], dskip);
    d = expand_[level].backward(dup, cache.expand[level]);
  }
  return d;
}

template <typename T>
void Decoder<T>::collect(ParamList<T>& out) const {
  for (int level = stages_ - 1; level >= 0; --level) {
    expand_[level].collect(out);
    fuse_[level].collect(out);
    for (const auto& b : blocks_[level]) b.collect(out);
  }
  norm_.collect(out);
  final_expand_.collect(out);
  head_.collect(out);
}

// --------------------------------------------------------------------- Model

template <typename T>
Model<T>::Model(const ModelConfig& config) : config_(config) {
  config_.validate();
  const ModelConfig& cfg = config_;
  Initializer init(cfg.seed);
  const int stages = cfg.num_stages();

  embed_ = PatchEmbed<T>(init, cfg.patch_size, cfg.in_channels, cfg.embed_dim);
  encoder_blocks_.resize(stages);
  for (int k = 0; k < stages; ++k) {
    const int width = cfg.stage_width(k);
    const int side = cfg.stage_side(k);
    const int heads = cfg.heads_per_stage[k];
    const int window = effective_window(cfg.window_size, side);
    const std::string sp = "encoder.stage" + std::to_string(k);
    for (int blk = 0; blk < cfg.encoder_depths[k]; ++blk) {
      const std::string bp = sp + ".block" + std::to_string(blk);
      auto heads_set = std::make_shared<HeadSet<T>>(init, bp + ".attn", width, heads,
                                                    width / heads, window, Component::kEncoder);
      auto proj = std::make_shared<Linear<T>>(init, bp + ".attn.proj", width, width, true,
                                              Component::kEncoder);
      const int shift = blk % 2 == 1 ? effective_shift(cfg.window_size, side) : 0;
      WindowAttention<T> attn(nullptr, heads_set, proj, width, window, shift);
      encoder_blocks_[k].emplace_back(init, bp, std::move(attn), cfg.mlp_ratio, Component::kEncoder);
    }
    merges_.emplace_back(init, sp + ".downsample", width);
  }

  const int bw = cfg.bottleneck_width();
  if (cfg.bottleneck == BottleneckKind::kSwin) {
    const int side = cfg.bottleneck_side();
    const int heads = cfg.bottleneck_heads();
    const int window = effective_window(cfg.window_size, side);
    for (int blk = 0; blk < cfg.bottleneck_depth; ++blk) {
      const std::string bp = "bottleneck.block" + std::to_string(blk);
      auto heads_set = std::make_shared<HeadSet<T>>(init, bp + ".attn", bw, heads, bw / heads,
                                                    window, Component::kBottleneck);
      auto proj = std::make_shared<Linear<T>>(init, bp + ".attn.proj", bw, bw, true,
                                              Component::kBottleneck);
      const int shift = blk % 2 == 1 ? effective_shift(cfg.window_size, side) : 0;
      WindowAttention<T> attn(nullptr, heads_set, proj, bw, window, shift);
      bottleneck_blocks_.emplace_back(init, bp, std::move(attn), cfg.mlp_ratio,
                                      Component::kBottleneck);
    }
    bottleneck_norm_ = LayerNorm<T>(init, "bottleneck.norm", bw, Component::kBottleneck);
  } else {
    token_mlp_ = std::make_unique<TokenMlpBottleneck<T>>(init, "bottleneck.token_mlp", bw,
                                                         cfg.shift_groups);
  }

  groups_.resize(stages);
  for (int level = stages - 1; level >= 0; --level) {
    const int width = cfg.stage_width(level);
    const int side = cfg.stage_side(level);
    const int window = effective_window(cfg.window_size, side);
    for (int blk = 0; blk < cfg.decoder_depths[level]; ++blk) {
      const int shift = blk % 2 == 1 ? effective_shift(cfg.window_size, side) : 0;
      groups_[level].emplace_back(init,
                                  "decoders.stage" + std::to_string(level) + ".block" +
                                      std::to_string(blk) + ".attn",
                                  width, cfg.heads_per_stage[level], cfg.shared_heads(level),
                                  window, shift);
    }
  }
  for (int branch = 0; branch < kNumBranches; ++branch) {
    decoders_[branch] = Decoder<T>(init, cfg, branch, groups_);
  }

  ParamList<T> all;
  embed_.collect(all);
  for (int k = 0; k < stages; ++k) {
    for (const auto& b : encoder_blocks_[k]) b.collect(all);
    merges_[k].collect(all);
  }
  for (const auto& b : bottleneck_blocks_) b.collect(all);
  if (cfg.bottleneck == BottleneckKind::kSwin) bottleneck_norm_.collect(all);
  if (token_mlp_) token_mlp_->collect(all);
  for (const auto& d : decoders_) d.collect(all);
  std::unordered_set<const Param<T>*> seen;
  for (const auto& p : all) {
    if (seen.insert(p.get()).second) params_.push_back({p->name, p});
  }
}

template <typename T>
TriPrediction<T> Model<T>::forward(const Tensor<T>& images, ModelCache<T>* cache) const {
  const ModelConfig& cfg = config_;
  const std::vector<int> expected{images.shape.empty() ? 0 : images.dim(0), cfg.input_size,
                                  cfg.input_size, cfg.in_channels};
  if (images.shape.size() != 4 || images.shape != expected) {
    throw ShapeError("forward: expected images of shape [batch, " + std::to_string(cfg.input_size) +
                     ", " + std::to_string(cfg.input_size) + ", " + std::to_string(cfg.in_channels) +
                     "], got " + shape_string(images.shape));
  }
  const int stages = cfg.num_stages();
  if (cache) {
    cache->encoder_blocks.assign(stages, {});
    cache->merges.assign(stages, {});
    cache->skip_shapes.assign(stages, {});
    cache->bottleneck_blocks.assign(bottleneck_blocks_.size(), {});
  }
  Tensor<T> x = embed_.forward(images, cache ? &cache->embed : nullptr);
  std::vector<Tensor<T>> skips(stages);
  for (int k = 0; k < stages; ++k) {
    if (cache) cache->encoder_blocks[k].resize(encoder_blocks_[k].size());
    for (std::size_t blk = 0; blk < encoder_blocks_[k].size(); ++blk) {
      x = encoder_blocks_[k][blk].forward(x, cache ? &cache->encoder_blocks[k][blk] : nullptr);
    }
    skips[k] = x;
    if (cache) cache->skip_shapes[k] = x.shape;
    x = merges_[k].forward(x, cache ? &cache->merges[k] : nullptr);
  }
  if (token_mlp_) {
    x = token_mlp_->forward(x, cache ? &cache->token_mlp : nullptr);
  } else {
    for (std::size_t blk = 0; blk < bottleneck_blocks_.size(); ++blk) {
      x = bottleneck_blocks_[blk].forward(x, cache ? &cache->bottleneck_blocks[blk] : nullptr);
    }
    x = bottleneck_norm_.forward(x, cache ? &cache->bottleneck_norm : nullptr);
  }
  if (cache) cache->bottom_shape = x.shape;
  TriPrediction<T> pred;
  for (int branch = 0; branch < kNumBranches; ++branch) {
    pred.logits[branch] =
        decoders_[branch].forward(x, skips, cache ? &cache->decoders[branch] : nullptr);
  }
  return pred;
}

template <typename T>
void Model<T>::backward(const std::array<Tensor<T>, kNumBranches>& dlogits,
                        const ModelCache<T>& cache) {
  const int stages = config_.num_stages();
  std::vector<Tensor<T>> skip_grads;
  for (int k = 0; k < stages; ++k) skip_grads.emplace_back(cache.skip_shapes[k]);
  Tensor<T> d(cache.bottom_shape);
  for (int branch = 0; branch < kNumBranches; ++branch) {
    if (dlogits[branch].size() == 0) continue;
    add_inplace(d, decoders_[branch].backward(dlogits[branch], cache.decoders[branch], skip_grads));
  }
  if (token_mlp_) {
    d = token_mlp_->backward(d, cache.token_mlp);
  } else {
    d = bottleneck_norm_.backward(d, cache.bottleneck_norm);
    for (int blk = int(bottleneck_blocks_.size()) - 1; blk >= 0; --blk) {
      d = bottleneck_blocks_[blk].backward(d, cache.bottleneck_blocks[blk]);
    }
  }
  for (int k = stages - 1; k >= 0; --k) {
    d = merges_[k].backward(d, cache.merges[k]);
    add_inplace(d, skip_grads[k]);
    for (int blk = int(encoder_blocks_[k].size()) - 1; blk >= 0; --blk) {
      d = encoder_blocks_[k][blk].backward(d, cache.encoder_blocks[k][blk]);
    }
  }
  embed_.backward(d, cache.embed);
}

template <typename T>
ParamPtr<T> Model<T>::find(const std::string& name) const {
  for (const auto& p : params_) {
    if (p.name == name) return p.param;
  }
  return nullptr;
}

template <typename T>
void Model<T>::zero_grad() {
  for (auto& p : params_) p.param->zero_grad();
}

template <typename T>
ComplexityReport count_parameters(const Model<T>& model) {
  ComplexityReport report;
  report.label = "enumerated";
  for (auto c : {Component::kEncoder, Component::kBottleneck, Component::kDecoderShared,
                 Component::kDecoderPrivate, Component::kHeads}) {
    report.params_by_component[to_string(c)] = 0;
  }
  for (const auto& p : model.parameters()) {
    report.params_by_component[to_string(p.param->component)] += p.param->size();
    report.total_params += p.param->size();
  }
  return report;
}

#define TRINUSEG_INSTANTIATE(T)                                              \
  template Tensor<T> softmax_classes<T>(const Tensor<T>&);                   \
  template class PatchEmbed<T>;                                              \
  template class PatchMerging<T>;                                            \
  template class PatchExpand<T>;                                             \
  template class TokenMlpBottleneck<T>;                                      \
  template class Decoder<T>;                                                 \
  template class Model<T>;                                                   \
  template ComplexityReport count_parameters<T>(const Model<T>&);

TRINUSEG_INSTANTIATE(float)
TRINUSEG_INSTANTIATE(double)

#undef TRINUSEG_INSTANTIATE

}  // namespace trinuseg
