#include "trinuseg/attention.hpp"

#include <cmath>
#include <limits>

namespace trinuseg {

template <typename T>
HeadSet<T>::HeadSet(Initializer& init, const std::string& name, int dim, int heads_,
                    int head_dim_, int window_, Component component)
    : heads(heads_), head_dim(head_dim_), window(window_) {
  if (heads == 0) return;
  qkv = Linear<T>(init, name + ".qkv", dim, 3 * heads * head_dim, true, component);
  const int table = (2 * window - 1) * (2 * window - 1);
  relative_bias = init.make<T>(name + ".relative_position_bias", {table, heads},
                               component, 0.02, true);
}

template <typename T>
void HeadSet<T>::collect(ParamList<T>& out) const {
  if (heads == 0) return;
  qkv.collect(out);
  out.push_back(relative_bias);
}

template <typename T>
std::size_t HeadSet<T>::parameter_count() const {
  ParamList<T> ps;
  collect(ps);
  std::size_t n = 0;
  for (const auto& p : ps) n += p->size();
  return n;
}

template <typename T>
struct WindowAttention<T>::Geometry {
  int batch = 0, height = 0, width = 0, n = 0, windows = 0;
  std::vector<int> offsets;    // [windows * n] token row within an image
  std::vector<int> region;     // [windows * n] shifted-window mask label
  std::vector<int> rel_index;  // [n * n]

  Geometry(const std::vector<int>& shape, int ws, int shift)
      : batch(shape[0]), height(shape[1]), width(shape[2]), n(ws * ws) {
    const int wy = height / ws;
    const int wx = width / ws;
    windows = wy * wx;
    offsets.resize(std::size_t(windows) * n);
    region.resize(std::size_t(windows) * n);
    auto label = [&](int s, int extent) {
      if (shift == 0) return 0;
      if (s < extent - ws) return 0;
      return s < extent - shift ? 1 : 2;
    };
    for (int a = 0; a < wy; ++a) {
      for (int b = 0; b < wx; ++b) {
        const int w = a * wx + b;
        for (int t = 0; t < n; ++t) {
          const int ys = a * ws + t / ws;
          const int xs = b * ws + t % ws;
          const int y = (ys + shift) % height;
          const int x = (xs + shift) % width;
          offsets[std::size_t(w) * n + t] = y * width + x;
          region[std::size_t(w) * n + t] = label(ys, height) * 3 + label(xs, width);
        }
      }
    }
    rel_index.resize(std::size_t(n) * n);
    const int span = 2 * ws - 1;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const int dy = i / ws - j / ws + ws - 1;
        const int dx = i % ws - j % ws + ws - 1;
        rel_index[std::size_t(i) * n + j] = dy * span + dx;
      }
    }
  }
};

template <typename T>
WindowAttention<T>::WindowAttention(std::shared_ptr<HeadSet<T>> shared,
                                    std::shared_ptr<HeadSet<T>> priv,
                                    std::shared_ptr<Linear<T>> projection, int dim,
                                    int window, int shift)
    : shared_(std::move(shared)),
      private_(std::move(priv)),
      projection_(std::move(projection)),
      dim_(dim),
      window_(window),
      shift_(shift) {
  const int head_dim = private_ && !private_->empty() ? private_->head_dim
                                                     : (shared_ ? shared_->head_dim : 0);
  if (head_dim == 0 || head_dim * total_heads() != dim_) {
    throw ShapeError("window attention: heads x head_dim must equal dim " + std::to_string(dim_));
  }
}

template <typename T>
int WindowAttention<T>::total_heads() const {
  return (shared_ ? shared_->heads : 0) + (private_ ? private_->heads : 0);
}

template <typename T>
void WindowAttention<T>::check_input(const Tensor<T>& x) const {
  if (x.shape.size() != 4) {
    throw ShapeError("window attention expects [batch, height, width, channels], got " +
                     shape_string(x.shape));
  }
  if (x.cols() != dim_) {
    throw ShapeError("window attention: expected channel dim D = " + std::to_string(dim_) +
                     ", got " + std::to_string(x.cols()));
  }
  if (x.dim(1) % window_ != 0 || x.dim(2) % window_ != 0) {
    throw ShapeError("window attention: spatial size " + shape_string(x.shape) +
                     " not divisible by window " + std::to_string(window_));
  }
}

template <typename T>
Tensor<T> WindowAttention<T>::forward(const Tensor<T>& x, AttentionCache<T>* cache) const {
  check_input(x);
  const Geometry g(x.shape, window_, shift_);
  const int heads = total_heads();
  const int hd = dim_ / heads;
  const int m = shared_ ? shared_->heads : 0;
  const int p = private_ ? private_->heads : 0;
  Tensor<T> qs, qp;
  if (m > 0) qs = shared_->qkv.forward(x, cache ? &cache->shared_qkv : nullptr);
  if (p > 0) qp = private_->qkv.forward(x, cache ? &cache->private_qkv : nullptr);

  const int n = g.n;
  const std::size_t image_rows = std::size_t(g.height) * g.width;
  const T scale = T(1) / std::sqrt(T(hd));
  Tensor<T> attn(x.shape);
  std::vector<T> probs(std::size_t(g.batch) * g.windows * heads * n * n);
  std::vector<std::size_t> rows(n);
  std::vector<T> scores(n);

  for (int b = 0; b < g.batch; ++b) {
    for (int w = 0; w < g.windows; ++w) {
      for (int i = 0; i < n; ++i) rows[i] = b * image_rows + g.offsets[std::size_t(w) * n + i];
      const int* reg = g.region.data() + std::size_t(w) * n;
      for (int h = 0; h < heads; ++h) {
        const bool is_shared = h < m;
        const Tensor<T>& src = is_shared ? qs : qp;
        const int set_heads = is_shared ? m : p;
        const int hp = is_shared ? h : h - m;
        const T* bias = (is_shared ? shared_ : private_)->relative_bias->value.data();
        const int stride = 3 * set_heads * hd;
        const int q_off = hp * hd;
        const int k_off = (set_heads + hp) * hd;
        const int v_off = (2 * set_heads + hp) * hd;
        T* pr = probs.data() + ((std::size_t(b) * g.windows + w) * heads + h) * n * n;
        for (int i = 0; i < n; ++i) {
          const T* q = src.ptr() + rows[i] * stride + q_off;
          T best = -std::numeric_limits<T>::infinity();
          for (int j = 0; j < n; ++j) {
            if (reg[i] != reg[j]) continue;
            const T* k = src.ptr() + rows[j] * stride + k_off;
            T dot = 0;
            for (int d = 0; d < hd; ++d) dot += q[d] * k[d];
            const T s = scale * dot + bias[std::size_t(g.rel_index[std::size_t(i) * n + j]) * set_heads + hp];
            scores[j] = s;
            best = std::max(best, s);
          }
          T sum = 0;
          for (int j = 0; j < n; ++j) {
            const T e = reg[i] == reg[j] ? std::exp(scores[j] - best) : T(0);
            pr[std::size_t(i) * n + j] = e;
            sum += e;
          }
          T* out = attn.ptr() + rows[i] * dim_ + h * hd;
          for (int j = 0; j < n; ++j) {
            const T a = pr[std::size_t(i) * n + j] / sum;
            pr[std::size_t(i) * n + j] = a;
            if (a == T(0)) continue;
            const T* v = src.ptr() + rows[j] * stride + v_off;
            for (int d = 0; d < hd; ++d) out[d] += a * v[d];
          }
        }
      }
    }
  }
  Tensor<T> y = projection_->forward(attn, cache ? &cache->projection : nullptr);
  if (cache) {
    cache->shared_out = std::move(qs);
    cache->private_out = std::move(qp);
    cache->probs = std::move(probs);
  }
  return y;
}

template <typename T>
Tensor<T> WindowAttention<T>::backward(const Tensor<T>& dy, const AttentionCache<T>& cache) {
  Tensor<T> dattn = projection_->backward(dy, cache.projection);
  const Geometry g(dattn.shape, window_, shift_);
  const int heads = total_heads();
  const int hd = dim_ / heads;
  const int m = shared_ ? shared_->heads : 0;
  const int p = private_ ? private_->heads : 0;
  const Tensor<T>& qs = cache.shared_out;
  const Tensor<T>& qp = cache.private_out;
  Tensor<T> dqs, dqp;
  if (m > 0) dqs = Tensor<T>(qs.shape);
  if (p > 0) dqp = Tensor<T>(qp.shape);

  const int n = g.n;
  const std::size_t image_rows = std::size_t(g.height) * g.width;
  const T scale = T(1) / std::sqrt(T(hd));
  std::vector<std::size_t> rows(n);
  std::vector<T> dprob(std::size_t(n) * n);

  for (int b = 0; b < g.batch; ++b) {
    for (int w = 0; w < g.windows; ++w) {
      for (int i = 0; i < n; ++i) rows[i] = b * image_rows + g.offsets[std::size_t(w) * n + i];
      for (int h = 0; h < heads; ++h) {
        const bool is_shared = h < m;
        const Tensor<T>& src = is_shared ? qs : qp;
        Tensor<T>& dsrc = is_shared ? dqs : dqp;
        const int set_heads = is_shared ? m : p;
        const int hp = is_shared ? h : h - m;
        T* dbias = (is_shared ? shared_ : private_)->relative_bias->grad.data();
        const int stride = 3 * set_heads * hd;
        const int q_off = hp * hd;
        const int k_off = (set_heads + hp) * hd;
        const int v_off = (2 * set_heads + hp) * hd;
        const T* pr = cache.probs.data() + ((std::size_t(b) * g.windows + w) * heads + h) * n * n;
        for (int i = 0; i < n; ++i) {
          const T* dout = dattn.ptr() + rows[i] * dim_ + h * hd;
          T weighted = 0;
          for (int j = 0; j < n; ++j) {
            const T a = pr[std::size_t(i) * n + j];
            T dp = 0;
            if (a != T(0)) {
              const T* v = src.ptr() + rows[j] * stride + v_off;
              T* dv = dsrc.ptr() + rows[j] * stride + v_off;
              for (int d = 0; d < hd; ++d) {
                dp += dout[d] * v[d];
                dv[d] += a * dout[d];
              }
            }
            dprob[std::size_t(i) * n + j] = dp;
            weighted += a * dp;
          }
          const T* q = src.ptr() + rows[i] * stride + q_off;
          T* dq = dsrc.ptr() + rows[i] * stride + q_off;
          for (int j = 0; j < n; ++j) {
            const T a = pr[std::size_t(i) * n + j];
            if (a == T(0)) continue;
            const T ds = a * (dprob[std::size_t(i) * n + j] - weighted);
            dbias[std::size_t(g.rel_index[std::size_t(i) * n + j]) * set_heads + hp] += ds;
            const T* k = src.ptr() + rows[j] * stride + k_off;
            T* dk = dsrc.ptr() + rows[j] * stride + k_off;
            const T sds = scale * ds;
            for (int d = 0; d < hd; ++d) {
              dq[d] += sds * k[d];
              dk[d] += sds * q[d];
            }
          }
        }
      }
    }
  }
  Tensor<T> dx;
  if (m > 0) dx = shared_->qkv.backward(dqs, cache.shared_qkv);
  if (p > 0) {
    Tensor<T> dxp = private_->qkv.backward(dqp, cache.private_qkv);
    if (dx.size() == 0) {
      dx = std::move(dxp);
    } else {
      add_inplace(dx, dxp);
    }
  }
  return dx;
}

template <typename T>
void WindowAttention<T>::collect(ParamList<T>& out) const {
  if (shared_) shared_->collect(out);
  if (private_) private_->collect(out);
  projection_->collect(out);
}

template <typename T>
std::size_t WindowAttention<T>::flops(int side) const {
  const std::size_t tokens = std::size_t(side) * side;
  const std::size_t n = std::size_t(window_) * window_;
  const std::size_t d = dim_;
  // qkv + output projection, then QK^T and AV per window
  return tokens * (2 * d * 3 * d + 2 * d * d) + tokens / n * (2 * 2 * n * n * d);
}

template <typename T>
SharedAttentionGroup<T>::SharedAttentionGroup(Initializer& init, const std::string& name,
                                              int dim_, int heads, int shared_heads,
                                              int window_, int shift_)
    : dim(dim_), window(window_), shift(shift_) {
  const int hd = dim / heads;
  shared = std::make_shared<HeadSet<T>>(init, name + ".shared", dim, shared_heads, hd,
                                        window, Component::kDecoderShared);
  static const char* kBranch[kNumBranches] = {"nuclei", "edge", "cluster"};
  for (int d = 0; d < kNumBranches; ++d) {
    const std::string prefix = name + "." + kBranch[d];
    private_heads[d] = std::make_shared<HeadSet<T>>(init, prefix + ".private", dim,
                                                    heads - shared_heads, hd, window,
                                                    Component::kDecoderPrivate);
    projection[d] = std::make_shared<Linear<T>>(init, prefix + ".proj", dim, dim, true,
                                                Component::kDecoderPrivate);
  }
}

template <typename T>
WindowAttention<T> SharedAttentionGroup<T>::view(int decoder_id) const {
  if (decoder_id < 0 || decoder_id >= kNumBranches) {
    throw std::out_of_range("decoder id must be 0, 1 or 2");
  }
  return WindowAttention<T>(shared, private_heads[decoder_id], projection[decoder_id], dim,
                            window, shift);
}

template <typename T>
Tensor<T> shared_window_attention(const Tensor<T>& z, const SharedAttentionGroup<T>& group,
                                  int decoder_id, AttentionCache<T>* cache) {
  return group.view(decoder_id).forward(z, cache);
}

template <typename T>
SwinBlock<T>::SwinBlock(Initializer& init, const std::string& name, WindowAttention<T> attn,
                        int mlp_ratio, Component component)
    : attn_(std::move(attn)) {
  const int d = attn_.dim();
  norm1_ = LayerNorm<T>(init, name + ".norm1", d, component);
  norm2_ = LayerNorm<T>(init, name + ".norm2", d, component);
  fc1_ = Linear<T>(init, name + ".mlp.fc1", d, mlp_ratio * d, true, component);
  fc2_ = Linear<T>(init, name + ".mlp.fc2", mlp_ratio * d, d, true, component);
}

template <typename T>
Tensor<T> SwinBlock<T>::forward(const Tensor<T>& x, SwinBlockCache<T>* cache) const {
  Tensor<T> h = norm1_.forward(x, cache ? &cache->norm1 : nullptr);
  Tensor<T> x1 = attn_.forward(h, cache ? &cache->attn : nullptr);
  add_inplace(x1, x);
  h = norm2_.forward(x1, cache ? &cache->norm2 : nullptr);
  Tensor<T> hidden = fc1_.forward(h, cache ? &cache->fc1 : nullptr);
  Tensor<T> act = gelu_forward(hidden);
  Tensor<T> out = fc2_.forward(act, cache ? &cache->fc2 : nullptr);
  add_inplace(out, x1);
  if (cache) cache->hidden = std::move(hidden);
  return out;
}

template <typename T>
Tensor<T> SwinBlock<T>::backward(const Tensor<T>& dy, const SwinBlockCache<T>& cache) {
  Tensor<T> dact = fc2_.backward(dy, cache.fc2);
  Tensor<T> dhidden = gelu_backward(dact, cache.hidden);
  Tensor<T> dh = fc1_.backward(dhidden, cache.fc1);
  Tensor<T> dx1 = norm2_.backward(dh, cache.norm2);
  add_inplace(dx1, dy);
  Tensor<T> da = attn_.backward(dx1, cache.attn);
  Tensor<T> dx = norm1_.backward(da, cache.norm1);
  add_inplace(dx, dx1);
  return dx;
}

template <typename T>
void SwinBlock<T>::collect(ParamList<T>& out) const {
  norm1_.collect(out);
  attn_.collect(out);
  norm2_.collect(out);
  fc1_.collect(out);
  fc2_.collect(out);
}

template <typename T>
std::size_t SwinBlock<T>::flops(int side) const {
  const std::size_t tokens = std::size_t(side) * side;
  return attn_.flops(side) + tokens * (fc1_.flops_per_token() + fc2_.flops_per_token());
}

#define TRINUSEG_INSTANTIATE(T)                                                         \
  template struct HeadSet<T>;                                                           \
  template class WindowAttention<T>;                                                    \
  template struct SharedAttentionGroup<T>;                                              \
  template class SwinBlock<T>;                                                          \
  template Tensor<T> shared_window_attention<T>(const Tensor<T>&,                       \
                                                const SharedAttentionGroup<T>&, int,    \
                                                AttentionCache<T>*);

TRINUSEG_INSTANTIATE(float)
TRINUSEG_INSTANTIATE(double)

#undef TRINUSEG_INSTANTIATE

}  // namespace trinuseg
