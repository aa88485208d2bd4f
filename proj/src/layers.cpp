#include "trinuseg/layers.hpp"

#include <cmath>
#include <numbers>

#include "trinuseg/simd/kernels.hpp"

namespace trinuseg {

std::string shape_string(const std::vector<int>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

std::string to_string(Component c) {
  switch (c) {
    case Component::kEncoder: return "encoder";
    case Component::kBottleneck: return "bottleneck";
    case Component::kDecoderShared: return "decoder-shared";
    case Component::kDecoderPrivate: return "decoder-private";
    case Component::kHeads: return "heads";
  }
  return "unknown";
}

double Initializer::trunc_normal(double std) {
  std::normal_distribution<double> dist(0.0, 1.0);
  for (;;) {
    const double z = dist(rng_);
    if (z >= -2.0 && z <= 2.0) return z * std;
  }
}

template <typename T>
Linear<T>::Linear(Initializer& init, const std::string& name, int in, int out,
                  bool with_bias, Component component)
    : in_(in), out_(out) {
  weight = init.make<T>(name + ".weight", {in, out}, component, 0.02, true);
  if (with_bias) bias = init.make<T>(name + ".bias", {out}, component, 0.0, false);
}

template <typename T>
Tensor<T> Linear<T>::forward(const Tensor<T>& x, LinearCache<T>* cache) const {
  if (x.cols() != in_) {
    throw ShapeError("linear " + weight->name + ": expected " + std::to_string(in_) +
                     " input channels, got " + std::to_string(x.cols()));
  }
  std::vector<int> shape = x.shape;
  shape.back() = out_;
  Tensor<T> y(shape);
  const int rows = x.rows();
  if (bias) {
    for (int r = 0; r < rows; ++r) {
      std::copy(bias->value.begin(), bias->value.end(), y.ptr() + std::size_t(r) * out_);
    }
  }
  simd::gemm(simd::Trans::kNo, simd::Trans::kNo, rows, out_, in_, x.ptr(), in_,
             weight->value.data(), out_, y.ptr(), out_, bias != nullptr);
  if (cache) cache->input = x;
  return y;
}

template <typename T>
Tensor<T> Linear<T>::backward(const Tensor<T>& dy, const LinearCache<T>& cache,
                              bool need_input_grad) {
  const Tensor<T>& x = cache.input;
  const int rows = x.rows();
  if (dy.cols() != out_ || dy.rows() != rows) {
    throw ShapeError("linear " + weight->name + " backward: gradient shape " +
                     shape_string(dy.shape));
  }
  // dW[in, out] += x^T dy
  simd::gemm(simd::Trans::kYes, simd::Trans::kNo, in_, out_, rows, x.ptr(), in_,
             dy.ptr(), out_, weight->grad.data(), out_, true);
  if (bias) {
    T* g = bias->grad.data();
    for (int r = 0; r < rows; ++r) {
      const T* row = dy.ptr() + std::size_t(r) * out_;
      for (int j = 0; j < out_; ++j) g[j] += row[j];
    }
  }
  if (!need_input_grad) return {};
  Tensor<T> dx(x.shape);
  simd::gemm(simd::Trans::kNo, simd::Trans::kYes, rows, in_, out_, dy.ptr(), out_,
             weight->value.data(), out_, dx.ptr(), in_, false);
  return dx;
}

template <typename T>
void Linear<T>::collect(ParamList<T>& out) const {
  out.push_back(weight);
  if (bias) out.push_back(bias);
}

template <typename T>
LayerNorm<T>::LayerNorm(Initializer& init, const std::string& name, int channels,
                        Component component)
    : channels_(channels) {
  gamma = init.make<T>(name + ".weight", {channels}, component, 1.0, false);
  beta = init.make<T>(name + ".bias", {channels}, component, 0.0, false);
}

template <typename T>
Tensor<T> LayerNorm<T>::forward(const Tensor<T>& x, LayerNormCache<T>* cache) const {
  if (x.cols() != channels_) {
    throw ShapeError("layer norm " + gamma->name + ": expected " +
                     std::to_string(channels_) + " channels, got " + std::to_string(x.cols()));
  }
  const int rows = x.rows();
  const int c = channels_;
  Tensor<T> y(x.shape);
  Tensor<T> xhat;
  if (cache) {
    xhat = Tensor<T>(x.shape);
    cache->inv_std.resize(rows);
  }
  const T* g = gamma->value.data();
  const T* b = beta->value.data();
  for (int r = 0; r < rows; ++r) {
    const T* in = x.ptr() + std::size_t(r) * c;
    T mean = 0;
    for (int j = 0; j < c; ++j) mean += in[j];
    mean /= T(c);
    T var = 0;
    for (int j = 0; j < c; ++j) {
      const T d = in[j] - mean;
      var += d * d;
    }
    var /= T(c);
    const T inv = T(1) / std::sqrt(var + T(kEps));
    T* out = y.ptr() + std::size_t(r) * c;
    for (int j = 0; j < c; ++j) {
      const T n = (in[j] - mean) * inv;
      out[j] = n * g[j] + b[j];
      if (cache) xhat.data[std::size_t(r) * c + j] = n;
    }
    if (cache) cache->inv_std[r] = inv;
  }
  if (cache) cache->normalized = std::move(xhat);
  return y;
}

template <typename T>
Tensor<T> LayerNorm<T>::backward(const Tensor<T>& dy, const LayerNormCache<T>& cache) {
  const Tensor<T>& xhat = cache.normalized;
  const int rows = xhat.rows();
  const int c = channels_;
  Tensor<T> dx(xhat.shape);
  const T* g = gamma->value.data();
  T* gg = gamma->grad.data();
  T* gb = beta->grad.data();
  for (int r = 0; r < rows; ++r) {
    const T* d = dy.ptr() + std::size_t(r) * c;
    const T* n = xhat.ptr() + std::size_t(r) * c;
    T sum_dn = 0;
    T sum_dn_n = 0;
    for (int j = 0; j < c; ++j) {
      gg[j] += d[j] * n[j];
      gb[j] += d[j];
      const T dn = d[j] * g[j];
      sum_dn += dn;
      sum_dn_n += dn * n[j];
    }
    const T inv = cache.inv_std[r];
    T* out = dx.ptr() + std::size_t(r) * c;
    for (int j = 0; j < c; ++j) {
      const T dn = d[j] * g[j];
      out[j] = inv * (dn - sum_dn / T(c) - n[j] * sum_dn_n / T(c));
    }
  }
  return dx;
}

template <typename T>
void LayerNorm<T>::collect(ParamList<T>& out) const {
  out.push_back(gamma);
  out.push_back(beta);
}

template <typename T>
Tensor<T> gelu_forward(const Tensor<T>& x) {
  Tensor<T> y(x.shape);
  const T inv_sqrt2 = T(1) / std::sqrt(T(2));
  for (std::size_t i = 0; i < x.size(); ++i) {
    const T v = x.data[i];
    y.data[i] = T(0.5) * v * (T(1) + std::erf(v * inv_sqrt2));
  }
  return y;
}

template <typename T>
Tensor<T> gelu_backward(const Tensor<T>& dy, const Tensor<T>& x) {
  Tensor<T> dx(x.shape);
  const T inv_sqrt2 = T(1) / std::sqrt(T(2));
  const T inv_sqrt2pi = T(1) / std::sqrt(T(2) * std::numbers::pi_v<T>);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const T v = x.data[i];
    const T cdf = T(0.5) * (T(1) + std::erf(v * inv_sqrt2));
    const T pdf = inv_sqrt2pi * std::exp(T(-0.5) * v * v);
    dx.data[i] = dy.data[i] * (cdf + v * pdf);
  }
  return dx;
}

template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rows() != b.rows()) {
    throw ShapeError("concat: row mismatch " + shape_string(a.shape) + " vs " + shape_string(b.shape));
  }
  std::vector<int> shape = a.shape;
  shape.back() = a.cols() + b.cols();
  Tensor<T> out(shape);
  const int ca = a.cols();
  const int cb = b.cols();
  for (int r = 0; r < a.rows(); ++r) {
    T* dst = out.ptr() + std::size_t(r) * (ca + cb);
    std::copy_n(a.ptr() + std::size_t(r) * ca, ca, dst);
    std::copy_n(b.ptr() + std::size_t(r) * cb, cb, dst + ca);
  }
  return out;
}

template <typename T>
void split_channels(const Tensor<T>& d, int first, Tensor<T>& da, Tensor<T>& db) {
  const int c = d.cols();
  const int second = c - first;
  std::vector<int> sa = d.shape;
  sa.back() = first;
  std::vector<int> sb = d.shape;
  sb.back() = second;
  da = Tensor<T>(sa);
  db = Tensor<T>(sb);
  for (int r = 0; r < d.rows(); ++r) {
    const T* src = d.ptr() + std::size_t(r) * c;
    std::copy_n(src, first, da.ptr() + std::size_t(r) * first);
    std::copy_n(src + first, second, db.ptr() + std::size_t(r) * second);
  }
}

#define TRINUSEG_INSTANTIATE(T)                                                  \
  template class Linear<T>;                                                      \
  template class LayerNorm<T>;                                                   \
  template Tensor<T> gelu_forward<T>(const Tensor<T>&);                          \
  template Tensor<T> gelu_backward<T>(const Tensor<T>&, const Tensor<T>&);       \
  template Tensor<T> concat_channels<T>(const Tensor<T>&, const Tensor<T>&);     \
  template void split_channels<T>(const Tensor<T>&, int, Tensor<T>&, Tensor<T>&);

TRINUSEG_INSTANTIATE(float)
TRINUSEG_INSTANTIATE(double)

#undef TRINUSEG_INSTANTIATE

}  // namespace trinuseg
