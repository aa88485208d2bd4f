#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "trinuseg/tensor.hpp"

namespace trinuseg {

enum class Component { kEncoder, kBottleneck, kDecoderShared, kDecoderPrivate, kHeads };

std::string to_string(Component c);

template <typename T>
struct Param {
  std::string name;
  std::vector<int> shape;
  Component component = Component::kEncoder;
  std::vector<T> value;
  std::vector<T> grad;

  std::size_t size() const { return value.size(); }
  void zero_grad() { std::fill(grad.begin(), grad.end(), T(0)); }
};

template <typename T>
using ParamPtr = std::shared_ptr<Param<T>>;

template <typename T>
using ParamList = std::vector<ParamPtr<T>>;

/// Seeded weight factory. Construction order fixes the random stream.
class Initializer {
 public:
  explicit Initializer(std::uint64_t seed) : rng_(seed) {}
  /// Normal(0, std) resampled outside +-2 std.
  double trunc_normal(double std);

  template <typename T>
  ParamPtr<T> make(std::string name, std::vector<int> shape, Component component,
                   double std_or_fill, bool random);

 private:
  std::mt19937_64 rng_;
};

template <typename T>
ParamPtr<T> Initializer::make(std::string name, std::vector<int> shape,
                              Component component, double std_or_fill,
                              bool random) {
  auto p = std::make_shared<Param<T>>();
  p->name = std::move(name);
  p->shape = std::move(shape);
  p->component = component;
  const std::size_t n = Tensor<T>::element_count(p->shape);
  p->value.resize(n);
  p->grad.assign(n, T(0));
  for (auto& v : p->value) v = random ? T(trunc_normal(std_or_fill)) : T(std_or_fill);
  return p;
}

template <typename T>
struct LinearCache {
  Tensor<T> input;
};

/// y = x W + b over the last axis. W is stored [in, out].
template <typename T>
class Linear {
 public:
  Linear() = default;
  Linear(Initializer& init, const std::string& name, int in, int out, bool bias,
         Component component);

  int in_features() const { return in_; }
  int out_features() const { return out_; }

  Tensor<T> forward(const Tensor<T>& x, LinearCache<T>* cache) const;
  /// Accumulates parameter gradients; returns dL/dx unless need_input_grad is false.
  Tensor<T> backward(const Tensor<T>& dy, const LinearCache<T>& cache,
                     bool need_input_grad = true);

  void collect(ParamList<T>& out) const;
  std::size_t flops_per_token() const { return 2 * std::size_t(in_) * out_; }

  ParamPtr<T> weight;
  ParamPtr<T> bias;  // may be null

 private:
  int in_ = 0;
  int out_ = 0;
};

template <typename T>
struct LayerNormCache {
  Tensor<T> normalized;
  std::vector<T> inv_std;
};

template <typename T>
class LayerNorm {
 public:
  static constexpr double kEps = 1e-5;

  LayerNorm() = default;
  LayerNorm(Initializer& init, const std::string& name, int channels, Component component);

  Tensor<T> forward(const Tensor<T>& x, LayerNormCache<T>* cache) const;
  Tensor<T> backward(const Tensor<T>& dy, const LayerNormCache<T>& cache);
  void collect(ParamList<T>& out) const;

  ParamPtr<T> gamma;
  ParamPtr<T> beta;

 private:
  int channels_ = 0;
};

// Exact (erf) GELU.
template <typename T>
Tensor<T> gelu_forward(const Tensor<T>& x);
template <typename T>
Tensor<T> gelu_backward(const Tensor<T>& dy, const Tensor<T>& x);

/// Concatenates two tensors with equal leading dims along the last axis.
template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
void split_channels(const Tensor<T>& d, int first, Tensor<T>& da, Tensor<T>& db);

}  // namespace trinuseg
