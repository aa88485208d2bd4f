#pragma once

#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace trinuseg {

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

std::string shape_string(const std::vector<int>& shape);

/// Dense row-major array. Activations use [batch, height, width, channels];
/// row-wise layers see it as (size / channels) x channels.
template <typename T>
struct Tensor {
  std::vector<int> shape;
  std::vector<T> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s, T fill = T(0))
      : shape(std::move(s)), data(element_count(shape), fill) {}

  static std::size_t element_count(const std::vector<int>& s) {
    return std::accumulate(s.begin(), s.end(), std::size_t{1},
                           [](std::size_t a, int b) { return a * std::size_t(b); });
  }

  std::size_t size() const { return data.size(); }
  int cols() const { return shape.empty() ? 0 : shape.back(); }
  int rows() const { return cols() == 0 ? 0 : int(data.size() / std::size_t(cols())); }
  int dim(std::size_t i) const { return shape.at(i); }

  T* ptr() { return data.data(); }
  const T* ptr() const { return data.data(); }
  std::span<T> span() { return data; }
  std::span<const T> span() const { return data; }

  T& operator[](std::size_t i) { return data[i]; }
  const T& operator[](std::size_t i) const { return data[i]; }
};

template <typename T>
void require_shape(const Tensor<T>& t, const std::vector<int>& expected,
                   const char* what) {
  if (t.shape != expected) {
    throw ShapeError(std::string(what) + ": expected shape " +
                     shape_string(expected) + ", got " + shape_string(t.shape));
  }
}

template <typename T>
void add_inplace(Tensor<T>& dst, const Tensor<T>& src) {
  if (dst.shape != src.shape) {
    throw ShapeError("add: shape " + shape_string(dst.shape) + " vs " +
                     shape_string(src.shape));
  }
  for (std::size_t i = 0; i < dst.size(); ++i) dst.data[i] += src.data[i];
}

template <typename To, typename From>
Tensor<To> tensor_cast(const Tensor<From>& t) {
  Tensor<To> out;
  out.shape = t.shape;
  out.data.assign(t.data.begin(), t.data.end());
  return out;
}

}  // namespace trinuseg
