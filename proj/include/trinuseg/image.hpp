#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace trinuseg {

/// Interleaved float image with values in [0, 1].
struct Image {
  int height = 0;
  int width = 0;
  int channels = 1;
  std::vector<float> data;

  Image() = default;
  Image(int h, int w, int c, float fill = 0.0f)
      : height(h), width(w), channels(c), data(std::size_t(h) * w * c, fill) {}
  float& at(int y, int x, int c = 0) { return data[(std::size_t(y) * width + x) * channels + c]; }
  float at(int y, int x, int c = 0) const { return data[(std::size_t(y) * width + x) * channels + c]; }
};

struct BinaryMask {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> data;  // 0 or 1

  BinaryMask() = default;
  BinaryMask(int h, int w) : height(h), width(w), data(std::size_t(h) * w, 0) {}
  std::uint8_t& at(int y, int x) { return data[std::size_t(y) * width + x]; }
  std::uint8_t at(int y, int x) const { return data[std::size_t(y) * width + x]; }
  std::size_t count() const;
  bool operator==(const BinaryMask&) const = default;
};

class LabelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// 0 = background, k > 0 = instance k.
struct InstanceMask {
  int height = 0;
  int width = 0;
  std::vector<std::int32_t> ids;

  InstanceMask() = default;
  InstanceMask(int h, int w) : height(h), width(w), ids(std::size_t(h) * w, 0) {}
  std::int32_t& at(int y, int x) { return ids[std::size_t(y) * width + x]; }
  std::int32_t at(int y, int x) const { return ids[std::size_t(y) * width + x]; }
  int max_id() const;
  bool operator==(const InstanceMask&) const = default;

  /// Throws LabelError unless ids are exactly 1..N and each is 4-connected.
  void validate() const;
};

/// 4-connected components of a binary mask, labelled 1..N in raster order.
InstanceMask connected_components(const BinaryMask& mask);

/// Splits every id into its 4-connected pieces and renumbers 1..N in
/// raster order of first appearance.
InstanceMask compact_instances(const InstanceMask& mask);

}  // namespace trinuseg
