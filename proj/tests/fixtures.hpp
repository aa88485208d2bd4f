#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "trinuseg/labels.hpp"
#include "trinuseg/losses.hpp"
#include "trinuseg/model.hpp"

namespace fixtures {

using namespace trinuseg;

// 32x32 input, embed 8: stage sides 8/4/2, bottleneck 1x1.
inline ModelConfig tiny_config() {
  ModelConfig c;
  c.input_size = 32;
  c.patch_size = 4;
  c.embed_dim = 8;
  c.encoder_depths = {2, 2, 2};
  c.decoder_depths = {2, 2, 2};
  c.heads_per_stage = {2, 2, 4};
  c.window_size = 4;
  c.mlp_ratio = 2;
  c.seed = 11;
  return c;
}

// Two rectangles sharing a border plus an isolated blob.
inline InstanceMask toy_instances(int size) {
  InstanceMask m(size, size);
  for (int y = size / 8; y < size / 2; ++y) {
    for (int x = size / 8; x < size / 2; ++x) m.at(y, x) = 1;
    for (int x = size / 2; x < 3 * size / 4; ++x) m.at(y, x) = 2;
  }
  const double cy = 0.75 * size, cx = 0.3 * size, r = size / 8.0;
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      if ((y - cy) * (y - cy) + (x - cx) * (x - cx) <= r * r) m.at(y, x) = 3;
    }
  }
  return m;
}

template <typename T>
Tensor<T> random_images(int batch, int size, int channels, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Tensor<T> x({batch, size, size, channels});
  for (auto& v : x.data) v = T(u(rng));
  return x;
}

template <typename T>
TargetMaps<T> toy_targets(int batch, int size) {
  const LabelTriplet l = derive_label_triplet(toy_instances(size));
  const BinaryMask* masks[kNumBranches] = {&l.nuclei, &l.edge, &l.cluster_edge};
  TargetMaps<T> t;
  for (int b = 0; b < kNumBranches; ++b) {
    t[b] = Tensor<T>({batch, size, size});
    for (int n = 0; n < batch; ++n) {
      for (std::size_t i = 0; i < masks[b]->data.size(); ++i) {
        t[b].data[n * masks[b]->data.size() + i] = T(masks[b]->data[i]);
      }
    }
  }
  return t;
}

template <typename T>
bool same_tensor(const Tensor<T>& a, const Tensor<T>& b) {
  return a.shape == b.shape && a.data == b.data;
}

template <typename T>
double max_abs_diff(const Tensor<T>& a, const Tensor<T>& b) {
  double d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(double(a.data[i]) - double(b.data[i])));
  return d;
}

// Rule evaluated literally per pixel, with no shared helpers.
inline LabelTriplet brute_force_triplet(const InstanceMask& m, int r) {
  LabelTriplet t{BinaryMask(m.height, m.width), BinaryMask(m.height, m.width), BinaryMask(m.height, m.width)};
  const int dy[4] = {-1, 1, 0, 0}, dx[4] = {0, 0, -1, 1};
  for (int y = 0; y < m.height; ++y) {
    for (int x = 0; x < m.width; ++x) {
      const int id = m.at(y, x);
      if (id == 0) continue;
      t.nuclei.at(y, x) = 1;
      bool boundary = false;
      for (int k = 0; k < 4; ++k) {
        const int yy = y + dy[k], xx = x + dx[k];
        if (yy >= 0 && yy < m.height && xx >= 0 && xx < m.width && m.at(yy, xx) != id) boundary = true;
      }
      if (!boundary) continue;
      bool near_other = false;
      for (int yy = 0; yy < m.height; ++yy)
        for (int xx = 0; xx < m.width; ++xx)
          if (std::max(std::abs(yy - y), std::abs(xx - x)) <= r && m.at(yy, xx) > 0 && m.at(yy, xx) != id) near_other = true;
      (near_other ? t.cluster_edge : t.edge).at(y, x) = 1;
    }
  }
  return t;
}

inline InstanceMask two_instance_fixture() {
  InstanceMask m(8, 8);
  for (int y = 2; y <= 5; ++y) {
    for (int x = 1; x <= 3; ++x) m.at(y, x) = 1;
    for (int x = 4; x <= 6; ++x) m.at(y, x) = 2;
  }
  return m;
}

}  // namespace fixtures
