#include "trinuseg/labels.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <unordered_map>

namespace trinuseg {

std::size_t BinaryMask::count() const {
  return std::size_t(std::count(data.begin(), data.end(), std::uint8_t{1}));
}

int InstanceMask::max_id() const {
  return ids.empty() ? 0 : *std::max_element(ids.begin(), ids.end());
}

namespace {

// Flood fill of the 4-connected region of `label` seeded at (y, x).
template <typename Pred, typename Visit>
void flood(int height, int width, int y, int x, Pred&& same, Visit&& visit) {
  std::vector<int> stack{y * width + x};
  while (!stack.empty()) {
    const int idx = stack.back();
    stack.pop_back();
    if (!same(idx)) continue;
    visit(idx);
    const int cy = idx / width, cx = idx % width;
    if (cy > 0) stack.push_back(idx - width);
    if (cy + 1 < height) stack.push_back(idx + width);
    if (cx > 0) stack.push_back(idx - 1);
    if (cx + 1 < width) stack.push_back(idx + 1);
  }
}

}  // namespace

void InstanceMask::validate() const {
  if (ids.size() != std::size_t(height) * width) {
    throw LabelError("instance mask: size does not match " + std::to_string(height) + "x" +
                     std::to_string(width));
  }
  const int n = max_id();
  std::vector<int> area(n + 1, 0);
  for (auto id : ids) {
    if (id < 0) throw LabelError("instance mask: negative id");
    ++area[id];
  }
  for (int k = 1; k <= n; ++k) {
    if (area[k] == 0) {
      throw LabelError("instance mask: ids are not contiguous (missing id " + std::to_string(k) + ")");
    }
  }
  std::vector<std::uint8_t> seen(ids.size(), 0);
  std::vector<int> first(n + 1, -1);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] > 0 && first[ids[i]] < 0) first[ids[i]] = int(i);
  }
  for (int k = 1; k <= n; ++k) {
    int reached = 0;
    flood(height, width, first[k] / width, first[k] % width,
          [&](int idx) { return !seen[idx] && ids[idx] == k; },
          [&](int idx) { seen[idx] = 1; ++reached; });
    if (reached != area[k]) {
      throw LabelError("instance mask: instance " + std::to_string(k) + " is not 4-connected");
    }
  }
}

InstanceMask connected_components(const BinaryMask& mask) {
  InstanceMask out(mask.height, mask.width);
  int next = 0;
  for (int i = 0; i < int(mask.data.size()); ++i) {
    if (mask.data[i] == 0 || out.ids[i] != 0) continue;
    ++next;
    flood(mask.height, mask.width, i / mask.width, i % mask.width,
          [&](int idx) { return mask.data[idx] != 0 && out.ids[idx] == 0; },
          [&](int idx) { out.ids[idx] = next; });
  }
  return out;
}

InstanceMask compact_instances(const InstanceMask& mask) {
  InstanceMask out(mask.height, mask.width);
  int next = 0;
  for (int i = 0; i < int(mask.ids.size()); ++i) {
    const int id = mask.ids[i];
    if (id == 0 || out.ids[i] != 0) continue;
    ++next;
    flood(mask.height, mask.width, i / mask.width, i % mask.width,
          [&](int idx) { return mask.ids[idx] == id && out.ids[idx] == 0; },
          [&](int idx) { out.ids[idx] = next; });
  }
  return out;
}

BinaryMask boundary_pixels(const InstanceMask& mask) {
  const int h = mask.height, w = mask.width;
  BinaryMask b(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int id = mask.at(y, x);
      if (id == 0) continue;
      const bool differs = (y > 0 && mask.at(y - 1, x) != id) ||
                           (y + 1 < h && mask.at(y + 1, x) != id) ||
                           (x > 0 && mask.at(y, x - 1) != id) ||
                           (x + 1 < w && mask.at(y, x + 1) != id);
      b.at(y, x) = differs ? 1 : 0;
    }
  }
  return b;
}

LabelTriplet derive_label_triplet(const InstanceMask& mask, int radius) {
  mask.validate();
  const int h = mask.height, w = mask.width;
  LabelTriplet t{BinaryMask(h, w), BinaryMask(h, w), BinaryMask(h, w)};
  const BinaryMask boundary = boundary_pixels(mask);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int id = mask.at(y, x);
      t.nuclei.at(y, x) = id > 0 ? 1 : 0;
      if (!boundary.at(y, x)) continue;
      bool clustered = false;
      for (int yy = std::max(0, y - radius); yy <= std::min(h - 1, y + radius) && !clustered; ++yy) {
        for (int xx = std::max(0, x - radius); xx <= std::min(w - 1, x + radius); ++xx) {
          const int other = mask.at(yy, xx);
          if (other > 0 && other != id) {
            clustered = true;
            break;
          }
        }
      }
      (clustered ? t.cluster_edge : t.edge).at(y, x) = 1;
    }
  }
  return t;
}

int default_instance_count(int size) { return std::max(1, size * size / 1024); }

SyntheticSample generate_synthetic_sample(std::uint64_t seed, int size, int n_instances,
                                          double cluster_probability) {
  if (size < 64) throw std::invalid_argument("synthetic sample size must be >= 64");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  struct Ellipse {
    double cy, cx, a, b, angle, intensity;
  };
  std::vector<Ellipse> shapes;
  for (int k = 0; k < n_instances; ++k) {
    Ellipse e{};
    e.a = uniform(0.04, 0.085) * size;
    e.b = e.a * uniform(0.6, 1.0);
    e.angle = uniform(0.0, std::numbers::pi);
    e.intensity = uniform(0.5, 0.9);
    const bool touch = !shapes.empty() && unit(rng) < cluster_probability;
    if (touch) {
      const Ellipse& host = shapes[std::size_t(unit(rng) * shapes.size()) % shapes.size()];
      const double dir = uniform(0.0, 2.0 * std::numbers::pi);
      // Slightly less than the sum of radii along the direction so the two touch.
      const double dist = 0.9 * (0.5 * (host.a + host.b) + 0.5 * (e.a + e.b));
      e.cy = host.cy + dist * std::sin(dir);
      e.cx = host.cx + dist * std::cos(dir);
    } else {
      const double margin = e.a;
      e.cy = uniform(margin, size - margin);
      e.cx = uniform(margin, size - margin);
    }
    shapes.push_back(e);
  }

  InstanceMask raw(size, size);
  Image image(size, size, 1, 0.1f);
  for (std::size_t k = 0; k < shapes.size(); ++k) {
    const Ellipse& e = shapes[k];
    const double ca = std::cos(e.angle), sa = std::sin(e.angle);
    const int y0 = std::max(0, int(std::floor(e.cy - e.a - 1)));
    const int y1 = std::min(size - 1, int(std::ceil(e.cy + e.a + 1)));
    const int x0 = std::max(0, int(std::floor(e.cx - e.a - 1)));
    const int x1 = std::min(size - 1, int(std::ceil(e.cx + e.a + 1)));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const double dy = y + 0.5 - e.cy, dx = x + 0.5 - e.cx;
        const double u = (dx * ca + dy * sa) / e.a;
        const double v = (-dx * sa + dy * ca) / e.b;
        if (u * u + v * v <= 1.0) {
          raw.at(y, x) = int(k) + 1;
          image.at(y, x) = float(e.intensity);
        }
      }
    }
  }
  std::normal_distribution<double> noise(0.0, 0.05);
  for (auto& v : image.data) v = float(std::clamp(v + noise(rng), 0.0, 1.0));
  // Overwrites can erase or split earlier ellipses.
  return {std::move(image), compact_instances(raw)};
}

}  // namespace trinuseg
