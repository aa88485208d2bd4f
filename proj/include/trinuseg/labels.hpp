#pragma once

#include <cstdint>

#include "trinuseg/image.hpp"

namespace trinuseg {

struct LabelTriplet {
  BinaryMask nuclei;
  BinaryMask edge;
  BinaryMask cluster_edge;
};

inline constexpr int kClusterRadius = 2;

/// Boundary pixel: instance pixel with an in-image 4-neighbour of another id
/// (background included). Boundary pixels within Chebyshev `radius` of a
/// different instance are clustered edges, the rest normal edges.
LabelTriplet derive_label_triplet(const InstanceMask& mask, int radius = kClusterRadius);

BinaryMask boundary_pixels(const InstanceMask& mask);

struct SyntheticSample {
  Image image;
  InstanceMask instances;
};

/// Random ellipses on a dark noisy background. With probability
/// cluster_probability an ellipse is placed against an earlier one.
SyntheticSample generate_synthetic_sample(std::uint64_t seed, int size, int n_instances,
                                          double cluster_probability);

/// Instance count used by the dataset tools for a given image side.
int default_instance_count(int size);

}  // namespace trinuseg
