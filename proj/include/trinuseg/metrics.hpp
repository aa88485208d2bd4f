#pragma once

#include <string>
#include <vector>

#include "trinuseg/image.hpp"

namespace trinuseg {

/// Percentages; ercnt is the relative instance-count error.
struct MetricsReport {
  double dsc = 0;
  double f1 = 0;
  double acc = 0;
  double iou = 0;
  double ercnt = 0;
  int n_images = 0;
};

struct PixelMetrics {
  double dsc = 0;
  double iou = 0;
  double acc = 0;
};

struct Confusion {
  long tp = 0, fp = 0, fn = 0, tn = 0;
};

Confusion confusion(const BinaryMask& pred, const BinaryMask& gt);

/// Empty prediction against empty ground truth counts as 100 for dsc and iou.
PixelMetrics pixel_metrics(const BinaryMask& pred, const BinaryMask& gt);

/// Object F1 with greedy one-to-one matching by descending IoU.
double object_f1(const InstanceMask& pred, const InstanceMask& gt, double iou_threshold = 0.5);

/// |components(pred) - N_gt| / max(N_gt, 1) * 100.
double error_count(const BinaryMask& pred, const InstanceMask& gt);

struct ConsistencyOverlap {
  double frac_edge_only = 0;
  double frac_nuclei_contour_only = 0;
  double frac_overlap = 1;
  bool degenerate = true;  // both sets empty
  long union_size = 0;
  Image overlay;  // RGB: green edge only, red contour only, yellow both
};

/// Binary contour of the nuclei prediction (Sobel magnitude > 0).
BinaryMask nuclei_contour(const BinaryMask& nuclei_pred);

/// Fractions of union(contour, edge): edge only, contour only, both.
ConsistencyOverlap contour_overlap(const BinaryMask& contour, const BinaryMask& edge_pred);
ConsistencyOverlap consistency_overlap(const BinaryMask& nuclei_pred, const BinaryMask& edge_pred);

/// Predicted instances: 4-connected pieces of nuclei minus clustered edges.
InstanceMask predicted_instances(const BinaryMask& nuclei_pred, const BinaryMask& cluster_pred);

struct ImageMetrics {
  PixelMetrics pixel;
  double f1 = 0;
  double ercnt = 0;
};

ImageMetrics image_metrics(const BinaryMask& nuclei_pred, const BinaryMask& cluster_pred,
                           const InstanceMask& gt);

/// Mean of per-image values.
MetricsReport aggregate(const std::vector<ImageMetrics>& per_image);

/// key=value lines.
std::string to_key_values(const MetricsReport& report);

}  // namespace trinuseg
