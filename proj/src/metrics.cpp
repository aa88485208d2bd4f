#include "trinuseg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <tuple>

#include "trinuseg/losses.hpp"

namespace trinuseg {
namespace {

void require_same_size(int h1, int w1, int h2, int w2, const char* what) {
  if (h1 != h2 || w1 != w2) {
    throw LabelError(std::string(what) + ": size mismatch " + std::to_string(h1) + "x" +
                     std::to_string(w1) + " vs " + std::to_string(h2) + "x" + std::to_string(w2));
  }
}

}  // namespace

Confusion confusion(const BinaryMask& pred, const BinaryMask& gt) {
  require_same_size(pred.height, pred.width, gt.height, gt.width, "confusion");
  Confusion c;
  for (std::size_t i = 0; i < pred.data.size(); ++i) {
    const bool p = pred.data[i] != 0, g = gt.data[i] != 0;
    if (p && g) ++c.tp;
    else if (p) ++c.fp;
    else if (g) ++c.fn;
    else ++c.tn;
  }
  return c;
}

PixelMetrics pixel_metrics(const BinaryMask& pred, const BinaryMask& gt) {
  const Confusion c = confusion(pred, gt);
  PixelMetrics m;
  const long total = c.tp + c.fp + c.fn + c.tn;
  const long fg = c.tp + c.fp + c.fn;
  if (fg == 0) {
    m.dsc = m.iou = 100.0;
  } else {
    m.dsc = 100.0 * 2.0 * c.tp / double(2 * c.tp + c.fp + c.fn);
    m.iou = 100.0 * c.tp / double(fg);
  }
  m.acc = total == 0 ? 100.0 : 100.0 * double(c.tp + c.tn) / double(total);
  return m;
}

double object_f1(const InstanceMask& pred, const InstanceMask& gt, double iou_threshold) {
  require_same_size(pred.height, pred.width, gt.height, gt.width, "object_f1");
  // ids need not be contiguous here; remap to dense indices
  auto dense = [](const InstanceMask& m, std::vector<int>& index) {
    std::vector<int> ids(m.ids.begin(), m.ids.end());
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    ids.erase(std::remove(ids.begin(), ids.end(), 0), ids.end());
    index.resize(m.ids.size());
    for (std::size_t i = 0; i < m.ids.size(); ++i) {
      index[i] = m.ids[i] == 0 ? -1 : int(std::lower_bound(ids.begin(), ids.end(), m.ids[i]) - ids.begin());
    }
    return int(ids.size());
  };
  std::vector<int> pi, gi;
  const int np = dense(pred, pi);
  const int ng = dense(gt, gi);
  if (np == 0 && ng == 0) return 100.0;
  if (np == 0 || ng == 0) return 0.0;

  std::vector<long> area_p(np, 0), area_g(ng, 0);
  std::vector<long> inter(std::size_t(np) * ng, 0);
  for (std::size_t i = 0; i < pi.size(); ++i) {
    if (pi[i] >= 0) ++area_p[pi[i]];
    if (gi[i] >= 0) ++area_g[gi[i]];
    if (pi[i] >= 0 && gi[i] >= 0) ++inter[std::size_t(pi[i]) * ng + gi[i]];
  }
  std::vector<std::tuple<double, int, int>> pairs;
  for (int a = 0; a < np; ++a) {
    for (int b = 0; b < ng; ++b) {
      const long in = inter[std::size_t(a) * ng + b];
      if (in == 0) continue;
      const double iou = double(in) / double(area_p[a] + area_g[b] - in);
      if (iou >= iou_threshold) pairs.emplace_back(iou, a, b);
    }
  }
  // descending IoU, ties by index so the result does not depend on sort stability
  std::sort(pairs.begin(), pairs.end(), [](const auto& x, const auto& y) {
    if (std::get<0>(x) != std::get<0>(y)) return std::get<0>(x) > std::get<0>(y);
    return std::tie(std::get<1>(x), std::get<2>(x)) < std::tie(std::get<1>(y), std::get<2>(y));
  });
  std::vector<char> used_p(np, 0), used_g(ng, 0);
  long tp = 0;
  for (const auto& [iou, a, b] : pairs) {
    if (used_p[a] || used_g[b]) continue;
    used_p[a] = used_g[b] = 1;
    ++tp;
  }
  const long fp = np - tp, fn = ng - tp;
  return 100.0 * 2.0 * tp / double(2 * tp + fp + fn);
}

double error_count(const BinaryMask& pred, const InstanceMask& gt) {
  require_same_size(pred.height, pred.width, gt.height, gt.width, "error_count");
  const int n_pred = connected_components(pred).max_id();
  std::vector<int> ids(gt.ids.begin(), gt.ids.end());
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  const int n_gt = int(ids.size()) - (std::binary_search(ids.begin(), ids.end(), 0) ? 1 : 0);
  return 100.0 * std::abs(n_pred - n_gt) / double(std::max(n_gt, 1));
}

BinaryMask nuclei_contour(const BinaryMask& nuclei_pred) {
  std::vector<double> p(nuclei_pred.data.begin(), nuclei_pred.data.end());
  const SobelResult<double> s = sobel_edge_map<double>(p, nuclei_pred.height, nuclei_pred.width);
  BinaryMask out(nuclei_pred.height, nuclei_pred.width);
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = s.magnitude[i] > 0 ? 1 : 0;
  return out;
}

ConsistencyOverlap contour_overlap(const BinaryMask& contour, const BinaryMask& edge_pred) {
  require_same_size(contour.height, contour.width, edge_pred.height, edge_pred.width,
                    "contour_overlap");
  ConsistencyOverlap r;
  r.overlay = Image(contour.height, contour.width, 3);
  long edge_only = 0, contour_only = 0, both = 0;
  for (std::size_t i = 0; i < contour.data.size(); ++i) {
    const bool c = contour.data[i] != 0, e = edge_pred.data[i] != 0;
    float* px = &r.overlay.data[i * 3];
    if (c && e) {
      ++both;
      px[0] = px[1] = 1.0f;
    } else if (e) {
      ++edge_only;
      px[1] = 1.0f;
    } else if (c) {
      ++contour_only;
      px[0] = 1.0f;
    }
  }
  r.union_size = edge_only + contour_only + both;
  if (r.union_size == 0) return r;
  r.degenerate = false;
  const double u = double(r.union_size);
  r.frac_edge_only = edge_only / u;
  r.frac_nuclei_contour_only = contour_only / u;
  r.frac_overlap = both / u;
  return r;
}

ConsistencyOverlap consistency_overlap(const BinaryMask& nuclei_pred, const BinaryMask& edge_pred) {
  require_same_size(nuclei_pred.height, nuclei_pred.width, edge_pred.height, edge_pred.width,
                    "consistency_overlap");
  return contour_overlap(nuclei_contour(nuclei_pred), edge_pred);
}

InstanceMask predicted_instances(const BinaryMask& nuclei_pred, const BinaryMask& cluster_pred) {
  require_same_size(nuclei_pred.height, nuclei_pred.width, cluster_pred.height, cluster_pred.width,
                    "predicted_instances");
  BinaryMask cores = nuclei_pred;
  for (std::size_t i = 0; i < cores.data.size(); ++i) {
    if (cluster_pred.data[i]) cores.data[i] = 0;
  }
  return connected_components(cores);
}

ImageMetrics image_metrics(const BinaryMask& nuclei_pred, const BinaryMask& cluster_pred,
                           const InstanceMask& gt) {
  BinaryMask gt_fg(gt.height, gt.width);
  for (std::size_t i = 0; i < gt.ids.size(); ++i) gt_fg.data[i] = gt.ids[i] > 0 ? 1 : 0;
  ImageMetrics m;
  m.pixel = pixel_metrics(nuclei_pred, gt_fg);
  const InstanceMask inst = predicted_instances(nuclei_pred, cluster_pred);
  m.f1 = object_f1(inst, gt);
  BinaryMask inst_fg(inst.height, inst.width);
  for (std::size_t i = 0; i < inst.ids.size(); ++i) inst_fg.data[i] = inst.ids[i] > 0 ? 1 : 0;
  m.ercnt = error_count(inst_fg, gt);
  return m;
}

MetricsReport aggregate(const std::vector<ImageMetrics>& per_image) {
  MetricsReport r;
  r.n_images = int(per_image.size());
  if (per_image.empty()) return r;
  for (const ImageMetrics& m : per_image) {
    r.dsc += m.pixel.dsc;
    r.iou += m.pixel.iou;
    r.acc += m.pixel.acc;
    r.f1 += m.f1;
    r.ercnt += m.ercnt;
  }
  const double n = double(per_image.size());
  r.dsc /= n;
  r.iou /= n;
  r.acc /= n;
  r.f1 /= n;
  r.ercnt /= n;
  return r;
}

std::string to_key_values(const MetricsReport& r) {
  std::ostringstream os;
  os.precision(10);
  os << "dsc=" << r.dsc << "\nf1=" << r.f1 << "\nacc=" << r.acc << "\niou=" << r.iou
     << "\nercnt=" << r.ercnt << "\nn_images=" << r.n_images << "\n";
  return os.str();
}

}  // namespace trinuseg
