#include "trinuseg/losses.hpp"

#include <algorithm>
#include <cmath>

namespace trinuseg {
namespace {

void require_same(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw ShapeError(std::string(what) + ": size mismatch " + std::to_string(a) + " vs " +
                     std::to_string(b));
  }
}

// Image `n` of a [batch, h, w, c] tensor as a standalone [h*w, c] tensor.
template <typename T>
Tensor<T> slice_image(const Tensor<T>& t, int n) {
  const std::size_t per = t.size() / std::size_t(t.dim(0));
  Tensor<T> out({int(per / t.cols()), t.cols()});
  std::copy_n(t.ptr() + per * n, per, out.ptr());
  return out;
}

template <typename T>
void add_image(Tensor<T>& t, int n, const Tensor<T>& part) {
  const std::size_t per = t.size() / std::size_t(t.dim(0));
  T* dst = t.ptr() + per * n;
  for (std::size_t i = 0; i < per; ++i) dst[i] += part.data[i];
}

template <typename T>
std::span<const T> target_image(const Tensor<T>& t, int n) {
  const std::size_t per = t.size() / std::size_t(t.dim(0));
  return std::span<const T>(t.ptr() + per * n, per);
}

// Adds dL/dlogits given dL/dp for p = softmax(logits)[1].
template <typename T>
void foreground_grad_to_logits(std::span<const T> logits, std::span<const T> grad_p,
                               Tensor<T>& grad_logits) {
  for (std::size_t r = 0; r < grad_p.size(); ++r) {
    const T d = logits[2 * r + 1] - logits[2 * r];
    const T p = T(1) / (T(1) + std::exp(-d));
    const T g = grad_p[r] * p * (T(1) - p);
    grad_logits.data[2 * r] -= g;
    grad_logits.data[2 * r + 1] += g;
  }
}

}  // namespace

template <typename T>
T dice_loss(std::span<const T> probs, std::span<const T> target, std::span<T> grad_probs,
            std::span<T> grad_target, T scale) {
  require_same(probs.size(), target.size(), "dice_loss");
  T inter = 0, sp = 0, st = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    inter += probs[i] * target[i];
    sp += probs[i];
    st += target[i];
  }
  const T eps = T(kDiceEps);
  const T num = T(2) * inter + eps;
  const T den = sp + st + eps;
  if (!grad_probs.empty() || !grad_target.empty()) {
    const T inv = T(1) / (den * den);
    for (std::size_t i = 0; i < probs.size(); ++i) {
      if (!grad_probs.empty()) grad_probs[i] += scale * -(T(2) * target[i] * den - num) * inv;
      if (!grad_target.empty()) grad_target[i] += scale * -(T(2) * probs[i] * den - num) * inv;
    }
  }
  return T(1) - num / den;
}

template <typename T>
T cross_entropy_loss(const Tensor<T>& logits, std::span<const T> target, Tensor<T>* grad_logits,
                     T scale) {
  if (logits.cols() != kNumClasses) {
    throw ShapeError("cross_entropy_loss: logits must have 2 classes, got " + shape_string(logits.shape));
  }
  const int rows = logits.rows();
  require_same(std::size_t(rows), target.size(), "cross_entropy_loss");
  T total = 0;
  const T inv_n = T(1) / T(rows);
  for (int r = 0; r < rows; ++r) {
    const T a = logits.data[2 * std::size_t(r)];
    const T b = logits.data[2 * std::size_t(r) + 1];
    const T mx = std::max(a, b);
    const T lse = mx + std::log(std::exp(a - mx) + std::exp(b - mx));
    const bool fg = target[r] > T(0.5);
    total += lse - (fg ? b : a);
    if (grad_logits) {
      const T pa = std::exp(a - lse);
      const T pb = std::exp(b - lse);
      grad_logits->data[2 * std::size_t(r)] += scale * inv_n * (pa - (fg ? T(0) : T(1)));
      grad_logits->data[2 * std::size_t(r) + 1] += scale * inv_n * (pb - (fg ? T(1) : T(0)));
    }
  }
  return total * inv_n;
}

template <typename T>
std::vector<T> foreground_probs(std::span<const T> logits) {
  std::vector<T> p(logits.size() / 2);
  for (std::size_t r = 0; r < p.size(); ++r) {
    p[r] = T(1) / (T(1) + std::exp(logits[2 * r] - logits[2 * r + 1]));
  }
  return p;
}

template <typename T>
T branch_loss(const Tensor<T>& logits, std::span<const T> target, Tensor<T>* grad_logits, T scale,
              const LossWeights& weights) {
  const T wce = T(weights.branch_ce);
  const T wd = T(weights.branch_dice);
  const T ce = cross_entropy_loss(logits, target, grad_logits, scale * wce);
  const std::vector<T> p = foreground_probs<T>(logits.span());
  std::vector<T> dp;
  if (grad_logits) dp.assign(p.size(), T(0));
  const T dice = dice_loss<T>(p, target, dp, {}, scale * wd);
  if (grad_logits) foreground_grad_to_logits<T>(logits.span(), dp, *grad_logits);
  return wce * ce + wd * dice;
}

namespace {

constexpr int kSobelX[3][3] = {{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}};
constexpr int kSobelY[3][3] = {{-1, -2, -1}, {0, 0, 0}, {1, 2, 1}};

}  // namespace

template <typename T>
SobelResult<T> sobel_edge_map(std::span<const T> probs, int height, int width) {
  require_same(probs.size(), std::size_t(height) * width, "sobel_edge_map");
  SobelResult<T> r;
  r.height = height;
  r.width = width;
  const std::size_t n = probs.size();
  r.gx.assign(n, T(0));
  r.gy.assign(n, T(0));
  r.magnitude.assign(n, T(0));
  r.edges.assign(n, T(0));
  const T root_delta = std::sqrt(T(kSobelDelta));
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      T gx = 0, gy = 0;
      for (int a = 0; a < 3; ++a) {
        const int yy = std::clamp(y + a - 1, 0, height - 1);
        for (int b = 0; b < 3; ++b) {
          const int xx = std::clamp(x + b - 1, 0, width - 1);
          const T v = probs[std::size_t(yy) * width + xx];
          gx += T(kSobelX[a][b]) * v;
          gy += T(kSobelY[a][b]) * v;
        }
      }
      const std::size_t i = std::size_t(y) * width + x;
      r.gx[i] = gx;
      r.gy[i] = gy;
      r.magnitude[i] = std::sqrt(gx * gx + gy * gy + T(kSobelDelta)) - root_delta;
      if (r.argmax < 0 || r.magnitude[i] > r.max) {
        r.max = r.magnitude[i];
        r.argmax = int(i);
      }
    }
  }
  if (r.max > T(0)) {
    for (std::size_t i = 0; i < n; ++i) r.edges[i] = r.magnitude[i] / r.max;
  }
  return r;
}

template <typename T>
std::vector<T> sobel_backward(const SobelResult<T>& f, std::span<const T> grad_edges) {
  const int h = f.height, w = f.width;
  const std::size_t n = std::size_t(h) * w;
  require_same(grad_edges.size(), n, "sobel_backward");
  std::vector<T> dp(n, T(0));
  if (!(f.max > T(0))) return dp;
  std::vector<T> dmag(n);
  T dmax = 0;
  for (std::size_t i = 0; i < n; ++i) {
    dmag[i] = grad_edges[i] / f.max;
    dmax -= grad_edges[i] * f.magnitude[i] / (f.max * f.max);
  }
  dmag[f.argmax] += dmax;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = std::size_t(y) * w + x;
      const T root = f.magnitude[i] + std::sqrt(T(kSobelDelta));
      const T dgx = dmag[i] * f.gx[i] / root;
      const T dgy = dmag[i] * f.gy[i] / root;
      if (dgx == T(0) && dgy == T(0)) continue;
      for (int a = 0; a < 3; ++a) {
        const int yy = std::clamp(y + a - 1, 0, h - 1);
        for (int b = 0; b < 3; ++b) {
          const int xx = std::clamp(x + b - 1, 0, w - 1);
          dp[std::size_t(yy) * w + xx] += T(kSobelX[a][b]) * dgx + T(kSobelY[a][b]) * dgy;
        }
      }
    }
  }
  return dp;
}

template <typename T>
T self_distillation_loss(const Tensor<T>& nuclei_logits, const Tensor<T>& edge_logits, int height,
                         int width, Tensor<T>* grad_nuclei, Tensor<T>* grad_edge, T scale) {
  require_same(nuclei_logits.size(), edge_logits.size(), "self_distillation_loss");
  require_same(nuclei_logits.size(), std::size_t(height) * width * 2, "self_distillation_loss");
  const std::vector<T> pn = foreground_probs<T>(nuclei_logits.span());
  const std::vector<T> pe = foreground_probs<T>(edge_logits.span());
  const SobelResult<T> contour = sobel_edge_map<T>(pn, height, width);
  std::vector<T> dcontour, dpe;
  if (grad_nuclei) dcontour.assign(pn.size(), T(0));
  if (grad_edge) dpe.assign(pe.size(), T(0));
  const T loss = dice_loss<T>(contour.edges, pe, dcontour, dpe, scale);
  if (grad_nuclei) {
    const std::vector<T> dpn = sobel_backward<T>(contour, dcontour);
    foreground_grad_to_logits<T>(nuclei_logits.span(), dpn, *grad_nuclei);
  }
  if (grad_edge) foreground_grad_to_logits<T>(edge_logits.span(), dpe, *grad_edge);
  return loss;
}

double gamma_sd_schedule(int epoch) {
  if (epoch < 0) epoch = 0;
  return std::max(0.4, 1.0 - 0.3 * double(epoch / 10));
}

template <typename T>
LossBreakdown total_loss(const TriPrediction<T>& pred, const TargetMaps<T>& targets, int epoch,
                         const LossOptions& options, std::array<Tensor<T>, kNumBranches>* grads) {
  const Tensor<T>& ref = pred.nuclei();
  if (ref.shape.size() != 4 || ref.cols() != kNumClasses) {
    throw ShapeError("total_loss: predictions must be [batch, h, w, 2], got " + shape_string(ref.shape));
  }
  const int batch = ref.dim(0), h = ref.dim(1), w = ref.dim(2);
  for (int b = 0; b < kNumBranches; ++b) {
    require_shape(pred.logits[b], ref.shape, "total_loss prediction");
    require_shape(targets[b], {batch, h, w}, "total_loss target");
  }
  const LossWeights& lw = options.weights;
  const double gamma_sd = options.sd_enabled ? gamma_sd_schedule(epoch) : 0.0;
  const double gammas[kNumBranches] = {lw.gamma_n, lw.gamma_e, lw.gamma_c};
  if (grads) {
    for (int b = 0; b < kNumBranches; ++b) (*grads)[b] = Tensor<T>(ref.shape);
  }
  const T inv_batch = T(1) / T(batch);
  double branch_sum[kNumBranches] = {0, 0, 0};
  double sd_sum = 0;
  for (int n = 0; n < batch; ++n) {
    for (int b = 0; b < kNumBranches; ++b) {
      const Tensor<T> logits = slice_image(pred.logits[b], n);
      Tensor<T> g;
      if (grads) g = Tensor<T>(logits.shape);
      branch_sum[b] += double(branch_loss(logits, target_image(targets[b], n), grads ? &g : nullptr,
                                          T(gammas[b]) * inv_batch, lw));
      if (grads) add_image((*grads)[b], n, g);
    }
    const Tensor<T> ln = slice_image(pred.nuclei(), n);
    const Tensor<T> le = slice_image(pred.edge(), n);
    const bool sd_grad = grads && gamma_sd > 0;
    Tensor<T> gn, ge;
    if (sd_grad) {
      gn = Tensor<T>(ln.shape);
      ge = Tensor<T>(le.shape);
    }
    sd_sum += double(self_distillation_loss(
        ln, le, h, w, sd_grad && !options.sd_stop_grad_nuclei ? &gn : nullptr,
        sd_grad ? &ge : nullptr, T(gamma_sd) * inv_batch));
    if (sd_grad) {
      if (!options.sd_stop_grad_nuclei) add_image((*grads)[kNuclei], n, gn);
      add_image((*grads)[kEdge], n, ge);
    }
  }
  LossBreakdown out;
  out.l_n = branch_sum[0] / batch;
  out.l_e = branch_sum[1] / batch;
  out.l_c = branch_sum[2] / batch;
  out.l_sd = sd_sum / batch;
  out.gamma_sd_used = gamma_sd;
  out.total = lw.gamma_n * out.l_n + lw.gamma_e * out.l_e + lw.gamma_c * out.l_c + gamma_sd * out.l_sd;
  return out;
}

#define TRINUSEG_INSTANTIATE(T)                                                                  \
  template T dice_loss<T>(std::span<const T>, std::span<const T>, std::span<T>, std::span<T>, T); \
  template T cross_entropy_loss<T>(const Tensor<T>&, std::span<const T>, Tensor<T>*, T);          \
  template std::vector<T> foreground_probs<T>(std::span<const T>);                               \
  template T branch_loss<T>(const Tensor<T>&, std::span<const T>, Tensor<T>*, T, const LossWeights&); \
  template SobelResult<T> sobel_edge_map<T>(std::span<const T>, int, int);                       \
  template std::vector<T> sobel_backward<T>(const SobelResult<T>&, std::span<const T>);          \
  template T self_distillation_loss<T>(const Tensor<T>&, const Tensor<T>&, int, int, Tensor<T>*, \
                                       Tensor<T>*, T);                                           \
  template LossBreakdown total_loss<T>(const TriPrediction<T>&, const TargetMaps<T>&, int,       \
                                       const LossOptions&, std::array<Tensor<T>, kNumBranches>*);

TRINUSEG_INSTANTIATE(float)
TRINUSEG_INSTANTIATE(double)

#undef TRINUSEG_INSTANTIATE

}  // namespace trinuseg
