#include <atomic>
#include <cmath>
#include <cstdlib>
#include <string>

#include "trinuseg/simd/kernels.hpp"

namespace trinuseg::simd {
namespace {

Isa probe() {
#if defined(__x86_64__) || defined(__i386__)
  if (avx2::compiled() && __builtin_cpu_supports("avx2") &&
      __builtin_cpu_supports("fma")) {
    return Isa::kAvx2;
  }
#endif
  return Isa::kScalar;
}

Isa initial_isa() {
  const char* env = std::getenv("TRINUSEG_ISA");
  if (env != nullptr && std::string(env) == "scalar") return Isa::kScalar;
  return detected_isa();
}

std::atomic<Isa>& active() {
  static std::atomic<Isa> isa{initial_isa()};
  return isa;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  return isa == Isa::kAvx2 ? "avx2" : "scalar";
}

Isa detected_isa() {
  static const Isa isa = probe();
  return isa;
}

Isa active_isa() { return active().load(std::memory_order_relaxed); }

void set_active_isa(Isa isa) {
  if (isa == Isa::kAvx2 && detected_isa() != Isa::kAvx2) isa = Isa::kScalar;
  active().store(isa, std::memory_order_relaxed);
}

void gemm(Trans ta, Trans tb, int m, int n, int k, const float* a, int lda,
          const float* b, int ldb, float* c, int ldc, bool accumulate) {
  if (m <= 0 || n <= 0) return;
  if (active_isa() == Isa::kAvx2) {
    avx2::gemm_f32(ta, tb, m, n, k, a, lda, b, ldb, c, ldc, accumulate);
  } else {
    scalar::gemm_f32(ta, tb, m, n, k, a, lda, b, ldb, c, ldc, accumulate);
  }
}

void gemm(Trans ta, Trans tb, int m, int n, int k, const double* a, int lda,
          const double* b, int ldb, double* c, int ldc, bool accumulate) {
  if (m <= 0 || n <= 0) return;
  if (active_isa() == Isa::kAvx2) {
    avx2::gemm_f64(ta, tb, m, n, k, a, lda, b, ldb, c, ldc, accumulate);
  } else {
    scalar::gemm_f64(ta, tb, m, n, k, a, lda, b, ldb, c, ldc, accumulate);
  }
}

void adam_update(float* param, const float* grad, float* m, float* v,
                 std::size_t n, const AdamStep& step) {
  if (active_isa() == Isa::kAvx2) {
    avx2::adam_f32(param, grad, m, v, n, step);
  } else {
    scalar::adam_f32(param, grad, m, v, n, step);
  }
}

// Gradient checks run in double; no vector path needed there.
void adam_update(double* param, const double* grad, double* m, double* v,
                 std::size_t n, const AdamStep& step) {
  const double lr = step.lr / step.bias_correction1;
  for (std::size_t i = 0; i < n; ++i) {
    const double g = grad[i];
    m[i] = step.beta1 * m[i] + (1.0 - step.beta1) * g;
    v[i] = step.beta2 * v[i] + (1.0 - step.beta2) * g * g;
    param[i] -= lr * m[i] / (std::sqrt(v[i] / step.bias_correction2) + step.eps);
  }
}

}  // namespace trinuseg::simd
