#include <cmath>
#include <cstring>

#include "trinuseg/simd/kernels.hpp"

namespace trinuseg::simd::scalar {
namespace {

template <typename T>
void gemm_ref(Trans ta, Trans tb, int m, int n, int k, const T* a, int lda,
              const T* b, int ldb, T* c, int ldc, bool accumulate) {
  if (!accumulate) {
    for (int i = 0; i < m; ++i) std::memset(c + std::size_t(i) * ldc, 0, sizeof(T) * n);
  }
  for (int i = 0; i < m; ++i) {
    T* crow = c + std::size_t(i) * ldc;
    for (int p = 0; p < k; ++p) {
      const T av = ta == Trans::kNo ? a[std::size_t(i) * lda + p]
                                    : a[std::size_t(p) * lda + i];
      if (av == T(0)) continue;
      if (tb == Trans::kNo) {
        const T* brow = b + std::size_t(p) * ldb;
        for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
      } else {
        for (int j = 0; j < n; ++j) crow[j] += av * b[std::size_t(j) * ldb + p];
      }
    }
  }
}

}  // namespace

void gemm_f32(Trans ta, Trans tb, int m, int n, int k, const float* a, int lda,
              const float* b, int ldb, float* c, int ldc, bool accumulate) {
  gemm_ref(ta, tb, m, n, k, a, lda, b, ldb, c, ldc, accumulate);
}

void gemm_f64(Trans ta, Trans tb, int m, int n, int k, const double* a,
              int lda, const double* b, int ldb, double* c, int ldc,
              bool accumulate) {
  gemm_ref(ta, tb, m, n, k, a, lda, b, ldb, c, ldc, accumulate);
}

void adam_f32(float* param, const float* grad, float* m, float* v,
              std::size_t n, const AdamStep& step) {
  const float b1 = float(step.beta1);
  const float b2 = float(step.beta2);
  const float lr = float(step.lr / step.bias_correction1);
  const float inv_bc2 = float(1.0 / step.bias_correction2);
  const float eps = float(step.eps);
  for (std::size_t i = 0; i < n; ++i) {
    const float g = grad[i];
    m[i] = b1 * m[i] + (1.0f - b1) * g;
    v[i] = b2 * v[i] + (1.0f - b2) * g * g;
    param[i] -= lr * m[i] / (std::sqrt(v[i] * inv_bc2) + eps);
  }
}

}  // namespace trinuseg::simd::scalar
