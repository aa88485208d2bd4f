// Non-x86 builds: the AVX2 entry points exist but are never selected.

#include "trinuseg/simd/kernels.hpp"

namespace trinuseg::simd::avx2 {

bool compiled() { return false; }

void gemm_f32(Trans ta, Trans tb, int m, int n, int k, const float* a, int lda,
              const float* b, int ldb, float* c, int ldc, bool accumulate) {
  scalar::gemm_f32(ta, tb, m, n, k, a, lda, b, ldb, c, ldc, accumulate);
}

void gemm_f64(Trans ta, Trans tb, int m, int n, int k, const double* a,
              int lda, const double* b, int ldb, double* c, int ldc,
              bool accumulate) {
  scalar::gemm_f64(ta, tb, m, n, k, a, lda, b, ldb, c, ldc, accumulate);
}

void adam_f32(float* param, const float* grad, float* m, float* v,
              std::size_t n, const AdamStep& step) {
  scalar::adam_f32(param, grad, m, v, n, step);
}

}  // namespace trinuseg::simd::avx2
