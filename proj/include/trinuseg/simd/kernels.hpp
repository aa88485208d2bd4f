#pragma once

// Dense arithmetic kernels with a scalar reference path and AVX2 variants.
// The active path is chosen once at runtime from CPUID; TRINUSEG_ISA=scalar
// forces the reference path.

#include <cstddef>
#include <string_view>

namespace trinuseg::simd {

enum class Isa { kScalar, kAvx2 };

std::string_view isa_name(Isa isa);

/// Best instruction set supported by the running CPU and compiled in.
Isa detected_isa();

/// Path used by the dispatching entry points below.
Isa active_isa();

/// Overrides the active path. Requests above detected_isa() are clamped.
void set_active_isa(Isa isa);

enum class Trans { kNo, kYes };

// Row-major C[m x n] (+)= op(A)[m x k] * op(B)[k x n].
// op(A) is A (m x k, leading dim lda) or A^T where A is k x m.
// When accumulate is false C is overwritten.
void gemm(Trans ta, Trans tb, int m, int n, int k, const float* a, int lda,
          const float* b, int ldb, float* c, int ldc, bool accumulate);
void gemm(Trans ta, Trans tb, int m, int n, int k, const double* a, int lda,
          const double* b, int ldb, double* c, int ldc, bool accumulate);

struct AdamStep {
  double lr;
  double beta1;
  double beta2;
  double eps;
  double bias_correction1;  // 1 - beta1^t
  double bias_correction2;  // 1 - beta2^t
};

// In-place Adam update over n contiguous parameters.
void adam_update(float* param, const float* grad, float* m, float* v,
                 std::size_t n, const AdamStep& step);
void adam_update(double* param, const double* grad, double* m, double* v,
                 std::size_t n, const AdamStep& step);

namespace scalar {
void gemm_f32(Trans ta, Trans tb, int m, int n, int k, const float* a, int lda,
              const float* b, int ldb, float* c, int ldc, bool accumulate);
void gemm_f64(Trans ta, Trans tb, int m, int n, int k, const double* a,
              int lda, const double* b, int ldb, double* c, int ldc,
              bool accumulate);
void adam_f32(float* param, const float* grad, float* m, float* v,
              std::size_t n, const AdamStep& step);
}  // namespace scalar

namespace avx2 {
bool compiled();
void gemm_f32(Trans ta, Trans tb, int m, int n, int k, const float* a, int lda,
              const float* b, int ldb, float* c, int ldc, bool accumulate);
void gemm_f64(Trans ta, Trans tb, int m, int n, int k, const double* a,
              int lda, const double* b, int ldb, double* c, int ldc,
              bool accumulate);
void adam_f32(float* param, const float* grad, float* m, float* v,
              std::size_t n, const AdamStep& step);
}  // namespace avx2

}  // namespace trinuseg::simd
