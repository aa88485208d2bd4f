// Compiled with -mavx2 -mfma. Only reached through dispatch after CPUID says
// the host supports both.

#include <immintrin.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include "trinuseg/simd/kernels.hpp"

namespace trinuseg::simd::avx2 {
namespace {

struct F32 {
  using Scalar = float;
  using Reg = __m256;
  static constexpr int kLanes = 8;
  static Reg zero() { return _mm256_setzero_ps(); }
  static Reg load(const float* p) { return _mm256_load_ps(p); }
  static Reg loadu(const float* p) { return _mm256_loadu_ps(p); }
  static void storeu(float* p, Reg r) { _mm256_storeu_ps(p, r); }
  static Reg bcast(const float* p) { return _mm256_broadcast_ss(p); }
  static Reg fma(Reg a, Reg b, Reg c) { return _mm256_fmadd_ps(a, b, c); }
  static Reg add(Reg a, Reg b) { return _mm256_add_ps(a, b); }
};

struct F64 {
  using Scalar = double;
  using Reg = __m256d;
  static constexpr int kLanes = 4;
  static Reg zero() { return _mm256_setzero_pd(); }
  static Reg load(const double* p) { return _mm256_load_pd(p); }
  static Reg loadu(const double* p) { return _mm256_loadu_pd(p); }
  static void storeu(double* p, Reg r) { _mm256_storeu_pd(p, r); }
  static Reg bcast(const double* p) { return _mm256_broadcast_sd(p); }
  static Reg fma(Reg a, Reg b, Reg c) { return _mm256_fmadd_pd(a, b, c); }
  static Reg add(Reg a, Reg b) { return _mm256_add_pd(a, b); }
};

constexpr int kMr = 6;
constexpr int kKc = 256;
constexpr int kMc = 96;
constexpr int kNc = 1024;

template <typename T>
struct AlignedBuffer {
  explicit AlignedBuffer(std::size_t n) : size(n) {
    data = static_cast<T*>(std::aligned_alloc(64, ((n * sizeof(T) + 63) / 64) * 64));
  }
  ~AlignedBuffer() { std::free(data); }
  AlignedBuffer(const AlignedBuffer&) = delete;
  AlignedBuffer& operator=(const AlignedBuffer&) = delete;
  T* data;
  std::size_t size;
};

template <typename T>
void pack_a(Trans ta, const T* a, int lda, int i0, int mc, int p0, int kc,
            T* dst) {
  for (int ir = 0; ir < mc; ir += kMr) {
    const int rows = std::min(kMr, mc - ir);
    for (int p = 0; p < kc; ++p) {
      T* out = dst + (std::size_t(ir / kMr) * kc + p) * kMr;
      for (int r = 0; r < kMr; ++r) {
        if (r < rows) {
          const int i = i0 + ir + r;
          const int pp = p0 + p;
          out[r] = ta == Trans::kNo ? a[std::size_t(i) * lda + pp]
                                    : a[std::size_t(pp) * lda + i];
        } else {
          out[r] = T(0);
        }
      }
    }
  }
}

template <typename T, int Nr>
void pack_b(Trans tb, const T* b, int ldb, int j0, int nc, int p0, int kc,
            T* dst) {
  for (int jr = 0; jr < nc; jr += Nr) {
    const int cols = std::min(Nr, nc - jr);
    T* panel = dst + std::size_t(jr / Nr) * kc * Nr;
    if (tb == Trans::kNo) {
      for (int p = 0; p < kc; ++p) {
        const T* src = b + std::size_t(p0 + p) * ldb + j0 + jr;
        T* out = panel + std::size_t(p) * Nr;
        std::memcpy(out, src, sizeof(T) * cols);
        for (int c = cols; c < Nr; ++c) out[c] = T(0);
      }
    } else {
      for (int c = 0; c < Nr; ++c) {
        if (c < cols) {
          const T* src = b + std::size_t(j0 + jr + c) * ldb + p0;
          for (int p = 0; p < kc; ++p) panel[std::size_t(p) * Nr + c] = src[p];
        } else {
          for (int p = 0; p < kc; ++p) panel[std::size_t(p) * Nr + c] = T(0);
        }
      }
    }
  }
}

// 6 x (2 * lanes) register tile; C tile is always accumulated into.
template <typename V>
void micro_kernel(int kc, const typename V::Scalar* ap,
                  const typename V::Scalar* bp, typename V::Scalar* c, int ldc,
                  int rows, int cols) {
  using T = typename V::Scalar;
  constexpr int kNr = 2 * V::kLanes;
  typename V::Reg acc[kMr][2];
  for (int r = 0; r < kMr; ++r) acc[r][0] = acc[r][1] = V::zero();
  for (int p = 0; p < kc; ++p) {
    const auto b0 = V::load(bp);
    const auto b1 = V::load(bp + V::kLanes);
    for (int r = 0; r < kMr; ++r) {
      const auto av = V::bcast(ap + r);
      acc[r][0] = V::fma(av, b0, acc[r][0]);
      acc[r][1] = V::fma(av, b1, acc[r][1]);
    }
    ap += kMr;
    bp += kNr;
  }
  if (rows == kMr && cols == kNr) {
    for (int r = 0; r < kMr; ++r) {
      T* crow = c + std::size_t(r) * ldc;
      V::storeu(crow, V::add(V::loadu(crow), acc[r][0]));
      V::storeu(crow + V::kLanes, V::add(V::loadu(crow + V::kLanes), acc[r][1]));
    }
    return;
  }
  alignas(64) T tile[kMr][kNr];
  for (int r = 0; r < kMr; ++r) {
    V::storeu(tile[r], acc[r][0]);
    V::storeu(tile[r] + V::kLanes, acc[r][1]);
  }
  for (int r = 0; r < rows; ++r) {
    T* crow = c + std::size_t(r) * ldc;
    for (int j = 0; j < cols; ++j) crow[j] += tile[r][j];
  }
}

template <typename V>
void gemm_blocked(Trans ta, Trans tb, int m, int n, int k,
                  const typename V::Scalar* a, int lda,
                  const typename V::Scalar* b, int ldb, typename V::Scalar* c,
                  int ldc, bool accumulate) {
  using T = typename V::Scalar;
  constexpr int kNr = 2 * V::kLanes;
  if (!accumulate) {
    for (int i = 0; i < m; ++i) std::memset(c + std::size_t(i) * ldc, 0, sizeof(T) * n);
  }
  if (k <= 0) return;
  thread_local std::vector<T> scratch;
  const std::size_t a_size = std::size_t(kMc) * kKc;
  const std::size_t b_size = std::size_t(kNc) * kKc;
  if (scratch.size() < a_size + b_size + 16) scratch.resize(a_size + b_size + 16);
  auto align = [](T* p) {
    auto addr = reinterpret_cast<std::uintptr_t>(p);
    return reinterpret_cast<T*>((addr + 63) & ~std::uintptr_t(63));
  };
  T* bpack = align(scratch.data());
  T* apack = bpack + b_size;

  for (int jc = 0; jc < n; jc += kNc) {
    const int nc = std::min(kNc, n - jc);
    for (int pc = 0; pc < k; pc += kKc) {
      const int kc = std::min(kKc, k - pc);
      pack_b<T, kNr>(tb, b, ldb, jc, nc, pc, kc, bpack);
      for (int ic = 0; ic < m; ic += kMc) {
        const int mc = std::min(kMc, m - ic);
        pack_a<T>(ta, a, lda, ic, mc, pc, kc, apack);
        for (int jr = 0; jr < nc; jr += kNr) {
          const T* bp = bpack + std::size_t(jr / kNr) * kc * kNr;
          for (int ir = 0; ir < mc; ir += kMr) {
            const T* ap = apack + std::size_t(ir / kMr) * kc * kMr;
            T* ctile = c + std::size_t(ic + ir) * ldc + jc + jr;
            micro_kernel<V>(kc, ap, bp, ctile, ldc, std::min(kMr, mc - ir),
                            std::min(kNr, nc - jr));
          }
        }
      }
    }
  }
}

}  // namespace

bool compiled() { return true; }

void gemm_f32(Trans ta, Trans tb, int m, int n, int k, const float* a, int lda,
              const float* b, int ldb, float* c, int ldc, bool accumulate) {
  gemm_blocked<F32>(ta, tb, m, n, k, a, lda, b, ldb, c, ldc, accumulate);
}

void gemm_f64(Trans ta, Trans tb, int m, int n, int k, const double* a,
              int lda, const double* b, int ldb, double* c, int ldc,
              bool accumulate) {
  gemm_blocked<F64>(ta, tb, m, n, k, a, lda, b, ldb, c, ldc, accumulate);
}

void adam_f32(float* param, const float* grad, float* m, float* v,
              std::size_t n, const AdamStep& step) {
  const float b1 = float(step.beta1);
  const float b2 = float(step.beta2);
  const float lr = float(step.lr / step.bias_correction1);
  const float inv_bc2 = float(1.0 / step.bias_correction2);
  const float eps = float(step.eps);
  const __m256 vb1 = _mm256_set1_ps(b1);
  const __m256 vb1c = _mm256_set1_ps(1.0f - b1);
  const __m256 vb2 = _mm256_set1_ps(b2);
  const __m256 vb2c = _mm256_set1_ps(1.0f - b2);
  const __m256 vlr = _mm256_set1_ps(lr);
  const __m256 vbc2 = _mm256_set1_ps(inv_bc2);
  const __m256 veps = _mm256_set1_ps(eps);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 g = _mm256_loadu_ps(grad + i);
    // Same operation order as the scalar path, no contraction.
    __m256 mi = _mm256_add_ps(_mm256_mul_ps(vb1, _mm256_loadu_ps(m + i)),
                              _mm256_mul_ps(vb1c, g));
    __m256 vi = _mm256_add_ps(_mm256_mul_ps(vb2, _mm256_loadu_ps(v + i)),
                              _mm256_mul_ps(_mm256_mul_ps(vb2c, g), g));
    _mm256_storeu_ps(m + i, mi);
    _mm256_storeu_ps(v + i, vi);
    const __m256 denom =
        _mm256_add_ps(_mm256_sqrt_ps(_mm256_mul_ps(vi, vbc2)), veps);
    const __m256 upd = _mm256_div_ps(_mm256_mul_ps(vlr, mi), denom);
    _mm256_storeu_ps(param + i, _mm256_sub_ps(_mm256_loadu_ps(param + i), upd));
  }
  for (; i < n; ++i) {
    const float g = grad[i];
    m[i] = b1 * m[i] + (1.0f - b1) * g;
    v[i] = b2 * v[i] + (1.0f - b2) * g * g;
    param[i] -= lr * m[i] / (std::sqrt(v[i] * inv_bc2) + eps);
  }
}

}  // namespace trinuseg::simd::avx2
