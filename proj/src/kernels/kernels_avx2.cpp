#include "tsc/kernels.hpp"

// AVX2+FMA lane.  This translation unit is compiled with -mavx2 -mfma on
// x86-64 and must only be entered after a runtime cpuid check (see
// dispatch.cpp).  Results differ from the scalar lane only by floating-point
// reassociation and FMA contraction; the equivalence tests bound that drift.

#if defined(__x86_64__) || defined(__i386__)

#include <immintrin.h>

namespace tsc::kernels {
namespace {

inline double hsum4(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d swapped = _mm_unpackhi_pd(lo, lo);
  lo = _mm_add_sd(lo, swapped);
  return _mm_cvtsd_f64(lo);
}

double dot_avx2(const double* x, const double* y, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  __m256d acc2 = _mm256_setzero_pd();
  __m256d acc3 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
    acc2 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 8), _mm256_loadu_pd(y + i + 8), acc2);
    acc3 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 12), _mm256_loadu_pd(y + i + 12), acc3);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
  }
  double acc = hsum4(_mm256_add_pd(_mm256_add_pd(acc0, acc1), _mm256_add_pd(acc2, acc3)));
  for (; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    _mm256_storeu_pd(y + i + 4, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4)));
  }
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void scal_avx2(double a, double* x, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
  }
  for (; i < n; ++i) x[i] *= a;
}

void gemv_avx2(const double* a, const double* x, double* y, std::size_t m,
               std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) y[i] = dot_avx2(a + i * n, x, n);
}

// 4x8 register tile: 4 rows of C, 8 columns (two 256-bit vectors), broadcast
// from A, FMA against streamed rows of B.  No packing — the matrices here are
// at most a few hundred per side and rows are already contiguous.
void gemm_avx2(const double* a, const double* b, double* c, std::size_t m,
               std::size_t k, std::size_t n, double beta) {
  const std::size_t m4 = m - m % 4;
  const std::size_t n8 = n - n % 8;

  for (std::size_t i0 = 0; i0 < m4; i0 += 4) {
    const double* a0 = a + (i0 + 0) * k;
    const double* a1 = a + (i0 + 1) * k;
    const double* a2 = a + (i0 + 2) * k;
    const double* a3 = a + (i0 + 3) * k;
    for (std::size_t j0 = 0; j0 < n8; j0 += 8) {
      __m256d c00 = _mm256_setzero_pd(), c01 = _mm256_setzero_pd();
      __m256d c10 = _mm256_setzero_pd(), c11 = _mm256_setzero_pd();
      __m256d c20 = _mm256_setzero_pd(), c21 = _mm256_setzero_pd();
      __m256d c30 = _mm256_setzero_pd(), c31 = _mm256_setzero_pd();
      const double* bp = b + j0;
      for (std::size_t p = 0; p < k; ++p, bp += n) {
        const __m256d b0 = _mm256_loadu_pd(bp);
        const __m256d b1 = _mm256_loadu_pd(bp + 4);
        __m256d v;
        v = _mm256_set1_pd(a0[p]);
        c00 = _mm256_fmadd_pd(v, b0, c00);
        c01 = _mm256_fmadd_pd(v, b1, c01);
        v = _mm256_set1_pd(a1[p]);
        c10 = _mm256_fmadd_pd(v, b0, c10);
        c11 = _mm256_fmadd_pd(v, b1, c11);
        v = _mm256_set1_pd(a2[p]);
        c20 = _mm256_fmadd_pd(v, b0, c20);
        c21 = _mm256_fmadd_pd(v, b1, c21);
        v = _mm256_set1_pd(a3[p]);
        c30 = _mm256_fmadd_pd(v, b0, c30);
        c31 = _mm256_fmadd_pd(v, b1, c31);
      }
      double* crow;
      const __m256d vb = _mm256_set1_pd(beta);
      auto store = [&](double* dst, __m256d acc0, __m256d acc1) {
        if (beta == 0.0) {
          _mm256_storeu_pd(dst, acc0);
          _mm256_storeu_pd(dst + 4, acc1);
        } else {
          _mm256_storeu_pd(dst, _mm256_fmadd_pd(vb, _mm256_loadu_pd(dst), acc0));
          _mm256_storeu_pd(dst + 4, _mm256_fmadd_pd(vb, _mm256_loadu_pd(dst + 4), acc1));
        }
      };
      crow = c + (i0 + 0) * n + j0;
      store(crow, c00, c01);
      crow = c + (i0 + 1) * n + j0;
      store(crow, c10, c11);
      crow = c + (i0 + 2) * n + j0;
      store(crow, c20, c21);
      crow = c + (i0 + 3) * n + j0;
      store(crow, c30, c31);
    }
  }

  // Column tail (n8..n) for the tiled rows, then full remaining rows.
  auto edge_rows = [&](std::size_t ibeg, std::size_t iend, std::size_t jbeg,
                       std::size_t jend) {
    for (std::size_t i = ibeg; i < iend; ++i) {
      double* ci = c + i * n;
      for (std::size_t j = jbeg; j < jend; ++j) {
        ci[j] = (beta == 0.0) ? 0.0 : beta * ci[j];
      }
      const double* ai = a + i * k;
      for (std::size_t p = 0; p < k; ++p) {
        const double aip = ai[p];
        const double* bp = b + p * n;
        for (std::size_t j = jbeg; j < jend; ++j) ci[j] += aip * bp[j];
      }
    }
  };
  if (n8 < n) edge_rows(0, m4, n8, n);
  if (m4 < m) edge_rows(m4, m, 0, n);
}

}  // namespace

const Ops& avx2_ops() {
  static const Ops ops = {dot_avx2, axpy_avx2, scal_avx2, gemv_avx2,
                          gemm_avx2, "avx2"};
  return ops;
}

}  // namespace tsc::kernels

#else  // non-x86: the AVX2 lane is never selectable; alias the reference lane.

namespace tsc::kernels {
const Ops& avx2_ops() { return scalar_ops(); }
}  // namespace tsc::kernels

#endif
