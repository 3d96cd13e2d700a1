#pragma once

#include <cstddef>

namespace tsc::kernels {

// Data-parallel inner loops used by the dense linear algebra layer.  Each
// operation has a scalar reference implementation and may have SIMD variants;
// the active set is chosen once at runtime from CPU features.  All matrices
// are row-major with tight rows (leading dimension == column count).
struct Ops {
  // sum_i x[i] * y[i]
  double (*dot)(const double* x, const double* y, std::size_t n);
  // y[i] += a * x[i]
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  // x[i] *= a
  void (*scal)(double a, double* x, std::size_t n);
  // y = A x for A (m x n)
  void (*gemv)(const double* a, const double* x, double* y, std::size_t m,
               std::size_t n);
  // C = A B + beta * C for A (m x k), B (k x n), C (m x n); beta is 0 or 1 in
  // practice but any value works.
  void (*gemm)(const double* a, const double* b, double* c, std::size_t m,
               std::size_t k, std::size_t n, double beta);
  const char* name;
};

// Portable reference lane.  Always available; the ground truth for
// equivalence tests.
const Ops& scalar_ops();

// True when the running CPU supports the AVX2+FMA lane.
bool avx2_available();

// AVX2+FMA lane.  Only valid to call through when avx2_available().
const Ops& avx2_ops();

// The lane selected for this process: best available, unless the TSC_KERNELS
// environment variable ("scalar" or "avx2") forces one.  An unsupported or
// unknown request falls back to scalar with a one-time stderr warning.
const Ops& ops();

}  // namespace tsc::kernels
