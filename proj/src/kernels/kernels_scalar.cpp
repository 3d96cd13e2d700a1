#include "tsc/kernels.hpp"

// Reference lane.  Written for clarity and cache-friendly access order, not
// peak throughput; the equivalence tests hold the SIMD lanes to these results.

namespace tsc::kernels {
namespace {

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void scal_scalar(double a, double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

void gemv_scalar(const double* a, const double* x, double* y, std::size_t m,
                 std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) y[i] = dot_scalar(a + i * n, x, n);
}

void gemm_scalar(const double* a, const double* b, double* c, std::size_t m,
                 std::size_t k, std::size_t n, double beta) {
  // i-p-j order: the inner loop streams one row of B into one row of C.
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    if (beta == 0.0) {
      for (std::size_t j = 0; j < n; ++j) ci[j] = 0.0;
    } else if (beta != 1.0) {
      for (std::size_t j = 0; j < n; ++j) ci[j] *= beta;
    }
    const double* ai = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = ai[p];
      if (aip == 0.0) continue;
      const double* bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
}

}  // namespace

const Ops& scalar_ops() {
  static const Ops ops = {dot_scalar, axpy_scalar, scal_scalar, gemv_scalar,
                          gemm_scalar, "scalar"};
  return ops;
}

}  // namespace tsc::kernels
