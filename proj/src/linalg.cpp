#include "tsc/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <stdexcept>

#include "tsc/errors.hpp"
#include "tsc/kernels.hpp"

namespace tsc {

namespace {
const kernels::Ops& K() { return kernels::ops(); }

void require(bool cond, const char* what) {
  if (!cond) throw std::invalid_argument(what);
}
}  // namespace

double dot(const Vec& x, const Vec& y) {
  require(x.size() == y.size(), "dot: size mismatch");
  return K().dot(x.data(), y.data(), x.size());
}

double norm2(const Vec& x) {
  return std::sqrt(K().dot(x.data(), x.data(), x.size()));
}

void scale(Vec& x, double a) { K().scal(a, x.data(), x.size()); }

void axpy(double a, const Vec& x, Vec& y) {
  require(x.size() == y.size(), "axpy: size mismatch");
  K().axpy(a, x.data(), y.data(), x.size());
}

void scale(Mat& m, double a) { K().scal(a, m.data(), m.size()); }

void add_scaled(Mat& y, double a, const Mat& x) {
  require(y.same_shape(x), "add_scaled: shape mismatch");
  K().axpy(a, x.data(), y.data(), y.size());
}

double frobenius_inner(const Mat& x, const Mat& y) {
  require(x.same_shape(y), "frobenius_inner: shape mismatch");
  return K().dot(x.data(), y.data(), x.size());
}

double frobenius_norm(const Mat& x) {
  return std::sqrt(K().dot(x.data(), x.data(), x.size()));
}

double max_abs(const Mat& x) {
  double m = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    m = std::max(m, std::fabs(x.data()[i]));
  return m;
}

double norm1(const Mat& x) {
  double best = 0.0;
  for (std::size_t j = 0; j < x.cols(); ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) s += std::fabs(x(i, j));
    best = std::max(best, s);
  }
  return best;
}

bool all_finite(const Mat& x) {
  for (std::size_t i = 0; i < x.size(); ++i)
    if (!std::isfinite(x.data()[i])) return false;
  return true;
}

bool all_finite(const Vec& x) {
  for (double v : x)
    if (!std::isfinite(v)) return false;
  return true;
}

Mat transpose(const Mat& a) {
  Mat t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

void matmul_into(const Mat& a, const Mat& b, Mat& c, double beta) {
  require(a.cols() == b.rows(), "matmul: inner dimension mismatch");
  require(c.rows() == a.rows() && c.cols() == b.cols(),
          "matmul: output shape mismatch");
  K().gemm(a.data(), b.data(), c.data(), a.rows(), a.cols(), b.cols(), beta);
}

Mat matmul(const Mat& a, const Mat& b) {
  Mat c(a.rows(), b.cols());
  matmul_into(a, b, c, 0.0);
  return c;
}

Vec matvec(const Mat& a, const Vec& x) {
  require(a.cols() == x.size(), "matvec: dimension mismatch");
  Vec y(a.rows());
  K().gemv(a.data(), x.data(), y.data(), a.rows(), a.cols());
  return y;
}

Vec matvec_t(const Mat& a, const Vec& x) {
  require(a.rows() == x.size(), "matvec_t: dimension mismatch");
  Vec y(a.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i)
    K().axpy(x[i], a.row(i), y.data(), a.cols());
  return y;
}

Vec get_col(const Mat& a, std::size_t j) {
  Vec v(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) v[i] = a(i, j);
  return v;
}

void set_col(Mat& a, std::size_t j, const Vec& v) {
  require(v.size() == a.rows(), "set_col: dimension mismatch");
  for (std::size_t i = 0; i < a.rows(); ++i) a(i, j) = v[i];
}

// --- LU ---------------------------------------------------------------------

LuFactors lu_factor(Mat a) {
  require(a.rows() == a.cols(), "lu_factor: matrix must be square");
  const std::size_t n = a.rows();
  std::vector<int> piv(n);
  for (std::size_t col = 0; col < n; ++col) {
    // pivot: largest magnitude on or below the diagonal
    std::size_t p = col;
    double best = std::fabs(a(col, col));
    for (std::size_t i = col + 1; i < n; ++i) {
      double v = std::fabs(a(i, col));
      if (v > best) {
        best = v;
        p = i;
      }
    }
    if (best == 0.0) throw NumericError("lu_factor: singular matrix");
    piv[col] = static_cast<int>(p);
    if (p != col)
      for (std::size_t j = 0; j < n; ++j) std::swap(a(col, j), a(p, j));
    const double inv = 1.0 / a(col, col);
    for (std::size_t i = col + 1; i < n; ++i) {
      const double l = a(i, col) * inv;
      a(i, col) = l;
      if (l != 0.0)
        K().axpy(-l, a.row(col) + col + 1, a.row(i) + col + 1, n - col - 1);
    }
  }
  return {std::move(a), std::move(piv)};
}

void lu_solve_inplace(const LuFactors& f, Mat& b) {
  const std::size_t n = f.lu.rows();
  require(b.rows() == n, "lu_solve: rhs dimension mismatch");
  const std::size_t m = b.cols();
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t p = static_cast<std::size_t>(f.piv[i]);
    if (p != i)
      for (std::size_t j = 0; j < m; ++j) std::swap(b(i, j), b(p, j));
  }
  // forward: L y = P b
  for (std::size_t i = 1; i < n; ++i)
    for (std::size_t kk = 0; kk < i; ++kk)
      if (f.lu(i, kk) != 0.0) K().axpy(-f.lu(i, kk), b.row(kk), b.row(i), m);
  // backward: U x = y
  for (std::size_t ii = n; ii-- > 0;) {
    for (std::size_t kk = ii + 1; kk < n; ++kk)
      if (f.lu(ii, kk) != 0.0) K().axpy(-f.lu(ii, kk), b.row(kk), b.row(ii), m);
    K().scal(1.0 / f.lu(ii, ii), b.row(ii), m);
  }
}

Vec lu_solve(const LuFactors& f, const Vec& b) {
  Mat rhs(b.size(), 1);
  for (std::size_t i = 0; i < b.size(); ++i) rhs(i, 0) = b[i];
  lu_solve_inplace(f, rhs);
  Vec x(b.size());
  for (std::size_t i = 0; i < b.size(); ++i) x[i] = rhs(i, 0);
  return x;
}

// --- Cholesky ---------------------------------------------------------------

bool cholesky_solve(const Mat& a, const Vec& b, Vec& x, double rel_tol) {
  require(a.rows() == a.cols(), "cholesky_solve: matrix must be square");
  require(b.size() == a.rows(), "cholesky_solve: rhs dimension mismatch");
  const std::size_t n = a.rows();
  double max_diag = 0.0;
  for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, a(i, i));
  if (!(max_diag > 0.0)) return false;
  const double floor = rel_tol * max_diag;

  Mat l(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = a(i, j) - K().dot(l.row(i), l.row(j), j);
      if (i == j) {
        if (s <= floor) return false;
        l(i, i) = std::sqrt(s);
      } else {
        l(i, j) = s / l(j, j);
      }
    }
  }
  // L y = b ; L^T x = y
  Vec y(n);
  for (std::size_t i = 0; i < n; ++i)
    y[i] = (b[i] - K().dot(l.row(i), y.data(), i)) / l(i, i);
  x.assign(n, 0.0);
  for (std::size_t ii = n; ii-- > 0;) {
    double s = y[ii];
    for (std::size_t kk = ii + 1; kk < n; ++kk) s -= l(kk, ii) * x[kk];
    x[ii] = s / l(ii, ii);
  }
  return true;
}

// --- Jacobi eigensolver -----------------------------------------------------

SymEig sym_eig(Mat a) {
  require(a.rows() == a.cols(), "sym_eig: matrix must be square");
  const std::size_t n = a.rows();
  Mat v = Mat::identity(n);
  if (n == 0) return {std::move(v), {}};

  double off = 0.0, total = 0.0;
  auto measure = [&] {
    off = 0.0;
    total = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        total += a(i, j) * a(i, j);
        if (i != j) off += a(i, j) * a(i, j);
      }
  };
  measure();
  const double tol = 1e-28 * std::max(total, 1e-300);

  for (int sweep = 0; sweep < 100 && off > tol; ++sweep) {
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double app = a(p, p), aqq = a(q, q);
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t i = 0; i < n; ++i) {
          const double aip = a(i, p), aiq = a(i, q);
          a(i, p) = c * aip - s * aiq;
          a(i, q) = s * aip + c * aiq;
        }
        for (std::size_t j = 0; j < n; ++j) {
          const double apj = a(p, j), aqj = a(q, j);
          a(p, j) = c * apj - s * aqj;
          a(q, j) = s * apj + c * aqj;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double vip = v(i, p), viq = v(i, q);
          v(i, p) = c * vip - s * viq;
          v(i, q) = s * vip + c * viq;
        }
      }
    }
    measure();
  }

  Vec values(n);
  for (std::size_t i = 0; i < n; ++i) values[i] = a(i, i);
  // sort ascending, permuting eigenvector columns to match
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return values[x] < values[y]; });
  Mat vs(n, n);
  Vec ws(n);
  for (std::size_t j = 0; j < n; ++j) {
    ws[j] = values[order[j]];
    for (std::size_t i = 0; i < n; ++i) vs(i, j) = v(i, order[j]);
  }
  return {std::move(vs), std::move(ws)};
}

Vec sym_solve_minnorm(const Mat& a, const Vec& b, double rel_tol) {
  require(b.size() == a.rows(), "sym_solve_minnorm: rhs dimension mismatch");
  SymEig e = sym_eig(a);
  const std::size_t n = b.size();
  double max_ev = 0.0;
  for (double w : e.values) max_ev = std::max(max_ev, std::fabs(w));
  const double cut = rel_tol * std::max(max_ev, 1e-300);
  Vec x(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    if (std::fabs(e.values[j]) <= cut) continue;
    const double coef = K().dot(get_col(e.vectors, j).data(), b.data(), n) / e.values[j];
    for (std::size_t i = 0; i < n; ++i) x[i] += coef * e.vectors(i, j);
  }
  return x;
}

// --- Gauss-Legendre ---------------------------------------------------------

std::vector<std::pair<double, double>> gauss_legendre_01(int n) {
  require(n >= 1, "gauss_legendre_01: need at least one node");
  std::vector<std::pair<double, double>> out(n);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    // Chebyshev initial guess, then Newton on P_n.
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (x * p0 - p1) / (x * x - 1.0);
      double dx = p0 / pp;
      x -= dx;
      if (std::fabs(dx) < 1e-15) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * pp * pp);
    // map [-1,1] -> [0,1]; weights scale by 1/2 so they sum to 1
    out[i] = {0.5 * (1.0 - x), 0.5 * w};
    out[n - 1 - i] = {0.5 * (1.0 + x), 0.5 * w};
  }
  return out;
}

}  // namespace tsc
