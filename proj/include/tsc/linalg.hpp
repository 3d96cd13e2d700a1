#pragma once

#include <cstddef>
#include <utility>
#include <vector>

namespace tsc {

using Vec = std::vector<double>;

// Dense row-major matrix with tight rows.  Deliberately minimal: storage,
// indexing, and a handful of constructors.  All algebra goes through the free
// functions below so that everything funnels into the kernel layer.
class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), d_(rows * cols, fill) {}

  static Mat identity(std::size_t n) {
    Mat m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return d_.size(); }

  double& operator()(std::size_t i, std::size_t j) { return d_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return d_[i * cols_ + j]; }

  double* data() { return d_.data(); }
  const double* data() const { return d_.data(); }
  double* row(std::size_t i) { return d_.data() + i * cols_; }
  const double* row(std::size_t i) const { return d_.data() + i * cols_; }

  bool same_shape(const Mat& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

 private:
  std::size_t rows_ = 0, cols_ = 0;
  Vec d_;
};

// --- elementwise / BLAS-1 style helpers -----------------------------------

double dot(const Vec& x, const Vec& y);
double norm2(const Vec& x);          // Euclidean norm
void scale(Vec& x, double a);
void axpy(double a, const Vec& x, Vec& y);  // y += a x

void scale(Mat& m, double a);
void add_scaled(Mat& y, double a, const Mat& x);  // y += a x
double frobenius_inner(const Mat& x, const Mat& y);
double frobenius_norm(const Mat& x);
double max_abs(const Mat& x);
double norm1(const Mat& x);  // max column abs sum
bool all_finite(const Mat& x);
bool all_finite(const Vec& x);

// --- BLAS-2/3 style -------------------------------------------------------

Mat transpose(const Mat& a);
// C = A B (+ beta C when accumulating into an existing C)
void matmul_into(const Mat& a, const Mat& b, Mat& c, double beta = 0.0);
Mat matmul(const Mat& a, const Mat& b);
Vec matvec(const Mat& a, const Vec& x);       // A x
Vec matvec_t(const Mat& a, const Vec& x);     // A^T x

Vec get_col(const Mat& a, std::size_t j);
void set_col(Mat& a, std::size_t j, const Vec& v);

// --- factorizations and solves --------------------------------------------

// LU with partial pivoting.  Throws NumericError on an exactly singular pivot.
struct LuFactors {
  Mat lu;                // L below diagonal (unit), U on and above
  std::vector<int> piv;  // row permutation applied to the input
};
LuFactors lu_factor(Mat a);
// Solve A X = B in place given factors of A; B holds X on return.
void lu_solve_inplace(const LuFactors& f, Mat& b);
Vec lu_solve(const LuFactors& f, const Vec& b);

// Cholesky solve for symmetric positive definite A.  Returns false (without
// touching x) when a pivot falls below rel_tol * max diagonal — the caller
// decides whether that means "skip" or "fall back to the eigensolver".
bool cholesky_solve(const Mat& a, const Vec& b, Vec& x, double rel_tol = 1e-12);

// Symmetric eigendecomposition (cyclic Jacobi): A = V diag(values) V^T.
// Ascending eigenvalues.  Intended for the small systems in this codebase.
struct SymEig {
  Mat vectors;  // columns are eigenvectors
  Vec values;
};
SymEig sym_eig(Mat a);

// Minimum-norm solution of the (possibly singular) symmetric system A x = b
// via the eigendecomposition: components on eigenvalues below
// rel_tol * max|eigenvalue| are dropped.
Vec sym_solve_minnorm(const Mat& a, const Vec& b, double rel_tol = 1e-10);

// Gauss-Legendre nodes and weights on [0, 1]; weights sum to 1.
std::vector<std::pair<double, double>> gauss_legendre_01(int n);

}  // namespace tsc
