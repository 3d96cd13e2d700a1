#include "tsc/liegroup.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "tsc/errors.hpp"
#include "tsc/kernels.hpp"

namespace tsc {

namespace {
constexpr double kPi = 3.14159265358979323846264338327950288;
constexpr double kExpEntryLimit = 1e12;
}  // namespace

double TransformParams::max_abs() const {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::fabs(v));
  return m;
}

void TransformParams::clamp(double cap) {
  for (double& v : x) v = std::min(cap, std::max(-cap, v));
}

Mat spectral_derivative_1d(int n) {
  if (n < 1) throw std::invalid_argument("spectral_derivative_1d: n >= 1");
  Mat d(n, n);
  // Closed forms for the derivative of the periodic trigonometric interpolant
  // on unit-spaced samples (period n).  Even n uses the cotangent form, which
  // corresponds to zeroing the Nyquist mode; odd n uses the cosecant form.
  for (int j = 0; j < n; ++j) {
    for (int l = 0; l < n; ++l) {
      if (j == l) continue;
      const int diff = j - l;
      const double sign = (diff % 2 == 0) ? 1.0 : -1.0;
      if (n % 2 == 0) {
        d(j, l) = sign * (kPi / n) / std::tan(kPi * diff / n);
      } else {
        d(j, l) = sign * (kPi / n) / std::sin(kPi * diff / n);
      }
    }
  }
  return d;
}

GeneratorSet build_generators(int side) {
  if (side < 1) throw std::invalid_argument("build_generators: side >= 1");
  GeneratorSet gs;
  gs.side_ = side;
  const std::size_t m = gs.dim();
  const Mat d1 = spectral_derivative_1d(side);

  // Dx acts along columns within each row, Dy along rows within each column.
  Mat dx(m, m), dy(m, m);
  for (int r = 0; r < side; ++r)
    for (int c = 0; c < side; ++c) {
      const std::size_t row = static_cast<std::size_t>(r) * side + c;
      for (int l = 0; l < side; ++l) {
        dx(row, static_cast<std::size_t>(r) * side + l) = d1(c, l);
        dy(row, static_cast<std::size_t>(l) * side + c) = d1(r, l);
      }
    }

  // Flow fields (u, v) per generator at centered pixel coordinates:
  // G = -(U Dx + V Dy) with U, V diagonal, so row `i` of G is
  // -u(i) * Dx_row(i) - v(i) * Dy_row(i).
  const double center = (side - 1) / 2.0;
  for (int j = 0; j < kNumGenerators; ++j) gs.gens_[j] = Mat(m, m);
  const auto& kop = kernels::ops();
  for (int r = 0; r < side; ++r) {
    for (int c = 0; c < side; ++c) {
      const std::size_t row = static_cast<std::size_t>(r) * side + c;
      const double xc = c - center;
      const double yc = r - center;
      const double u[kNumGenerators] = {1.0, 0.0, -yc, xc, xc, yc};
      const double v[kNumGenerators] = {0.0, 1.0, xc, yc, -yc, xc};
      for (int j = 0; j < kNumGenerators; ++j) {
        double* out = gs.gens_[j].row(row);
        if (u[j] != 0.0) kop.axpy(-u[j], dx.row(row), out, m);
        if (v[j] != 0.0) kop.axpy(-v[j], dy.row(row), out, m);
      }
    }
  }
  return gs;
}

Mat GeneratorSet::weighted_sum(const TransformParams& p) const {
  Mat a(dim(), dim());
  for (int j = 0; j < kNumGenerators; ++j)
    if (p.x[j] != 0.0) add_scaled(a, p.x[j], gens_[j]);
  return a;
}

namespace {

// Diagonal Pade coefficient tables and 1-norm thresholds (double precision).
struct PadeTable {
  int degree;
  double theta;
  const double* b;
};
const double kB3[] = {120, 60, 12, 1};
const double kB5[] = {30240, 15120, 3360, 420, 30, 1};
const double kB7[] = {17297280, 8648640, 1995840, 277200, 25200, 1512, 56, 1};
const double kB9[] = {17643225600, 8821612800, 2075673600, 302702400, 30270240,
                      2162160, 110880, 3960, 90, 1};
const double kB13[] = {64764752532480000, 32382376266240000, 7771770303897600,
                       1187353796428800, 129060195264000, 10559470521600,
                       670442572800, 33522128640, 1323241920, 40840800, 960960,
                       16380, 182, 1};
const PadeTable kPade[] = {
    {3, 1.495585217958292e-2, kB3},
    {5, 2.539398330063230e-1, kB5},
    {7, 9.504178996162932e-1, kB7},
    {9, 2.097847961257068e0, kB9},
    {13, 5.371920351148152e0, kB13},
};

Mat pade_exp(const Mat& a, const PadeTable& t) {
  const std::size_t n = a.rows();
  const Mat a2 = matmul(a, a);
  Mat u(n, n), v(n, n);
  if (t.degree <= 9) {
    // powers a2, a4, (a6, a8) as needed
    std::vector<Mat> pows;  // pows[i] = A^(2i), starting at A^0
    pows.push_back(Mat::identity(n));
    pows.push_back(a2);
    for (int i = 2; 2 * i <= t.degree - 1; ++i)
      pows.push_back(matmul(pows.back(), a2));
    Mat usum(n, n), vsum(n, n);
    for (int i = 0; 2 * i + 1 <= t.degree; ++i)
      add_scaled(usum, t.b[2 * i + 1], pows[i]);
    for (int i = 0; 2 * i <= t.degree; ++i)
      add_scaled(vsum, t.b[2 * i], pows[i]);
    u = matmul(a, usum);
    v = std::move(vsum);
  } else {
    const Mat a4 = matmul(a2, a2);
    const Mat a6 = matmul(a2, a4);
    Mat w1(n, n), w2(n, n);
    add_scaled(w1, t.b[13], a6);
    add_scaled(w1, t.b[11], a4);
    add_scaled(w1, t.b[9], a2);
    Mat w = matmul(a6, w1);
    add_scaled(w, t.b[7], a6);
    add_scaled(w, t.b[5], a4);
    add_scaled(w, t.b[3], a2);
    for (std::size_t i = 0; i < n; ++i) w(i, i) += t.b[1];
    u = matmul(a, w);
    add_scaled(w2, t.b[12], a6);
    add_scaled(w2, t.b[10], a4);
    add_scaled(w2, t.b[8], a2);
    v = matmul(a6, w2);
    add_scaled(v, t.b[6], a6);
    add_scaled(v, t.b[4], a4);
    add_scaled(v, t.b[2], a2);
    for (std::size_t i = 0; i < n; ++i) v(i, i) += t.b[0];
  }
  // solve (V - U) R = (V + U)
  Mat denom = v;
  add_scaled(denom, -1.0, u);
  Mat numer = std::move(v);
  add_scaled(numer, 1.0, u);
  LuFactors f = lu_factor(std::move(denom));
  lu_solve_inplace(f, numer);
  return numer;
}

}  // namespace

Mat matrix_exp(const Mat& a) {
  if (a.rows() != a.cols())
    throw std::invalid_argument("matrix_exp: matrix must be square");
  if (!all_finite(a)) throw ExpOverflowError("matrix_exp: non-finite input");
  const double eta = norm1(a);

  const PadeTable* chosen = nullptr;
  int squarings = 0;
  for (const PadeTable& t : kPade) {
    if (eta <= t.theta) {
      chosen = &t;
      break;
    }
  }
  if (chosen == nullptr) {
    chosen = &kPade[4];
    squarings = static_cast<int>(std::ceil(std::log2(eta / chosen->theta)));
    if (squarings > 60)
      throw ExpOverflowError("matrix_exp: input norm " + std::to_string(eta) +
                             " too large");
  }

  Mat scaled = a;
  if (squarings > 0) scale(scaled, std::ldexp(1.0, -squarings));
  Mat r = pade_exp(scaled, *chosen);
  for (int s = 0; s < squarings; ++s) r = matmul(r, r);

  const double peak = max_abs(r);
  if (!all_finite(r) || peak > kExpEntryLimit)
    throw ExpOverflowError("matrix_exp: overflow, max entry " +
                           std::to_string(peak));
  return r;
}

Mat transform_matrix(const GeneratorSet& gens, const TransformParams& p) {
  return matrix_exp(gens.weighted_sum(p));
}

Vec apply_transform(const GeneratorSet& gens, const TransformParams& p,
                    const Vec& image) {
  if (image.size() != gens.dim())
    throw std::invalid_argument("apply_transform: image dimension mismatch");
  return matvec(transform_matrix(gens, p), image);
}

std::array<double, kNumGenerators> matexp_param_grad(const GeneratorSet& gens,
                                                     const TransformParams& p,
                                                     const Mat& cotangent,
                                                     const Quadrature& quad) {
  const std::size_t m = gens.dim();
  if (cotangent.rows() != m || cotangent.cols() != m)
    throw std::invalid_argument("matexp_param_grad: cotangent shape mismatch");
  if (quad.samples < 1)
    throw std::invalid_argument("matexp_param_grad: need at least one sample");
  if (quad.mode == Quadrature::Mode::kStochastic && quad.rng == nullptr)
    throw std::invalid_argument("matexp_param_grad: stochastic mode needs rng");

  const Mat a = gens.weighted_sum(p);

  std::vector<std::pair<double, double>> nodes;  // (alpha, weight)
  if (quad.mode == Quadrature::Mode::kFixedNodes) {
    nodes = gauss_legendre_01(quad.samples);
  } else {
    nodes.reserve(quad.samples);
    const double w = 1.0 / quad.samples;
    for (int s = 0; s < quad.samples; ++s) nodes.emplace_back(quad.rng->u01(), w);
  }

  std::array<double, kNumGenerators> grad{};
  Mat left(m, m), sandwich(m, m);
  for (const auto& [alpha, weight] : nodes) {
    Mat a_left = a;
    scale(a_left, alpha);
    Mat a_right = a;
    scale(a_right, 1.0 - alpha);
    // P = exp(alpha A)^T C exp((1-alpha) A)^T, so that <P, G_j> equals
    // <C, exp(alpha A) G_j exp((1-alpha) A)>.
    const Mat e_left_t = transpose(matrix_exp(a_left));
    const Mat e_right_t = transpose(matrix_exp(a_right));
    matmul_into(cotangent, e_right_t, left);
    matmul_into(e_left_t, left, sandwich);
    for (int j = 0; j < kNumGenerators; ++j)
      grad[j] += weight * frobenius_inner(sandwich, gens.generator(j));
  }
  return grad;
}

}  // namespace tsc
