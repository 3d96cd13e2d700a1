#pragma once

#include <array>
#include <cstddef>

#include "tsc/linalg.hpp"
#include "tsc/rng.hpp"

namespace tsc {

inline constexpr int kNumGenerators = 6;

// Coordinates of one transformation in the generator basis, in the fixed
// order: horizontal translation, vertical translation, rotation, isotropic
// scaling, parallel hyperbolic stretch, diagonal hyperbolic stretch.
struct TransformParams {
  std::array<double, kNumGenerators> x{};

  double& operator[](int j) { return x[j]; }
  double operator[](int j) const { return x[j]; }

  TransformParams operator+(const TransformParams& o) const {
    TransformParams r;
    for (int j = 0; j < kNumGenerators; ++j) r.x[j] = x[j] + o.x[j];
    return r;
  }
  TransformParams operator-() const {
    TransformParams r;
    for (int j = 0; j < kNumGenerators; ++j) r.x[j] = -x[j];
    return r;
  }
  double max_abs() const;
  void clamp(double cap);  // clip every coordinate to [-cap, cap]
};

// The six infinitesimal generators of the general affine group acting on
// side x side images, discretized with periodic spectral derivatives.  Images
// are flattened row-major: pixel (r, c) -> index r * side + c, with c along
// the horizontal axis.
class GeneratorSet {
 public:
  int side() const { return side_; }
  std::size_t dim() const { return static_cast<std::size_t>(side_) * side_; }
  const Mat& generator(int j) const { return gens_[j]; }

  // A(x) = sum_j x_j G_j
  Mat weighted_sum(const TransformParams& p) const;

 private:
  friend GeneratorSet build_generators(int side);
  int side_ = 0;
  std::array<Mat, kNumGenerators> gens_;
};

// Builds the generator set for a given patch side (side >= 1).  Each
// generator is G = -(U Dx + V Dy) for the flow field (u, v) of its
// one-parameter subgroup, evaluated at pixel coordinates centered on
// (side-1)/2.  Dx and Dy differentiate via the periodic sinc (trigonometric)
// interpolant; for even side the Nyquist mode is dropped so the matrices are
// real and integer translations act as circular shifts on band-limited
// content.
GeneratorSet build_generators(int side);

// 1D periodic spectral differentiation matrix on n unit-spaced samples
// (exposed for reuse and testing).
Mat spectral_derivative_1d(int n);

// exp(A) by scaling-and-squaring with diagonal Pade approximants (degrees
// 3/5/7/9/13 chosen from the 1-norm).  Throws ExpOverflowError when the
// result contains entries with |entry| > 1e12 or non-finite values.
Mat matrix_exp(const Mat& a);

// T(x) = exp(sum_j x_j G_j)
Mat transform_matrix(const GeneratorSet& gens, const TransformParams& p);

// T(x) applied to a flattened image.
Vec apply_transform(const GeneratorSet& gens, const TransformParams& p,
                    const Vec& image);

// Quadrature rule for the gradient integral over alpha in [0, 1]:
//  - stochastic: `samples` uniform draws from the supplied rng (the training
//    path; even a single sample gives an unbiased estimate),
//  - fixed_nodes: `samples`-point Gauss-Legendre (deterministic, used where
//    tests need the exact value).
struct Quadrature {
  enum class Mode { kStochastic, kFixedNodes };
  Mode mode = Mode::kFixedNodes;
  int samples = 1;
  Rng* rng = nullptr;

  static Quadrature stochastic(int samples, Rng& rng) {
    return {Mode::kStochastic, samples, &rng};
  }
  static Quadrature fixed_nodes(int samples) {
    return {Mode::kFixedNodes, samples, nullptr};
  }
};

// Gradient of <cotangent, T(x)>_F with respect to x.  Uses
// d/dx_j exp(A) = integral_0^1 exp(alpha A) G_j exp((1-alpha) A) d(alpha),
// evaluated with the requested quadrature.
std::array<double, kNumGenerators> matexp_param_grad(const GeneratorSet& gens,
                                                     const TransformParams& p,
                                                     const Mat& cotangent,
                                                     const Quadrature& quad);

}  // namespace tsc
