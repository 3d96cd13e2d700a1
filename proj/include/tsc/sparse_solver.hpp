#pragma once

#include <vector>

#include "tsc/linalg.hpp"

namespace tsc {

// Result of one lasso solve min_w ||y - F w||^2 + lambda * ||w||_1.
// Entries smaller than 1e-12 in magnitude are snapped to exactly 0.0 and the
// support lists the surviving indices in ascending order.
struct SparseWeights {
  Vec w;
  std::vector<int> support;
  double objective = 0.0;  // value of the lasso objective at w
};

struct FeatureSignOptions {
  // Iteration cap = max_iter_factor * num_features; exceeding it raises
  // NonConvergenceError.
  int max_iter_factor = 10;
  // Internal stationarity slack, scaled by the gradient magnitude of the
  // instance.  Final KKT residuals land well below 1e-8 on sane inputs.
  double tol = 1e-11;
};

// Feature-sign search (exact active-set lasso solver).  `dictionary` is
// M x K with features as columns.  Deterministic: activation ties are broken
// toward the lowest column index.
SparseWeights feature_sign(const Mat& dictionary, const Vec& signal,
                           double lambda,
                           const FeatureSignOptions& opts = {});

// Same solver on precomputed quantities: gram = F^T F (K x K),
// corr = F^T y (K), signal_sq = ||y||^2.  This is the path batch inference
// uses — the Gram matrix is shared across all signals for one dictionary.
SparseWeights feature_sign_gram(const Mat& gram, const Vec& corr,
                                double signal_sq, double lambda,
                                const FeatureSignOptions& opts = {});

// ||y - F w||^2 + lambda * ||w||_1 computed directly from the residual; the
// independent route used to cross-check SparseWeights::objective.
double lasso_objective(const Mat& dictionary, const Vec& signal, const Vec& w,
                       double lambda);

}  // namespace tsc
