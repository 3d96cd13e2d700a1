#include "tsc/sparse_solver.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "tsc/errors.hpp"

namespace tsc {

namespace {
constexpr double kSnap = 1e-12;  // weights below this collapse to exact zero

// Objective restricted to the quadratic pieces the Gram form can see:
//   f(w) = signal_sq - 2 corr.w + w'Gw + lambda |w|_1,
// evaluated over the active coordinates only (all others are zero).
double objective_active(const Mat& gram, const Vec& corr, double signal_sq,
                        double lambda, const std::vector<int>& active,
                        const Vec& wa) {
  double quad = 0.0, lin = 0.0, l1 = 0.0;
  for (std::size_t i = 0; i < active.size(); ++i) {
    lin += corr[active[i]] * wa[i];
    l1 += std::fabs(wa[i]);
    double gw = 0.0;
    for (std::size_t j = 0; j < active.size(); ++j)
      gw += gram(active[i], active[j]) * wa[j];
    quad += wa[i] * gw;
  }
  return signal_sq - 2.0 * lin + quad + lambda * l1;
}
}  // namespace

SparseWeights feature_sign_gram(const Mat& gram, const Vec& corr,
                                double signal_sq, double lambda,
                                const FeatureSignOptions& opts) {
  if (gram.rows() != gram.cols())
    throw std::invalid_argument("feature_sign: gram must be square");
  if (corr.size() != gram.rows())
    throw std::invalid_argument("feature_sign: corr dimension mismatch");
  if (lambda < 0.0)
    throw std::invalid_argument("feature_sign: lambda must be >= 0");

  const int k = static_cast<int>(gram.rows());
  SparseWeights out;
  out.w.assign(k, 0.0);
  if (k == 0) {
    out.objective = signal_sq;
    return out;
  }

  // Gradient of the smooth part: grad = 2 (G w - corr).
  Vec grad(k);
  for (int i = 0; i < k; ++i) grad[i] = -2.0 * corr[i];

  double grad_scale = 1.0;
  for (int i = 0; i < k; ++i) grad_scale = std::max(grad_scale, std::fabs(grad[i]));
  const double tol = opts.tol * grad_scale;

  std::vector<int> active;   // ascending column indices
  Vec theta;                 // sign targets, parallel to `active`
  Vec wa;                    // weights, parallel to `active`

  auto refresh_grad = [&] {
    for (int i = 0; i < k; ++i) {
      double gw = 0.0;
      for (std::size_t j = 0; j < active.size(); ++j)
        gw += gram(i, active[j]) * wa[j];
      grad[i] = 2.0 * (gw - corr[i]);
    }
  };

  const int max_iters = opts.max_iter_factor * k;
  int iters = 0;

  while (true) {
    // Optimality over zero coordinates; ties go to the lowest index because
    // the comparison is strict.
    int best = -1;
    double best_mag = lambda + tol;
    for (int i = 0; i < k; ++i) {
      if (out.w[i] != 0.0) continue;
      const double mag = std::fabs(grad[i]);
      if (mag > best_mag) {
        best_mag = mag;
        best = i;
      }
    }
    if (best < 0) break;  // zero-coordinate conditions hold; active set is
                          // stationary on exit of the inner loop below

    // Activate `best` with the sign that decreases the objective.
    {
      auto pos = std::lower_bound(active.begin(), active.end(), best);
      const std::size_t idx = static_cast<std::size_t>(pos - active.begin());
      active.insert(pos, best);
      theta.insert(theta.begin() + idx, grad[best] > 0.0 ? -1.0 : 1.0);
      wa.insert(wa.begin() + idx, 0.0);
    }

    // Feature-sign steps until the active set is stationary.
    while (true) {
      if (++iters > max_iters)
        throw NonConvergenceError(
            "feature_sign: iteration cap exceeded (" +
            std::to_string(max_iters) + " iterations, " +
            std::to_string(active.size()) + " active)");

      const std::size_t a = active.size();
      // Solve G_aa w_new = corr_a - (lambda/2) theta.
      Mat gaa(a, a);
      Vec rhs(a);
      for (std::size_t i = 0; i < a; ++i) {
        rhs[i] = corr[active[i]] - 0.5 * lambda * theta[i];
        for (std::size_t j = 0; j < a; ++j)
          gaa(i, j) = gram(active[i], active[j]);
      }
      Vec wnew;
      if (!cholesky_solve(gaa, rhs, wnew, 1e-13)) {
        // Rank-deficient active set.  When a stationary point with these
        // signs exists the minimum-norm solve finds it; otherwise the system
        // is inconsistent (rhs has a null-space component) and the objective
        // decreases linearly along a null direction of G_aa until a weight
        // crosses zero.  Slide to that crossing so the dependent coordinate
        // drops out and the set regains full rank.
        wnew = sym_solve_minnorm(gaa, rhs, 1e-12);
        double resid = 0.0, rhs_mag = 1.0;
        const Vec gw = matvec(gaa, wnew);
        for (std::size_t i = 0; i < a; ++i) {
          resid = std::max(resid, std::fabs(gw[i] - rhs[i]));
          rhs_mag = std::max(rhs_mag, std::fabs(rhs[i]));
        }
        if (resid > 1e-8 * rhs_mag) {
          const SymEig eig = sym_eig(gaa);
          Vec z = get_col(eig.vectors, 0);
          double along = 0.0;
          for (std::size_t i = 0; i < a; ++i) along += theta[i] * z[i];
          if (along > 0.0)
            for (double& zi : z) zi = -zi;
          double t_hit = 0.0;
          bool found = false;
          for (std::size_t i = 0; i < a; ++i) {
            if (wa[i] == 0.0 || theta[i] * z[i] >= 0.0) continue;
            const double t = -wa[i] / z[i];
            if (!found || t < t_hit) {
              t_hit = t;
              found = true;
            }
          }
          if (found)
            for (std::size_t i = 0; i < a; ++i) wnew[i] = wa[i] + t_hit * z[i];
        }
      }

      // Discrete line search from wa to wnew over sign-change points.
      Vec candidates{1.0};
      for (std::size_t i = 0; i < a; ++i) {
        if (wa[i] == 0.0) continue;
        if ((wa[i] > 0.0) != (wnew[i] > 0.0) || wnew[i] == 0.0) {
          const double t = wa[i] / (wa[i] - wnew[i]);
          if (t > 0.0 && t < 1.0) candidates.push_back(t);
        }
      }
      double best_obj = 0.0, best_t = -1.0;
      Vec trial(a), best_w(a);
      for (double t : candidates) {
        for (std::size_t i = 0; i < a; ++i)
          trial[i] = wa[i] + t * (wnew[i] - wa[i]);
        const double obj =
            objective_active(gram, corr, signal_sq, lambda, active, trial);
        if (best_t < 0.0 || obj < best_obj) {
          best_obj = obj;
          best_t = t;
          best_w = trial;
        }
      }
      wa = best_w;

      // Drop coordinates that landed on zero.
      for (std::size_t i = a; i-- > 0;) {
        if (std::fabs(wa[i]) < kSnap) {
          active.erase(active.begin() + i);
          theta.erase(theta.begin() + i);
          wa.erase(wa.begin() + i);
        } else {
          theta[i] = wa[i] > 0.0 ? 1.0 : -1.0;
        }
      }

      // Scatter for the gradient refresh and the outer check.
      std::fill(out.w.begin(), out.w.end(), 0.0);
      for (std::size_t i = 0; i < active.size(); ++i) out.w[active[i]] = wa[i];
      refresh_grad();

      // Stationarity over the active set: grad_j + lambda sign(w_j) = 0.
      double viol = 0.0;
      for (std::size_t i = 0; i < active.size(); ++i)
        viol = std::max(viol,
                        std::fabs(grad[active[i]] + lambda * theta[i]));
      if (viol <= std::max(tol, 10.0 * kSnap)) break;
    }
  }

  for (int i = 0; i < k; ++i)
    if (out.w[i] != 0.0) out.support.push_back(i);
  Vec wa_final(out.support.size());
  std::vector<int> act_final(out.support.begin(), out.support.end());
  for (std::size_t i = 0; i < act_final.size(); ++i)
    wa_final[i] = out.w[act_final[i]];
  out.objective =
      objective_active(gram, corr, signal_sq, lambda, act_final, wa_final);
  return out;
}

SparseWeights feature_sign(const Mat& dictionary, const Vec& signal,
                           double lambda, const FeatureSignOptions& opts) {
  if (dictionary.rows() != signal.size())
    throw std::invalid_argument("feature_sign: signal dimension mismatch");
  const Mat dt = transpose(dictionary);
  const Mat gram = matmul(dt, dictionary);
  const Vec corr = matvec(dt, signal);
  const double ssq = dot(signal, signal);
  return feature_sign_gram(gram, corr, ssq, lambda, opts);
}

double lasso_objective(const Mat& dictionary, const Vec& signal, const Vec& w,
                       double lambda) {
  if (dictionary.cols() != w.size())
    throw std::invalid_argument("lasso_objective: weight dimension mismatch");
  if (dictionary.rows() != signal.size())
    throw std::invalid_argument("lasso_objective: signal dimension mismatch");
  Vec resid = signal;
  for (std::size_t j = 0; j < w.size(); ++j) {
    if (w[j] == 0.0) continue;
    for (std::size_t i = 0; i < signal.size(); ++i)
      resid[i] -= dictionary(i, j) * w[j];
  }
  double l1 = 0.0;
  for (double v : w) l1 += std::fabs(v);
  return dot(resid, resid) + lambda * l1;
}

}  // namespace tsc
