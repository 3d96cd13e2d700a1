// Acceptance gates for the engine.  Each criterion prints exactly one
// PASS/FAIL line; the process exits 0 only if every requested criterion
// passed.  Run with no arguments for the full battery, or pass criterion
// numbers (e.g. `tsc_acceptance 2 5`) to run a subset — that is how the
// CTest entries below slice it up.
//
// Thresholds and budgets are pinned here on purpose: they are the contract,
// not tunables.  The statistical checks use fixed seeds so a passing run is
// reproducible bit for bit.
#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "tsc/bench.hpp"
#include "tsc/cli.hpp"
#include "tsc/dataio.hpp"
#include "tsc/errors.hpp"
#include "tsc/liegroup.hpp"
#include "tsc/linalg.hpp"
#include "tsc/model.hpp"
#include "tsc/rng.hpp"
#include "tsc/sparse_solver.hpp"
#include "tsc/trainer.hpp"

#ifndef TSC_DATA_DIR
#define TSC_DATA_DIR "data"
#endif

namespace fs = std::filesystem;
using namespace tsc;

namespace {

double now_seconds() {
  using clock = std::chrono::steady_clock;
  static const clock::time_point t0 = clock::now();
  return std::chrono::duration<double>(clock::now() - t0).count();
}

// Collects failure details for the one-line verdict.
struct Gate {
  std::string details;
  bool ok = true;

  void expect(bool cond, const std::string& what) {
    if (cond) return;
    ok = false;
    if (!details.empty()) details += "; ";
    details += what;
  }
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Shared helpers

PatchBatch corpus_pool(int side, int count, std::uint64_t seed) {
  const char* names[] = {"bars",  "blobs",    "checkers",
                         "edges", "gratings", "pink"};
  std::vector<Mat> images;
  std::vector<std::string> tags;
  for (const char* n : names) {
    images.push_back(load_grayscale(std::string(TSC_DATA_DIR) + "/" + n +
                                    ".pgm"));
    tags.emplace_back(n);
  }
  Rng rng(seed);
  return sample_patches(images, tags, side, count, rng);
}

double dot_raw(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

// ---------------------------------------------------------------------------
// 1. Degrees-of-freedom table

bool c1_dof_table(std::string& details) {
  Gate g;
  struct Row {
    int v, b, df_tsc, df_sc;
  };
  // The published table rows (100-pixel patches, 6 parameters per branch),
  // minus the flat 1x64 layout which is handled separately below.
  const Row rows[] = {{1, 128, 867, 12672}, {8, 8, 1176, 6336},
                      {4, 16, 780, 6336},   {8, 8, 1176, 6336},
                      {4, 16, 780, 6336},   {16, 16, 3120, 25344},
                      {8, 32, 2328, 25344}};
  for (const Row& r : rows) {
    const DofReport rep = dof_report(r.v, r.b, 100, 6);
    const std::string tag =
        std::to_string(r.v) + "x" + std::to_string(r.b);
    g.expect(rep.df_tsc == r.df_tsc, tag + " df_tsc " +
                                         std::to_string(rep.df_tsc) + " != " +
                                         std::to_string(r.df_tsc));
    g.expect(rep.df_sc == r.df_sc, tag + " df_sc " +
                                       std::to_string(rep.df_sc) + " != " +
                                       std::to_string(r.df_sc));
    g.expect(rep.note.empty(), tag + " unexpectedly annotated");
  }

  // 1x64: the formula gives 483; the commonly quoted 447 must be called out.
  const DofReport flat = dof_report(1, 64, 100, 6);
  g.expect(flat.df_tsc == 483, "1x64 df_tsc " + std::to_string(flat.df_tsc));
  g.expect(flat.df_sc == 6336, "1x64 df_sc " + std::to_string(flat.df_sc));
  g.expect(flat.note.find("447") != std::string::npos,
           "1x64 note does not flag 447");

  // The same numbers as printed by the command-line tool.
  std::ostringstream out, err;
  g.expect(run({"dof", "--layout", "4x16"}, out, err) == 0, "cli dof failed");
  g.expect(out.str() == "df_tsc 780\ndf_sc 6336\nratio 8.12\n",
           "cli dof 4x16 printed '" + out.str() + "'");
  std::ostringstream out2, err2;
  g.expect(run({"dof", "--layout", "1x64"}, out2, err2) == 0,
           "cli dof 1x64 failed");
  g.expect(out2.str().find("df_tsc 483\n") != std::string::npos &&
               out2.str().find("447") != std::string::npos,
           "cli dof 1x64 missing 483/447");

  details = g.details;
  return g.ok;
}

// ---------------------------------------------------------------------------
// 2. Deterministic gradients vs central finite differences

bool c2_gradient_fd(std::string& details) {
  Gate g;
  const int side = 8;
  const GeneratorSet gens = build_generators(side);
  const std::size_t m = static_cast<std::size_t>(side) * side;
  Rng rng(0xC2);

  auto value = [&](const TransformParams& p, const Mat& cot) {
    const Mat t = transform_matrix(gens, p);
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i)
      s += dot_raw(cot.row(i), t.row(i), m);
    return s;
  };

  const double h = 1e-5;
  double worst_wide = 0.0, worst_narrow = 0.0;
  for (int inst = 0; inst < 20; ++inst) {
    const double xmax = inst < 10 ? 0.5 : 0.1;
    TransformParams p;
    for (int j = 0; j < kNumGenerators; ++j)
      p[j] = (2.0 * rng.u01() - 1.0) * xmax;
    Mat cot(m, m);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t jj = 0; jj < m; ++jj) cot(i, jj) = rng.normal();

    const auto grad =
        matexp_param_grad(gens, p, cot, Quadrature::fixed_nodes(16));

    std::array<double, kNumGenerators> fd{};
    double fd_max = 0.0;
    for (int j = 0; j < kNumGenerators; ++j) {
      TransformParams hi = p, lo = p;
      hi[j] += h;
      lo[j] -= h;
      fd[j] = (value(hi, cot) - value(lo, cot)) / (2.0 * h);
      fd_max = std::max(fd_max, std::abs(fd[j]));
    }
    for (int j = 0; j < kNumGenerators; ++j) {
      const double denom =
          std::max({std::abs(fd[j]), 1e-6 * fd_max, 1e-12});
      const double rel = std::abs(grad[j] - fd[j]) / denom;
      if (xmax > 0.1 + 1e-15)
        worst_wide = std::max(worst_wide, rel);
      else
        worst_narrow = std::max(worst_narrow, rel);
    }
  }
  g.expect(worst_wide < 1e-3,
           "rel err " + fmt(worst_wide) + " >= 1e-3 at |x| <= 0.5");
  g.expect(worst_narrow < 1e-4,
           "rel err " + fmt(worst_narrow) + " >= 1e-4 at |x| <= 0.1");
  details = g.details;
  if (g.ok) details = "max rel err " + fmt(worst_wide);
  return g.ok;
}

// ---------------------------------------------------------------------------
// 3. Stochastic gradient estimator is unbiased

bool c3_stochastic(std::string& details) {
  Gate g;
  const int side = 8;
  const GeneratorSet gens = build_generators(side);
  const std::size_t m = static_cast<std::size_t>(side) * side;
  const int trials = 10000;
  Rng setup(0xC3);
  double worst_z = 0.0;

  for (int inst = 0; inst < 5; ++inst) {
    TransformParams p;
    for (int j = 0; j < kNumGenerators; ++j)
      p[j] = (2.0 * setup.u01() - 1.0) * 0.25;
    Mat cot(m, m);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t jj = 0; jj < m; ++jj) cot(i, jj) = setup.normal();

    const auto ref =
        matexp_param_grad(gens, p, cot, Quadrature::fixed_nodes(32));

    std::array<double, kNumGenerators> sum{}, sumsq{};
    Rng draw(9000 + static_cast<std::uint64_t>(inst));
    for (int t = 0; t < trials; ++t) {
      const auto gr =
          matexp_param_grad(gens, p, cot, Quadrature::stochastic(1, draw));
      for (int j = 0; j < kNumGenerators; ++j) {
        sum[j] += gr[j];
        sumsq[j] += gr[j] * gr[j];
      }
    }
    for (int j = 0; j < kNumGenerators; ++j) {
      const double mean = sum[j] / trials;
      const double var =
          std::max(0.0, (sumsq[j] - trials * mean * mean) / (trials - 1));
      const double se = std::sqrt(var / trials);
      const double dev = std::abs(mean - ref[j]);
      g.expect(dev <= 3.0 * se + 1e-12,
               "instance " + std::to_string(inst) + " component " +
                   std::to_string(j + 1) + ": |mean-ref| " + fmt(dev) +
                   " > 3*SE " + fmt(3.0 * se));
      if (se > 0.0) worst_z = std::max(worst_z, dev / se);
    }
  }
  details = g.details;
  if (g.ok) details = "max |z| " + fmt(worst_z);
  return g.ok;
}

// ---------------------------------------------------------------------------
// 4. Group action: integer translations match circular shifts

bool c4_group_action(std::string& details) {
  Gate g;
  const int side = 8;
  const GeneratorSet gens = build_generators(side);
  const std::size_t m = static_cast<std::size_t>(side) * side;
  Rng rng(0xC4);

  // Band-limited periodic patches: modes strictly below Nyquist so the
  // spectral action of an integer shift is exact.
  auto make_patch = [&]() {
    Vec f(m);
    for (int kx = -3; kx <= 3; ++kx)
      for (int ky = -3; ky <= 3; ++ky) {
        const double a = rng.normal() / (1.0 + std::abs(kx) + std::abs(ky));
        const double phase = rng.u01() * 2.0 * 3.14159265358979323846;
        for (int r = 0; r < side; ++r)
          for (int c = 0; c < side; ++c)
            f[static_cast<std::size_t>(r) * side + c] +=
                a * std::cos(2.0 * 3.14159265358979323846 *
                                 (kx * c + ky * r) / side +
                             phase);
      }
    return f;
  };

  double worst_rel = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const Vec f = make_patch();
    for (const int s : {1, -1, 2, -2}) {
      for (const bool horizontal : {true, false}) {
        TransformParams p;
        p[horizontal ? 0 : 1] = static_cast<double>(s);
        const Vec got = apply_transform(gens, p, f);
        // T(s e1) f = f(x - s): content moves right/down by s pixels.
        double num = 0.0, den = 0.0;
        for (int r = 0; r < side; ++r)
          for (int c = 0; c < side; ++c) {
            const int sr = horizontal ? r : (r - s + 2 * side) % side;
            const int sc = horizontal ? (c - s + 2 * side) % side : c;
            const double want = f[static_cast<std::size_t>(sr) * side + sc];
            const double have = got[static_cast<std::size_t>(r) * side + c];
            num += (have - want) * (have - want);
            den += want * want;
          }
        const double rel = std::sqrt(num / std::max(den, 1e-30));
        worst_rel = std::max(worst_rel, rel);
      }
    }
  }
  g.expect(worst_rel < 1e-3,
           "translation rel L2 " + fmt(worst_rel) + " >= 1e-3");

  // T(0) = I.
  const Mat t0 = transform_matrix(gens, TransformParams{});
  double id_err = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      id_err = std::max(id_err,
                        std::abs(t0(i, j) - (i == j ? 1.0 : 0.0)));
  g.expect(id_err <= 1e-12, "T(0) deviates from I by " + fmt(id_err));

  // T(x) T(-x) = I for 50 random x.
  double inv_err = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    TransformParams p, q;
    for (int j = 0; j < kNumGenerators; ++j) {
      p[j] = (2.0 * rng.u01() - 1.0) * 0.5;
      q[j] = -p[j];
    }
    const Mat prod =
        matmul(transform_matrix(gens, p), transform_matrix(gens, q));
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j)
        inv_err = std::max(inv_err,
                           std::abs(prod(i, j) - (i == j ? 1.0 : 0.0)));
  }
  g.expect(inv_err <= 1e-8, "T(x)T(-x) deviates from I by " + fmt(inv_err));

  details = g.details;
  if (g.ok)
    details = "shift rel " + fmt(worst_rel) + ", inverse " + fmt(inv_err);
  return g.ok;
}

// ---------------------------------------------------------------------------
// 5. Sparse solver vs exhaustive sign-pattern enumeration

// Minimum of the lasso objective over every sign pattern; mirrors the oracle
// in the unit suite but is kept self-contained here.
double enumerate_lasso_min(const Mat& f, const Vec& y, double lambda) {
  const std::size_t m = f.rows(), k = f.cols();
  const Mat g2 = matmul(transpose(f), f);
  Vec corr(k);
  for (std::size_t j = 0; j < k; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) s += f(i, j) * y[i];
    corr[j] = s;
  }
  double best = dot_raw(&y[0], &y[0], m);  // w = 0
  std::vector<int> sign(k, 0);
  const std::size_t total = [&] {
    std::size_t t = 1;
    for (std::size_t j = 0; j < k; ++j) t *= 3;
    return t;
  }();
  for (std::size_t code = 0; code < total; ++code) {
    std::size_t c = code;
    std::vector<int> active;
    for (std::size_t j = 0; j < k; ++j) {
      sign[j] = static_cast<int>(c % 3) - 1;  // -1, 0, +1
      c /= 3;
      if (sign[j] != 0) active.push_back(static_cast<int>(j));
    }
    if (active.empty()) continue;  // the w = 0 candidate seeds `best` above
    const std::size_t a = active.size();
    Mat sys(a, a);
    Vec rhs(a);
    for (std::size_t p = 0; p < a; ++p) {
      for (std::size_t q = 0; q < a; ++q)
        sys(p, q) = 2.0 * g2(active[p], active[q]);
      rhs[p] = 2.0 * corr[active[p]] - lambda * sign[active[p]];
    }
    Vec wa;
    try {
      wa = lu_solve(lu_factor(sys), rhs);
    } catch (const NumericError&) {
      continue;  // singular active set; its minimizers appear elsewhere
    }
    bool consistent = true;
    for (std::size_t p = 0; p < a && consistent; ++p)
      if (wa[p] * sign[active[p]] <= 0.0) consistent = false;
    if (!consistent) continue;
    Vec w(k);
    for (std::size_t p = 0; p < a; ++p) w[active[p]] = wa[p];
    best = std::min(best, lasso_objective(f, y, w, lambda));
  }
  return best;
}

double kkt_residual(const Mat& f, const Vec& y, const Vec& w, double lambda) {
  const std::size_t m = f.rows(), k = f.cols();
  Vec resid(m);
  for (std::size_t i = 0; i < m; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) s += f(i, j) * w[j];
    resid[i] = y[i] - s;
  }
  double worst = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    double grad = 0.0;  // d/dw_j ||y - Fw||^2 = -2 f_j . resid
    for (std::size_t i = 0; i < m; ++i) grad -= 2.0 * f(i, j) * resid[i];
    if (w[j] != 0.0)
      worst = std::max(worst,
                       std::abs(grad + lambda * (w[j] > 0 ? 1.0 : -1.0)));
    else
      worst = std::max(worst, std::max(0.0, std::abs(grad) - lambda));
  }
  return worst;
}

bool c5_solver(std::string& details) {
  Gate g;
  Rng rng(0xC5);
  double worst_gap = 0.0, worst_kkt = 0.0;
  for (int inst = 0; inst < 1000 && g.ok; ++inst) {
    const std::size_t m = 6 + rng.uniform_int(5);   // 6..10
    const std::size_t k = 2 + rng.uniform_int(7);   // 2..8
    const double lambda = 0.05 + 2.0 * rng.u01();
    Mat f(m, k);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < k; ++j) f(i, j) = rng.normal();
    Vec y(m);
    if (inst % 2 == 0) {
      for (std::size_t i = 0; i < m; ++i) y[i] = rng.normal();
    } else {
      // Planted sparse combination plus noise: exercises recovery-like
      // instances rather than pure noise.
      Vec w(k);
      for (std::size_t j = 0; j < k; ++j)
        if (rng.u01() < 0.4) w[j] = rng.normal();
      for (std::size_t i = 0; i < m; ++i) {
        double s = 0.1 * rng.normal();
        for (std::size_t j = 0; j < k; ++j) s += f(i, j) * w[j];
        y[i] = s;
      }
    }

    const SparseWeights sw = feature_sign(f, y, lambda);
    const double best = enumerate_lasso_min(f, y, lambda);
    const double gap = std::abs(sw.objective - best);
    const double kkt = kkt_residual(f, y, sw.w, lambda);
    worst_gap = std::max(worst_gap, gap);
    worst_kkt = std::max(worst_kkt, kkt);
    g.expect(gap <= 1e-8, "instance " + std::to_string(inst) +
                              ": objective gap " + fmt(gap));
    g.expect(kkt < 1e-8, "instance " + std::to_string(inst) +
                             ": KKT residual " + fmt(kkt));
  }
  details = g.details;
  if (g.ok)
    details = "max gap " + fmt(worst_gap) + ", max KKT " + fmt(worst_kkt);
  return g.ok;
}

// ---------------------------------------------------------------------------
// 6. Desk-scale comparison table row (ratio properties)

bool c6_table_analogue(std::string& details) {
  Gate g;
  const PatchBatch pool = corpus_pool(8, 25000, 0xC6);

  // Both models get the identical budget: same batches, same epoch count
  // (sc_epochs = -1).  The tiny sigma_init matters: leaves that start as
  // near-coincident copies of their root let the analytic refit shape each
  // root into a clean template before the transforms fan the copies out;
  // larger spreads leave the roots averaging over unrelated patches.
  CompareOptions opts;
  opts.train.side = 8;
  opts.train.lambda_base = 1e-4;
  opts.train.eta = 0.2;
  opts.train.eta_decay = 0.997;
  opts.train.batch_size = 500;
  opts.train.epochs = 60;
  opts.train.grad_samples = 1;
  opts.train.grad_fixed_nodes = false;
  opts.train.sigma_init = 0.02;
  opts.train.sigma_reinit = 0.3;
  opts.train.reinit_period = 5;
  opts.train.seed = 7;
  opts.train.num_threads = 1;
  opts.sc_epochs = -1;  // matched epoch budget
  opts.eval_fraction = 0.2;  // 5000 of 25000 held out

  const std::vector<CompareRow> rows =
      run_comparison({{0.4, 4, 8}}, pool, opts, nullptr);
  const CompareRow& r = rows.at(0);
  g.expect(r.ok, "comparison row failed: " + r.error);
  if (r.ok) {
    g.expect(r.tsc_mse <= 1.35 * r.sc_mse,
             "tsc_mse/sc_mse " + fmt(r.tsc_mse / r.sc_mse) + " > 1.35");
    g.expect(std::abs(r.tsc_sparsity - r.sc_sparsity) <=
                 0.35 * r.sc_sparsity,
             "sparsity " + fmt(r.tsc_sparsity) + " vs " +
                 fmt(r.sc_sparsity) + " differs by more than 35%");
    g.expect(3 * r.tsc_df < r.sc_df,
             "df_tsc " + std::to_string(r.tsc_df) + " not < df_sc/3");
    g.expect(r.tsc_df == 444 && r.sc_df == 2016, "df counts off");
  }
  details = g.details;
  if (g.ok)
    details = "mse " + fmt(r.tsc_mse) + "/" + fmt(r.sc_mse) + ", sparsity " +
              fmt(r.tsc_sparsity) + "/" + fmt(r.sc_sparsity);
  return g.ok;
}

// ---------------------------------------------------------------------------
// 7. Synthetic double-line experiment

bool c7_double_line(std::string& details) {
  Gate g;
  Rng pool_rng(0xC7);
  const PatchBatch train_pool = gen_synthetic_lines(20000, 8, pool_rng);
  Rng held_rng(0x7C7C);
  const PatchBatch held = gen_synthetic_lines(4000, 8, held_rng);

  // The line world is translation-generated, so the transform prior matches:
  // translations move freely while rotation, scaling, and the hyperbolic
  // stretches carry a strong quadratic penalty.  The high training lambda_w
  // makes early activations selective, which lets the roots localize onto
  // single lines instead of settling into dense superpositions; held-out
  // reconstruction below is scored at a conventional lambda_w.
  TrainConfig cfg;
  cfg.side = 8;
  cfg.roots = 2;
  cfg.branching = 8;
  cfg.depth = 1;
  cfg.lambda_w = 2.4;
  cfg.lambda_base = 0.02;
  cfg.lambda_mult = {0, 0, 50, 50, 50, 50};
  cfg.eta = 0.3;
  cfg.eta_decay = 0.998;
  cfg.batch_size = 2000;
  cfg.epochs = 600;
  cfg.grad_samples = 1;
  cfg.grad_fixed_nodes = false;
  cfg.sigma_init = 0.5;
  cfg.sigma_reinit = 1.25;
  cfg.reinit_period = 5;
  cfg.underuse_threshold = 0.02;
  cfg.x_max = 5.0;
  cfg.seed = 21;
  cfg.num_threads = 1;
  const double eval_lambda_w = 0.25;

  const TrainResult res = train(cfg, train_pool, nullptr);
  const GeneratorSet gens = build_generators(cfg.side);
  const Mat leaves = materialize_leaves(res.forest, gens);
  const std::size_t m = held.dim(), k = leaves.cols();

  // (a) Held-out reconstruction beats 20% of the best constant predictor.
  Vec mean_patch(m);
  for (std::size_t i = 0; i < train_pool.count(); ++i)
    for (std::size_t j = 0; j < m; ++j)
      mean_patch[j] += train_pool.patches(i, j);
  for (std::size_t j = 0; j < m; ++j)
    mean_patch[j] /= static_cast<double>(train_pool.count());
  double const_mse = 0.0;
  for (std::size_t i = 0; i < held.count(); ++i) {
    const double* p = held.patches.row(i);
    for (std::size_t j = 0; j < m; ++j)
      const_mse += (p[j] - mean_patch[j]) * (p[j] - mean_patch[j]);
  }
  const_mse /= static_cast<double>(held.count());

  const EvalResult ev = evaluate_features(leaves, held, eval_lambda_w, 1);
  g.expect(ev.mse <= 0.2 * const_mse,
           "held-out mse " + fmt(ev.mse) + " > 20% of constant-predictor " +
               fmt(const_mse));

  // (b) Every line template is covered by some leaf.
  const int side = 8;
  int covered = 0;
  double worst_best = 1.0;
  for (int orient = 0; orient < 2; ++orient) {
    for (int pos = 0; pos < side; ++pos) {
      Vec tmpl(m);
      for (int r = 0; r < side; ++r)
        for (int c = 0; c < side; ++c) {
          const bool on = orient == 0 ? (c == pos) : (r == pos);
          tmpl[static_cast<std::size_t>(r) * side + c] =
              on ? 7.0 / 8.0 : -1.0 / 8.0;
        }
      const double tn = std::sqrt(dot_raw(&tmpl[0], &tmpl[0], m));
      double best = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        double dot = 0.0, nn = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
          dot += leaves(i, j) * tmpl[i];
          nn += leaves(i, j) * leaves(i, j);
        }
        if (nn > 0.0)
          best = std::max(best, std::abs(dot) / (std::sqrt(nn) * tn));
      }
      if (best > 0.8) ++covered;
      worst_best = std::min(worst_best, best);
      g.expect(best > 0.8, std::string(orient == 0 ? "v" : "h") +
                               std::to_string(pos) + " best correlation " +
                               fmt(best));
    }
  }
  details = g.details;
  if (g.ok)
    details = "mse " + fmt(ev.mse) + " (const " + fmt(const_mse) +
              "), 16/16 templates, min corr " + fmt(worst_best);
  return g.ok;
}

// ---------------------------------------------------------------------------
// 8. Byte-level determinism of training runs

bool c8_determinism(std::string& details) {
  Gate g;
  const fs::path base =
      fs::temp_directory_path() / "tsc_acceptance_determinism";
  fs::remove_all(base);
  const fs::path cfg_path = base / "train.cfg";
  fs::create_directories(base);
  {
    std::ofstream cfg(cfg_path);
    cfg << "side = 8\nroots = 2\nbranching = 8\nepochs = 5\n"
           "batch_size = 500\nlambda_w = 0.3\nnum_threads = 2\n";
  }

  auto run_once = [&](const std::string& tag) {
    const fs::path dir = base / tag;
    std::ostringstream out, err;
    const int code =
        run({"--config", cfg_path.string(), "--seed", "99", "--out",
             dir.string(), "--quiet", "train", "--synthetic-lines", "3000"},
            out, err);
    return code;
  };
  auto slurp = [](const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
  };

  g.expect(run_once("a") == 0, "first run failed");
  g.expect(run_once("b") == 0, "second run failed");
  if (g.ok) {
    const std::string ma = slurp(base / "a" / "model.tsc");
    const std::string mb = slurp(base / "b" / "model.tsc");
    const std::string ta = slurp(base / "a" / "metrics.txt");
    const std::string tb = slurp(base / "b" / "metrics.txt");
    g.expect(!ma.empty(), "model checkpoint is empty");
    g.expect(!ta.empty(), "metrics file is empty");
    g.expect(ma == mb, "model checkpoints differ between identical seeds");
    g.expect(ta == tb, "metrics files differ between identical seeds");
  }
  fs::remove_all(base);
  details = g.details;
  return g.ok;
}

// ---------------------------------------------------------------------------
// 9. Monotone total loss with penalties off

bool c9_monotone(std::string& details) {
  Gate g;
  const PatchBatch pool = corpus_pool(6, 400, 0xC9);

  TrainConfig cfg;
  cfg.side = 6;
  cfg.roots = 2;
  cfg.branching = 4;
  cfg.depth = 1;
  cfg.lambda_w = 0.0;   // penalties off: total loss == batch mse
  cfg.lambda_base = 0.0;
  cfg.eta = 0.1;
  cfg.eta_decay = 1.0;
  cfg.backtrack_max = 12;
  cfg.batch_size = 400;  // >= pool: every epoch sees the same fixed batch
  cfg.epochs = 50;
  cfg.grad_fixed_nodes = true;
  cfg.grad_samples = 8;
  cfg.sigma_init = 0.05;
  cfg.reinit_period = 5;
  cfg.seed = 31;
  cfg.num_threads = 1;

  const TrainResult res = train(cfg, pool, nullptr);
  const auto& epochs = res.metrics.epochs;
  g.expect(epochs.size() == 50, "expected 50 recorded epochs");
  int increases = 0;
  for (std::size_t e = 0; e + 1 < epochs.size(); ++e) {
    if (epochs[e].reinits > 0) continue;  // re-init may lift the next epoch
    if (epochs[e + 1].loss.total > epochs[e].loss.total + 1e-9) {
      ++increases;
      g.expect(false, "loss rose " + fmt(epochs[e].loss.total) + " -> " +
                          fmt(epochs[e + 1].loss.total) + " at epoch " +
                          std::to_string(e + 1));
    }
  }
  details = g.details;
  if (g.ok)
    details = "total " + fmt(epochs.front().loss.total) + " -> " +
              fmt(epochs.back().loss.total);
  return g.ok;
}

// ---------------------------------------------------------------------------

struct Criterion {
  int id;
  const char* name;
  bool (*fn)(std::string&);
  double budget_seconds;  // 0: no enforced budget
};

const Criterion kCriteria[] = {
    {1, "dof-table", c1_dof_table, 0.0},
    {2, "gradient-vs-fd", c2_gradient_fd, 60.0},
    {3, "stochastic-unbiased", c3_stochastic, 120.0},
    {4, "group-action", c4_group_action, 60.0},
    {5, "solver-exact", c5_solver, 300.0},
    {6, "table-analogue", c6_table_analogue, 1800.0},
    {7, "double-line", c7_double_line, 600.0},
    {8, "determinism", c8_determinism, 0.0},
    {9, "monotone-loss", c9_monotone, 0.0},
};

}  // namespace

int main(int argc, char** argv) {
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) {
    const int id = std::atoi(argv[i]);
    if (id < 1 || id > 9) {
      std::fprintf(stderr, "unknown criterion '%s' (expected 1..9)\n",
                   argv[i]);
      return 2;
    }
    wanted.insert(id);
  }

  bool all_ok = true;
  for (const Criterion& c : kCriteria) {
    if (!wanted.empty() && wanted.find(c.id) == wanted.end()) continue;
    std::string details;
    bool ok = false;
    const double t0 = now_seconds();
    try {
      ok = c.fn(details);
    } catch (const std::exception& e) {
      ok = false;
      details = std::string("exception: ") + e.what();
    }
    const double elapsed = now_seconds() - t0;
    if (ok && c.budget_seconds > 0.0 && elapsed > c.budget_seconds) {
      ok = false;
      details = "over budget: " + fmt(elapsed) + "s > " +
                fmt(c.budget_seconds) + "s";
    }
    std::printf("C%d %-20s %s (%.1fs)%s%s\n", c.id, c.name,
                ok ? "PASS" : "FAIL", elapsed, details.empty() ? "" : " — ",
                details.c_str());
    std::fflush(stdout);
    all_ok = all_ok && ok;
  }
  return all_ok ? 0 : 1;
}
