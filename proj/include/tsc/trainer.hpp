#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "tsc/model.hpp"
#include "tsc/patch.hpp"
#include "tsc/rng.hpp"
#include "tsc/sparse_solver.hpp"

namespace tsc {

struct TrainConfig {
  // model layout
  int side = 8;
  int roots = 8;
  int branching = 8;
  int depth = 1;
  // penalties: lambda_j = lambda_base * lambda_mult[j]; scaling and the
  // parallel stretch are penalized harder by default because they move mass
  // off the patch fastest.
  double lambda_w = 0.4;
  double lambda_base = 1e-3;
  std::array<double, kNumGenerators> lambda_mult{1, 1, 1, 10, 10, 1};
  // optimization
  double eta = 0.1;
  double eta_decay = 0.99;
  int backtrack_max = 10;
  int batch_size = 2000;
  int epochs = 50;
  int grad_samples = 1;
  bool grad_fixed_nodes = false;  // deterministic quadrature (tests)
  double x_max = 5.0;             // clamp on every edge coordinate
  // re-initialization of under-used leaves
  double underuse_threshold = 0.005;
  double sigma_reinit = 0.1;
  int reinit_period = 5;  // epochs between sweeps; 0 disables
  // initialization
  double sigma_init = 0.05;
  // bookkeeping
  std::uint64_t seed = 1;
  int num_threads = 1;

  Lambdas lambdas() const;
  void validate() const;  // ConfigError on out-of-range values
};

struct ReinitEvent {
  int epoch = 0;
  int tree = 0;
  int node = 0;        // leaf that was reset
  int donor_node = -1; // -1: whole tree was under-used, reset around zero
};

struct EpochRecord {
  int epoch = 0;
  LossBreakdown loss;
  double sparsity = 0.0;  // mean nonzero weights per patch
  int reinits = 0;        // re-init events applied at the end of this epoch
};

struct TrainMetrics {
  std::vector<EpochRecord> epochs;
  std::vector<ReinitEvent> reinit_log;
  Vec final_usage;  // per-leaf usage fractions from the last epoch's batch
};

// One metrics line: "epoch mse weight_penalty p1..p6 sparsity reinits".
// Numbers are %.17g so identical runs produce identical bytes.
std::string format_metrics_line(const EpochRecord& rec);

// Exact per-patch lasso solves against a fixed dictionary; rows of the
// result align with batch rows.  Thread-parallel over patches when
// num_threads > 1 (bitwise identical to the serial result — patches are
// independent).
Mat infer_weights(const Mat& leaves, const PatchBatch& batch, double lambda_w,
                  int num_threads = 1);

// fraction of patches using each leaf / mean support size
Vec usage_fractions(const Mat& weights);
double mean_sparsity(const Mat& weights);

struct TransformStepOptions {
  double eta = 0.1;
  int samples = 1;
  bool fixed_nodes = false;
  Lambdas lambdas;
  double x_max = 5.0;
  int backtrack_max = 10;
};

struct TransformStepOutcome {
  bool accepted = true;   // false: every trial increased the loss; reverted
  int halvings = 0;
  int overflow_leaves = 0;  // leaves whose gradient was skipped
};

// One gradient step on every edge's parameters (weights fixed), with
// step-halving backtracking on the full loss.  Leaves whose matrix
// exponential overflows are skipped for that step.
TransformStepOutcome update_transforms(Forest& forest, const GeneratorSet& gens,
                                       const PatchBatch& batch,
                                       const Mat& weights,
                                       const TransformStepOptions& opts,
                                       Rng& rng);

// Analytic root refit, one tree at a time: least-squares against the batch
// residual that excludes the other trees, then projection back to unit norm.
// The projection's scale factor is pushed into that tree's weight columns so
// the reconstruction is unchanged.  Roots whose normal matrix is singular
// (unused trees) are left alone; returns how many were skipped.
int update_roots(Forest& forest, const GeneratorSet& gens,
                 const PatchBatch& batch, Mat& weights);

// Resets every leaf whose usage is below the threshold: its path parameters
// are redrawn around a donor leaf from the same tree (chosen with probability
// proportional to usage), or around zero when the whole tree is under-used.
// Returns the number of resets and appends to `log`.
int reinit_underused(Forest& forest, const Vec& usage, const TrainConfig& cfg,
                     Rng& rng, int epoch, std::vector<ReinitEvent>& log);

struct TrainResult {
  Forest forest;
  TrainMetrics metrics;
};

// Full alternating optimization on patches drawn from `pool`.  Per epoch:
// sample batch (without replacement; the whole pool in order when batch_size
// covers it) -> infer weights -> record metrics -> transform step -> root
// refit -> periodic re-init.  Writes one metrics line per epoch to
// `metrics_out` when given.  Deterministic for a fixed config.
TrainResult train(const TrainConfig& cfg, const PatchBatch& pool,
                  std::ostream* metrics_out = nullptr);

// Classic sparse coding baseline: same inference, free dictionary columns
// constrained to a fixed magnitude.  Column updates are exact per-column
// least-squares on the constraint sphere, so the batch MSE never increases
// for fixed weights; columns with no usage are left unchanged.
struct ScResult {
  Mat dictionary;  // M x num_features
  TrainMetrics metrics;
};
ScResult train_sc_baseline(const TrainConfig& cfg, const PatchBatch& pool,
                           int num_features, double fixed_magnitude,
                           std::ostream* metrics_out = nullptr);

}  // namespace tsc
