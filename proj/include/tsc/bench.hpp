#pragma once

#include <array>
#include <ostream>
#include <string>
#include <vector>

#include "tsc/liegroup.hpp"
#include "tsc/linalg.hpp"
#include "tsc/model.hpp"
#include "tsc/patch.hpp"
#include "tsc/trainer.hpp"

namespace tsc {

// Reconstruction-error landscape over a 2D slice of transform-parameter
// space.  Each grid cell holds the batch-mean of the per-patch best
// single-weight reconstruction error  min_w ||I - w T(x) f||^2,  which has
// the closed form  ||I||^2 - <I, Tf>^2 / ||Tf||^2.
struct SweepSpec {
  int axis_a = 0;          // generator indices, 0-based
  int axis_b = 1;
  int grid_a = 17;         // samples along each axis
  int grid_b = 17;
  double lo_a = -4.0, hi_a = 4.0;
  double lo_b = -4.0, hi_b = 4.0;
  TransformParams base;    // slice origin; swept axes override their entries
};

struct SweepSurface {
  SweepSpec spec;
  Mat raw;          // grid_a x grid_b mean errors
  Mat normalized;   // affinely mapped to [0,1]; all-equal surface maps to 0
  int argmin_a = 0;
  int argmin_b = 0;
};

// Default half-ranges per generator for unspecified sweep axes:
// translations cover [-4, 4] pixels, rotation [-pi/2, pi/2], the scale and
// the two hyperbolic generators [-1, 1].
std::array<double, kNumGenerators> default_sweep_halfranges();

SweepSurface sweep_surface(const GeneratorSet& gens, const Vec& root,
                           const PatchBatch& batch, const SweepSpec& spec);

// Renders every leaf (or every root) of a forest into one grayscale sheet,
// one row per tree, cells min-max normalized independently and separated by
// 1-pixel black gutters.
enum class GridMode { kLeaves, kRoots };
Mat feature_grid_image(const Forest& forest, const GeneratorSet& gens,
                       GridMode mode);

// One row of the TSC-vs-SC comparison: a forest layout plus the matched
// sparse-coding baseline evaluated on held-out patches.
struct CompareRowSpec {
  double lambda_w = 0.4;
  int roots = 1;
  int branching = 64;
};

struct CompareRow {
  CompareRowSpec spec;
  bool ok = false;
  std::string error;           // populated when ok is false
  int error_exit = 0;          // suggested process exit code for the failure
  double tsc_mse = 0.0;
  double tsc_sparsity = 0.0;
  int tsc_df = 0;
  double sc_mse = 0.0;
  double sc_sparsity = 0.0;
  int sc_df = 0;
  int num_features = 0;        // total leaves (== SC dictionary size)
  double df_ratio = 0.0;       // sc_df / tsc_df
};

struct CompareOptions {
  TrainConfig train;           // lambda_w/roots/branching overridden per row
  int sc_epochs = -1;          // -1: same as train.epochs
  double eval_fraction = 0.1;  // tail of the pool held out for evaluation
};

// Held-out evaluation of a fixed feature matrix: sparse-infer weights on the
// batch and report mean squared reconstruction error and mean L0.
struct EvalResult {
  double mse = 0.0;
  double sparsity = 0.0;
};
EvalResult evaluate_features(const Mat& features, const PatchBatch& batch,
                             double lambda_w, int num_threads);

std::vector<CompareRow> run_comparison(const std::vector<CompareRowSpec>& rows,
                                       const PatchBatch& pool,
                                       const CompareOptions& opts,
                                       std::ostream* log = nullptr);

// The degrees-of-freedom report: both counts, their ratio (truncated to two
// decimals for display), and a caveat line for the one layout whose commonly
// quoted count disagrees with the formula.
struct DofReport {
  int df_tsc = 0;
  int df_sc = 0;
  double ratio = 0.0;
  std::string note;  // empty unless the layout has a known quoted discrepancy
};
DofReport dof_report(int num_trees, int branches_per_tree, int pixel_dim,
                     int group_dim);

// Two-decimal truncation (not rounding): 10.8866 -> "10.88".
std::string format_ratio(double ratio);

// CSV serialization (header + one line per completed row); the text table
// renders the very same cell strings, so the two artifacts always agree.
void write_comparison_csv(const std::vector<CompareRow>& rows,
                          std::ostream& out);
std::string format_comparison_table(const std::vector<CompareRow>& rows);

void write_sweep_csv(const SweepSurface& surface, std::ostream& out);

}  // namespace tsc
