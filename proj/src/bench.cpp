#include "tsc/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "tsc/errors.hpp"
#include "tsc/kernels.hpp"

namespace tsc {

std::array<double, kNumGenerators> default_sweep_halfranges() {
  // translations in pixels, rotation in radians, the rest in natural units
  constexpr double half_pi = 1.5707963267948966;
  return {4.0, 4.0, half_pi, 1.0, 1.0, 1.0};
}

SweepSurface sweep_surface(const GeneratorSet& gens, const Vec& root,
                           const PatchBatch& batch, const SweepSpec& spec) {
  if (spec.grid_a < 2 || spec.grid_b < 2)
    throw std::invalid_argument("sweep_surface: need >= 2 points per axis");
  if (spec.axis_a < 0 || spec.axis_a >= kNumGenerators || spec.axis_b < 0 ||
      spec.axis_b >= kNumGenerators || spec.axis_a == spec.axis_b)
    throw std::invalid_argument("sweep_surface: bad axis pair");
  if (root.size() != gens.dim())
    throw std::invalid_argument("sweep_surface: root/generator size mismatch");
  if (batch.dim() != root.size() || batch.count() == 0)
    throw std::invalid_argument("sweep_surface: bad batch");

  const std::size_t n = batch.count();
  const std::size_t m = batch.dim();
  const auto& kop = kernels::ops();

  Vec patch_sq(n);
  for (std::size_t i = 0; i < n; ++i)
    patch_sq[i] = kop.dot(batch.patches.row(i), batch.patches.row(i), m);

  SweepSurface out;
  out.spec = spec;
  out.raw = Mat(spec.grid_a, spec.grid_b);
  for (int ia = 0; ia < spec.grid_a; ++ia) {
    const double xa =
        spec.lo_a + (spec.hi_a - spec.lo_a) * ia / (spec.grid_a - 1);
    for (int ib = 0; ib < spec.grid_b; ++ib) {
      const double xb =
          spec.lo_b + (spec.hi_b - spec.lo_b) * ib / (spec.grid_b - 1);
      TransformParams x = spec.base;
      x[spec.axis_a] = xa;
      x[spec.axis_b] = xb;

      // min over scalar w of ||I - w Tf||^2 = ||I||^2 - <I,Tf>^2 / ||Tf||^2;
      // a vanishing (or overflowing) transformed feature forces w = 0.
      double tf_sq = 0.0;
      Vec leaf;
      try {
        leaf = apply_transform(gens, x, root);
        tf_sq = dot(leaf, leaf);
      } catch (const ExpOverflowError&) {
        tf_sq = 0.0;
      }
      double sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double e = patch_sq[i];
        if (tf_sq > 0.0) {
          const double d = kop.dot(batch.patches.row(i), leaf.data(), m);
          e -= d * d / tf_sq;
        }
        sum += e;
      }
      out.raw(ia, ib) = sum / static_cast<double>(n);
    }
  }

  double lo = out.raw(0, 0), hi = out.raw(0, 0);
  for (int ia = 0; ia < spec.grid_a; ++ia)
    for (int ib = 0; ib < spec.grid_b; ++ib) {
      const double v = out.raw(ia, ib);
      if (v < lo) {
        lo = v;
        out.argmin_a = ia;
        out.argmin_b = ib;
      }
      if (v > hi) hi = v;
    }
  out.normalized = Mat(spec.grid_a, spec.grid_b);
  const double range = hi - lo;
  if (range > 0.0)
    for (std::size_t i = 0; i < out.raw.size(); ++i)
      out.normalized.data()[i] = (out.raw.data()[i] - lo) / range;
  return out;
}

namespace {

// Min-max normalize one cell into [0,1]; a constant cell renders mid-gray.
void place_cell(Mat& sheet, std::size_t row0, std::size_t col0, const Vec& cell,
                std::size_t side) {
  double lo = cell[0], hi = cell[0];
  for (double v : cell) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double range = hi - lo;
  for (std::size_t r = 0; r < side; ++r)
    for (std::size_t c = 0; c < side; ++c) {
      const double v = cell[r * side + c];
      sheet(row0 + r, col0 + c) = range > 0.0 ? (v - lo) / range : 0.5;
    }
}

}  // namespace

Mat feature_grid_image(const Forest& forest, const GeneratorSet& gens,
                       GridMode mode) {
  const std::size_t side = static_cast<std::size_t>(forest.side);
  const std::size_t v = forest.trees.size();
  if (v == 0) throw std::invalid_argument("feature_grid_image: empty forest");

  if (mode == GridMode::kRoots) {
    Mat sheet(side, v * side + (v - 1));  // single row of roots
    for (std::size_t t = 0; t < v; ++t)
      place_cell(sheet, 0, t * (side + 1), forest.trees[t].root, side);
    return sheet;
  }

  const Mat leaves = materialize_leaves(forest, gens);
  const std::vector<LeafRef> refs = leaf_index(forest);
  std::size_t max_leaves = 0;
  std::vector<std::size_t> count(v, 0);
  for (const LeafRef& r : refs)
    max_leaves = std::max(max_leaves, ++count[static_cast<std::size_t>(r.tree)]);

  Mat sheet(v * side + (v - 1), max_leaves * side + (max_leaves - 1));
  std::vector<std::size_t> placed(v, 0);
  for (std::size_t c = 0; c < refs.size(); ++c) {
    const std::size_t t = static_cast<std::size_t>(refs[c].tree);
    place_cell(sheet, t * (side + 1), placed[t]++ * (side + 1),
               get_col(leaves, c), side);
  }
  return sheet;
}

EvalResult evaluate_features(const Mat& features, const PatchBatch& batch,
                             double lambda_w, int num_threads) {
  const Mat w = infer_weights(features, batch, lambda_w, num_threads);
  Mat resid = batch.patches;
  Mat neg_w = w;
  scale(neg_w, -1.0);
  matmul_into(neg_w, transpose(features), resid, 1.0);
  EvalResult out;
  out.mse = frobenius_inner(resid, resid) / static_cast<double>(batch.count());
  out.sparsity = mean_sparsity(w);
  return out;
}

std::vector<CompareRow> run_comparison(const std::vector<CompareRowSpec>& rows,
                                       const PatchBatch& pool,
                                       const CompareOptions& opts,
                                       std::ostream* log) {
  if (opts.eval_fraction <= 0.0 || opts.eval_fraction >= 1.0)
    throw ConfigError("compare: eval_fraction must lie in (0, 1)");
  const std::size_t n = pool.count();
  const std::size_t eval_n = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(opts.eval_fraction * n)));
  if (eval_n >= n) throw DataError("compare: pool too small to split");
  const std::size_t train_n = n - eval_n;

  auto slice = [&](std::size_t lo, std::size_t cnt) {
    PatchBatch b;
    b.side = pool.side;
    b.patches = Mat(cnt, pool.dim());
    for (std::size_t i = 0; i < cnt; ++i)
      std::copy(pool.patches.row(lo + i), pool.patches.row(lo + i) + pool.dim(),
                b.patches.row(i));
    return b;
  };
  const PatchBatch train_pool = slice(0, train_n);
  const PatchBatch eval_batch = slice(train_n, eval_n);

  std::vector<CompareRow> out;
  for (const CompareRowSpec& spec : rows) {
    CompareRow row;
    row.spec = spec;
    try {
      TrainConfig cfg = opts.train;
      cfg.lambda_w = spec.lambda_w;
      cfg.roots = spec.roots;
      cfg.branching = spec.branching;
      cfg.validate();

      if (log)
        *log << "compare: training " << spec.roots << "x" << spec.branching
             << " at lambda_w " << spec.lambda_w << "\n";
      TrainResult tsc = train(cfg, train_pool, nullptr);
      const GeneratorSet gens = build_generators(cfg.side);
      const Mat leaves = materialize_leaves(tsc.forest, gens);

      const std::size_t k = leaves.cols();
      double mag = 0.0;
      for (std::size_t c = 0; c < k; ++c) mag += norm2(get_col(leaves, c));
      mag /= static_cast<double>(k);
      if (!(mag > 0)) throw NumericError("compare: degenerate leaf magnitudes");

      TrainConfig sc_cfg = cfg;
      if (opts.sc_epochs >= 0) sc_cfg.epochs = opts.sc_epochs;
      if (log) *log << "compare: training SC baseline, " << k << " features\n";
      ScResult sc = train_sc_baseline(sc_cfg, train_pool,
                                      static_cast<int>(k), mag, nullptr);

      const EvalResult et = evaluate_features(leaves, eval_batch, spec.lambda_w,
                                              cfg.num_threads);
      const EvalResult es = evaluate_features(sc.dictionary, eval_batch,
                                              spec.lambda_w, cfg.num_threads);
      row.tsc_mse = et.mse;
      row.tsc_sparsity = et.sparsity;
      row.sc_mse = es.mse;
      row.sc_sparsity = es.sparsity;
      const int edges =
          static_cast<int>(tsc.forest.trees.front().nodes.size()) - 1;
      row.tsc_df = static_cast<int>(dof_tsc(cfg.roots, edges,
                                            static_cast<int>(pool.dim()),
                                            kNumGenerators));
      row.sc_df = static_cast<int>(
          dof_sc(static_cast<int>(k), static_cast<int>(pool.dim())));
      row.num_features = static_cast<int>(k);
      row.df_ratio = static_cast<double>(row.sc_df) / row.tsc_df;
      row.ok = true;
    } catch (const ConfigError& e) {
      row.error = e.what();
      row.error_exit = 2;
    } catch (const DataError& e) {
      row.error = e.what();
      row.error_exit = 3;
    } catch (const NumericError& e) {
      row.error = e.what();
      row.error_exit = 4;
    } catch (const std::exception& e) {
      row.error = e.what();
      row.error_exit = 1;
    }
    if (!row.ok && log)
      *log << "compare: row " << spec.roots << "x" << spec.branching
           << " failed: " << row.error << "\n";
    out.push_back(std::move(row));
  }
  return out;
}

DofReport dof_report(int num_trees, int branches_per_tree, int pixel_dim,
                     int group_dim) {
  DofReport rep;
  rep.df_tsc = static_cast<int>(
      dof_tsc(num_trees, branches_per_tree, pixel_dim, group_dim));
  rep.df_sc = static_cast<int>(dof_sc(num_trees * branches_per_tree, pixel_dim));
  rep.ratio = static_cast<double>(rep.df_sc) / rep.df_tsc;
  if (num_trees == 1 && branches_per_tree == 64 && pixel_dim == 100 &&
      group_dim == 6) {
    // The widely circulated count for this one layout is 447, which the
    // formula V*(M-1+B*group_dim) does not produce; we report the formula
    // value and note the mismatch rather than silently picking either.
    rep.note =
        "note: 1x64 at 100 pixels is elsewhere quoted as 447; the formula "
        "gives 483, which is what is reported here";
  }
  return rep;
}

std::string format_ratio(double ratio) {
  // Truncate toward zero at two decimals so e.g. 10.8866 prints as 10.88.
  const double t = std::trunc(ratio * 100.0) / 100.0;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", t);
  return buf;
}

namespace {

std::string g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// One row's cell strings in the published column order; shared verbatim by
// the CSV and the text table.
std::vector<std::string> row_cells(const CompareRow& r) {
  return {g17(r.spec.lambda_w),
          std::to_string(r.spec.roots) + "x" + std::to_string(r.spec.branching),
          g17(r.tsc_mse),
          g17(r.tsc_sparsity),
          std::to_string(r.tsc_df),
          g17(r.sc_mse),
          g17(r.sc_sparsity),
          std::to_string(r.sc_df),
          std::to_string(r.num_features),
          format_ratio(r.df_ratio)};
}

const std::vector<std::string>& header_cells() {
  static const std::vector<std::string> h = {
      "lambda_w", "layout",       "tsc_mse", "tsc_sparsity", "df_tsc",
      "sc_mse",   "sc_sparsity",  "df_sc",   "num_features", "df_ratio"};
  return h;
}

}  // namespace

void write_comparison_csv(const std::vector<CompareRow>& rows,
                          std::ostream& out) {
  const auto& hdr = header_cells();
  for (std::size_t i = 0; i < hdr.size(); ++i)
    out << (i ? "," : "") << hdr[i];
  out << "\n";
  for (const CompareRow& r : rows) {
    if (!r.ok) continue;
    const auto cells = row_cells(r);
    for (std::size_t i = 0; i < cells.size(); ++i)
      out << (i ? "," : "") << cells[i];
    out << "\n";
  }
}

std::string format_comparison_table(const std::vector<CompareRow>& rows) {
  const auto& hdr = header_cells();
  std::vector<std::vector<std::string>> body;
  for (const CompareRow& r : rows)
    if (r.ok) body.push_back(row_cells(r));

  std::vector<std::size_t> width(hdr.size());
  for (std::size_t i = 0; i < hdr.size(); ++i) width[i] = hdr[i].size();
  for (const auto& cells : body)
    for (std::size_t i = 0; i < cells.size(); ++i)
      width[i] = std::max(width[i], cells[i].size());

  std::ostringstream out;
  auto emit = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      out << (i ? "  " : "") << cells[i];
      for (std::size_t p = cells[i].size(); p < width[i]; ++p) out << ' ';
    }
    out << "\n";
  };
  emit(hdr);
  for (const auto& cells : body) emit(cells);
  for (const CompareRow& r : rows)
    if (!r.ok)
      out << "(row " << r.spec.roots << "x" << r.spec.branching
          << " failed: " << r.error << ")\n";
  return out.str();
}

void write_sweep_csv(const SweepSurface& surface, std::ostream& out) {
  out << "param" << surface.spec.axis_a + 1 << ",param"
      << surface.spec.axis_b + 1 << ",error,normalized,is_argmin\n";
  for (int ia = 0; ia < surface.spec.grid_a; ++ia) {
    const double xa = surface.spec.lo_a +
                      (surface.spec.hi_a - surface.spec.lo_a) * ia /
                          (surface.spec.grid_a - 1);
    for (int ib = 0; ib < surface.spec.grid_b; ++ib) {
      const double xb = surface.spec.lo_b +
                        (surface.spec.hi_b - surface.spec.lo_b) * ib /
                            (surface.spec.grid_b - 1);
      out << g17(xa) << "," << g17(xb) << "," << g17(surface.raw(ia, ib))
          << "," << g17(surface.normalized(ia, ib)) << ","
          << (ia == surface.argmin_a && ib == surface.argmin_b ? 1 : 0)
          << "\n";
    }
  }
}

}  // namespace tsc
