#include "tsc/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>

#include "tsc/errors.hpp"
#include "tsc/kernels.hpp"
#include "tsc/liegroup.hpp"

namespace tsc {

Lambdas TrainConfig::lambdas() const {
  Lambdas l;
  l.weight = lambda_w;
  for (int j = 0; j < kNumGenerators; ++j)
    l.param[j] = lambda_base * lambda_mult[j];
  return l;
}

void TrainConfig::validate() const {
  auto bad = [](const std::string& what) { throw ConfigError(what); };
  if (side < 1) bad("config: side must be >= 1");
  if (roots < 1) bad("config: roots must be >= 1");
  if (branching < 1) bad("config: branching must be >= 1");
  if (depth < 1) bad("config: depth must be >= 1");
  if (lambda_w < 0) bad("config: lambda_w must be >= 0");
  if (lambda_base < 0) bad("config: lambda_base must be >= 0");
  for (double m : lambda_mult)
    if (m < 0) bad("config: lambda_mult entries must be >= 0");
  if (!(eta > 0)) bad("config: eta must be > 0");
  if (!(eta_decay > 0) || eta_decay > 1) bad("config: eta_decay in (0, 1]");
  if (backtrack_max < 0) bad("config: backtrack_max must be >= 0");
  if (batch_size < 1) bad("config: batch_size must be >= 1");
  if (epochs < 0) bad("config: epochs must be >= 0");
  if (grad_samples < 1) bad("config: grad_samples must be >= 1");
  if (!(x_max > 0)) bad("config: x_max must be > 0");
  if (underuse_threshold < 0 || underuse_threshold > 1)
    bad("config: underuse_threshold in [0, 1]");
  if (sigma_reinit < 0) bad("config: sigma_reinit must be >= 0");
  if (reinit_period < 0) bad("config: reinit_period must be >= 0");
  if (sigma_init < 0) bad("config: sigma_init must be >= 0");
  if (num_threads < 1) bad("config: num_threads must be >= 1");
}

std::string format_metrics_line(const EpochRecord& rec) {
  char buf[512];
  int off = std::snprintf(buf, sizeof buf, "%d %.17g %.17g", rec.epoch,
                          rec.loss.mse, rec.loss.weight_penalty);
  for (int j = 0; j < kNumGenerators; ++j)
    off += std::snprintf(buf + off, sizeof buf - off, " %.17g",
                         rec.loss.param_penalties[j]);
  std::snprintf(buf + off, sizeof buf - off, " %.17g %d\n", rec.sparsity,
                rec.reinits);
  return buf;
}

Mat infer_weights(const Mat& leaves, const PatchBatch& batch, double lambda_w,
                  int num_threads) {
  const std::size_t n = batch.count();
  const std::size_t k = leaves.cols();
  if (batch.dim() != leaves.rows())
    throw std::invalid_argument("infer_weights: dimension mismatch");

  const Mat lt = transpose(leaves);
  const Mat gram = matmul(lt, leaves);       // K x K, shared by all patches
  const Mat corr = matmul(batch.patches, leaves);  // row i = leaves^T patch_i

  Mat w(n, k);
  auto solve_range = [&](std::size_t lo, std::size_t hi,
                         std::exception_ptr& err) {
    try {
      for (std::size_t i = lo; i < hi; ++i) {
        const double ssq = kernels::ops().dot(batch.patches.row(i),
                                              batch.patches.row(i),
                                              batch.dim());
        Vec ci(corr.row(i), corr.row(i) + k);
        SparseWeights sw;
        try {
          sw = feature_sign_gram(gram, ci, ssq, lambda_w);
        } catch (const NonConvergenceError& e) {
          throw NonConvergenceError("patch " + std::to_string(i) + ": " +
                                    e.what());
        }
        std::copy(sw.w.begin(), sw.w.end(), w.row(i));
        // Exactness guard: a correct solve can never beat w = 0 ... or lose
        // to it.  ssq is the zero-weight objective.
        if (sw.objective > ssq * (1.0 + 1e-9) + 1e-9)
          throw NumericError("infer_weights: patch " + std::to_string(i) +
                             " objective exceeds the zero-weight bound");
      }
    } catch (...) {
      err = std::current_exception();
    }
  };

  const int threads = std::max(1, std::min<int>(num_threads, static_cast<int>(n)));
  if (threads == 1) {
    std::exception_ptr err;
    solve_range(0, n, err);
    if (err) std::rethrow_exception(err);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errs(threads);
    const std::size_t chunk = (n + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      const std::size_t lo = t * chunk;
      const std::size_t hi = std::min(n, lo + chunk);
      if (lo >= hi) break;
      pool.emplace_back(solve_range, lo, hi, std::ref(errs[t]));
    }
    for (auto& th : pool) th.join();
    for (auto& e : errs)
      if (e) std::rethrow_exception(e);
  }
  return w;
}

Vec usage_fractions(const Mat& weights) {
  const std::size_t n = weights.rows(), k = weights.cols();
  Vec usage(k, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j)
      if (weights(i, j) != 0.0) usage[j] += 1.0;
  for (double& u : usage) u /= static_cast<double>(n);
  return usage;
}

double mean_sparsity(const Mat& weights) {
  std::size_t nnz = 0;
  for (std::size_t i = 0; i < weights.size(); ++i)
    if (weights.data()[i] != 0.0) ++nnz;
  return static_cast<double>(nnz) / static_cast<double>(weights.rows());
}

namespace {

// mse + parameter penalties for fixed weights (the weight-l1 term is constant
// during a transform step, so backtracking compares without it).
double step_loss(const Forest& forest, const GeneratorSet& gens,
                 const PatchBatch& batch, const Mat& weights,
                 const Lambdas& lambdas) {
  LossBreakdown lb =
      loss_given_leaves(forest, materialize_leaves(forest, gens), batch,
                        weights, lambdas);
  double out = lb.mse;
  for (double p : lb.param_penalties) out += p;
  return out;
}

}  // namespace

TransformStepOutcome update_transforms(Forest& forest, const GeneratorSet& gens,
                                       const PatchBatch& batch,
                                       const Mat& weights,
                                       const TransformStepOptions& opts,
                                       Rng& rng) {
  const std::size_t n = batch.count();
  const std::size_t m = batch.dim();
  const std::vector<LeafRef> refs = leaf_index(forest);
  if (weights.rows() != n || weights.cols() != refs.size())
    throw std::invalid_argument("update_transforms: weight shape mismatch");

  TransformStepOutcome outcome;

  // Residual with the current forest: R = P - W U^T.
  const Mat leaves = materialize_leaves(forest, gens);
  Mat neg_w = weights;
  scale(neg_w, -1.0);
  Mat resid = batch.patches;
  matmul_into(neg_w, transpose(leaves), resid, 1.0);
  const double loss_before =
      frobenius_inner(resid, resid) / static_cast<double>(n) +
      [&] {
        double p = 0.0;
        for (const Tree& t : forest.trees)
          for (std::size_t i = 1; i < t.nodes.size(); ++i)
            for (int j = 0; j < kNumGenerators; ++j)
              p += opts.lambdas.param[j] * t.nodes[i].edge[j] * t.nodes[i].edge[j];
        return p;
      }();

  // s_b = sum_i w_ib r_i for every leaf at once.
  const Mat s = matmul(transpose(resid), weights);  // M x K

  // Per-edge gradient: each leaf's parameter gradient (against its path sum)
  // accumulates into every edge on its path; the quadratic penalty adds its
  // own term per edge.
  std::vector<std::array<double, kNumGenerators>> edge_grad;
  std::vector<std::pair<int, int>> edge_ids;  // (tree, node)
  std::vector<std::vector<int>> edge_of;      // per tree: node -> edge slot
  edge_of.resize(forest.trees.size());
  for (std::size_t v = 0; v < forest.trees.size(); ++v) {
    edge_of[v].assign(forest.trees[v].nodes.size(), -1);
    for (std::size_t i = 1; i < forest.trees[v].nodes.size(); ++i) {
      edge_of[v][i] = static_cast<int>(edge_ids.size());
      edge_ids.emplace_back(static_cast<int>(v), static_cast<int>(i));
      edge_grad.push_back({});
    }
  }

  const Quadrature quad = opts.fixed_nodes
                              ? Quadrature::fixed_nodes(opts.samples)
                              : Quadrature::stochastic(opts.samples, rng);

  Mat cotangent(m, m);
  for (std::size_t col = 0; col < refs.size(); ++col) {
    const Tree& tree = forest.trees[static_cast<std::size_t>(refs[col].tree)];
    // cotangent dL/dT_b = -(2/N) s_b root^T
    const double c0 = -2.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < m; ++i) {
      const double si = c0 * s(i, col);
      double* crow = cotangent.row(i);
      for (std::size_t j = 0; j < m; ++j) crow[j] = si * tree.root[j];
    }
    std::array<double, kNumGenerators> g;
    try {
      g = matexp_param_grad(gens, path_params(tree, refs[col].node), cotangent,
                            quad);
    } catch (const ExpOverflowError&) {
      ++outcome.overflow_leaves;
      continue;
    }
    // walk up the path, accumulating into each edge
    int cur = refs[col].node;
    while (tree.nodes[cur].parent >= 0) {
      auto& eg = edge_grad[static_cast<std::size_t>(
          edge_of[static_cast<std::size_t>(refs[col].tree)][cur])];
      for (int j = 0; j < kNumGenerators; ++j) eg[j] += g[j];
      cur = tree.nodes[cur].parent;
    }
  }
  for (std::size_t e = 0; e < edge_ids.size(); ++e) {
    const auto [v, node] = edge_ids[e];
    const TransformParams& x = forest.trees[v].nodes[node].edge;
    for (int j = 0; j < kNumGenerators; ++j)
      edge_grad[e][j] += 2.0 * opts.lambdas.param[j] * x[j];
  }

  // Backtracking on the full step: halve the rate until the loss stops
  // increasing, up to backtrack_max halvings; revert entirely if it never
  // does.
  std::vector<TransformParams> saved;
  saved.reserve(edge_ids.size());
  for (const auto& [v, node] : edge_ids)
    saved.push_back(forest.trees[v].nodes[node].edge);

  double eta = opts.eta;
  for (int attempt = 0;; ++attempt) {
    for (std::size_t e = 0; e < edge_ids.size(); ++e) {
      const auto [v, node] = edge_ids[e];
      TransformParams x = saved[e];
      for (int j = 0; j < kNumGenerators; ++j) x[j] -= eta * edge_grad[e][j];
      x.clamp(opts.x_max);
      forest.trees[v].nodes[node].edge = x;
    }
    double loss_after;
    try {
      loss_after = step_loss(forest, gens, batch, weights, opts.lambdas);
    } catch (const ExpOverflowError&) {
      loss_after = std::numeric_limits<double>::infinity();
    }
    if (loss_after <= loss_before) break;
    if (attempt >= opts.backtrack_max) {
      for (std::size_t e = 0; e < edge_ids.size(); ++e) {
        const auto [v, node] = edge_ids[e];
        forest.trees[v].nodes[node].edge = saved[e];
      }
      outcome.accepted = false;
      break;
    }
    eta *= 0.5;
    ++outcome.halvings;
  }
  return outcome;
}

int update_roots(Forest& forest, const GeneratorSet& gens,
                 const PatchBatch& batch, Mat& weights) {
  const std::size_t n = batch.count();
  const std::size_t m = batch.dim();
  const std::vector<LeafRef> refs = leaf_index(forest);
  if (weights.rows() != n || weights.cols() != refs.size())
    throw std::invalid_argument("update_roots: weight shape mismatch");

  // Global column ranges per tree (leaf_index orders columns tree-major).
  std::vector<std::size_t> first_col(forest.trees.size() + 1, 0);
  for (std::size_t c = 0; c < refs.size(); ++c)
    first_col[static_cast<std::size_t>(refs[c].tree) + 1] = c + 1;
  for (std::size_t v = 1; v <= forest.trees.size(); ++v)
    first_col[v] = std::max(first_col[v], first_col[v - 1]);

  Mat leaves = materialize_leaves(forest, gens);
  int skipped = 0;

  for (std::size_t v = 0; v < forest.trees.size(); ++v) {
    Tree& tree = forest.trees[v];
    const std::size_t c0 = first_col[v], c1 = first_col[v + 1];
    const std::size_t b = c1 - c0;
    if (b == 0) continue;

    // Transforms of this tree's leaves (shared across the solve).
    std::vector<Mat> t_mats;
    t_mats.reserve(b);
    bool overflow = false;
    for (std::size_t c = c0; c < c1; ++c) {
      try {
        t_mats.push_back(
            transform_matrix(gens, path_params(tree, refs[c].node)));
      } catch (const ExpOverflowError&) {
        overflow = true;
        break;
      }
    }
    if (overflow) {
      ++skipped;
      continue;
    }

    // Residual excluding this tree: r_i = patch_i - sum_{cols not in v} ...
    // Computed as the full residual plus this tree's own reconstruction.
    Mat resid = batch.patches;
    {
      Mat neg_w = weights;
      scale(neg_w, -1.0);
      matmul_into(neg_w, transpose(leaves), resid, 1.0);
    }
    for (std::size_t i = 0; i < n; ++i) {
      double* ri = resid.row(i);
      for (std::size_t c = c0; c < c1; ++c) {
        const double w = weights(i, c);
        if (w == 0.0) continue;
        for (std::size_t j = 0; j < m; ++j) ri[j] += w * leaves(j, c);
      }
    }

    // Normal equations: H = sum_{b,b'} (W^T W)_{bb'} T_b^T T_b',
    // rhs = sum_b T_b^T (sum_i w_ib r_i).
    Mat wv(n, b);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t c = 0; c < b; ++c) wv(i, c) = weights(i, c0 + c);
    const Mat wgram = matmul(transpose(wv), wv);  // b x b
    const Mat s = matmul(transpose(resid), wv);   // m x b

    Mat h(m, m);
    for (std::size_t p = 0; p < b; ++p) {
      const Mat tp_t = transpose(t_mats[p]);
      for (std::size_t q = p; q < b; ++q) {
        const double cpq = wgram(p, q);
        if (cpq == 0.0 && (p == q || wgram(q, p) == 0.0)) continue;
        const Mat block = matmul(tp_t, t_mats[q]);
        add_scaled(h, cpq, block);
        if (q != p) {
          // symmetric partner: c_{qp} T_q^T T_p = (c_{pq} T_p^T T_q)^T
          add_scaled(h, wgram(q, p), transpose(block));
        }
      }
    }
    Vec rhs(m, 0.0);
    for (std::size_t p = 0; p < b; ++p) {
      const Vec sp = get_col(s, p);
      const Vec tps = matvec_t(t_mats[p], sp);
      for (std::size_t j = 0; j < m; ++j) rhs[j] += tps[j];
    }

    Vec froot;
    if (!cholesky_solve(h, rhs, froot, 1e-12)) {
      ++skipped;  // unused or degenerate tree; leave the root alone
      continue;
    }
    const double norm = norm2(froot);
    if (!(norm > 1e-12) || !all_finite(froot)) {
      ++skipped;
      continue;
    }
    scale(froot, 1.0 / norm);
    tree.root = froot;
    // Push the projection scale into the weights so the reconstruction is
    // unchanged: (F/c) * (c w) == F w.
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t c = c0; c < c1; ++c) weights(i, c) *= norm;
    // Refresh this tree's leaf columns for the trees that follow.
    for (std::size_t c = c0; c < c1; ++c) {
      const Vec leaf = matvec(t_mats[c - c0], tree.root);
      set_col(leaves, c, leaf);
    }
  }
  return skipped;
}

int reinit_underused(Forest& forest, const Vec& usage, const TrainConfig& cfg,
                     Rng& rng, int epoch, std::vector<ReinitEvent>& log) {
  const std::vector<LeafRef> refs = leaf_index(forest);
  if (usage.size() != refs.size())
    throw std::invalid_argument("reinit_underused: usage size mismatch");

  int resets = 0;
  std::size_t col = 0;
  for (std::size_t v = 0; v < forest.trees.size(); ++v) {
    Tree& tree = forest.trees[v];
    const std::vector<int> leaves = tree.leaf_ids();
    const std::size_t b = leaves.size();
    const Vec tree_usage(usage.begin() + col, usage.begin() + col + b);
    col += b;

    bool all_under = true;
    for (double u : tree_usage)
      if (u >= cfg.underuse_threshold) all_under = false;

    for (std::size_t li = 0; li < b; ++li) {
      if (tree_usage[li] >= cfg.underuse_threshold) continue;
      const int node = leaves[li];

      TransformParams target{};
      int donor_node = -1;
      if (!all_under) {
        // donor among the other leaves, proportional to usage
        Vec wts;
        std::vector<int> donor_ids;
        for (std::size_t dj = 0; dj < b; ++dj) {
          if (dj == li) continue;
          wts.push_back(tree_usage[dj]);
          donor_ids.push_back(leaves[dj]);
        }
        donor_node = donor_ids[rng.weighted_index(wts)];
        target = path_params(tree, donor_node);
      }
      for (int j = 0; j < kNumGenerators; ++j)
        target[j] += rng.normal(0.0, cfg.sigma_reinit);

      // Only the leaf's own edge moves: aim the whole path at the target so
      // sibling paths through shared ancestors stay intact.
      const TransformParams parent_path =
          path_params(tree, tree.nodes[node].parent < 0
                                ? node
                                : tree.nodes[node].parent);
      TransformParams edge{};
      for (int j = 0; j < kNumGenerators; ++j)
        edge[j] = target[j] - (tree.nodes[node].parent < 0 ? 0.0 : parent_path[j]);
      edge.clamp(cfg.x_max);
      if (tree.nodes[node].parent >= 0) tree.nodes[node].edge = edge;

      log.push_back({epoch, static_cast<int>(v), node, donor_node});
      ++resets;
    }
  }
  return resets;
}

namespace {

PatchBatch sample_batch(const PatchBatch& pool, int batch_size, Rng& rng) {
  const std::size_t n = pool.count();
  if (batch_size <= 0) throw std::invalid_argument("sample_batch: size >= 1");
  if (static_cast<std::size_t>(batch_size) >= n) return pool;  // fixed batch

  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  rng.shuffle(idx);

  PatchBatch batch;
  batch.side = pool.side;
  batch.patches = Mat(batch_size, pool.dim());
  const bool tagged = !pool.tags.empty();
  if (tagged) batch.tags.reserve(batch_size);
  for (int i = 0; i < batch_size; ++i) {
    std::copy(pool.patches.row(idx[i]), pool.patches.row(idx[i]) + pool.dim(),
              batch.patches.row(i));
    if (tagged) batch.tags.push_back(pool.tags[idx[i]]);
  }
  return batch;
}

Forest init_forest(const TrainConfig& cfg, Rng& rng) {
  Forest forest = Forest::uniform(cfg.side, cfg.roots, cfg.branching, cfg.depth);
  for (Tree& t : forest.trees) {
    double norm = 0.0;
    while (norm < 1e-12) {
      for (double& v : t.root) v = rng.normal();
      norm = norm2(t.root);
    }
    scale(t.root, 1.0 / norm);
    for (std::size_t i = 1; i < t.nodes.size(); ++i)
      for (int j = 0; j < kNumGenerators; ++j)
        t.nodes[i].edge[j] = rng.normal(0.0, cfg.sigma_init);
  }
  return forest;
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const PatchBatch& pool,
                  std::ostream* metrics_out) {
  cfg.validate();
  if (pool.count() == 0) throw DataError("train: empty patch pool");
  if (pool.side != cfg.side)
    throw ConfigError("train: pool side " + std::to_string(pool.side) +
                      " != config side " + std::to_string(cfg.side));

  Rng rng(cfg.seed);
  const GeneratorSet gens = build_generators(cfg.side);
  TrainResult result;
  result.forest = init_forest(cfg, rng);
  const Lambdas lambdas = cfg.lambdas();

  double eta = cfg.eta;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const PatchBatch batch = sample_batch(pool, cfg.batch_size, rng);
    const Mat leaves = materialize_leaves(result.forest, gens);
    Mat weights = infer_weights(leaves, batch, cfg.lambda_w, cfg.num_threads);

    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss = loss_given_leaves(result.forest, leaves, batch, weights, lambdas);
    rec.sparsity = mean_sparsity(weights);
    if (!std::isfinite(rec.loss.total))
      throw NumericError("train: non-finite loss at epoch " +
                         std::to_string(epoch));

    const Vec usage = usage_fractions(weights);

    TransformStepOptions opts;
    opts.eta = eta;
    opts.samples = cfg.grad_samples;
    opts.fixed_nodes = cfg.grad_fixed_nodes;
    opts.lambdas = lambdas;
    opts.x_max = cfg.x_max;
    opts.backtrack_max = cfg.backtrack_max;
    update_transforms(result.forest, gens, batch, weights, opts, rng);

    update_roots(result.forest, gens, batch, weights);

    rec.reinits = 0;
    if (cfg.reinit_period > 0 && (epoch + 1) % cfg.reinit_period == 0)
      rec.reinits = reinit_underused(result.forest, usage, cfg, rng, epoch,
                                     result.metrics.reinit_log);

    result.metrics.epochs.push_back(rec);
    result.metrics.final_usage = usage;
    if (metrics_out) *metrics_out << format_metrics_line(rec);

    eta *= cfg.eta_decay;
  }
  return result;
}

ScResult train_sc_baseline(const TrainConfig& cfg, const PatchBatch& pool,
                           int num_features, double fixed_magnitude,
                           std::ostream* metrics_out) {
  cfg.validate();
  if (num_features < 1)
    throw ConfigError("sc baseline: num_features must be >= 1");
  if (!(fixed_magnitude > 0))
    throw ConfigError("sc baseline: fixed_magnitude must be > 0");
  if (pool.count() == 0) throw DataError("sc baseline: empty patch pool");

  const std::size_t m = pool.dim();
  const std::size_t k = static_cast<std::size_t>(num_features);
  // Distinct stream from the forest trainer so paired runs stay independent.
  Rng rng = Rng(cfg.seed).fork(0x5cba5eULL);

  ScResult result;
  result.dictionary = Mat(m, k);
  for (std::size_t j = 0; j < k; ++j) {
    Vec col(m);
    double norm = 0.0;
    while (norm < 1e-12) {
      for (double& v : col) v = rng.normal();
      norm = norm2(col);
    }
    scale(col, fixed_magnitude / norm);
    set_col(result.dictionary, j, col);
  }

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const PatchBatch batch = sample_batch(pool, cfg.batch_size, rng);
    const std::size_t n = batch.count();
    Mat weights =
        infer_weights(result.dictionary, batch, cfg.lambda_w, cfg.num_threads);

    EpochRecord rec;
    rec.epoch = epoch;
    {
      Mat neg_w = weights;
      scale(neg_w, -1.0);
      Mat resid = batch.patches;
      matmul_into(neg_w, transpose(result.dictionary), resid, 1.0);
      rec.loss.mse = frobenius_inner(resid, resid) / static_cast<double>(n);
      double l1 = 0.0;
      for (std::size_t i = 0; i < weights.size(); ++i)
        l1 += std::fabs(weights.data()[i]);
      rec.loss.weight_penalty = cfg.lambda_w * l1 / static_cast<double>(n);
      rec.loss.total = rec.loss.mse + rec.loss.weight_penalty;
      rec.sparsity = mean_sparsity(weights);

      if (!std::isfinite(rec.loss.total))
        throw NumericError("sc baseline: non-finite loss at epoch " +
                           std::to_string(epoch));

      // Per-column exact update on the magnitude sphere: for column k with
      // residual-excluding-k E, the constrained least-squares optimum is
      // fixed_magnitude * (E^T w_k) / ||E^T w_k||.  Never increases the MSE
      // for fixed weights; unused columns are left as they are.
      for (std::size_t j = 0; j < k; ++j) {
        Vec wcol(n);
        double wsq = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          wcol[i] = weights(i, j);
          wsq += wcol[i] * wcol[i];
        }
        if (wsq == 0.0) continue;
        Vec dcol = get_col(result.dictionary, j);
        // add column j's contribution back: E_j = resid + w_j d_j^T
        for (std::size_t i = 0; i < n; ++i) {
          if (wcol[i] == 0.0) continue;
          kernels::ops().axpy(wcol[i], dcol.data(), resid.row(i), m);
        }
        Vec v = matvec_t(resid, wcol);  // E_j^T w_j
        const double vnorm = norm2(v);
        if (vnorm > 1e-12) {
          scale(v, fixed_magnitude / vnorm);
          dcol = v;
          set_col(result.dictionary, j, dcol);
        }
        for (std::size_t i = 0; i < n; ++i) {
          if (wcol[i] == 0.0) continue;
          kernels::ops().axpy(-wcol[i], dcol.data(), resid.row(i), m);
        }
      }
    }

    result.metrics.epochs.push_back(rec);
    result.metrics.final_usage = usage_fractions(weights);
    if (metrics_out) *metrics_out << format_metrics_line(rec);
  }
  return result;
}

}  // namespace tsc
