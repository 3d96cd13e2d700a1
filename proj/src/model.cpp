#include "tsc/model.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "tsc/errors.hpp"

namespace tsc {

std::vector<int> Tree::leaf_ids() const {
  std::vector<bool> has_child(nodes.size(), false);
  for (std::size_t i = 1; i < nodes.size(); ++i)
    has_child[static_cast<std::size_t>(nodes[i].parent)] = true;
  std::vector<int> ids;
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (!has_child[i]) ids.push_back(static_cast<int>(i));
  return ids;
}

std::size_t Forest::total_leaves() const {
  std::size_t n = 0;
  for (const Tree& t : trees) n += t.leaf_ids().size();
  return n;
}

Forest Forest::uniform(int side, int roots, int branching, int depth) {
  if (side < 1 || roots < 1 || branching < 1 || depth < 1)
    throw std::invalid_argument("Forest::uniform: all layout values >= 1");
  Forest f;
  f.side = side;
  f.trees.resize(roots);
  for (Tree& t : f.trees) {
    t.root.assign(f.pixel_dim(), 0.0);
    t.nodes.push_back(TreeNode{});  // root
    // breadth-first levels: children of node i are appended in order, so
    // node ids are level-contiguous and leaves are the last branching^depth.
    std::size_t level_begin = 0, level_end = 1;
    for (int d = 0; d < depth; ++d) {
      const std::size_t next_begin = t.nodes.size();
      for (std::size_t p = level_begin; p < level_end; ++p)
        for (int b = 0; b < branching; ++b)
          t.nodes.push_back(TreeNode{static_cast<int>(p), {}});
      level_begin = next_begin;
      level_end = t.nodes.size();
    }
  }
  return f;
}

TransformParams path_params(const Tree& tree, int node) {
  if (node < 0 || static_cast<std::size_t>(node) >= tree.nodes.size())
    throw std::invalid_argument("path_params: unknown node id");
  TransformParams sum{};
  int cur = node;
  while (tree.nodes[cur].parent >= 0) {
    sum = sum + tree.nodes[cur].edge;
    cur = tree.nodes[cur].parent;
  }
  return sum;
}

std::vector<LeafRef> leaf_index(const Forest& forest) {
  std::vector<LeafRef> refs;
  for (std::size_t v = 0; v < forest.trees.size(); ++v)
    for (int id : forest.trees[v].leaf_ids())
      refs.push_back({static_cast<int>(v), id});
  return refs;
}

Mat materialize_leaves(const Forest& forest, const GeneratorSet& gens) {
  if (forest.side != gens.side())
    throw std::invalid_argument("materialize_leaves: side mismatch");
  const std::size_t m = forest.pixel_dim();
  const std::vector<LeafRef> refs = leaf_index(forest);
  Mat u(m, refs.size());
  for (std::size_t col = 0; col < refs.size(); ++col) {
    const Tree& tree = forest.trees[static_cast<std::size_t>(refs[col].tree)];
    try {
      const Vec leaf = apply_transform(
          gens, path_params(tree, refs[col].node), tree.root);
      set_col(u, col, leaf);
    } catch (const ExpOverflowError& e) {
      throw ExpOverflowError("materialize_leaves: tree " +
                             std::to_string(refs[col].tree) + " leaf node " +
                             std::to_string(refs[col].node) + ": " + e.what());
    }
  }
  return u;
}

LossBreakdown loss_given_leaves(const Forest& forest, const Mat& leaves,
                                const PatchBatch& batch, const Mat& weights,
                                const Lambdas& lambdas) {
  const std::size_t n = batch.count();
  const std::size_t m = batch.dim();
  if (n == 0) throw std::invalid_argument("loss: empty batch");
  if (leaves.rows() != m || weights.rows() != n ||
      weights.cols() != leaves.cols())
    throw std::invalid_argument("loss: shape mismatch");

  // residual R = P - W U^T
  Mat neg_w = weights;
  scale(neg_w, -1.0);
  Mat resid = batch.patches;
  matmul_into(neg_w, transpose(leaves), resid, 1.0);

  LossBreakdown out;
  out.mse = frobenius_inner(resid, resid) / static_cast<double>(n);

  double l1 = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i)
    l1 += std::fabs(weights.data()[i]);
  out.weight_penalty = lambdas.weight * l1 / static_cast<double>(n);

  for (const Tree& t : forest.trees)
    for (std::size_t i = 1; i < t.nodes.size(); ++i)
      for (int j = 0; j < kNumGenerators; ++j)
        out.param_penalties[j] += t.nodes[i].edge[j] * t.nodes[i].edge[j];
  for (int j = 0; j < kNumGenerators; ++j) out.param_penalties[j] *= lambdas.param[j];

  out.total = out.mse + out.weight_penalty;
  for (double p : out.param_penalties) out.total += p;
  return out;
}

LossBreakdown loss(const Forest& forest, const GeneratorSet& gens,
                   const PatchBatch& batch, const Mat& weights,
                   const Lambdas& lambdas) {
  return loss_given_leaves(forest, materialize_leaves(forest, gens), batch,
                           weights, lambdas);
}

long long dof_tsc(int roots, int branching, int pixels, int group_dim) {
  if (group_dim != 3 && group_dim != 6)
    throw std::invalid_argument("dof_tsc: group_dim must be 3 or 6");
  if (roots < 1 || branching < 1 || pixels < 1)
    throw std::invalid_argument("dof_tsc: layout values must be >= 1");
  return static_cast<long long>(roots) *
         (static_cast<long long>(pixels) - 1 +
          static_cast<long long>(branching) * group_dim);
}

long long dof_sc(int num_features, int pixels) {
  if (num_features < 1 || pixels < 1)
    throw std::invalid_argument("dof_sc: values must be >= 1");
  return static_cast<long long>(num_features) *
         (static_cast<long long>(pixels) - 1);
}

// --- serialization ----------------------------------------------------------

namespace {
constexpr const char* kMagic = "TSCMODEL";
constexpr int kVersion = 1;

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

[[noreturn]] void parse_fail(int line, const std::string& what) {
  throw DataError("model parse error at line " + std::to_string(line) + ": " +
                  what);
}

// Token-wise double reader.  Stream extraction with operator>> refuses the
// "nan"/"inf" spellings %.17g can emit, which would misreport a damaged
// checkpoint as a truncated one; strtod accepts them so the non-finite
// check below can answer with the right message.
bool read_double(std::istringstream& in, double& out) {
  std::string tok;
  if (!(in >> tok)) return false;
  char* end = nullptr;
  out = std::strtod(tok.c_str(), &end);
  return end == tok.c_str() + tok.size() && end != tok.c_str();
}
}  // namespace

void serialize_forest(const Forest& forest, std::ostream& out) {
  out << kMagic << ' ' << kVersion << '\n';
  out << forest.side << ' ' << forest.trees.size() << '\n';
  for (const Tree& t : forest.trees) {
    out << "tree " << t.nodes.size() << '\n';
    for (std::size_t i = 0; i < t.root.size(); ++i) {
      if (i) out << ' ';
      out << fmt_double(t.root[i]);
    }
    out << '\n';
    for (std::size_t i = 1; i < t.nodes.size(); ++i) {
      out << t.nodes[i].parent << ' ' << i;
      for (int j = 0; j < kNumGenerators; ++j)
        out << ' ' << fmt_double(t.nodes[i].edge[j]);
      out << '\n';
    }
  }
}

Forest parse_forest(std::istream& in) {
  int lineno = 0;
  std::string line;
  auto next_line = [&]() -> std::string& {
    if (!std::getline(in, line)) parse_fail(lineno + 1, "unexpected end of file");
    ++lineno;
    return line;
  };

  {
    std::istringstream hdr(next_line());
    std::string magic;
    int version = -1;
    if (!(hdr >> magic >> version) || magic != kMagic)
      parse_fail(lineno, "bad magic (expected TSCMODEL)");
    if (version != kVersion)
      parse_fail(lineno, "unsupported version " + std::to_string(version));
  }

  Forest forest;
  std::size_t num_trees = 0;
  {
    std::istringstream dims(next_line());
    long long side = 0, trees = 0;
    if (!(dims >> side >> trees) || side < 1 || trees < 1)
      parse_fail(lineno, "bad dimensions line (want: side num_trees)");
    forest.side = static_cast<int>(side);
    num_trees = static_cast<std::size_t>(trees);
  }
  const std::size_t m = forest.pixel_dim();

  for (std::size_t v = 0; v < num_trees; ++v) {
    std::size_t num_nodes = 0;
    {
      std::istringstream th(next_line());
      std::string kw;
      long long count = 0;
      if (!(th >> kw >> count) || kw != "tree" || count < 1)
        parse_fail(lineno, "bad tree header (want: tree num_nodes)");
      num_nodes = static_cast<std::size_t>(count);
    }
    Tree tree;
    tree.nodes.assign(num_nodes, TreeNode{});
    {
      std::istringstream rv(next_line());
      tree.root.resize(m);
      for (std::size_t i = 0; i < m; ++i)
        if (!read_double(rv, tree.root[i]))
          parse_fail(lineno, "root vector needs " + std::to_string(m) +
                                 " values");
      std::string extra;
      if (rv >> extra) parse_fail(lineno, "trailing values on root vector");
      if (!all_finite(tree.root))
        parse_fail(lineno, "non-finite value in root vector");
    }
    for (std::size_t i = 1; i < num_nodes; ++i) {
      std::istringstream ev(next_line());
      long long parent = -2, child = -2;
      if (!(ev >> parent >> child))
        parse_fail(lineno, "bad edge line (want: parent child x1..x6)");
      if (child != static_cast<long long>(i))
        parse_fail(lineno, "edge lines must list child ids in order; got " +
                               std::to_string(child));
      if (parent < 0 || parent >= child)
        parse_fail(lineno,
                   "edge references unknown or out-of-order parent node " +
                       std::to_string(parent));
      tree.nodes[i].parent = static_cast<int>(parent);
      for (int j = 0; j < kNumGenerators; ++j) {
        if (!read_double(ev, tree.nodes[i].edge[j]))
          parse_fail(lineno, "edge line needs 6 parameters");
        if (!std::isfinite(tree.nodes[i].edge[j]))
          parse_fail(lineno, "non-finite value on edge line");
      }
      std::string extra;
      if (ev >> extra) parse_fail(lineno, "trailing values on edge line");
    }
    forest.trees.push_back(std::move(tree));
  }
  return forest;
}

}  // namespace tsc
