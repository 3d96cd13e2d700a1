#pragma once

#include <array>
#include <iosfwd>
#include <vector>

#include "tsc/liegroup.hpp"
#include "tsc/linalg.hpp"
#include "tsc/patch.hpp"

namespace tsc {

// One node of a transformation tree.  Node 0 is the root (parent == -1, edge
// unused); every other node carries the transformation parameters of the edge
// from its parent.
struct TreeNode {
  int parent = -1;
  TransformParams edge{};
};

// A root feature plus a tree of transformations.  Leaves (childless nodes)
// are the dictionary elements: leaf b contributes the feature
// T(path_params(b)) * root, where the path parameters are the sum of edge
// parameters from the root down to b.
struct Tree {
  Vec root;
  std::vector<TreeNode> nodes;

  std::vector<int> leaf_ids() const;  // ascending node ids
};

// A forest of transformation trees over side x side patches.
struct Forest {
  int side = 0;
  std::vector<Tree> trees;

  std::size_t pixel_dim() const {
    return static_cast<std::size_t>(side) * side;
  }
  std::size_t total_leaves() const;

  // `roots` trees, each a complete `branching`-ary tree with `depth` edge
  // levels (depth 1 = the flat layout: every leaf hangs off the root).
  // Roots and edge parameters are zero-initialized.
  static Forest uniform(int side, int roots, int branching, int depth = 1);
};

// Edge-parameter sum along the path from the root to `node`.
TransformParams path_params(const Tree& tree, int node);

// Identifies a leaf by tree index and node id; `leaf_index` fixes the global
// dictionary column order (trees in order, leaves by ascending node id).
struct LeafRef {
  int tree = 0;
  int node = 0;
};
std::vector<LeafRef> leaf_index(const Forest& forest);

// All leaf features as columns of an M x K matrix, in leaf_index order.
// Propagates exp overflow, naming the offending tree/leaf.
Mat materialize_leaves(const Forest& forest, const GeneratorSet& gens);

// Penalty configuration: weight sparsity plus per-generator quadratic
// penalties on the edge parameters.
struct Lambdas {
  double weight = 0.0;
  std::array<double, kNumGenerators> param{};
};

struct LossBreakdown {
  double mse = 0.0;             // (1/N) sum_i ||I_i - U w_i||^2
  double weight_penalty = 0.0;  // lambda_w (1/N) sum_i ||w_i||_1
  std::array<double, kNumGenerators> param_penalties{};  // lambda_j ||X_j||^2
  double total = 0.0;
};

// Full objective on a batch given per-patch weights (N x K, leaf_index column
// order).  `total` is exactly the sum of the parts.
LossBreakdown loss(const Forest& forest, const GeneratorSet& gens,
                   const PatchBatch& batch, const Mat& weights,
                   const Lambdas& lambdas);
// Same, reusing an already-materialized leaf matrix.
LossBreakdown loss_given_leaves(const Forest& forest, const Mat& leaves,
                                const PatchBatch& batch, const Mat& weights,
                                const Lambdas& lambdas);

// Model complexity: independent parameter counts.  group_dim is 3 for the
// rigid subgroup (translations + rotation) or 6 for the full affine group.
long long dof_tsc(int roots, int branching, int pixels, int group_dim);
long long dof_sc(int num_features, int pixels);

// Text model format, versioned; round-trips doubles exactly (17 significant
// digits).  parse_forest throws DataError with a line number on malformed or
// inconsistent input.
void serialize_forest(const Forest& forest, std::ostream& out);
Forest parse_forest(std::istream& in);

}  // namespace tsc
