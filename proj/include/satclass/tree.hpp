#pragma once

#include <vector>

#include "satclass/common.hpp"

namespace satclass {

/// Candidate split values per predictor, strictly increasing.
struct CutpointGrid {
  std::vector<std::vector<double>> cuts;

  Index dimension() const { return static_cast<Index>(cuts.size()); }
  int count(Index var) const { return static_cast<int>(cuts[static_cast<std::size_t>(var)].size()); }
  double value(Index var, int cut) const { return cuts[static_cast<std::size_t>(var)][static_cast<std::size_t>(cut)]; }
};

/// min(numcut, distinct - 1) points per predictor, equally spaced strictly
/// inside [min, max] of the observed values.
CutpointGrid build_cutpoints(const FeatureMatrix& x, Index numcut);

/// ranks(i, v) = number of cutpoints of v strictly below x(i, v). Then
/// x(i, v) <= cut value c  exactly when  ranks(i, v) <= c.
using RankedFeatures = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
RankedFeatures rank_features(const FeatureMatrix& x, const CutpointGrid& grid);

struct TreeNode {
  int var = -1;  ///< -1 for a terminal node
  int cut = 0;
  int left = -1;
  int right = -1;
  int parent = -1;
  int depth = 0;
  double mu = 0.0;

  bool is_leaf() const { return var < 0; }
};

/// Binary regression tree stored as a node array; node 0 is the root.
class Tree {
 public:
  explicit Tree(double mu = 0.0);

  /// Builds from nodes with left/right links set; parents and depths are
  /// recomputed. Throws if the links do not form a binary tree rooted at 0.
  static Tree from_nodes(std::vector<TreeNode> nodes);

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  const TreeNode& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }
  TreeNode& node(int id) { return nodes_[static_cast<std::size_t>(id)]; }
  int size() const { return static_cast<int>(nodes_.size()); }

  std::vector<int> leaves() const;
  std::vector<int> internal_nodes() const;
  /// Internal nodes whose children are both terminal.
  std::vector<int> prunable_nodes() const;
  int leaf_count() const;
  int max_depth() const;

  /// Splits a terminal node; both children start with mu = 0.
  void grow(int leaf, int var, int cut);
  /// Collapses an internal node whose children are terminal. Node ids are
  /// renumbered in preorder afterwards.
  void prune(int id);
  void set_rule(int id, int var, int cut);

  int find_leaf_ranked(const int* ranks) const {
    int id = 0;
    while (!nodes_[static_cast<std::size_t>(id)].is_leaf()) {
      const auto& n = nodes_[static_cast<std::size_t>(id)];
      id = ranks[n.var] <= n.cut ? n.left : n.right;
    }
    return id;
  }

  template <typename Derived>
  int find_leaf(const Eigen::DenseBase<Derived>& x, const CutpointGrid& grid) const {
    int id = 0;
    while (!nodes_[static_cast<std::size_t>(id)].is_leaf()) {
      const auto& n = nodes_[static_cast<std::size_t>(id)];
      id = x(n.var) <= grid.value(n.var, n.cut) ? n.left : n.right;
    }
    return id;
  }

  bool operator==(const Tree& other) const;

 private:
  void compact();

  std::vector<TreeNode> nodes_;
};

/// Value of the terminal node reached by x (left iff x[var] <= cut value).
template <typename Derived>
double tree_predict(const Tree& tree, const Eigen::DenseBase<Derived>& x, const CutpointGrid& grid) {
  return tree.node(tree.find_leaf(x, grid)).mu;
}

/// Inclusive range of cut indices still usable for one variable at a node.
struct CutRange {
  int lo = 0;
  int hi = -1;
  int size() const { return hi >= lo ? hi - lo + 1 : 0; }
};

/// Per variable, the cuts consistent with the rules of the node's ancestors.
std::vector<CutRange> available_cuts(const Tree& tree, int id, const CutpointGrid& grid);

struct TreePrior {
  double alpha = 0.95;
  double beta = 2.0;

  /// alpha * (1 + depth)^(-beta)
  double split_probability(int depth) const;
};

/// log P(T): split/stop terms per node plus uniform split-rule terms. A node
/// with no available cut cannot split and contributes 0 when terminal.
/// Returns -inf if some rule falls outside its available range.
double log_tree_structure_prior(const Tree& tree, const CutpointGrid& grid, const TreePrior& prior);

}  // namespace satclass
