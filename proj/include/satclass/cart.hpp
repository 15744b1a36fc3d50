#pragma once

#include <iosfwd>
#include <vector>

#include "satclass/data_model.hpp"
#include "satclass/rng.hpp"

namespace satclass {

struct CartControl {
  Index minsplit = 10;  ///< nodes smaller than this are not split
  int xval = 5;         ///< folds for cp selection
  double cp = 0.01;

  void validate() const;
};

struct CartNode {
  int var = -1;  ///< -1 for a terminal node
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  Eigen::VectorXi counts;  ///< training class counts reaching the node

  bool is_leaf() const { return var < 0; }
  Index size() const { return counts.sum(); }
  /// Majority class; ties go to the smallest id.
  ClassId majority() const;
};

/// Classification tree; node 0 is the root. Left branch is x[var] <= threshold.
class CartTree {
 public:
  CartTree() = default;
  CartTree(std::vector<CartNode> nodes, int num_classes, Index dimension);

  const std::vector<CartNode>& nodes() const { return nodes_; }
  const CartNode& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }
  int size() const { return static_cast<int>(nodes_.size()); }
  int num_classes() const { return num_classes_; }
  Index dimension() const { return dimension_; }
  int leaf_count() const;
  int split_count() const { return size() - leaf_count(); }

  template <typename Derived>
  int find_leaf(const Eigen::DenseBase<Derived>& x) const {
    int id = 0;
    while (!node(id).is_leaf()) id = x(node(id).var) <= node(id).threshold ? node(id).left : node(id).right;
    return id;
  }

  /// Collapses the given internal nodes into terminals and renumbers.
  CartTree collapsed(const std::vector<int>& ids) const;

  /// True when this tree is obtained from `other` by collapsing subtrees.
  bool is_pruned_subtree_of(const CartTree& other) const;

  bool operator==(const CartTree& other) const;

 private:
  std::vector<CartNode> nodes_;
  int num_classes_ = 0;
  Index dimension_ = 0;
};

/// Gini 1 - sum p_k^2 of a count vector.
double gini_impurity(const Eigen::VectorXi& counts);

/// Greedy recursive partitioning minimising the size-weighted Gini of the
/// children over midpoints between consecutive distinct values.
CartTree grow_cart(const LabeledDataset& train, const CartControl& control);

/// Weakest-link sequence: the complexity values at which successive
/// subtrees collapse, on the scale of the root's misclassification count.
std::vector<double> pruning_sequence(const CartTree& tree);

/// Collapses, weakest link first, every subtree whose per-split decrease in
/// resubstitution misclassification (relative to the root) is below cp.
/// cp >= 1 always yields the root.
CartTree prune_cart(const CartTree& tree, double cp);

struct CpSelection {
  std::vector<double> candidates;  ///< one representative cp per nested subtree
  std::vector<double> cv_error;
  std::vector<double> cv_se;
  double chosen = 0.0;
};

/// xval-fold stratified cross-validation over the nested cp sequence of the
/// tree grown on `train`, then the 1-SE rule: the largest cp whose error is
/// within one standard error of the minimum.
CpSelection cross_validate_cp(const LabeledDataset& train, const CartControl& control, Rng& rng);
double select_cp(const LabeledDataset& train, const CartControl& control, Rng& rng);

struct CartPrediction {
  ClassId label = 0;
  Eigen::VectorXd probs;
};

/// Terminal class proportions and their argmax.
template <typename Derived>
CartPrediction cart_predict(const CartTree& tree, const Eigen::DenseBase<Derived>& x) {
  const auto& leaf = tree.node(tree.find_leaf(x));
  CartPrediction out;
  out.probs = leaf.counts.template cast<double>() / static_cast<double>(leaf.size());
  out.label = leaf.majority();
  return out;
}

/// N x n matrix of class proportions.
Eigen::MatrixXd cart_probability_matrix(const CartTree& tree, const FeatureMatrix& x);

void write_cart_tree(std::ostream& out, const CartTree& tree);
CartTree read_cart_tree(std::istream& in);

}  // namespace satclass
