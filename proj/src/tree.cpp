#include "satclass/tree.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace satclass {

CutpointGrid build_cutpoints(const FeatureMatrix& x, Index numcut) {
  if (x.rows() < 1) throw Error(ErrorCategory::Data, "build_cutpoints needs at least one row");
  if (numcut < 1) throw Error(ErrorCategory::Config, "numcut must be positive");
  CutpointGrid grid;
  grid.cuts.resize(static_cast<std::size_t>(x.cols()));
  std::vector<double> column;
  for (Index v = 0; v < x.cols(); ++v) {
    column.assign(x.col(v).begin(), x.col(v).end());
    std::sort(column.begin(), column.end());
    const auto distinct = static_cast<Index>(std::unique(column.begin(), column.end()) - column.begin());
    const Index count = std::min(numcut, distinct - 1);
    const double lo = column.front();
    const double hi = column[static_cast<std::size_t>(distinct - 1)];
    auto& cuts = grid.cuts[static_cast<std::size_t>(v)];
    cuts.reserve(static_cast<std::size_t>(count));
    const double step = (hi - lo) / static_cast<double>(count + 1);
    for (Index c = 0; c < count; ++c) {
      const double value = lo + static_cast<double>(c + 1) * step;
      if (cuts.empty() || value > cuts.back()) cuts.push_back(value);
    }
  }
  return grid;
}

RankedFeatures rank_features(const FeatureMatrix& x, const CutpointGrid& grid) {
  if (x.cols() != grid.dimension()) throw Error(ErrorCategory::Dimension, "feature width does not match grid");
  RankedFeatures ranks(x.rows(), x.cols());
  for (Index v = 0; v < x.cols(); ++v) {
    const auto& cuts = grid.cuts[static_cast<std::size_t>(v)];
    for (Index i = 0; i < x.rows(); ++i) {
      ranks(i, v) = static_cast<int>(std::lower_bound(cuts.begin(), cuts.end(), x(i, v)) - cuts.begin());
    }
  }
  return ranks;
}

Tree::Tree(double mu) {
  TreeNode root;
  root.mu = mu;
  nodes_.push_back(root);
}

Tree Tree::from_nodes(std::vector<TreeNode> nodes) {
  if (nodes.empty()) throw Error(ErrorCategory::Parse, "tree has no nodes");
  std::vector<int> seen(nodes.size(), 0);
  std::vector<std::pair<int, int>> stack{{0, -1}};
  while (!stack.empty()) {
    const auto [id, parent] = stack.back();
    stack.pop_back();
    if (id < 0 || id >= static_cast<int>(nodes.size()) || seen[static_cast<std::size_t>(id)]++) {
      throw Error(ErrorCategory::Parse, "tree links do not form a binary tree");
    }
    auto& n = nodes[static_cast<std::size_t>(id)];
    n.parent = parent;
    n.depth = parent < 0 ? 0 : nodes[static_cast<std::size_t>(parent)].depth + 1;
    if (n.is_leaf()) {
      n.left = n.right = -1;
    } else {
      stack.push_back({n.right, id});
      stack.push_back({n.left, id});
    }
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end()) {
    throw Error(ErrorCategory::Parse, "tree has unreachable nodes");
  }
  Tree tree;
  tree.nodes_ = std::move(nodes);
  tree.compact();
  return tree;
}

std::vector<int> Tree::leaves() const {
  std::vector<int> out;
  for (int i = 0; i < size(); ++i) {
    if (nodes_[static_cast<std::size_t>(i)].is_leaf()) out.push_back(i);
  }
  return out;
}

std::vector<int> Tree::internal_nodes() const {
  std::vector<int> out;
  for (int i = 0; i < size(); ++i) {
    if (!nodes_[static_cast<std::size_t>(i)].is_leaf()) out.push_back(i);
  }
  return out;
}

std::vector<int> Tree::prunable_nodes() const {
  std::vector<int> out;
  for (int i = 0; i < size(); ++i) {
    const auto& n = nodes_[static_cast<std::size_t>(i)];
    if (!n.is_leaf() && node(n.left).is_leaf() && node(n.right).is_leaf()) out.push_back(i);
  }
  return out;
}

int Tree::leaf_count() const {
  return static_cast<int>(std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

int Tree::max_depth() const {
  int depth = 0;
  for (const auto& n : nodes_) depth = std::max(depth, n.depth);
  return depth;
}

void Tree::grow(int leaf, int var, int cut) {
  if (!node(leaf).is_leaf()) throw Error(ErrorCategory::Data, "grow requires a terminal node");
  TreeNode child;
  child.parent = leaf;
  child.depth = node(leaf).depth + 1;
  const int left = size();
  nodes_.push_back(child);
  nodes_.push_back(child);
  auto& n = node(leaf);
  n.var = var;
  n.cut = cut;
  n.left = left;
  n.right = left + 1;
  n.mu = 0.0;
}

void Tree::prune(int id) {
  auto& n = node(id);
  if (n.is_leaf() || !node(n.left).is_leaf() || !node(n.right).is_leaf()) {
    throw Error(ErrorCategory::Data, "prune requires both children to be terminal");
  }
  n.var = -1;
  n.cut = 0;
  n.left = n.right = -1;
  compact();
}

void Tree::set_rule(int id, int var, int cut) {
  auto& n = node(id);
  if (n.is_leaf()) throw Error(ErrorCategory::Data, "set_rule requires an internal node");
  n.var = var;
  n.cut = cut;
}

void Tree::compact() {
  std::vector<TreeNode> ordered;
  ordered.reserve(nodes_.size());
  std::function<int(int, int)> visit = [&](int id, int parent) -> int {
    const int new_id = static_cast<int>(ordered.size());
    TreeNode n = nodes_[static_cast<std::size_t>(id)];
    n.parent = parent;
    n.depth = parent < 0 ? 0 : ordered[static_cast<std::size_t>(parent)].depth + 1;
    ordered.push_back(n);
    if (!n.is_leaf()) {
      const int left = visit(n.left, new_id);
      const int right = visit(n.right, new_id);
      ordered[static_cast<std::size_t>(new_id)].left = left;
      ordered[static_cast<std::size_t>(new_id)].right = right;
    }
    return new_id;
  };
  visit(0, -1);
  nodes_ = std::move(ordered);
}

bool Tree::operator==(const Tree& other) const {
  if (size() != other.size()) return false;
  for (int i = 0; i < size(); ++i) {
    const auto& a = node(i);
    const auto& b = other.node(i);
    if (a.var != b.var || a.left != b.left || a.right != b.right || a.mu != b.mu) return false;
    if (!a.is_leaf() && a.cut != b.cut) return false;
  }
  return true;
}

std::vector<CutRange> available_cuts(const Tree& tree, int id, const CutpointGrid& grid) {
  std::vector<CutRange> ranges(static_cast<std::size_t>(grid.dimension()));
  for (Index v = 0; v < grid.dimension(); ++v) ranges[static_cast<std::size_t>(v)] = {0, grid.count(v) - 1};
  int child = id;
  int parent = tree.node(id).parent;
  while (parent >= 0) {
    const auto& p = tree.node(parent);
    auto& range = ranges[static_cast<std::size_t>(p.var)];
    if (p.left == child) {
      range.hi = std::min(range.hi, p.cut - 1);
    } else {
      range.lo = std::max(range.lo, p.cut + 1);
    }
    child = parent;
    parent = p.parent;
  }
  return ranges;
}

double TreePrior::split_probability(int depth) const {
  return alpha * std::pow(1.0 + static_cast<double>(depth), -beta);
}

double log_tree_structure_prior(const Tree& tree, const CutpointGrid& grid, const TreePrior& prior) {
  double total = 0.0;
  std::vector<CutRange> ranges(static_cast<std::size_t>(grid.dimension()));
  for (Index v = 0; v < grid.dimension(); ++v) ranges[static_cast<std::size_t>(v)] = {0, grid.count(v) - 1};

  std::function<bool(int)> visit = [&](int id) -> bool {
    const auto& n = tree.node(id);
    int usable_vars = 0;
    for (const auto& r : ranges) usable_vars += r.size() > 0 ? 1 : 0;
    const double p_split = usable_vars > 0 ? prior.split_probability(n.depth) : 0.0;
    if (n.is_leaf()) {
      total += std::log1p(-p_split);
      return true;
    }
    auto& range = ranges[static_cast<std::size_t>(n.var)];
    if (usable_vars == 0 || n.cut < range.lo || n.cut > range.hi) return false;
    total += std::log(p_split) - std::log(static_cast<double>(usable_vars)) -
             std::log(static_cast<double>(range.size()));
    const CutRange saved = range;
    range.hi = n.cut - 1;
    const bool left_ok = visit(n.left);
    range = saved;
    range.lo = n.cut + 1;
    const bool right_ok = left_ok && visit(n.right);
    range = saved;
    return right_ok;
  };
  if (!visit(0)) return -std::numeric_limits<double>::infinity();
  return total;
}

}  // namespace satclass
