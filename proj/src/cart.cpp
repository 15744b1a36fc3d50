#include "satclass/cart.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "satclass/io.hpp"

namespace satclass {

void CartControl::validate() const {
  if (minsplit < 2) throw Error(ErrorCategory::Config, "minsplit must be at least 2");
  if (xval < 2) throw Error(ErrorCategory::Config, "xval must be at least 2");
  if (!(cp >= 0.0)) throw Error(ErrorCategory::Config, "cp must be non-negative");
}

ClassId CartNode::majority() const {
  Index best = 0;
  for (Index k = 1; k < counts.size(); ++k) {
    if (counts(k) > counts(best)) best = k;
  }
  return static_cast<ClassId>(best + 1);
}

CartTree::CartTree(std::vector<CartNode> nodes, int num_classes, Index dimension)
    : nodes_(std::move(nodes)), num_classes_(num_classes), dimension_(dimension) {}

int CartTree::leaf_count() const {
  return static_cast<int>(std::count_if(nodes_.begin(), nodes_.end(), [](const CartNode& n) { return n.is_leaf(); }));
}

CartTree CartTree::collapsed(const std::vector<int>& ids) const {
  const std::set<int> cut(ids.begin(), ids.end());
  std::vector<CartNode> out;
  std::function<int(int)> visit = [&](int id) -> int {
    const int new_id = static_cast<int>(out.size());
    out.push_back(node(id));
    if (node(id).is_leaf() || cut.count(id)) {
      auto& n = out.back();
      n.var = -1;
      n.threshold = 0.0;
      n.left = n.right = -1;
      return new_id;
    }
    const int left = visit(node(id).left);
    const int right = visit(node(id).right);
    out[static_cast<std::size_t>(new_id)].left = left;
    out[static_cast<std::size_t>(new_id)].right = right;
    return new_id;
  };
  visit(0);
  return CartTree(std::move(out), num_classes_, dimension_);
}

bool CartTree::is_pruned_subtree_of(const CartTree& other) const {
  std::function<bool(int, int)> visit = [&](int a, int b) {
    const auto& x = node(a);
    const auto& y = other.node(b);
    if (x.counts != y.counts) return false;
    if (x.is_leaf()) return true;
    if (y.is_leaf() || x.var != y.var || x.threshold != y.threshold) return false;
    return visit(x.left, y.left) && visit(x.right, y.right);
  };
  return !nodes_.empty() && !other.nodes_.empty() && visit(0, 0);
}

bool CartTree::operator==(const CartTree& other) const {
  return is_pruned_subtree_of(other) && other.is_pruned_subtree_of(*this);
}

double gini_impurity(const Eigen::VectorXi& counts) {
  const double n = counts.sum();
  if (n <= 0) return 0.0;
  return 1.0 - (counts.cast<double>().array() / n).square().sum();
}

namespace {

class CartGrower {
 public:
  CartGrower(const LabeledDataset& data, const CartControl& control) : data_(data), control_(control) {}

  CartTree grow() {
    std::vector<Index> rows(static_cast<std::size_t>(data_.size()));
    std::iota(rows.begin(), rows.end(), Index{0});
    build(rows);
    return CartTree(std::move(nodes_), data_.num_classes, data_.dimension());
  }

 private:
  Eigen::VectorXi count(const std::vector<Index>& rows) const {
    Eigen::VectorXi counts = Eigen::VectorXi::Zero(data_.num_classes);
    for (Index i : rows) ++counts(data_.labels(i) - 1);
    return counts;
  }

  int build(std::vector<Index>& rows) {
    const int id = static_cast<int>(nodes_.size());
    CartNode node;
    node.counts = count(rows);
    nodes_.push_back(node);
    const auto n = static_cast<Index>(rows.size());
    if (n < control_.minsplit || node.counts.maxCoeff() == n) return id;

    // Size-weighted impurity n * Gini = n - sum c^2 / n, summed over children.
    const double sumsq = node.counts.cast<double>().squaredNorm();
    const double parent = static_cast<double>(n) - sumsq / static_cast<double>(n);
    double best = parent;
    int best_var = -1;
    double best_threshold = 0.0;
    constexpr double tol = 1e-12;

    std::vector<Index> order = rows;
    Eigen::VectorXi left(data_.num_classes);
    for (Index v = 0; v < data_.dimension(); ++v) {
      std::stable_sort(order.begin(), order.end(),
                       [&](Index a, Index b) { return data_.features(a, v) < data_.features(b, v); });
      left.setZero();
      Eigen::VectorXi right = node.counts;
      double left_sq = 0.0;
      double right_sq = sumsq;
      for (Index i = 0; i + 1 < n; ++i) {
        const int c = data_.labels(order[static_cast<std::size_t>(i)]) - 1;
        left_sq += 2.0 * left(c) + 1.0;
        right_sq -= 2.0 * right(c) - 1.0;
        ++left(c);
        --right(c);
        const double a = data_.features(order[static_cast<std::size_t>(i)], v);
        const double b = data_.features(order[static_cast<std::size_t>(i + 1)], v);
        if (!(a < b)) continue;
        const double nl = static_cast<double>(i + 1);
        const double nr = static_cast<double>(n - i - 1);
        const double score = (nl - left_sq / nl) + (nr - right_sq / nr);
        if (score < best - tol) {
          best = score;
          best_var = static_cast<int>(v);
          double mid = a + 0.5 * (b - a);
          if (!(mid < b)) mid = a;
          best_threshold = mid;
        }
      }
    }
    if (best_var < 0 || !(parent - best > tol)) return id;

    std::vector<Index> left_rows, right_rows;
    for (Index i : rows) {
      (data_.features(i, best_var) <= best_threshold ? left_rows : right_rows).push_back(i);
    }
    nodes_[static_cast<std::size_t>(id)].var = best_var;
    nodes_[static_cast<std::size_t>(id)].threshold = best_threshold;
    const int l = build(left_rows);
    const int r = build(right_rows);
    nodes_[static_cast<std::size_t>(id)].left = l;
    nodes_[static_cast<std::size_t>(id)].right = r;
    return id;
  }

  const LabeledDataset& data_;
  const CartControl& control_;
  std::vector<CartNode> nodes_;
};

Index misclassified(const CartNode& node) { return node.size() - node.counts.maxCoeff(); }

/// One weakest-link step: the smallest complexity over internal nodes and
/// the nodes attaining it.
struct WeakestLink {
  double alpha = std::numeric_limits<double>::infinity();
  std::vector<int> nodes;
};

WeakestLink weakest_link(const CartTree& tree) {
  WeakestLink link;
  const double root_error = static_cast<double>(misclassified(tree.node(0)));
  if (tree.node(0).is_leaf() || root_error <= 0.0) return link;
  std::vector<double> g(static_cast<std::size_t>(tree.size()), std::numeric_limits<double>::infinity());
  // Returns (subtree resubstitution error, leaf count).
  std::function<std::pair<Index, int>(int)> visit = [&](int id) -> std::pair<Index, int> {
    const auto& n = tree.node(id);
    if (n.is_leaf()) return {misclassified(n), 1};
    const auto [le, ll] = visit(n.left);
    const auto [re, rl] = visit(n.right);
    const Index sub_error = le + re;
    const int leaves = ll + rl;
    g[static_cast<std::size_t>(id)] =
        static_cast<double>(misclassified(n) - sub_error) / static_cast<double>(leaves - 1) / root_error;
    return {sub_error, leaves};
  };
  visit(0);
  link.alpha = *std::min_element(g.begin(), g.end());
  for (int id = 0; id < tree.size(); ++id) {
    if (g[static_cast<std::size_t>(id)] <= link.alpha + 1e-12) link.nodes.push_back(id);
  }
  return link;
}

}  // namespace

CartTree grow_cart(const LabeledDataset& train, const CartControl& control) {
  control.validate();
  if (train.size() < 1) throw Error(ErrorCategory::Data, "CART needs at least one training row");
  return CartGrower(train, control).grow();
}

std::vector<double> pruning_sequence(const CartTree& tree) {
  std::vector<double> alphas;
  CartTree current = tree;
  for (;;) {
    const auto link = weakest_link(current);
    if (link.nodes.empty()) break;
    alphas.push_back(link.alpha);
    current = current.collapsed(link.nodes);
  }
  return alphas;
}

CartTree prune_cart(const CartTree& tree, double cp) {
  if (!(cp >= 0.0)) throw Error(ErrorCategory::Config, "cp must be non-negative");
  if (cp >= 1.0) return tree.collapsed({0});
  CartTree current = tree;
  for (;;) {
    const auto link = weakest_link(current);
    if (link.nodes.empty() || !(link.alpha < cp)) break;
    current = current.collapsed(link.nodes);
  }
  return current;
}

CpSelection cross_validate_cp(const LabeledDataset& train, const CartControl& control, Rng& rng) {
  control.validate();
  const auto counts = train.class_counts();
  for (std::size_t k = 0; k < counts.size(); ++k) {
    if (counts[k] > 0 && counts[k] < control.xval) {
      throw Error(ErrorCategory::Data, "class " + std::to_string(k + 1) + " has " + std::to_string(counts[k]) +
                                           " rows, fewer than the " + std::to_string(control.xval) + " folds");
    }
  }
  const CartTree full = grow_cart(train, control);
  const auto alphas = pruning_sequence(full);

  CpSelection selection;
  selection.candidates.push_back(0.0);
  for (std::size_t k = 1; k < alphas.size(); ++k) {
    const double lo = alphas[k - 1];
    const double hi = alphas[k];
    selection.candidates.push_back(lo > 0.0 ? std::sqrt(lo * hi) : 0.5 * hi);
  }
  if (!alphas.empty()) selection.candidates.push_back(1.0);

  // Stratified fold assignment.
  std::vector<int> fold(static_cast<std::size_t>(train.size()), 0);
  std::vector<std::vector<Index>> by_class(static_cast<std::size_t>(train.num_classes));
  for (Index i = 0; i < train.size(); ++i) by_class[static_cast<std::size_t>(train.labels(i) - 1)].push_back(i);
  for (auto& rows : by_class) {
    rng.shuffle(std::span<Index>(rows));
    for (std::size_t j = 0; j < rows.size(); ++j) fold[static_cast<std::size_t>(rows[j])] = static_cast<int>(j % static_cast<std::size_t>(control.xval));
  }

  std::vector<Index> errors(selection.candidates.size(), 0);
  for (int f = 0; f < control.xval; ++f) {
    std::vector<Index> fit_rows, held_rows;
    for (Index i = 0; i < train.size(); ++i) (fold[static_cast<std::size_t>(i)] == f ? held_rows : fit_rows).push_back(i);
    if (held_rows.empty() || fit_rows.empty()) continue;
    FeatureMatrix fx(static_cast<Index>(fit_rows.size()), train.dimension());
    LabelVector fy(static_cast<Index>(fit_rows.size()));
    for (std::size_t j = 0; j < fit_rows.size(); ++j) {
      fx.row(static_cast<Index>(j)) = train.features.row(fit_rows[j]);
      fy(static_cast<Index>(j)) = train.labels(fit_rows[j]);
    }
    const CartTree fold_tree = grow_cart(make_dataset(std::move(fx), std::move(fy), train.num_classes, train.class_names), control);
    for (std::size_t c = 0; c < selection.candidates.size(); ++c) {
      const CartTree pruned = prune_cart(fold_tree, selection.candidates[c]);
      for (Index i : held_rows) {
        if (pruned.node(pruned.find_leaf(train.features.row(i))).majority() != train.labels(i)) ++errors[c];
      }
    }
  }

  const double n = static_cast<double>(train.size());
  std::size_t best = 0;
  for (std::size_t c = 0; c < errors.size(); ++c) {
    const double e = static_cast<double>(errors[c]) / n;
    selection.cv_error.push_back(e);
    selection.cv_se.push_back(std::sqrt(e * (1.0 - e) / n));
    if (e < selection.cv_error[best]) best = c;
  }
  const double limit = selection.cv_error[best] + selection.cv_se[best];
  std::size_t chosen = best;
  for (std::size_t c = 0; c < errors.size(); ++c) {
    if (selection.cv_error[c] <= limit + 1e-12) chosen = std::max(chosen, c);
  }
  selection.chosen = selection.candidates[chosen];
  return selection;
}

double select_cp(const LabeledDataset& train, const CartControl& control, Rng& rng) {
  return cross_validate_cp(train, control, rng).chosen;
}

Eigen::MatrixXd cart_probability_matrix(const CartTree& tree, const FeatureMatrix& x) {
  if (x.cols() != tree.dimension()) throw Error(ErrorCategory::Dimension, "feature width does not match the tree");
  Eigen::MatrixXd probs(x.rows(), tree.num_classes());
  for (Index i = 0; i < x.rows(); ++i) {
    const auto& leaf = tree.node(tree.find_leaf(x.row(i)));
    probs.row(i) = leaf.counts.cast<double>().transpose() / static_cast<double>(leaf.size());
  }
  return probs;
}

void write_cart_tree(std::ostream& out, const CartTree& tree) {
  out << "satclass-cart 1\n";
  out << "n " << tree.num_classes() << " p " << tree.dimension() << " nodes " << tree.size() << '\n';
  std::function<void(int)> visit = [&](int id) {
    const auto& n = tree.node(id);
    if (n.is_leaf()) {
      out << 'T';
      for (Index k = 0; k < n.counts.size(); ++k) out << ' ' << n.counts(k);
      out << '\n';
      return;
    }
    out << "I " << n.var << ' ' << io::format_double(n.threshold) << '\n';
    visit(n.left);
    visit(n.right);
  };
  visit(0);
  out << "end\n";
}

CartTree read_cart_tree(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "satclass-cart 1") throw Error(ErrorCategory::Parse, "not a satclass-cart model");
  std::getline(in, line);
  std::istringstream header(line);
  std::string tn, tp, tnodes;
  long long n = 0, p = 0, count = 0;
  header >> tn >> n >> tp >> p >> tnodes >> count;
  if (tn != "n" || tp != "p" || tnodes != "nodes" || n < 1 || p < 1 || count < 1) {
    throw Error(ErrorCategory::Parse, "bad cart header");
  }
  std::vector<CartNode> nodes;
  std::function<int()> read_node = [&]() -> int {
    if (!std::getline(in, line)) throw Error(ErrorCategory::Parse, "truncated cart model");
    std::istringstream record(line);
    std::string kind;
    record >> kind;
    const int id = static_cast<int>(nodes.size());
    nodes.emplace_back();
    if (kind == "T") {
      Eigen::VectorXi counts(n);
      for (long long k = 0; k < n; ++k) {
        std::string value;
        record >> value;
        counts(k) = static_cast<int>(io::parse_integer(value, "class count"));
      }
      nodes[static_cast<std::size_t>(id)].counts = counts;
      return id;
    }
    if (kind != "I") throw Error(ErrorCategory::Parse, "expected 'I' or 'T' record");
    std::string var, threshold;
    record >> var >> threshold;
    nodes[static_cast<std::size_t>(id)].var = static_cast<int>(io::parse_integer(var, "split variable"));
    nodes[static_cast<std::size_t>(id)].threshold = io::parse_double(threshold, "threshold");
    if (nodes[static_cast<std::size_t>(id)].var < 0 || nodes[static_cast<std::size_t>(id)].var >= p) {
      throw Error(ErrorCategory::Parse, "split variable out of range");
    }
    const int l = read_node();
    const int r = read_node();
    auto& node = nodes[static_cast<std::size_t>(id)];
    node.left = l;
    node.right = r;
    node.counts = nodes[static_cast<std::size_t>(l)].counts + nodes[static_cast<std::size_t>(r)].counts;
    return id;
  };
  read_node();
  if (static_cast<long long>(nodes.size()) != count) throw Error(ErrorCategory::Parse, "cart node count mismatch");
  if (!std::getline(in, line) || line != "end") throw Error(ErrorCategory::Parse, "expected end");
  return CartTree(std::move(nodes), static_cast<int>(n), static_cast<Index>(p));
}

}  // namespace satclass
