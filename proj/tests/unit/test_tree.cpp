#include <doctest.h>

#include <cmath>

#include "satclass/tree.hpp"
#include "test_support.hpp"

using namespace satclass;

namespace {

FeatureMatrix column(std::initializer_list<double> values) {
  FeatureMatrix x(static_cast<Index>(values.size()), 1);
  Index i = 0;
  for (double v : values) x(i++, 0) = v;
  return x;
}

/// One variable with a single cut at 5.
CutpointGrid grid_at_five() {
  CutpointGrid g;
  g.cuts = {{5.0}, {1.0}};
  return g;
}

}  // namespace

TEST_SUITE("tree") {
  TEST_CASE("cutpoint counts") {
    CHECK(build_cutpoints(column({0, 1, 0, 1}), 1000).count(0) == 1);
    CHECK(build_cutpoints(column({3, 3, 3}), 1000).count(0) == 0);
    const auto g = build_cutpoints(column({0, 100, 50, 10, 75, 33}), 4);
    REQUIRE(g.count(0) == 4);
    CHECK(g.value(0, 0) == doctest::Approx(20));
    CHECK(g.value(0, 1) == doctest::Approx(40));
    CHECK(g.value(0, 2) == doctest::Approx(60));
    CHECK(g.value(0, 3) == doctest::Approx(80));
  }

  TEST_CASE("ranks match the cut comparison") {
    const auto x = column({0, 19.9, 20, 20.1, 55, 100});
    const auto g = build_cutpoints(x, 4);
    const auto r = rank_features(x, g);
    for (Index i = 0; i < x.rows(); ++i) {
      for (int c = 0; c < g.count(0); ++c) CHECK((x(i, 0) <= g.value(0, c)) == (r(i, 0) <= c));
    }
  }

  TEST_CASE("single terminal prediction") {
    Tree t(2.5);
    Eigen::VectorXd x(2);
    x << 100, -3;
    CHECK(tree_predict(t, x, grid_at_five()) == 2.5);
  }

  TEST_CASE("root split with the <= rule") {
    Tree t;
    t.grow(0, 0, 0);
    t.node(t.node(0).left).mu = -1.0;
    t.node(t.node(0).right).mu = 1.0;
    const auto g = grid_at_five();
    Eigen::VectorXd x(2);
    x << 3, 0;
    CHECK(tree_predict(t, x, g) == -1.0);
    x(0) = 7;
    CHECK(tree_predict(t, x, g) == 1.0);
    x(0) = 5;
    CHECK(tree_predict(t, x, g) == -1.0);
  }

  TEST_CASE("grow and prune keep the structure valid") {
    Tree t;
    t.grow(0, 0, 3);
    const int left = t.node(0).left;
    t.grow(left, 1, 2);
    CHECK(t.leaf_count() == 3);
    CHECK(t.max_depth() == 2);
    CHECK(t.prunable_nodes() == std::vector<int>{left});
    t.prune(left);
    CHECK(t.leaf_count() == 2);
    CHECK(test::category_of([&] { t.prune(0); t.prune(0); }) == ErrorCategory::Data);
  }

  TEST_CASE("from_nodes rejects broken links") {
    std::vector<TreeNode> nodes(3);
    nodes[0].var = 0;
    nodes[0].left = 1;
    nodes[0].right = 1;
    CHECK(test::category_of([&] { Tree::from_nodes(nodes); }) == ErrorCategory::Parse);
  }

  TEST_CASE("available cuts narrow along the path") {
    CutpointGrid g;
    g.cuts = {{1, 2, 3, 4, 5, 6, 7, 8, 9}};
    Tree t;
    t.grow(0, 0, 4);
    const auto left = available_cuts(t, t.node(0).left, g);
    CHECK(left[0].lo == 0);
    CHECK(left[0].hi == 3);
    const auto right = available_cuts(t, t.node(0).right, g);
    CHECK(right[0].lo == 5);
    CHECK(right[0].hi == 8);
  }

  TEST_CASE("structure prior reference values") {
    TreePrior prior{0.95, 2.0};
    CutpointGrid g;
    g.cuts = {{1, 2, 3}};
    CHECK(log_tree_structure_prior(Tree(), g, prior) == doctest::Approx(std::log(0.05)));

    // Same rule count, deeper placement loses mass.
    Tree wide;
    wide.grow(0, 0, 1);
    wide.grow(wide.node(0).left, 0, 0);
    Tree shallow;
    shallow.grow(0, 0, 1);
    CHECK(log_tree_structure_prior(wide, g, prior) < log_tree_structure_prior(shallow, g, prior));

    TreePrior tiny{1e-9, 2.0};
    CHECK(log_tree_structure_prior(Tree(), g, tiny) > -1e-8);
    CHECK(log_tree_structure_prior(shallow, g, tiny) < -20.0);
  }
}
