#include <doctest.h>

#include <cmath>
#include <sstream>

#include "satclass/bart.hpp"
#include "test_support.hpp"

using namespace satclass;

namespace {

struct StepData {
  FeatureMatrix x;
  Eigen::VectorXd y;
};

StepData step_data(Index n, std::uint64_t seed) {
  Rng rng(seed);
  StepData d{FeatureMatrix(n, 1), Eigen::VectorXd(n)};
  for (Index i = 0; i < n; ++i) {
    d.x(i, 0) = rng.uniform();
    d.y(i) = (d.x(i, 0) > 0.5 ? 5.0 : 0.0) + 0.1 * rng.normal();
  }
  return d;
}

BartConfig small_config() {
  BartConfig c;
  c.num_trees = 20;
  c.ndpost = 30;
  c.keepevery = 2;
  c.nskip = 20;
  c.numcut = 100;
  c.seed = 3;
  return c;
}

}  // namespace

TEST_SUITE("bart-engine") {
  TEST_CASE("leaf marginal closed form") {
    const LeafStats leaf{2, 2.0};
    CHECK(leaf_log_marginal(std::span(&leaf, 1), 1.0, 1.0) == doctest::Approx(0.11736052233261174).epsilon(1e-14));
    const LeafStats empty{0, 0.0};
    CHECK(leaf_log_marginal(std::span(&empty, 1), 1.0, 1.0) == 0.0);
    const LeafStats data{10, 7.0};
    CHECK(std::abs(leaf_log_marginal(std::span(&data, 1), 1.0, 1e-9)) < 1e-12);
    CHECK(test::category_of([&] { leaf_log_marginal(std::span(&data, 1), 0.0, 1.0); }) == ErrorCategory::Range);
  }

  TEST_CASE("leaf sd formulas") {
    BartConfig c;
    c.num_trees = 50;
    c.k = 2.0;
    CHECK(regression_leaf_sd(c) == 0.5 / (2.0 * std::sqrt(50.0)));
    BartConfig d = c;
    d.num_trees = 100;
    CHECK(regression_leaf_sd(c) / regression_leaf_sd(d) == doctest::Approx(std::sqrt(2.0)));
  }

  TEST_CASE("config validation") {
    BartConfig c;
    c.num_trees = 0;
    CHECK(test::category_of([&] { c.validate(); }) == ErrorCategory::Config);
    c = BartConfig{};
    c.sigquant = 1.0;
    CHECK(test::category_of([&] { c.validate(); }) == ErrorCategory::Config);
  }

  TEST_CASE("ensemble prediction is additive") {
    CutpointGrid g;
    g.cuts = {{0.5}};
    TreeEnsembleDraw draw;
    for (int j = 0; j < 4; ++j) draw.trees.emplace_back(0.25);
    Eigen::VectorXd x(1);
    x << 0.3;
    CHECK(ensemble_predict(draw, x, g) == 1.0);

    Tree a;
    a.grow(0, 0, 0);
    a.node(1).mu = -2.0;
    a.node(2).mu = 3.0;
    TreeEnsembleDraw one;
    one.trees = {a};
    CHECK(ensemble_predict(one, x, g) == tree_predict(a, x, g));
    TreeEnsembleDraw fwd, rev;
    fwd.trees = {a, Tree(0.5)};
    rev.trees = {Tree(0.5), a};
    CHECK(ensemble_predict(fwd, x, g) == ensemble_predict(rev, x, g));
  }

  TEST_CASE("impossible proposals are rejected") {
    FeatureMatrix x(4, 1);
    x << 0, 1, 2, 3;
    const auto grid = build_cutpoints(x, 10);
    const auto ranks = rank_features(x, grid);
    TreeContext ctx{&ranks, &grid, TreePrior{}, 0.5};
    const Eigen::VectorXd r = Eigen::VectorXd::Ones(4);
    Rng rng(1);
    const auto step = mh_tree_step(Tree(), ctx, r, 1.0, rng, TreeMove::Prune);
    CHECK_FALSE(step.accepted);
    CHECK(step.tree.leaf_count() == 1);

    // A constant predictor offers no split with rows on both sides.
    FeatureMatrix flat = FeatureMatrix::Constant(4, 1, 2.0);
    CutpointGrid manual;
    manual.cuts = {{5.0}};
    const auto flat_ranks = rank_features(flat, manual);
    TreeContext flat_ctx{&flat_ranks, &manual, TreePrior{}, 0.5};
    for (int i = 0; i < 50; ++i) {
      const auto grow = mh_tree_step(Tree(), flat_ctx, r, 1.0, rng, TreeMove::Grow);
      CHECK_FALSE(grow.accepted);
    }
  }

  TEST_CASE("grow and prune acceptances balance on noise") {
    Rng rng(17);
    const Index n = 100;
    FeatureMatrix x(n, 2);
    Eigen::VectorXd r(n);
    for (Index i = 0; i < n; ++i) {
      x(i, 0) = rng.uniform();
      x(i, 1) = rng.uniform();
      r(i) = rng.normal();
    }
    const auto grid = build_cutpoints(x, 20);
    const auto ranks = rank_features(x, grid);
    TreeContext ctx{&ranks, &grid, TreePrior{}, 0.3};
    Tree tree;
    long grows = 0, prunes = 0;
    for (int s = 0; s < 10000; ++s) {
      const auto step = mh_tree_step(tree, ctx, r, 1.0, rng);
      if (step.accepted && step.move == TreeMove::Grow) ++grows;
      if (step.accepted && step.move == TreeMove::Prune) ++prunes;
      tree = step.tree;
      draw_leaf_values(tree, ctx, r, 1.0, rng);
    }
    const double count = static_cast<double>(std::max(grows, prunes));
    CHECK(std::abs(static_cast<double>(grows - prunes)) <= 3.0 * std::sqrt(count));
  }

  TEST_CASE("leaf value draws") {
    FeatureMatrix x(5, 1);
    x << 0, 1, 2, 3, 4;
    const auto grid = build_cutpoints(x, 10);
    const auto ranks = rank_features(x, grid);
    TreeContext ctx{&ranks, &grid, TreePrior{}, 0.7};
    Rng rng(4);
    Tree t;
    const Eigen::VectorXd r = Eigen::VectorXd::Constant(5, 1.3);
    draw_leaf_values(t, ctx, r, 1e-7, rng);
    CHECK(t.node(0).mu == doctest::Approx(1.3).epsilon(1e-5));

    // Shrinkage: the posterior mean lies between 0 and the residual mean.
    double mean = 0.0;
    for (int i = 0; i < 20000; ++i) {
      draw_leaf_values(t, ctx, r, 1.0, rng);
      mean += t.node(0).mu / 20000.0;
    }
    const double expected = 0.49 * 6.5 / (1.0 + 5 * 0.49);
    CHECK(mean == doctest::Approx(expected).epsilon(0.02));
    CHECK(mean > 0.0);
    CHECK(mean < 1.3);

    // An empty leaf draws from the prior.
    CutpointGrid wide;
    wide.cuts = {{10.0}};
    const auto wide_ranks = rank_features(x, wide);
    TreeContext wide_ctx{&wide_ranks, &wide, TreePrior{}, 0.7};
    Tree split;
    split.grow(0, 0, 0);
    double s2 = 0.0;
    for (int i = 0; i < 20000; ++i) {
      draw_leaf_values(split, wide_ctx, r, 1.0, rng);
      const double mu = split.node(split.node(0).right).mu;
      s2 += mu * mu / 20000.0;
    }
    CHECK(s2 == doctest::Approx(0.49).epsilon(0.04));
  }

  TEST_CASE("sigma draws") {
    Rng rng(12);
    const Eigen::VectorXd none(0);
    CHECK(draw_sigma(none, 3.0, 1.0, rng) > 0.0);

    const Eigen::VectorXd zeros = Eigen::VectorXd::Zero(5000);
    CHECK(draw_sigma(zeros, 3.0, 0.01, rng) < 0.01);

    Eigen::VectorXd res(50);
    for (Index i = 0; i < 50; ++i) res(i) = rng.normal(0.0, 2.0);
    const double nu = 3.0, lambda = 0.5;
    const double expected = (nu * lambda + res.squaredNorm()) / (nu + 50.0 - 2.0);
    double mean = 0.0;
    for (int i = 0; i < 10000; ++i) {
      const double s = draw_sigma(res, nu, lambda, rng);
      mean += s * s / 10000.0;
    }
    CHECK(mean == doctest::Approx(expected).epsilon(0.02));
  }

  TEST_CASE("sigma prior calibration") {
    CHECK(chi_square_quantile(0.1, 3.0) == doctest::Approx(0.5843743741551835).epsilon(1e-10));
    const double lambda = sigma_prior_scale(2.0, 3.0, 0.9);
    CHECK(lambda == doctest::Approx(4.0 * 0.5843743741551835 / 3.0).epsilon(1e-10));
  }

  TEST_CASE("sigest fallback when p >= N") {
    FeatureMatrix x(2, 3);
    x << 1, 2, 3, 4, 5, 6;
    Eigen::VectorXd y(2);
    y << 0, 2;
    CHECK(estimate_sigest(x, y) == doctest::Approx(std::sqrt(2.0)));
  }

  TEST_CASE("one sweep, one draw") {
    const auto d = step_data(30, 1);
    BartConfig c = small_config();
    c.ndpost = 1;
    c.keepevery = 1;
    c.nskip = 0;
    Rng rng(1);
    int sweeps = 0;
    SamplerHooks hooks;
    hooks.after_sweep = [&](const Sampler&, int) { ++sweeps; };
    const auto post = run_sampler(d.x, d.y, c, SamplerMode::Regression, rng, hooks);
    CHECK(post.size() == 1);
    CHECK(sweeps == 1);
  }

  TEST_CASE("same seed gives identical draws") {
    const auto d = step_data(60, 2);
    Rng a(5), b(5);
    const auto pa = run_sampler(d.x, d.y, small_config(), SamplerMode::Regression, a);
    const auto pb = run_sampler(d.x, d.y, small_config(), SamplerMode::Regression, b);
    std::ostringstream sa, sb;
    write_posterior(sa, pa);
    write_posterior(sb, pb);
    CHECK(sa.str() == sb.str());
  }

  TEST_CASE("posterior text round-trip") {
    const auto d = step_data(60, 6);
    Rng rng(5);
    const auto post = run_sampler(d.x, d.y, small_config(), SamplerMode::Regression, rng);
    std::ostringstream out;
    write_posterior(out, post);
    std::istringstream in(out.str());
    const auto back = read_posterior(in);
    std::ostringstream again;
    write_posterior(again, back);
    CHECK(again.str() == out.str());
    CHECK(back.mean_prediction(d.x) == post.mean_prediction(d.x));

    std::istringstream bad("satclass-bart 2\n");
    CHECK(test::category_of([&] { read_posterior(bad); }) == ErrorCategory::Parse);
  }

  TEST_CASE("kept trees are valid and leaves are occupied") {
    const auto d = step_data(80, 9);
    Rng rng(2);
    const auto post = run_sampler(d.x, d.y, small_config(), SamplerMode::Regression, rng);
    const auto ranks = rank_features(d.x, post.grid);
    for (const auto& draw : post.draws) {
      for (const auto& tree : draw.trees) {
        CHECK(std::isfinite(log_tree_structure_prior(tree, post.grid, TreePrior{})));
        std::vector<Index> occupancy(static_cast<std::size_t>(tree.size()), 0);
        for (Index i = 0; i < d.x.rows(); ++i) ++occupancy[static_cast<std::size_t>(tree.find_leaf_ranked(ranks.row(i).data()))];
        for (int leaf : tree.leaves()) CHECK(occupancy[static_cast<std::size_t>(leaf)] > 0);
      }
    }
  }

  TEST_CASE("predictions stay inside the training range") {
    const auto d = step_data(100, 4);
    Rng rng(8);
    const auto post = run_sampler(d.x, d.y, small_config(), SamplerMode::Regression, rng);
    const auto fit = post.mean_prediction(d.x);
    const double span = d.y.maxCoeff() - d.y.minCoeff();
    CHECK(fit.minCoeff() > d.y.minCoeff() - 0.25 * span);
    CHECK(fit.maxCoeff() < d.y.maxCoeff() + 0.25 * span);
  }
}
