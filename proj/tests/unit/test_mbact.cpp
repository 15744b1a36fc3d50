#include <doctest.h>

#include <cmath>

#include "satclass/mbact.hpp"
#include "test_support.hpp"

using namespace satclass;

namespace {

LabeledDataset blobs(int n_classes, Index per_class, std::uint64_t seed) {
  Rng rng(seed);
  FeatureMatrix x(n_classes * per_class, 2);
  LabelVector y(n_classes * per_class);
  Index i = 0;
  for (int k = 1; k <= n_classes; ++k) {
    for (Index j = 0; j < per_class; ++j, ++i) {
      x(i, 0) = 3.0 * std::cos(k) + 0.5 * rng.normal();
      x(i, 1) = 3.0 * std::sin(k) + 0.5 * rng.normal();
      y(i) = k;
    }
  }
  return make_dataset(x, y, n_classes);
}

ProbitConfig quick_config() {
  ProbitConfig c;
  c.bart.num_trees = 10;
  c.bart.ndpost = 30;
  c.bart.keepevery = 2;
  c.bart.nskip = 30;
  c.bart.numcut = 50;
  c.bart.seed = 13;
  return c;
}

MbactModel constant_mbact(const std::vector<double>& h) {
  MbactModel m;
  for (double v : h) {
    ProbitModel p;
    p.draws.grid.cuts = {{0.0}};
    TreeEnsembleDraw d;
    d.trees.emplace_back(v);
    p.draws.draws.push_back(d);
    m.per_class.push_back(p);
  }
  return m;
}

}  // namespace

TEST_SUITE("mbact") {
  TEST_CASE("normalisation examples") {
    Eigen::Vector3d raw(0.3, 0.1, 0.1);
    const auto p = normalize_scores(raw);
    CHECK(p(0) == doctest::Approx(0.6));
    CHECK(p(1) == doctest::Approx(0.2));
    const Eigen::Vector3d already(0.5, 0.25, 0.25);
    CHECK(normalize_scores(already) == already);
    CHECK(test::category_of([] { normalize_scores(Eigen::Vector2d(0.0, 0.0)); }) == ErrorCategory::Degenerate);
    CHECK(test::category_of([] { normalize_scores(Eigen::Vector2d(-0.1, 0.5)); }) == ErrorCategory::Range);
  }

  TEST_CASE("argmax and ties") {
    CHECK(argmax_class(Eigen::Vector3d(0.2, 0.9, 0.1)) == 2);
    CHECK(argmax_class(Eigen::Vector2d(0.5, 0.5)) == 1);
  }

  TEST_CASE("raw scores are not normalised") {
    const auto m = constant_mbact({0.0, 0.0, 0.0});
    Eigen::VectorXd x(1);
    x << 1.0;
    const auto raw = raw_class_scores(m, x);
    CHECK(raw == Eigen::Vector3d(0.5, 0.5, 0.5));
    CHECK(raw.sum() == 1.5);
    CHECK(predict_class(m, x) == 1);
  }

  TEST_CASE("one class is rejected") {
    auto data = blobs(2, 10, 1);
    data.labels.setConstant(1);
    data.num_classes = 1;
    CHECK(test::category_of([&] { fit_mbact(data, quick_config()); }) == ErrorCategory::Data);
  }

  TEST_CASE("missing class is rejected") {
    auto data = blobs(3, 10, 1);
    for (Index i = 0; i < data.size(); ++i) {
      if (data.labels(i) == 2) data.labels(i) = 1;
    }
    CHECK(test::category_of([&] { fit_mbact(data, quick_config()); }) == ErrorCategory::Data);
  }

  TEST_CASE("two classes agree with a direct binary fit") {
    const auto data = blobs(2, 40, 3);
    const auto config = quick_config();
    const auto model = fit_mbact(data, config);
    Rng r1 = Rng::stream(config.bart.seed, 1), r2 = Rng::stream(config.bart.seed, 2);
    const auto p1 = predict_probs(fit_probit(make_pseudo_dataset(data, 1), config, r1), data.features);
    const auto p2 = predict_probs(fit_probit(make_pseudo_dataset(data, 2), config, r2), data.features);
    const auto raw = raw_class_score_matrix(model, data.features);
    for (Index i = 0; i < data.size(); ++i) {
      CHECK(raw(i, 0) == p1(i));
      CHECK(raw(i, 1) == p2(i));
      if (p1(i) != p2(i)) CHECK(argmax_class(raw.row(i)) == (p1(i) > p2(i) ? 1 : 2));
    }
  }

  TEST_CASE("serial and parallel fits are identical") {
    const auto data = blobs(3, 20, 4);
    const auto a = fit_mbact(data, quick_config(), {}, true);
    const auto b = fit_mbact(data, quick_config(), {}, false);
    CHECK(raw_class_score_matrix(a, data.features) == raw_class_score_matrix(b, data.features));
  }

  TEST_CASE("relabeling permutes predictions") {
    const auto data = blobs(3, 25, 5);
    const std::vector<int> perm{3, 1, 2};  // old class k becomes perm[k-1]
    LabeledDataset swapped = data;
    for (Index i = 0; i < data.size(); ++i) swapped.labels(i) = perm[static_cast<std::size_t>(data.labels(i) - 1)];
    const std::vector<std::uint64_t> keys{1, 2, 3};
    std::vector<std::uint64_t> swapped_keys(3);
    for (int k = 1; k <= 3; ++k) swapped_keys[static_cast<std::size_t>(perm[static_cast<std::size_t>(k - 1)] - 1)] = keys[static_cast<std::size_t>(k - 1)];
    const auto a = fit_mbact(data, quick_config(), keys);
    const auto b = fit_mbact(swapped, quick_config(), swapped_keys);
    for (Index i = 0; i < data.size(); ++i) {
      const auto row = data.features.row(i).transpose();
      CHECK(predict_class(b, row) == perm[static_cast<std::size_t>(predict_class(a, row) - 1)]);
    }
  }

  TEST_CASE("image classification matches pointwise calls") {
    const auto data = blobs(3, 20, 6);
    const auto model = fit_mbact(data, quick_config());
    Eigen::MatrixXd b0(2, 3), b1(2, 3);
    for (Index c = 0; c < 3; ++c) {
      b0(0, c) = data.features(c * 20, 0);
      b1(0, c) = data.features(c * 20, 1);
      b0(1, c) = data.features(0, 0);
      b1(1, c) = data.features(0, 1);
    }
    const auto stack = make_band_stack({b0, b1});
    const auto map = classify_image(model, stack);
    for (Index r = 0; r < 2; ++r) {
      for (Index c = 0; c < 3; ++c) {
        const Eigen::VectorXd x = pixel_features(stack, r, c);
        CHECK(map.labels(r, c) == predict_class(model, x));
        const auto p = map.pixel_probs(r, c);
        CHECK(std::abs(p.sum() - 1.0) < 1e-12);
        CHECK(argmax_class(p) == map.labels(r, c));
        CHECK(map.p_max(r, c) == p.maxCoeff());
      }
    }
    // Duplicate pixels.
    CHECK(map.pixel_probs(1, 0) == map.pixel_probs(1, 2));

    const auto one = make_band_stack({Eigen::MatrixXd::Constant(1, 1, b0(0, 1)), Eigen::MatrixXd::Constant(1, 1, b1(0, 1))});
    CHECK(classify_image(model, one).labels(0, 0) == map.labels(0, 1));
    const auto wrong = make_band_stack({b0});
    CHECK(test::category_of([&] { classify_image(model, wrong); }) == ErrorCategory::Dimension);
  }

  TEST_CASE("bundle round-trip") {
    const auto data = blobs(3, 15, 7);
    const auto model = fit_mbact(data, quick_config());
    const auto dir = test::scratch_dir("mbact_bundle");
    write_mbact_bundle(dir, model);
    const auto back = read_mbact_bundle(dir);
    CHECK(back.num_classes() == 3);
    CHECK(raw_class_score_matrix(back, data.features) == raw_class_score_matrix(model, data.features));
  }
}
