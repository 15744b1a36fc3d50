#include <doctest.h>

#include <fstream>

#include "satclass/data_model.hpp"
#include "satclass/io.hpp"
#include "satclass/rng.hpp"
#include "test_support.hpp"

using namespace satclass;

namespace {

void write_manifest(const std::filesystem::path& dir, const std::string& bands_json) {
  io::write_file_atomic(dir / "manifest.json",
                        "{\"rows\":2,\"cols\":2,\"bands\":" + bands_json + ",\"classes\":[\"a\",\"b\"]}");
}

LabeledDataset counts_dataset(const std::vector<int>& per_class) {
  Index total = 0;
  for (int c : per_class) total += c;
  FeatureMatrix x(total, 1);
  LabelVector y(total);
  Index i = 0;
  for (std::size_t k = 0; k < per_class.size(); ++k) {
    for (int j = 0; j < per_class[k]; ++j, ++i) {
      x(i, 0) = static_cast<double>(i);
      y(i) = static_cast<int>(k + 1);
    }
  }
  return make_dataset(x, y, static_cast<int>(per_class.size()));
}

}  // namespace

TEST_SUITE("data-model") {
  TEST_CASE("single-band manifest") {
    const auto dir = test::scratch_dir("manifest1");
    io::write_file_atomic(dir / "b1.csv", "1,2\n3,4\n");
    write_manifest(dir, "[{\"name\":\"red\",\"file\":\"b1.csv\"}]");
    const auto stack = load_band_stack(dir / "manifest.json");
    CHECK(stack.rows == 2);
    CHECK(stack.cols == 2);
    CHECK(stack.band_count() == 1);
    CHECK(stack.bands[0](1, 0) == 3.0);
    CHECK(stack.band_names[0] == "red");
    CHECK(stack.class_names.size() == 2);
  }

  TEST_CASE("six bands of 105x134") {
    std::vector<Eigen::MatrixXd> bands(6, Eigen::MatrixXd::Constant(105, 134, 0.2));
    const auto stack = make_band_stack(bands);
    CHECK(stack.band_count() == 6);
    CHECK(stack.pixel_count() == 105 * 134);
  }

  TEST_CASE("band shape mismatch") {
    std::vector<Eigen::MatrixXd> bands{Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Zero(2, 3)};
    CHECK(test::category_of([&] { make_band_stack(bands); }) == ErrorCategory::Dimension);

    const auto dir = test::scratch_dir("manifest_mismatch");
    io::write_file_atomic(dir / "b1.csv", "1,2\n3,4\n");
    io::write_file_atomic(dir / "b2.csv", "1,2,3\n3,4,5\n");
    write_manifest(dir, "[{\"name\":\"a\",\"file\":\"b1.csv\"},{\"name\":\"b\",\"file\":\"b2.csv\"}]");
    CHECK(test::category_of([&] { load_band_stack(dir / "manifest.json"); }) == ErrorCategory::Dimension);
  }

  TEST_CASE("missing band file and bad cell") {
    const auto dir = test::scratch_dir("manifest_missing");
    write_manifest(dir, "[{\"name\":\"a\",\"file\":\"nope.csv\"}]");
    CHECK(test::category_of([&] { load_band_stack(dir / "manifest.json"); }) == ErrorCategory::Io);
    io::write_file_atomic(dir / "bad.csv", "1,2\n3,x\n");
    write_manifest(dir, "[{\"name\":\"a\",\"file\":\"bad.csv\"}]");
    CHECK(test::category_of([&] { load_band_stack(dir / "manifest.json"); }) == ErrorCategory::Parse);
  }

  TEST_CASE("pixel feature lookup") {
    const auto one = make_band_stack({Eigen::MatrixXd::Constant(1, 1, 7.0)});
    CHECK(pixel_features(one, 0, 0)(0) == 7.0);
    const auto two = make_band_stack({Eigen::MatrixXd::Constant(1, 1, 1.0), Eigen::MatrixXd::Constant(1, 1, 2.0)});
    const auto f = pixel_features(two, 0, 0);
    CHECK(f.size() == 2);
    CHECK(f(0) == 1.0);
    CHECK(f(1) == 2.0);
    CHECK(test::category_of([&] { pixel_features(two, 1, 0); }) == ErrorCategory::Range);
  }

  TEST_CASE("stack features are in row-major pixel order") {
    Eigen::MatrixXd b(2, 3);
    b << 0, 1, 2, 3, 4, 5;
    const auto x = stack_features(make_band_stack({b}));
    for (Index i = 0; i < 6; ++i) CHECK(x(i, 0) == static_cast<double>(i));
  }

  TEST_CASE("labels must be in range") {
    FeatureMatrix x = FeatureMatrix::Zero(2, 1);
    LabelVector y(2);
    y << 1, 9;
    CHECK(test::category_of([&] { make_dataset(x, y, 7); }) == ErrorCategory::LabelRange);
  }

  TEST_CASE("pseudo datasets") {
    FeatureMatrix x = FeatureMatrix::Zero(3, 1);
    LabelVector y(3);
    y << 1, 2, 3;
    const auto data = make_dataset(x, y, 3);
    const auto d2 = make_pseudo_dataset(data, 2);
    CHECK(d2.labels(0) == 0);
    CHECK(d2.labels(1) == 1);
    CHECK(d2.labels(2) == 0);
    CHECK(test::category_of([&] { make_pseudo_dataset(data, 4); }) == ErrorCategory::LabelRange);

    LabelVector same = LabelVector::Constant(4, 2);
    const auto all = make_pseudo_dataset(make_dataset(FeatureMatrix::Zero(4, 1), same, 3), 2);
    CHECK(all.labels.sum() == 4);
  }

  TEST_CASE("pseudo labels partition the samples") {
    Rng rng(4);
    FeatureMatrix x = FeatureMatrix::Zero(50, 1);
    LabelVector y(50);
    for (Index i = 0; i < 50; ++i) y(i) = 1 + static_cast<int>(rng.uniform_index(5));
    const auto data = make_dataset(x, y, 5);
    LabelVector total = LabelVector::Zero(50);
    for (int k = 1; k <= 5; ++k) total += make_pseudo_dataset(data, k).labels;
    CHECK((total.array() == 1).all());
  }

  TEST_CASE("stratified split counts") {
    auto split = stratified_split(counts_dataset({3, 3}), {2.0 / 3.0, 1});
    CHECK(split.train.class_counts() == std::vector<Index>{2, 2});
    CHECK(split.validation.class_counts() == std::vector<Index>{1, 1});

    CHECK(split_train_count(22, 2.0 / 3.0) == 15);
    split = stratified_split(counts_dataset({22}), {2.0 / 3.0, 1});
    CHECK(split.train.size() == 15);
    CHECK(split.validation.size() == 7);
  }

  TEST_CASE("stratified split is deterministic and disjoint") {
    const auto data = counts_dataset({10, 7, 12});
    const auto a = stratified_split(data, {2.0 / 3.0, 99});
    const auto b = stratified_split(data, {2.0 / 3.0, 99});
    CHECK(a.train_rows == b.train_rows);
    CHECK(a.validation_rows == b.validation_rows);
    std::vector<int> seen(static_cast<std::size_t>(data.size()), 0);
    for (Index r : a.train_rows) ++seen[static_cast<std::size_t>(r)];
    for (Index r : a.validation_rows) ++seen[static_cast<std::size_t>(r)];
    for (int s : seen) CHECK(s == 1);
  }

  TEST_CASE("split rejects a singleton class") {
    CHECK(test::category_of([] { stratified_split(counts_dataset({3, 1}), {}); }) == ErrorCategory::Data);
  }

  TEST_CASE("sample tables in both layouts") {
    const auto dir = test::scratch_dir("samples");
    io::write_file_atomic(dir / "px.csv", "row,col,class\n0,1,2\n1,0,1\n");
    const auto px = read_sample_table(dir / "px.csv");
    REQUIRE(px.has_pixels());
    CHECK(px.size() == 2);
    Eigen::MatrixXd b(2, 2);
    b << 1, 2, 3, 4;
    const auto stack = make_band_stack({b});
    const auto data = resolve_samples(px, &stack, 2);
    CHECK(data.features(0, 0) == 2.0);
    CHECK(data.features(1, 0) == 3.0);
    CHECK(sample_table_text(px) == "row,col,class\n0,1,2\n1,0,1\n");

    io::write_file_atomic(dir / "fx.csv", "x1,x2,class\n0.5,1.5,1\n2,3,2\n");
    const auto fx = read_sample_table(dir / "fx.csv");
    CHECK_FALSE(fx.has_pixels());
    CHECK(fx.features(1, 1) == 3.0);
    CHECK(read_sample_table(dir / "fx.csv").labels == fx.labels);

    io::write_file_atomic(dir / "oob.csv", "row,col,class\n5,0,1\n");
    CHECK(test::category_of([&] { resolve_samples(read_sample_table(dir / "oob.csv"), &stack, 2); }) ==
          ErrorCategory::Range);
  }
}
