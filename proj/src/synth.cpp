#include "satclass/synth.hpp"

#include <cmath>
#include <vector>

#include <json.hpp>

#include "satclass/io.hpp"

namespace satclass {
namespace {

constexpr int kClasses = 4;
constexpr Index kBands = 3;
constexpr double kBase = 0.1;
constexpr double kScale = 0.02;

SampleTable pixel_table(const std::vector<SampleTable::Pixel>& pixels, const LabelVector& labels,
                        const std::vector<Index>& rows) {
  SampleTable t;
  t.labels.resize(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    t.pixels.push_back(pixels[static_cast<std::size_t>(rows[i])]);
    t.labels(static_cast<Index>(i)) = labels(rows[i]);
  }
  return t;
}

}  // namespace

SyntheticScene make_gauss4_scene(const SynthOptions& options) {
  if (options.rows < 2 || options.cols < 2) throw Error(ErrorCategory::Config, "scene needs at least 2x2 pixels");
  if (!(options.label_noise >= 0.0 && options.label_noise <= 1.0)) {
    throw Error(ErrorCategory::Config, "label noise must lie in [0, 1]");
  }
  const Index half_r = options.rows / 2;
  const Index half_c = options.cols / 2;
  SyntheticScene scene;
  scene.truth.resize(options.rows, options.cols);
  std::vector<std::vector<SampleTable::Pixel>> by_class(kClasses);
  for (Index r = 0; r < options.rows; ++r) {
    for (Index c = 0; c < options.cols; ++c) {
      const int k = 1 + (r >= half_r ? 2 : 0) + (c >= half_c ? 1 : 0);
      scene.truth(r, c) = k;
      by_class[static_cast<std::size_t>(k - 1)].push_back({r, c});
    }
  }

  Rng pixel_rng = Rng::stream(options.seed, 1);
  std::vector<Eigen::MatrixXd> bands(kBands, Eigen::MatrixXd(options.rows, options.cols));
  for (Index r = 0; r < options.rows; ++r) {
    for (Index c = 0; c < options.cols; ++c) {
      const int k = scene.truth(r, c);
      for (Index b = 0; b < kBands; ++b) {
        const double mean = (k - 1 == b + 1) ? options.separation : 0.0;
        bands[static_cast<std::size_t>(b)](r, c) = kBase + kScale * (mean + pixel_rng.normal());
      }
    }
  }
  scene.stack = make_band_stack(std::move(bands), {"band_1", "band_2", "band_3"},
                                {"class_1", "class_2", "class_3", "class_4"});

  Rng sample_rng = Rng::stream(options.seed, 2);
  std::vector<SampleTable::Pixel> pixels;
  for (auto& pool : by_class) {
    if (static_cast<Index>(pool.size()) < options.samples_per_class) {
      throw Error(ErrorCategory::Config, "quadrant has fewer pixels than samples_per_class");
    }
    sample_rng.shuffle(std::span<SampleTable::Pixel>(pool));
    pixels.insert(pixels.end(), pool.begin(), pool.begin() + options.samples_per_class);
  }
  LabelVector labels(static_cast<Index>(pixels.size()));
  FeatureMatrix features(static_cast<Index>(pixels.size()), kBands);
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    labels(static_cast<Index>(i)) = scene.truth(pixels[i].row, pixels[i].col);
    features.row(static_cast<Index>(i)) = pixel_features(scene.stack, pixels[i].row, pixels[i].col).transpose();
  }
  std::vector<Index> all(pixels.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<Index>(i);
  scene.samples = pixel_table(pixels, labels, all);

  const auto split = stratified_split(make_dataset(features, labels, kClasses), {options.train_fraction, options.seed});
  scene.train = pixel_table(pixels, labels, split.train_rows);
  scene.validation = pixel_table(pixels, labels, split.validation_rows);
  if (options.label_noise > 0.0) {
    Rng noise_rng = Rng::stream(options.seed, 3);
    inject_label_noise(scene.train.labels, kClasses, options.label_noise, noise_rng);
  }
  return scene;
}

void inject_label_noise(LabelVector& labels, int num_classes, double fraction, Rng& rng) {
  if (num_classes < 2) throw Error(ErrorCategory::Config, "label noise needs at least two classes");
  const auto flips = static_cast<Index>(std::floor(fraction * static_cast<double>(labels.size()) + 0.5));
  std::vector<Index> order(static_cast<std::size_t>(labels.size()));
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<Index>(i);
  rng.shuffle(std::span<Index>(order));
  for (Index t = 0; t < flips; ++t) {
    const Index i = order[static_cast<std::size_t>(t)];
    // Draw from the n - 1 other classes.
    int k = 1 + static_cast<int>(rng.uniform_index(num_classes - 1));
    if (k >= labels(i)) ++k;
    labels(i) = k;
  }
}

void write_synthetic_scene(const std::filesystem::path& dir, const SyntheticScene& scene) {
  std::filesystem::create_directories(dir);
  nlohmann::ordered_json manifest;
  manifest["rows"] = scene.stack.rows;
  manifest["cols"] = scene.stack.cols;
  manifest["bands"] = nlohmann::ordered_json::array();
  for (Index b = 0; b < scene.stack.band_count(); ++b) {
    const std::string file = scene.stack.band_names[static_cast<std::size_t>(b)] + ".csv";
    manifest["bands"].push_back({{"name", scene.stack.band_names[static_cast<std::size_t>(b)]}, {"file", file}});
    io::write_csv_matrix(dir / file, scene.stack.bands[static_cast<std::size_t>(b)]);
  }
  manifest["classes"] = scene.stack.class_names;
  io::write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
  io::write_csv_matrix(dir / "truth_map.csv", scene.truth.cast<double>());
  io::write_file_atomic(dir / "samples.csv", sample_table_text(scene.samples));
  io::write_file_atomic(dir / "train.csv", sample_table_text(scene.train));
  io::write_file_atomic(dir / "validation.csv", sample_table_text(scene.validation));
}

}  // namespace satclass
