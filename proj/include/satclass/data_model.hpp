#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "satclass/common.hpp"

namespace satclass {

/// p co-registered reflectance matrices of identical size.
struct BandStack {
  Index rows = 0;
  Index cols = 0;
  std::vector<Eigen::MatrixXd> bands;
  std::vector<std::string> band_names;
  /// Class names declared by the scene manifest (may be empty).
  std::vector<std::string> class_names;

  Index band_count() const { return static_cast<Index>(bands.size()); }
  Index pixel_count() const { return rows * cols; }
};

/// Validates dimensions and finiteness. Band names default to band_<i>.
BandStack make_band_stack(std::vector<Eigen::MatrixXd> bands, std::vector<std::string> band_names = {},
                          std::vector<std::string> class_names = {});

/// Reads a JSON manifest {"rows","cols","bands":[{"name","file"}],"classes"}.
/// Band files are headerless numeric CSV resolved relative to the manifest.
BandStack load_band_stack(const std::filesystem::path& manifest_path);

Eigen::VectorXd pixel_features(const BandStack& stack, Index row, Index col);

/// Every pixel as one feature row, in row-major pixel order (row * cols + col).
FeatureMatrix stack_features(const BandStack& stack);

struct LabeledDataset {
  FeatureMatrix features;
  LabelVector labels;
  int num_classes = 0;
  std::vector<std::string> class_names;

  Index size() const { return features.rows(); }
  Index dimension() const { return features.cols(); }
  /// counts[k - 1] is the number of samples with label k.
  std::vector<Index> class_counts() const;
};

/// Checks label range and shape. Class names default to class_<k>.
LabeledDataset make_dataset(FeatureMatrix features, LabelVector labels, int num_classes,
                            std::vector<std::string> class_names = {});

/// One-against-all relabeling of a dataset for a single target class.
struct BinaryPseudoDataset {
  ClassId target_class = 0;
  FeatureMatrix features;
  /// 1 where the source label equals target_class, else 0.
  LabelVector labels;

  Index size() const { return features.rows(); }
};

BinaryPseudoDataset make_pseudo_dataset(const LabeledDataset& data, ClassId k);

struct SplitSpec {
  double train_fraction = 2.0 / 3.0;
  std::uint64_t seed = 0;
};

struct DatasetSplit {
  LabeledDataset train;
  LabeledDataset validation;
  /// Row indices into the source dataset.
  std::vector<Index> train_rows;
  std::vector<Index> validation_rows;
};

/// Per class, round-half-up(train_fraction * N_k) samples go to train.
/// Rows within a class are first put in canonical feature order, so the
/// result depends only on the sample multiset and the seed.
DatasetSplit stratified_split(const LabeledDataset& data, const SplitSpec& spec);

/// Training count for a class of size `count` under half-up rounding.
Index split_train_count(Index count, double train_fraction);

/// A labeled sample table; exactly one of pixels/features is populated.
struct SampleTable {
  struct Pixel {
    Index row = 0;
    Index col = 0;
  };
  std::vector<Pixel> pixels;
  FeatureMatrix features;
  LabelVector labels;

  bool has_pixels() const { return !pixels.empty(); }
  Index size() const { return labels.size(); }
};

/// CSV with header `row,col,class` or `x1,...,xp,class`.
SampleTable read_sample_table(const std::filesystem::path& path);
std::string sample_table_text(const SampleTable& table);

/// Normalises a sample table to a dataset, resolving pixels against `stack`
/// when the table carries coordinates. `stack` may be null for feature rows.
LabeledDataset resolve_samples(const SampleTable& table, const BandStack* stack, int num_classes,
                               std::vector<std::string> class_names = {});

}  // namespace satclass
