#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "satclass/cart.hpp"
#include "satclass/io.hpp"
#include "satclass/mbact.hpp"
#include "satclass/metrics.hpp"

namespace satclass {

inline constexpr const char* kVersion = "0.1.0";

enum class Method { Mbact, Cart };

const char* to_string(Method method);
Method parse_method(const std::string& text);
GroupBy parse_group_by(const std::string& text);

/// Fixed colours for the first seven classes, then distinct generated ones.
std::vector<io::Rgb> class_palette(int num_classes);

std::uint64_t fnv1a64(std::string_view text);

struct TrainOptions {
  std::filesystem::path manifest;
  std::filesystem::path samples;
  std::filesystem::path out;
  Method method = Method::Mbact;
  std::optional<std::uint64_t> seed;
  ProbitConfig probit;
  CartControl cart;
  /// cp given explicitly; otherwise cross-validation picks it (never below cart.cp).
  bool cp_fixed = false;
  bool parallel = true;
};

struct ClassifyOptions {
  std::filesystem::path bundle;
  std::filesystem::path manifest;
  std::filesystem::path out_dir;
};

struct EvaluateOptions {
  std::filesystem::path pred;
  std::filesystem::path truth;
  std::filesystem::path probs;
  std::filesystem::path out;
  GroupBy group_by = GroupBy::Truth;
};

struct CalibrateOptions {
  std::filesystem::path probs;
  std::filesystem::path truth;
  std::filesystem::path out;
  int bins = 10;
};

struct SynthCommandOptions {
  std::string preset = "gauss4";
  std::uint64_t seed = 0;
  std::filesystem::path out_dir;
  double label_noise = 0.0;
};

/// Either classifier, restricted to the classes seen in training.
struct TrainedBundle {
  Method method = Method::Mbact;
  int num_classes = 0;
  std::vector<std::string> class_names;
  std::vector<ClassId> class_ids;  ///< trained classes, ascending
  std::vector<std::string> band_names;
  std::optional<MbactModel> mbact;
  std::optional<CartTree> cart;
};

TrainedBundle train_bundle(const LabeledDataset& data, const TrainOptions& options);
void write_bundle(const std::filesystem::path& dir, const TrainedBundle& bundle, const std::string& run_json);
TrainedBundle read_bundle(const std::filesystem::path& dir);

/// N x num_classes probability rows; untrained classes get 0.
Eigen::MatrixXd bundle_probabilities(const TrainedBundle& bundle, const FeatureMatrix& x);

void write_map_artifacts(const std::filesystem::path& dir, const ClassifiedMap& map,
                         const std::vector<std::string>& class_names);
/// Reads prob_1.csv .. prob_n.csv from a classify output directory.
std::vector<Eigen::MatrixXd> read_probability_maps(const std::filesystem::path& dir);

void cmd_train(const TrainOptions& options);
void cmd_classify(const ClassifyOptions& options);
void cmd_evaluate(const EvaluateOptions& options);
void cmd_calibrate(const CalibrateOptions& options);
void cmd_synth(const SynthCommandOptions& options);

}  // namespace satclass
