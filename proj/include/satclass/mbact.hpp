#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "satclass/data_model.hpp"
#include "satclass/probit.hpp"

namespace satclass {

/// n one-against-all probit posteriors; per_class[k - 1] was fit on D_k.
struct MbactModel {
  std::vector<ProbitModel> per_class;
  std::vector<std::string> class_names;
  std::uint64_t seed = 0;

  int num_classes() const { return static_cast<int>(per_class.size()); }
  Index dimension() const { return per_class.empty() ? 0 : per_class.front().dimension(); }
};

/// Fits class k on make_pseudo_dataset(data, k) with RNG stream
/// (config.bart.seed, key_k), where key_k is stream_keys[k - 1] if given and
/// k otherwise. Output does not depend on the order the fits execute in.
MbactModel fit_mbact(const LabeledDataset& data, const ProbitConfig& config,
                     std::span<const std::uint64_t> stream_keys = {}, bool parallel = true);

/// Per-class probit probabilities, not normalised (their sum is not 1).
Eigen::VectorXd raw_class_scores(const MbactModel& model, const Eigen::Ref<const Eigen::VectorXd>& x);
/// Batch form: N x n.
Eigen::MatrixXd raw_class_score_matrix(const MbactModel& model, const FeatureMatrix& x);

/// Divides by the total so the scores form a probability vector.
template <typename Derived>
Vector<typename Derived::Scalar> normalize_scores(const Eigen::MatrixBase<Derived>& raw) {
  using Scalar = typename Derived::Scalar;
  if ((raw.array() < Scalar(0)).any() || !raw.allFinite()) {
    throw Error(ErrorCategory::Range, "normalize_scores: scores must be finite and non-negative");
  }
  const Scalar total = raw.sum();
  if (!(total > Scalar(0))) throw Error(ErrorCategory::Degenerate, "normalize_scores: all scores are zero");
  return raw / total;
}

/// 1-based index of the largest entry; ties go to the smallest class id.
template <typename Derived>
ClassId argmax_class(const Eigen::DenseBase<Derived>& scores) {
  Index best = 0;
  for (Index k = 1; k < scores.size(); ++k) {
    if (scores(k) > scores(best)) best = k;
  }
  return static_cast<ClassId>(best + 1);
}

ClassId predict_class(const MbactModel& model, const Eigen::Ref<const Eigen::VectorXd>& x);

/// Per-pixel class map with normalised probabilities.
struct ClassifiedMap {
  Eigen::MatrixXi labels;              ///< rows x cols, ids in 1..n
  std::vector<Eigen::MatrixXd> probs;  ///< n matrices, rows x cols
  Eigen::MatrixXd p_max;

  Index rows() const { return labels.rows(); }
  Index cols() const { return labels.cols(); }
  int num_classes() const { return static_cast<int>(probs.size()); }
  /// Probability vector of one pixel.
  Eigen::VectorXd pixel_probs(Index row, Index col) const;
};

/// Builds a map from a (rows*cols) x n matrix of probability rows in
/// row-major pixel order. Labels are the row argmax.
ClassifiedMap assemble_map(Index rows, Index cols, const Eigen::MatrixXd& pixel_probs);

ClassifiedMap classify_image(const MbactModel& model, const BandStack& stack);

/// Directory with manifest.json and one class_<k>.model per class.
void write_mbact_bundle(const std::filesystem::path& dir, const MbactModel& model);
MbactModel read_mbact_bundle(const std::filesystem::path& dir);

}  // namespace satclass
