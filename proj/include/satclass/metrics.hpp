#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "satclass/common.hpp"

namespace satclass {

/// Confusion counts: row i = predicted class, column j = true class.
struct ErrorMatrix {
  Eigen::MatrixXi counts;

  int num_classes() const { return static_cast<int>(counts.rows()); }
  Index total() const { return counts.sum(); }
  Eigen::VectorXi row_sums() const { return counts.rowwise().sum(); }
  Eigen::VectorXi col_sums() const { return counts.colwise().sum().transpose(); }
};

ErrorMatrix error_matrix(const LabelVector& predicted, const LabelVector& truth, int num_classes);
/// Wraps a square matrix of non-negative counts with a positive total.
ErrorMatrix make_error_matrix(Eigen::MatrixXi counts);

struct EtaTerms {
  double eta1 = 0.0;
  double eta2 = 0.0;
  double eta3 = 0.0;
  double eta4 = 0.0;
};

EtaTerms eta_terms(const ErrorMatrix& f);

struct KappaEstimate {
  double value = 0.0;
  double variance = 0.0;
};

/// Empty when eta2 == 1.
std::optional<KappaEstimate> overall_kappa(const ErrorMatrix& f);
/// Empty when f_i+ == 0 or f_+i == V.
std::optional<KappaEstimate> conditional_kappa(const ErrorMatrix& f, ClassId i);

struct UserProducer {
  std::optional<double> users;
  std::optional<double> producers;
};

std::vector<UserProducer> user_producer(const ErrorMatrix& f);

struct ClassAccuracy {
  std::optional<double> users;
  std::optional<double> producers;
  std::optional<KappaEstimate> kappa;
  /// No predicted and no true points.
  bool absent = false;
};

struct AccuracyReport {
  ErrorMatrix matrix;
  EtaTerms eta;
  std::optional<KappaEstimate> kappa;
  std::vector<ClassAccuracy> classes;
};

AccuracyReport accuracy_report(const ErrorMatrix& f);

struct Deviance {
  double value = 0.0;  ///< +inf on overflow
  bool overflow = false;
};

/// -2 sum_i ln p_{i, pred_i}; probs is N x n with rows summing to 1.
Deviance deviance(const Eigen::MatrixXd& probs, const LabelVector& predicted);

struct Impurity {
  double pe = 0.0;
  double gini = 0.0;
  double entropy = 0.0;
};

void check_probability_vector(const Eigen::Ref<const Eigen::VectorXd>& p);

/// P_E = 1 - max p, G = 1 - sum p^2, H = -sum p ln p with 0 ln 0 = 0.
template <typename Derived>
Impurity impurity(const Eigen::MatrixBase<Derived>& p) {
  const Eigen::VectorXd v = p.template cast<double>();
  check_probability_vector(v);
  Impurity out;
  out.pe = 1.0 - v.maxCoeff();
  out.gini = 1.0 - v.squaredNorm();
  for (Index k = 0; k < v.size(); ++k) {
    if (v(k) > 0.0) out.entropy -= v(k) * std::log(v(k));
  }
  return out;
}

enum class GroupBy { Truth, Predicted };

struct UncertaintyReport {
  Deviance deviance;
  Impurity mean;
  /// Mean impurity over the points of each class; empty for classes with none.
  std::vector<std::optional<Impurity>> per_class;
  GroupBy group_by = GroupBy::Truth;
};

UncertaintyReport uncertainty_report(const Eigen::MatrixXd& probs, const LabelVector& predicted,
                                     const LabelVector& truth, GroupBy group_by = GroupBy::Truth);

struct CalibrationBin {
  int index = 0;  ///< 1-based
  Index count = 0;
  double mean_p_max = 0.0;
  double proportion_correct = 0.0;
};

/// Points stably sorted by p_max and cut into `bins` groups whose sizes
/// differ by at most one, larger groups first.
std::vector<CalibrationBin> calibration_table(const Eigen::VectorXd& p_max, const std::vector<bool>& correct,
                                              int bins = 10);

struct CalibrationFit {
  double slope = 0.0;
  double intercept = 0.0;
  /// False when the bin means of p_max have no spread.
  bool stable = false;
};

/// Least-squares line of proportion correct on mean p_max over the bins.
CalibrationFit calibration_fit(const std::vector<CalibrationBin>& table);

}  // namespace satclass
