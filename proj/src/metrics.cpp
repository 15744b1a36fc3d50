#include "satclass/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace satclass {

ErrorMatrix error_matrix(const LabelVector& predicted, const LabelVector& truth, int num_classes) {
  if (predicted.size() != truth.size()) {
    throw Error(ErrorCategory::Dimension, "error_matrix: " + std::to_string(predicted.size()) + " predictions for " +
                                              std::to_string(truth.size()) + " reference labels");
  }
  if (num_classes < 1) throw Error(ErrorCategory::Config, "error_matrix: need at least one class");
  Eigen::MatrixXi counts = Eigen::MatrixXi::Zero(num_classes, num_classes);
  for (Index t = 0; t < predicted.size(); ++t) {
    const int i = predicted(t);
    const int j = truth(t);
    if (i < 1 || i > num_classes || j < 1 || j > num_classes) {
      throw Error(ErrorCategory::LabelRange, "error_matrix: label outside 1.." + std::to_string(num_classes) +
                                                 " at position " + std::to_string(t));
    }
    ++counts(i - 1, j - 1);
  }
  return ErrorMatrix{std::move(counts)};
}

ErrorMatrix make_error_matrix(Eigen::MatrixXi counts) {
  if (counts.rows() != counts.cols() || counts.rows() == 0) {
    throw Error(ErrorCategory::Dimension, "error matrix must be square and non-empty");
  }
  if ((counts.array() < 0).any()) throw Error(ErrorCategory::Range, "error matrix counts must be non-negative");
  return ErrorMatrix{std::move(counts)};
}

EtaTerms eta_terms(const ErrorMatrix& f) {
  const double v = static_cast<double>(f.total());
  if (!(v > 0.0)) throw Error(ErrorCategory::Degenerate, "error matrix is empty (V = 0)");
  const Eigen::VectorXd rows = f.row_sums().cast<double>();
  const Eigen::VectorXd cols = f.col_sums().cast<double>();
  const Eigen::MatrixXd c = f.counts.cast<double>();
  const Eigen::VectorXd diag = c.diagonal();

  EtaTerms eta;
  eta.eta1 = diag.sum() / v;
  eta.eta2 = rows.dot(cols) / (v * v);
  eta.eta3 = diag.dot(rows + cols) / (v * v);
  double s4 = 0.0;
  for (Index i = 0; i < c.rows(); ++i) {
    for (Index j = 0; j < c.cols(); ++j) {
      const double w = cols(i) + rows(j);
      s4 += c(i, j) * w * w;
    }
  }
  eta.eta4 = s4 / (v * v * v);
  return eta;
}

std::optional<KappaEstimate> overall_kappa(const ErrorMatrix& f) {
  const EtaTerms e = eta_terms(f);
  const double v = static_cast<double>(f.total());
  // Integer-valued numerator and denominator keep kappa exact at zero.
  const double chance = f.row_sums().cast<double>().dot(f.col_sums().cast<double>());
  if (v * v == chance) return std::nullopt;
  const double d = 1.0 - e.eta2;
  const double q = 1.0 - e.eta1;
  KappaEstimate k;
  k.value = (v * f.counts.diagonal().cast<double>().sum() - chance) / (v * v - chance);
  k.variance = (e.eta1 * q / (d * d) + 2.0 * q * (2.0 * e.eta1 * e.eta2 - e.eta3) / (d * d * d) +
                q * q * (e.eta4 - 4.0 * e.eta2 * e.eta2) / (d * d * d * d)) /
               v;
  return k;
}

std::optional<KappaEstimate> conditional_kappa(const ErrorMatrix& f, ClassId i) {
  if (i < 1 || i > f.num_classes()) throw Error(ErrorCategory::LabelRange, "conditional_kappa: class out of range");
  const double v = static_cast<double>(f.total());
  if (!(v > 0.0)) throw Error(ErrorCategory::Degenerate, "error matrix is empty (V = 0)");
  const double fii = f.counts(i - 1, i - 1);
  const double fi = f.counts.row(i - 1).sum();
  const double fc = f.counts.col(i - 1).sum();
  if (fi == 0.0 || fc == v) return std::nullopt;
  KappaEstimate k;
  k.value = (v * fii - fi * fc) / (v * fi - fi * fc);
  const double base = fi * (v - fc);
  k.variance = v * (fi - fii) / (base * base * base) *
               ((fi - fii) * (fi * fc - v * fii) + v * fii * (v - fc - fi + fii));
  return k;
}

std::vector<UserProducer> user_producer(const ErrorMatrix& f) {
  const Eigen::VectorXi rows = f.row_sums();
  const Eigen::VectorXi cols = f.col_sums();
  std::vector<UserProducer> out(static_cast<std::size_t>(f.num_classes()));
  for (int i = 0; i < f.num_classes(); ++i) {
    const double fii = f.counts(i, i);
    if (rows(i) > 0) out[static_cast<std::size_t>(i)].users = fii / rows(i);
    if (cols(i) > 0) out[static_cast<std::size_t>(i)].producers = fii / cols(i);
  }
  return out;
}

AccuracyReport accuracy_report(const ErrorMatrix& f) {
  AccuracyReport report;
  report.matrix = f;
  report.eta = eta_terms(f);
  report.kappa = overall_kappa(f);
  const auto up = user_producer(f);
  const Eigen::VectorXi rows = f.row_sums();
  const Eigen::VectorXi cols = f.col_sums();
  for (int i = 0; i < f.num_classes(); ++i) {
    ClassAccuracy c;
    c.users = up[static_cast<std::size_t>(i)].users;
    c.producers = up[static_cast<std::size_t>(i)].producers;
    c.kappa = conditional_kappa(f, i + 1);
    c.absent = rows(i) == 0 && cols(i) == 0;
    report.classes.push_back(c);
  }
  return report;
}

Deviance deviance(const Eigen::MatrixXd& probs, const LabelVector& predicted) {
  if (probs.rows() != predicted.size()) {
    throw Error(ErrorCategory::Dimension, "deviance: probability rows do not match the predictions");
  }
  Deviance d;
  for (Index t = 0; t < probs.rows(); ++t) {
    check_probability_vector(probs.row(t).transpose());
    const int k = predicted(t);
    if (k < 1 || k > probs.cols()) throw Error(ErrorCategory::LabelRange, "deviance: predicted label out of range");
    const double p = probs(t, k - 1);
    if (p <= 0.0) {
      d.overflow = true;
      continue;
    }
    d.value -= 2.0 * std::log(p);
  }
  if (d.overflow) d.value = std::numeric_limits<double>::infinity();
  return d;
}

void check_probability_vector(const Eigen::Ref<const Eigen::VectorXd>& p) {
  if (p.size() == 0) throw Error(ErrorCategory::Range, "empty probability vector");
  if (!p.allFinite() || (p.array() < 0.0).any() || std::abs(p.sum() - 1.0) > 1e-6) {
    throw Error(ErrorCategory::Range, "not a probability vector (entries must be >= 0 and sum to 1)");
  }
}

UncertaintyReport uncertainty_report(const Eigen::MatrixXd& probs, const LabelVector& predicted,
                                     const LabelVector& truth, GroupBy group_by) {
  if (truth.size() != predicted.size() || probs.rows() != predicted.size()) {
    throw Error(ErrorCategory::Dimension, "uncertainty_report: inputs are not aligned");
  }
  if (probs.rows() == 0) throw Error(ErrorCategory::Data, "uncertainty_report: no points");
  UncertaintyReport report;
  report.group_by = group_by;
  report.deviance = deviance(probs, predicted);
  const auto n = static_cast<std::size_t>(probs.cols());
  std::vector<Impurity> sums(n);
  std::vector<Index> counts(n, 0);
  for (Index t = 0; t < probs.rows(); ++t) {
    const Impurity imp = impurity(probs.row(t).transpose());
    report.mean.pe += imp.pe;
    report.mean.gini += imp.gini;
    report.mean.entropy += imp.entropy;
    const int k = group_by == GroupBy::Truth ? truth(t) : predicted(t);
    if (k < 1 || k > static_cast<int>(n)) throw Error(ErrorCategory::LabelRange, "uncertainty_report: label out of range");
    auto& s = sums[static_cast<std::size_t>(k - 1)];
    s.pe += imp.pe;
    s.gini += imp.gini;
    s.entropy += imp.entropy;
    ++counts[static_cast<std::size_t>(k - 1)];
  }
  const double total = static_cast<double>(probs.rows());
  report.mean.pe /= total;
  report.mean.gini /= total;
  report.mean.entropy /= total;
  for (std::size_t k = 0; k < n; ++k) {
    if (counts[k] == 0) {
      report.per_class.emplace_back();
      continue;
    }
    const double c = static_cast<double>(counts[k]);
    report.per_class.push_back(Impurity{sums[k].pe / c, sums[k].gini / c, sums[k].entropy / c});
  }
  return report;
}

std::vector<CalibrationBin> calibration_table(const Eigen::VectorXd& p_max, const std::vector<bool>& correct,
                                              int bins) {
  if (static_cast<std::size_t>(p_max.size()) != correct.size()) {
    throw Error(ErrorCategory::Dimension, "calibration_table: p_max and correctness lengths differ");
  }
  if (bins < 1) throw Error(ErrorCategory::Config, "calibration_table: bins must be positive");
  const Index n = p_max.size();
  if (n < bins) {
    throw Error(ErrorCategory::Data, "calibration_table: " + std::to_string(n) + " points for " +
                                         std::to_string(bins) + " bins");
  }
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return p_max(a) < p_max(b); });

  std::vector<CalibrationBin> table;
  const Index base = n / bins;
  const Index extra = n % bins;
  Index pos = 0;
  for (int b = 0; b < bins; ++b) {
    CalibrationBin bin;
    bin.index = b + 1;
    bin.count = base + (b < extra ? 1 : 0);
    double sum_p = 0.0;
    Index hits = 0;
    for (Index t = 0; t < bin.count; ++t, ++pos) {
      const Index i = order[static_cast<std::size_t>(pos)];
      sum_p += p_max(i);
      if (correct[static_cast<std::size_t>(i)]) ++hits;
    }
    bin.mean_p_max = sum_p / static_cast<double>(bin.count);
    bin.proportion_correct = static_cast<double>(hits) / static_cast<double>(bin.count);
    table.push_back(bin);
  }
  return table;
}

CalibrationFit calibration_fit(const std::vector<CalibrationBin>& table) {
  if (table.empty()) throw Error(ErrorCategory::Data, "calibration_fit: empty table");
  const double n = static_cast<double>(table.size());
  double mx = 0.0, my = 0.0;
  for (const auto& b : table) {
    mx += b.mean_p_max;
    my += b.proportion_correct;
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& b : table) {
    sxx += (b.mean_p_max - mx) * (b.mean_p_max - mx);
    sxy += (b.mean_p_max - mx) * (b.proportion_correct - my);
  }
  CalibrationFit fit;
  if (sxx <= 1e-12 * n) {
    fit.intercept = my;
    return fit;
  }
  fit.stable = true;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  return fit;
}

}  // namespace satclass
