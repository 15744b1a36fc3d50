#include "satclass/report.hpp"

#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "satclass/io.hpp"

namespace satclass {
namespace {

using nlohmann::ordered_json;

ordered_json number(double v) { return io::round_significant(v, 6); }

template <typename T>
ordered_json maybe(const std::optional<T>& v) {
  if (!v) return "-";
  return number(*v);
}

std::string cell(const std::optional<double>& v) { return v ? io::format_significant(*v, 6) : "-"; }

const char* group_name(GroupBy g) { return g == GroupBy::Truth ? "truth" : "predicted"; }

std::string deviance_text(const Deviance& d) { return d.overflow ? "inf" : io::format_significant(d.value, 6); }

}  // namespace

EvaluationReport evaluate_predictions(const Eigen::MatrixXd& probs, const LabelVector& predicted,
                                      const LabelVector& truth, std::vector<std::string> class_names,
                                      GroupBy group_by) {
  const int n = static_cast<int>(probs.cols());
  if (class_names.empty()) {
    for (int k = 1; k <= n; ++k) class_names.push_back("class_" + std::to_string(k));
  }
  if (static_cast<int>(class_names.size()) != n) {
    throw Error(ErrorCategory::Dimension, "class name count does not match the probability columns");
  }
  EvaluationReport report;
  report.class_names = std::move(class_names);
  report.accuracy = accuracy_report(error_matrix(predicted, truth, n));
  report.uncertainty = uncertainty_report(probs, predicted, truth, group_by);
  return report;
}

std::string report_json_text(const EvaluationReport& report) {
  const auto& acc = report.accuracy;
  const auto& unc = report.uncertainty;
  ordered_json j;
  j["format"] = "satclass-report";
  j["version"] = 1;
  j["points"] = acc.matrix.total();
  j["group_by"] = group_name(unc.group_by);

  ordered_json overall;
  overall["eta1"] = number(acc.eta.eta1);
  overall["eta2"] = number(acc.eta.eta2);
  overall["eta3"] = number(acc.eta.eta3);
  overall["eta4"] = number(acc.eta.eta4);
  overall["kappa"] = acc.kappa ? number(acc.kappa->value) : ordered_json("-");
  overall["var_kappa"] = acc.kappa ? number(acc.kappa->variance) : ordered_json("-");
  overall["deviance"] = unc.deviance.overflow ? ordered_json("inf") : number(unc.deviance.value);
  overall["deviance_overflow"] = unc.deviance.overflow;
  overall["pe"] = number(unc.mean.pe);
  overall["gini"] = number(unc.mean.gini);
  overall["entropy"] = number(unc.mean.entropy);
  j["overall"] = overall;

  ordered_json classes = ordered_json::array();
  for (std::size_t k = 0; k < acc.classes.size(); ++k) {
    const auto& c = acc.classes[k];
    const auto& u = unc.per_class[k];
    ordered_json row;
    row["id"] = k + 1;
    row["name"] = report.class_names[k];
    row["users"] = maybe(c.users);
    row["producers"] = maybe(c.producers);
    row["conditional_kappa"] = c.kappa ? number(c.kappa->value) : ordered_json("-");
    row["var_conditional_kappa"] = c.kappa ? number(c.kappa->variance) : ordered_json("-");
    row["pe"] = u ? number(u->pe) : ordered_json("-");
    row["gini"] = u ? number(u->gini) : ordered_json("-");
    row["entropy"] = u ? number(u->entropy) : ordered_json("-");
    classes.push_back(row);
  }
  j["classes"] = classes;

  ordered_json matrix = ordered_json::array();
  for (Index i = 0; i < acc.matrix.counts.rows(); ++i) {
    ordered_json row = ordered_json::array();
    for (Index c = 0; c < acc.matrix.counts.cols(); ++c) row.push_back(acc.matrix.counts(i, c));
    matrix.push_back(row);
  }
  j["error_matrix"] = matrix;
  return j.dump(2) + "\n";
}

std::string report_csv_text(const EvaluationReport& report) {
  const auto& acc = report.accuracy;
  const auto& unc = report.uncertainty;
  std::ostringstream out;
  out << "class,name,users,producers,conditional_kappa,var_conditional_kappa,pe,gini,entropy\n";
  for (std::size_t k = 0; k < acc.classes.size(); ++k) {
    const auto& c = acc.classes[k];
    const auto& u = unc.per_class[k];
    out << k + 1 << ',' << report.class_names[k] << ',' << cell(c.users) << ',' << cell(c.producers) << ','
        << cell(c.kappa ? std::optional<double>(c.kappa->value) : std::nullopt) << ','
        << cell(c.kappa ? std::optional<double>(c.kappa->variance) : std::nullopt) << ','
        << cell(u ? std::optional<double>(u->pe) : std::nullopt) << ','
        << cell(u ? std::optional<double>(u->gini) : std::nullopt) << ','
        << cell(u ? std::optional<double>(u->entropy) : std::nullopt) << '\n';
  }
  return out.str();
}

std::string report_table_text(const EvaluationReport& report) {
  const auto& acc = report.accuracy;
  const auto& unc = report.uncertainty;
  auto percent = [](const std::optional<double>& v) {
    return v ? io::format_significant(100.0 * *v, 6) : std::string("-");
  };
  std::ostringstream out;
  out << "Overall eta1 = " << io::format_significant(100.0 * acc.eta.eta1, 6) << "%"
      << ", Kappa = " << (acc.kappa ? io::format_significant(acc.kappa->value, 6) : "-")
      << ", Var(Kappa) = " << (acc.kappa ? io::format_significant(acc.kappa->variance, 6) : "-")
      << ", Overall Gini = " << io::format_significant(unc.mean.gini, 6)
      << ", Overall Entropy = " << io::format_significant(unc.mean.entropy, 6)
      << ", Overall deviance = " << deviance_text(unc.deviance) << '\n';
  std::size_t width = 7;
  for (const auto& name : report.class_names) width = std::max(width, name.size() + 2);
  out << std::left << std::setw(static_cast<int>(width)) << "Classes" << std::setw(12) << "User's" << std::setw(12)
      << "Producer's" << std::setw(12) << "Co. Kappa" << std::setw(12) << "Gini"
      << "Entropy\n";
  for (std::size_t k = 0; k < acc.classes.size(); ++k) {
    const auto& c = acc.classes[k];
    const auto& u = unc.per_class[k];
    out << std::setw(static_cast<int>(width)) << report.class_names[k] << std::setw(12) << percent(c.users)
        << std::setw(12) << percent(c.producers) << std::setw(12)
        << cell(c.kappa ? std::optional<double>(c.kappa->value) : std::nullopt) << std::setw(12)
        << cell(u ? std::optional<double>(u->gini) : std::nullopt)
        << cell(u ? std::optional<double>(u->entropy) : std::nullopt) << '\n';
  }
  return out.str();
}

std::string calibration_csv_text(const std::vector<CalibrationBin>& table) {
  std::ostringstream out;
  out << "bin,count,mean_p_max,proportion_correct\n";
  for (const auto& b : table) {
    out << b.index << ',' << b.count << ',' << io::format_significant(b.mean_p_max, 6) << ','
        << io::format_significant(b.proportion_correct, 6) << '\n';
  }
  return out.str();
}

std::string calibration_summary_json_text(const std::vector<CalibrationBin>& table, const CalibrationFit& fit) {
  ordered_json j;
  j["format"] = "satclass-calibration";
  j["version"] = 1;
  j["bins"] = table.size();
  Index points = 0;
  for (const auto& b : table) points += b.count;
  j["points"] = points;
  j["slope"] = fit.stable ? number(fit.slope) : ordered_json("-");
  j["intercept"] = fit.stable ? number(fit.intercept) : ordered_json("-");
  j["stable"] = fit.stable;
  return j.dump(2) + "\n";
}

}  // namespace satclass
