#pragma once

#include <string>
#include <vector>

#include "satclass/metrics.hpp"

namespace satclass {

struct EvaluationReport {
  std::vector<std::string> class_names;
  AccuracyReport accuracy;
  UncertaintyReport uncertainty;
};

EvaluationReport evaluate_predictions(const Eigen::MatrixXd& probs, const LabelVector& predicted,
                                      const LabelVector& truth, std::vector<std::string> class_names,
                                      GroupBy group_by = GroupBy::Truth);

/// Values rounded to 6 significant digits; missing entries are "-".
std::string report_json_text(const EvaluationReport& report);
/// Per-class rows: class, User's, Producer's, Co. Kappa, Gini, Entropy, and the rest.
std::string report_csv_text(const EvaluationReport& report);
/// Overall line followed by the per-class table.
std::string report_table_text(const EvaluationReport& report);

std::string calibration_csv_text(const std::vector<CalibrationBin>& table);
std::string calibration_summary_json_text(const std::vector<CalibrationBin>& table, const CalibrationFit& fit);

}  // namespace satclass
