#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace satclass {

using Index = Eigen::Index;

/// Class labels are 1-based throughout: a label is in {1..n}.
using ClassId = int;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// N x p, one sample per row. Row-major so a sample is contiguous.
using FeatureMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using LabelVector = Eigen::VectorXi;

enum class ErrorCategory {
  Io,
  Parse,
  Dimension,
  Range,
  LabelRange,
  Config,
  Data,
  Degenerate,
};

const char* to_string(ErrorCategory category);

/// All library failures are reported through this type. The category is
/// stable and machine-readable; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  ErrorCategory category() const { return category_; }

 private:
  ErrorCategory category_;
};

}  // namespace satclass
