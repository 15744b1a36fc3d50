#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "satclass/common.hpp"

namespace satclass::io {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

/// Value printed with `digits` significant digits (%g style).
std::string format_significant(double value, int digits = 6);

/// Rounds to `digits` significant digits, returning the parsed double.
double round_significant(double value, int digits = 6);

double parse_double(std::string_view text, const std::string& where);
long long parse_integer(std::string_view text, const std::string& where);

std::vector<std::string> split_csv_line(std::string_view line);

std::string read_text_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

/// Headerless numeric CSV, row-major. Errors name the file, line and column.
Eigen::MatrixXd read_csv_matrix(const std::filesystem::path& path);
std::string csv_matrix_text(const Eigen::MatrixXd& matrix);
void write_csv_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& matrix);

using Rgb = std::array<std::uint8_t, 3>;

/// Binary (P5) greymap; values must fit in a byte.
std::string pgm_text(const Eigen::MatrixXi& values);
/// Binary (P6) pixmap.
std::string ppm_text(const std::vector<Rgb>& pixels, Index rows, Index cols);

struct Pgm {
  Eigen::MatrixXi values;
  int maxval = 255;
};
Pgm parse_pgm(std::string_view text);

}  // namespace satclass::io
