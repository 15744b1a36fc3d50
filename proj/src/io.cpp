#include "satclass/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace satclass::io {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

}  // namespace

std::string format_double(double value) {
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, result.ptr);
}

std::string format_significant(double value, int digits) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.*g", digits, value);
  return buffer;
}

double round_significant(double value, int digits) {
  if (!std::isfinite(value)) return value;
  return std::strtod(format_significant(value, digits).c_str(), nullptr);
}

double parse_double(std::string_view text, const std::string& where) {
  const auto field = trim(text);
  double value = 0.0;
  const auto result = std::from_chars(field.data(), field.data() + field.size(), value);
  if (field.empty() || result.ec != std::errc() || result.ptr != field.data() + field.size()) {
    throw Error(ErrorCategory::Parse, where + ": non-numeric value '" + std::string(field) + "'");
  }
  if (!std::isfinite(value)) {
    throw Error(ErrorCategory::Parse, where + ": non-finite value '" + std::string(field) + "'");
  }
  return value;
}

long long parse_integer(std::string_view text, const std::string& where) {
  const auto field = trim(text);
  long long value = 0;
  const auto result = std::from_chars(field.data(), field.data() + field.size(), value);
  if (field.empty() || result.ec != std::errc() || result.ptr != field.data() + field.size()) {
    throw Error(ErrorCategory::Parse, where + ": expected an integer, got '" + std::string(field) + "'");
  }
  return value;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    fields.emplace_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCategory::Io, "cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCategory::Io, "cannot write '" + tmp.string() + "'");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error(ErrorCategory::Io, "short write to '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCategory::Io, "cannot rename '" + tmp.string() + "': " + ec.message());
}

Eigen::MatrixXd read_csv_matrix(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line);
    std::vector<double> row;
    row.reserve(fields.size());
    for (std::size_t c = 0; c < fields.size(); ++c) {
      row.push_back(parse_double(fields[c], path.string() + ":" + std::to_string(line_number) +
                                                ":" + std::to_string(c + 1)));
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw Error(ErrorCategory::Dimension, path.string() + ":" + std::to_string(line_number) +
                                                ": expected " + std::to_string(rows.front().size()) +
                                                " columns, found " + std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(ErrorCategory::Parse, path.string() + ": empty matrix");
  Eigen::MatrixXd matrix(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index r = 0; r < matrix.rows(); ++r) {
    for (Index c = 0; c < matrix.cols(); ++c) matrix(r, c) = rows[r][c];
  }
  return matrix;
}

std::string csv_matrix_text(const Eigen::MatrixXd& matrix) {
  std::string out;
  out.reserve(static_cast<std::size_t>(matrix.size()) * 12);
  for (Index r = 0; r < matrix.rows(); ++r) {
    for (Index c = 0; c < matrix.cols(); ++c) {
      if (c > 0) out += ',';
      out += format_double(matrix(r, c));
    }
    out += '\n';
  }
  return out;
}

void write_csv_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& matrix) {
  write_file_atomic(path, csv_matrix_text(matrix));
}

std::string pgm_text(const Eigen::MatrixXi& values) {
  std::string out = "P5\n" + std::to_string(values.cols()) + " " + std::to_string(values.rows()) + "\n255\n";
  for (Index r = 0; r < values.rows(); ++r) {
    for (Index c = 0; c < values.cols(); ++c) {
      const int v = values(r, c);
      if (v < 0 || v > 255) throw Error(ErrorCategory::Range, "pgm value out of byte range");
      out += static_cast<char>(static_cast<unsigned char>(v));
    }
  }
  return out;
}

std::string ppm_text(const std::vector<Rgb>& pixels, Index rows, Index cols) {
  if (static_cast<Index>(pixels.size()) != rows * cols) {
    throw Error(ErrorCategory::Dimension, "ppm pixel count does not match dimensions");
  }
  std::string out = "P6\n" + std::to_string(cols) + " " + std::to_string(rows) + "\n255\n";
  for (const auto& rgb : pixels) {
    for (auto channel : rgb) out += static_cast<char>(channel);
  }
  return out;
}

Pgm parse_pgm(std::string_view text) {
  std::size_t pos = 0;
  auto token = [&]() {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    const auto start = pos;
    while (pos < text.size() && !std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    return text.substr(start, pos - start);
  };
  if (token() != "P5") throw Error(ErrorCategory::Parse, "not a binary PGM");
  const auto cols = parse_integer(token(), "pgm width");
  const auto rows = parse_integer(token(), "pgm height");
  Pgm pgm;
  pgm.maxval = static_cast<int>(parse_integer(token(), "pgm maxval"));
  ++pos;
  if (text.size() - pos != static_cast<std::size_t>(rows * cols)) {
    throw Error(ErrorCategory::Parse, "pgm payload size mismatch");
  }
  pgm.values.resize(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) {
      pgm.values(r, c) = static_cast<unsigned char>(text[pos++]);
    }
  }
  return pgm;
}

}  // namespace satclass::io
