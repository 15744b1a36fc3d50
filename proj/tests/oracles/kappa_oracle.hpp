#pragma once

// Direct evaluation of the accuracy statistics from raw count tables,
// written without Eigen and in long double, for cross-checking.

#include <cmath>
#include <optional>
#include <vector>

namespace oracle {

using Table = std::vector<std::vector<long>>;

struct Stats {
  long double eta1, eta2, eta3, eta4;
  std::optional<long double> kappa, var_kappa;
  // Magnitude of the summed variance terms; the floor for relative comparison.
  long double var_kappa_scale = 0;
  std::vector<std::optional<long double>> users, producers, cond_kappa, var_cond_kappa;
};

inline Stats evaluate(const Table& f) {
  const std::size_t n = f.size();
  std::vector<long double> row(n, 0), col(n, 0);
  long double v = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      row[i] += f[i][j];
      col[j] += f[i][j];
      v += f[i][j];
    }
  }
  Stats s{};
  long double diag = 0, e2 = 0, e3 = 0, e4 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    diag += f[i][i];
    e2 += row[i] * col[i];
    e3 += f[i][i] * (row[i] + col[i]);
    for (std::size_t j = 0; j < n; ++j) e4 += f[i][j] * (col[i] + row[j]) * (col[i] + row[j]);
  }
  s.eta1 = diag / v;
  s.eta2 = e2 / (v * v);
  s.eta3 = e3 / (v * v);
  s.eta4 = e4 / (v * v * v);
  if (s.eta2 != 1) {
    const long double a = 1 - s.eta1;
    const long double b = 1 - s.eta2;
    s.kappa = (s.eta1 - s.eta2) / b;
    const long double t1 = s.eta1 * a / (b * b);
    const long double t2 = 2 * a * (2 * s.eta1 * s.eta2 - s.eta3) / (b * b * b);
    const long double t3 = a * a * (s.eta4 - 4 * s.eta2 * s.eta2) / (b * b * b * b);
    s.var_kappa = (t1 + t2 + t3) / v;
    s.var_kappa_scale = (std::fabs(t1) + std::fabs(t2) + std::fabs(t3)) / v;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const long double fii = f[i][i];
    s.users.push_back(row[i] > 0 ? std::optional<long double>(fii / row[i]) : std::nullopt);
    s.producers.push_back(col[i] > 0 ? std::optional<long double>(fii / col[i]) : std::nullopt);
    if (row[i] == 0 || col[i] == v) {
      s.cond_kappa.push_back(std::nullopt);
      s.var_cond_kappa.push_back(std::nullopt);
      continue;
    }
    s.cond_kappa.push_back((v * fii - row[i] * col[i]) / (v * row[i] - row[i] * col[i]));
    const long double d = row[i] * (v - col[i]);
    const long double lead = v * (row[i] - fii) / (d * d * d);
    const long double body = (row[i] - fii) * (row[i] * col[i] - v * fii) + v * fii * (v - col[i] - row[i] + fii);
    s.var_cond_kappa.push_back(lead * body);
  }
  return s;
}

}  // namespace oracle
