#pragma once

#include "satclass/rng.hpp"

namespace satclass {

/// Standard normal CDF via the complementary error function.
double std_normal_cdf(double z);

/// Inverse of std_normal_cdf for p in (0, 1).
double std_normal_quantile(double p);

/// Normal(mean, 1) conditioned on z > lower.
double draw_truncated_normal_above(double mean, double lower, Rng& rng);

/// Normal(mean, 1) conditioned on z <= upper.
double draw_truncated_normal_below(double mean, double upper, Rng& rng);

}  // namespace satclass
