#pragma once

#include <iosfwd>

#include "satclass/bart.hpp"
#include "satclass/data_model.hpp"
#include "satclass/normal.hpp"

namespace satclass {

/// BART probit settings. sigma is fixed at 1, so the noise-prior fields of
/// the embedded BartConfig are ignored.
struct ProbitConfig {
  BartConfig bart;
  double binary_offset = 0.0;

  /// Leaf prior SD 3 / (k sqrt(m)).
  double leaf_sd() const;
};

/// P(Y = 1 | x) = Phi(h(x) + offset), represented by its posterior draws.
struct ProbitModel {
  PosteriorDraws draws;
  ProbitConfig config;

  const CutpointGrid& grid() const { return draws.grid; }
  Index dimension() const { return draws.dimension(); }
};

/// z_i ~ Normal(h_i + offset, 1) truncated to (0, inf) when y_i = 1 and to
/// (-inf, 0] when y_i = 0, drawn by inverting the truncated CDF.
Eigen::VectorXd draw_latents(const Eigen::VectorXd& h, const LabelVector& labels, double offset, Rng& rng);

/// Fits with an RNG seeded from config.bart.seed.
ProbitModel fit_probit(const BinaryPseudoDataset& data, const ProbitConfig& config);
ProbitModel fit_probit(const BinaryPseudoDataset& data, const ProbitConfig& config, Rng& rng,
                       const SamplerHooks& extra_hooks = {});

/// Mean over kept draws of Phi(h^(s)(x) + offset).
double predict_prob(const ProbitModel& model, const Eigen::Ref<const Eigen::VectorXd>& x);
/// Batch form; one probability per row of x.
Eigen::VectorXd predict_probs(const ProbitModel& model, const FeatureMatrix& x);

/// 1 iff the estimated probability is at least 0.5.
inline int probability_to_label(double p) { return p >= 0.5 ? 1 : 0; }
int predict_label(const ProbitModel& model, const Eigen::Ref<const Eigen::VectorXd>& x);

void write_probit_model(std::ostream& out, const ProbitModel& model);
ProbitModel read_probit_model(std::istream& in);

}  // namespace satclass
