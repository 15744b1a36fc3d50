#include "satclass/probit.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "satclass/io.hpp"

namespace satclass {

double ProbitConfig::leaf_sd() const {
  return 3.0 / (bart.k * std::sqrt(static_cast<double>(bart.num_trees)));
}

Eigen::VectorXd draw_latents(const Eigen::VectorXd& h, const LabelVector& labels, double offset, Rng& rng) {
  if (h.size() != labels.size()) throw Error(ErrorCategory::Dimension, "draw_latents: length mismatch");
  Eigen::VectorXd z(h.size());
  for (Index i = 0; i < h.size(); ++i) {
    const double mean = h(i) + offset;
    z(i) = labels(i) == 1 ? draw_truncated_normal_above(mean, 0.0, rng) : draw_truncated_normal_below(mean, 0.0, rng);
  }
  return z;
}

ProbitModel fit_probit(const BinaryPseudoDataset& data, const ProbitConfig& config) {
  Rng rng(config.bart.seed);
  return fit_probit(data, config, rng);
}

ProbitModel fit_probit(const BinaryPseudoDataset& data, const ProbitConfig& config, Rng& rng,
                       const SamplerHooks& extra_hooks) {
  const Index positives = (data.labels.array() == 1).count();
  if (positives == 0 || positives == data.size()) {
    throw Error(ErrorCategory::Data, "probit fit needs both labels present");
  }
  // The latents z satisfy z = h + offset + eps, so trees see z - offset.
  const double offset = config.binary_offset;
  SamplerHooks hooks = extra_hooks;
  hooks.refresh_response = [&](const Eigen::VectorXd& fit, Eigen::VectorXd& response, Rng& r) {
    response = (draw_latents(fit, data.labels, offset, r).array() - offset).matrix();
  };
  ProbitModel model;
  model.config = config;
  model.draws = run_sampler(data.features, data.labels.cast<double>(), config.bart, SamplerMode::ProbitLatent, rng, hooks);
  return model;
}

double predict_prob(const ProbitModel& model, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != model.dimension()) throw Error(ErrorCategory::Dimension, "predict_prob: feature length mismatch");
  double total = 0.0;
  for (const auto& draw : model.draws.draws) {
    total += std_normal_cdf(ensemble_predict(draw, x, model.grid()) + model.config.binary_offset);
  }
  return total / static_cast<double>(model.draws.size());
}

Eigen::VectorXd predict_probs(const ProbitModel& model, const FeatureMatrix& x) {
  if (x.cols() != model.dimension()) throw Error(ErrorCategory::Dimension, "predict_prob: feature width mismatch");
  const RankedFeatures ranks = rank_features(x, model.grid());
  Eigen::VectorXd total = Eigen::VectorXd::Zero(x.rows());
  Eigen::VectorXd h(x.rows());
  for (const auto& draw : model.draws.draws) {
    h.setZero();
    for (const auto& tree : draw.trees) {
      for (Index i = 0; i < x.rows(); ++i) h(i) += tree.node(tree.find_leaf_ranked(&ranks(i, 0))).mu;
    }
    for (Index i = 0; i < x.rows(); ++i) total(i) += std_normal_cdf(h(i) + model.config.binary_offset);
  }
  return total / static_cast<double>(model.draws.size());
}

int predict_label(const ProbitModel& model, const Eigen::Ref<const Eigen::VectorXd>& x) {
  return probability_to_label(predict_prob(model, x));
}

void write_probit_model(std::ostream& out, const ProbitModel& model) {
  out << "satclass-probit 1\n";
  out << "probit binary_offset " << io::format_double(model.config.binary_offset) << " k "
      << io::format_double(model.config.bart.k) << " sigma_mu " << io::format_double(model.config.leaf_sd()) << '\n';
  write_posterior(out, model.draws);
}

ProbitModel read_probit_model(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "satclass-probit 1") {
    throw Error(ErrorCategory::Parse, "not a satclass-probit model");
  }
  std::getline(in, line);
  std::istringstream header(line);
  std::string word, name;
  ProbitModel model;
  header >> word;
  if (word != "probit") throw Error(ErrorCategory::Parse, "missing probit header line");
  std::string value;
  header >> name >> value;
  if (name != "binary_offset") throw Error(ErrorCategory::Parse, "expected binary_offset");
  model.config.binary_offset = io::parse_double(value, "binary_offset");
  header >> name >> value;
  if (name != "k") throw Error(ErrorCategory::Parse, "expected k");
  model.config.bart.k = io::parse_double(value, "k");
  model.draws = read_posterior(in);
  model.config.bart.num_trees = model.draws.num_trees();
  model.config.bart.ndpost = static_cast<int>(model.draws.size());
  return model;
}

}  // namespace satclass
