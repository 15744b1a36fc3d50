#include "satclass/bart.hpp"

#include <cmath>
#include <limits>

#include <unsupported/Eigen/SpecialFunctions>

namespace satclass {

void BartConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCategory::Config, what); };
  if (num_trees < 1) fail("number of trees must be at least 1");
  if (!(k > 0.0)) fail("k must be positive");
  if (numcut < 1) fail("numcut must be at least 1");
  if (ndpost < 1) fail("ndpost must be at least 1");
  if (nskip < 0) fail("nskip must be non-negative");
  if (keepevery < 1) fail("keepevery must be at least 1");
  if (!(sigdf > 0.0)) fail("sigdf must be positive");
  if (!(sigquant > 0.0 && sigquant < 1.0)) fail("sigquant must lie in (0, 1)");
  if (!std::isnan(sigest) && !(sigest > 0.0)) fail("sigest must be positive");
  if (!(alpha > 0.0 && alpha < 1.0)) fail("alpha must lie in (0, 1)");
  if (!(beta >= 0.0)) fail("beta must be non-negative");
}

double regression_leaf_sd(const BartConfig& config) {
  return 0.5 / (config.k * std::sqrt(static_cast<double>(config.num_trees)));
}

Eigen::MatrixXd PosteriorDraws::working_predictions(const FeatureMatrix& x) const {
  const RankedFeatures ranks = rank_features(x, grid);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(size(), x.rows());
  for (Index s = 0; s < size(); ++s) {
    for (const auto& tree : draws[static_cast<std::size_t>(s)].trees) {
      for (Index i = 0; i < x.rows(); ++i) h(s, i) += tree.node(tree.find_leaf_ranked(&ranks(i, 0))).mu;
    }
  }
  return h;
}

Eigen::VectorXd PosteriorDraws::mean_prediction(const FeatureMatrix& x) const {
  const Eigen::MatrixXd h = working_predictions(x);
  Eigen::VectorXd mean = h.colwise().mean().transpose();
  return (response_center + response_scale * mean.array()).matrix();
}

double leaf_log_marginal(std::span<const LeafStats> leaves, double sigma, double sigma_mu) {
  if (!(sigma > 0.0) || !(sigma_mu > 0.0)) {
    throw Error(ErrorCategory::Range, "leaf_log_marginal: variances must be positive");
  }
  const double s2 = sigma * sigma;
  const double t2 = sigma_mu * sigma_mu;
  double total = 0.0;
  for (const auto& leaf : leaves) {
    const double n = static_cast<double>(leaf.count);
    const double denom = s2 + n * t2;
    total += 0.5 * std::log(s2 / denom) + t2 * leaf.sum * leaf.sum / (2.0 * s2 * denom);
  }
  return total;
}

std::vector<LeafStats> leaf_statistics(const Tree& tree, const RankedFeatures& ranks, const Eigen::VectorXd& residuals) {
  std::vector<LeafStats> stats(static_cast<std::size_t>(tree.size()));
  for (Index i = 0; i < ranks.rows(); ++i) {
    auto& leaf = stats[static_cast<std::size_t>(tree.find_leaf_ranked(&ranks(i, 0)))];
    ++leaf.count;
    leaf.sum += residuals(i);
  }
  return stats;
}

namespace {

int usable_variables(const std::vector<CutRange>& ranges) {
  int usable = 0;
  for (const auto& r : ranges) usable += r.size() > 0 ? 1 : 0;
  return usable;
}

/// Uniform variable among the usable ones, then a uniform cut in its range.
std::pair<int, int> draw_rule(const std::vector<CutRange>& ranges, int usable, Rng& rng) {
  Index pick = rng.uniform_index(usable);
  for (std::size_t v = 0; v < ranges.size(); ++v) {
    if (ranges[v].size() == 0) continue;
    if (pick-- == 0) {
      const int cut = ranges[v].lo + static_cast<int>(rng.uniform_index(ranges[v].size()));
      return {static_cast<int>(v), cut};
    }
  }
  throw Error(ErrorCategory::Data, "draw_rule: no usable variable");
}

int growable_leaf_count(const Tree& tree, const CutpointGrid& grid) {
  int count = 0;
  for (int leaf : tree.leaves()) count += usable_variables(available_cuts(tree, leaf, grid)) > 0 ? 1 : 0;
  return count;
}

double leaves_log_marginal(const Tree& tree, const std::vector<LeafStats>& stats, double sigma, double sigma_mu,
                           bool& has_empty_leaf) {
  std::vector<LeafStats> leaves;
  has_empty_leaf = false;
  for (int id : tree.leaves()) {
    leaves.push_back(stats[static_cast<std::size_t>(id)]);
    if (leaves.back().count == 0) has_empty_leaf = true;
  }
  return leaf_log_marginal(leaves, sigma, sigma_mu);
}

}  // namespace

MhStep mh_tree_step(const Tree& tree, const TreeContext& context, const Eigen::VectorXd& residuals, double sigma,
                    Rng& rng, std::optional<TreeMove> forced) {
  const auto& grid = *context.grid;
  TreeMove move;
  if (forced) {
    move = *forced;
  } else {
    const double u = rng.uniform();
    move = u < 0.25 ? TreeMove::Grow : (u < 0.5 ? TreeMove::Prune : TreeMove::Change);
  }
  MhStep result{tree, move, false};
  Tree proposal = tree;
  double log_q_forward = 0.0;
  double log_q_reverse = 0.0;

  switch (move) {
    case TreeMove::Grow: {
      std::vector<int> growable;
      std::vector<std::vector<CutRange>> ranges;
      for (int leaf : tree.leaves()) {
        auto r = available_cuts(tree, leaf, grid);
        if (usable_variables(r) > 0) {
          growable.push_back(leaf);
          ranges.push_back(std::move(r));
        }
      }
      if (growable.empty()) return result;
      const auto pick = static_cast<std::size_t>(rng.uniform_index(static_cast<Index>(growable.size())));
      const int usable = usable_variables(ranges[pick]);
      const auto [var, cut] = draw_rule(ranges[pick], usable, rng);
      proposal.grow(growable[pick], var, cut);
      log_q_forward = -std::log(static_cast<double>(growable.size())) - std::log(static_cast<double>(usable)) -
                      std::log(static_cast<double>(ranges[pick][static_cast<std::size_t>(var)].size()));
      log_q_reverse = -std::log(static_cast<double>(proposal.prunable_nodes().size()));
      break;
    }
    case TreeMove::Prune: {
      const auto prunable = tree.prunable_nodes();
      if (prunable.empty()) return result;
      const int id = prunable[static_cast<std::size_t>(rng.uniform_index(static_cast<Index>(prunable.size())))];
      const auto ranges = available_cuts(tree, id, grid);
      const int usable = usable_variables(ranges);
      const int var_range = ranges[static_cast<std::size_t>(tree.node(id).var)].size();
      proposal.prune(id);
      log_q_forward = -std::log(static_cast<double>(prunable.size()));
      log_q_reverse = -std::log(static_cast<double>(growable_leaf_count(proposal, grid))) -
                      std::log(static_cast<double>(usable)) - std::log(static_cast<double>(var_range));
      break;
    }
    case TreeMove::Change: {
      const auto internal = tree.internal_nodes();
      if (internal.empty()) return result;
      const int id = internal[static_cast<std::size_t>(rng.uniform_index(static_cast<Index>(internal.size())))];
      const auto ranges = available_cuts(tree, id, grid);
      const int usable = usable_variables(ranges);
      const auto [var, cut] = draw_rule(ranges, usable, rng);
      const int old_range = ranges[static_cast<std::size_t>(tree.node(id).var)].size();
      proposal.set_rule(id, var, cut);
      // The node count and the usable-variable count cancel.
      log_q_forward = -std::log(static_cast<double>(ranges[static_cast<std::size_t>(var)].size()));
      log_q_reverse = -std::log(static_cast<double>(old_range));
      break;
    }
  }

  const double prior_new = log_tree_structure_prior(proposal, grid, context.prior);
  if (!std::isfinite(prior_new)) return result;
  const double prior_old = log_tree_structure_prior(tree, grid, context.prior);

  bool empty_new = false;
  bool empty_old = false;
  const double lik_new = leaves_log_marginal(proposal, leaf_statistics(proposal, *context.ranks, residuals), sigma,
                                             context.sigma_mu, empty_new);
  if (empty_new) return result;
  const double lik_old = leaves_log_marginal(tree, leaf_statistics(tree, *context.ranks, residuals), sigma,
                                             context.sigma_mu, empty_old);

  const double log_ratio = (prior_new - prior_old) + (lik_new - lik_old) + (log_q_reverse - log_q_forward);
  if (std::log(rng.uniform()) < log_ratio) {
    result.tree = std::move(proposal);
    result.accepted = true;
  }
  return result;
}

void draw_leaf_values(Tree& tree, const TreeContext& context, const Eigen::VectorXd& residuals, double sigma,
                      Rng& rng) {
  if (!(sigma > 0.0) || !(context.sigma_mu > 0.0)) {
    throw Error(ErrorCategory::Range, "draw_leaf_values: variances must be positive");
  }
  const auto stats = leaf_statistics(tree, *context.ranks, residuals);
  const double s2 = sigma * sigma;
  const double t2 = context.sigma_mu * context.sigma_mu;
  for (int id : tree.leaves()) {
    const auto& leaf = stats[static_cast<std::size_t>(id)];
    const double denom = s2 + static_cast<double>(leaf.count) * t2;
    const double mean = t2 * leaf.sum / denom;
    const double sd = std::sqrt(s2 * t2 / denom);
    tree.node(id).mu = rng.normal(mean, sd);
  }
}

double draw_sigma(const Eigen::VectorXd& residuals, double sigdf, double lambda, Rng& rng) {
  const double df = sigdf + static_cast<double>(residuals.size());
  const double scale = sigdf * lambda + residuals.squaredNorm();
  return std::sqrt(scale / rng.chi_square(df));
}

double chi_square_quantile(double p, double df) {
  if (!(p > 0.0 && p < 1.0) || !(df > 0.0)) throw Error(ErrorCategory::Range, "chi_square_quantile: bad arguments");
  auto cdf = [&](double x) { return Eigen::numext::igamma(0.5 * df, 0.5 * x); };
  double lo = 0.0;
  double hi = std::max(1.0, df);
  while (cdf(hi) < p) hi *= 2.0;
  for (int iter = 0; iter < 200 && hi - lo > 1e-15 * hi; ++iter) {
    const double mid = 0.5 * (lo + hi);
    (cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double sigma_prior_scale(double sigest, double sigdf, double sigquant) {
  return sigest * sigest * chi_square_quantile(1.0 - sigquant, sigdf) / sigdf;
}

double estimate_sigest(const FeatureMatrix& x, const Eigen::VectorXd& y) {
  const Index n = x.rows();
  const Index p = x.cols();
  auto sd = [&]() {
    if (n < 2) return 0.0;
    return std::sqrt((y.array() - y.mean()).square().sum() / static_cast<double>(n - 1));
  };
  if (p + 1 >= n) return sd();
  Eigen::MatrixXd design(n, p + 1);
  design.col(0).setOnes();
  design.rightCols(p) = x;
  const Eigen::VectorXd coef = design.colPivHouseholderQr().solve(y);
  const Eigen::VectorXd resid = y - design * coef;
  return std::sqrt(resid.squaredNorm() / static_cast<double>(n - p - 1));
}

Sampler::Sampler(const FeatureMatrix& x, CutpointGrid grid, Eigen::VectorXd response, const BartConfig& config,
                 const Options& options, Rng rng)
    : grid_(std::move(grid)),
      ranks_(rank_features(x, grid_)),
      response_(std::move(response)),
      options_(options),
      trees_(static_cast<std::size_t>(config.num_trees)),
      tree_fits_(Eigen::MatrixXd::Zero(x.rows(), config.num_trees)),
      fit_(Eigen::VectorXd::Zero(x.rows())),
      sigma_(options.sigma),
      rng_(rng) {
  if (response_.size() != x.rows()) throw Error(ErrorCategory::Dimension, "response length does not match rows");
  context_.prior = config.tree_prior();
  context_.sigma_mu = options.sigma_mu;
}

void Sampler::set_response(Eigen::VectorXd response) {
  if (response.size() != response_.size()) throw Error(ErrorCategory::Dimension, "response length changed");
  response_ = std::move(response);
}

void Sampler::sweep() {
  context_.ranks = &ranks_;
  context_.grid = &grid_;
  Eigen::VectorXd residual(fit_.size());
  for (std::size_t j = 0; j < trees_.size(); ++j) {
    const auto col = static_cast<Index>(j);
    residual = response_ - fit_ + tree_fits_.col(col);
    auto step = mh_tree_step(trees_[j], context_, residual, sigma_, rng_);
    ++counts_.proposals;
    if (step.accepted) {
      switch (step.move) {
        case TreeMove::Grow: ++counts_.grow_accepted; break;
        case TreeMove::Prune: ++counts_.prune_accepted; break;
        case TreeMove::Change: ++counts_.change_accepted; break;
      }
    }
    trees_[j] = std::move(step.tree);
    draw_leaf_values(trees_[j], context_, residual, sigma_, rng_);
    const Tree& tree = trees_[j];
    for (Index i = 0; i < fit_.size(); ++i) {
      const double value = tree.node(tree.find_leaf_ranked(&ranks_(i, 0))).mu;
      fit_(i) += value - tree_fits_(i, col);
      tree_fits_(i, col) = value;
    }
  }
  if (options_.mode == SamplerMode::Regression) update_sigma();
}

void Sampler::update_sigma() {
  if (options_.mode != SamplerMode::Regression) {
    throw Error(ErrorCategory::Config, "sigma is fixed at 1 in probit mode");
  }
  sigma_ = draw_sigma(response_ - fit_, options_.sigdf, options_.lambda, rng_);
}

double Sampler::fit_cache_error() const {
  double worst = 0.0;
  for (Index i = 0; i < fit_.size(); ++i) {
    double h = 0.0;
    for (const auto& tree : trees_) h += tree.node(tree.find_leaf_ranked(&ranks_(i, 0))).mu;
    worst = std::max(worst, std::abs(h - fit_(i)));
  }
  return worst;
}

TreeEnsembleDraw Sampler::snapshot() const { return {trees_, sigma_}; }

PosteriorDraws run_sampler(const FeatureMatrix& x, const Eigen::VectorXd& y, const BartConfig& config,
                           SamplerMode mode, Rng& rng, const SamplerHooks& hooks) {
  config.validate();
  if (x.rows() < 1) throw Error(ErrorCategory::Data, "sampler needs at least one training row");
  if (y.size() != x.rows()) throw Error(ErrorCategory::Dimension, "response length does not match rows");

  PosteriorDraws posterior;
  posterior.grid = build_cutpoints(x, config.numcut);
  Sampler::Options options;
  options.mode = mode;
  Eigen::VectorXd working;
  const double root_m = std::sqrt(static_cast<double>(config.num_trees));

  if (mode == SamplerMode::Regression) {
    const double lo = y.minCoeff();
    const double hi = y.maxCoeff();
    posterior.response_center = 0.5 * (lo + hi);
    posterior.response_scale = hi > lo ? hi - lo : 1.0;
    working = (y.array() - posterior.response_center) / posterior.response_scale;
    const double sigest = std::isnan(config.sigest) ? estimate_sigest(x, y) : config.sigest;
    double working_sigest = sigest / posterior.response_scale;
    if (!(working_sigest > 0.0)) working_sigest = 0.01;
    options.sigma_mu = regression_leaf_sd(config);
    options.sigma = working_sigest;
    options.sigdf = config.sigdf;
    options.lambda = sigma_prior_scale(working_sigest, config.sigdf, config.sigquant);
  } else {
    if (!hooks.refresh_response) throw Error(ErrorCategory::Config, "probit mode needs a latent refresh hook");
    options.sigma_mu = 3.0 / (config.k * root_m);
    options.sigma = 1.0;
    working = y;
    hooks.refresh_response(Eigen::VectorXd::Zero(y.size()), working, rng);
  }

  Sampler sampler(x, posterior.grid, std::move(working), config, options, rng);
  posterior.draws.reserve(static_cast<std::size_t>(config.ndpost));
  const int total = config.total_sweeps();
  for (int sweep = 0; sweep < total; ++sweep) {
    sampler.sweep();
    if (mode == SamplerMode::ProbitLatent) {
      Eigen::VectorXd latent = sampler.response();
      hooks.refresh_response(sampler.fit(), latent, sampler.rng());
      sampler.set_response(std::move(latent));
    }
    if (hooks.after_sweep) hooks.after_sweep(sampler, sweep);
    if (sweep >= config.nskip && (sweep - config.nskip + 1) % config.keepevery == 0) {
      posterior.draws.push_back(sampler.snapshot());
    }
  }
  rng = sampler.rng();
  return posterior;
}

}  // namespace satclass
