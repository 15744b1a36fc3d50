#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "satclass/rng.hpp"
#include "satclass/tree.hpp"

namespace satclass {

/// Sum-of-trees sampler settings. Defaults are the ones used for mBACT.
struct BartConfig {
  int num_trees = 200;  ///< m
  double k = 1.0;       ///< leaf shrinkage; larger k shrinks more
  int numcut = 1000;
  int ndpost = 5000;
  int nskip = 100;
  int keepevery = 20;
  /// Noise prior controls, regression only. A NaN sigest means "estimate
  /// from a least-squares fit".
  double sigdf = 3.0;
  double sigquant = 0.90;
  double sigest = std::numeric_limits<double>::quiet_NaN();
  double alpha = 0.95;
  double beta = 2.0;
  std::uint64_t seed = 0;

  void validate() const;
  TreePrior tree_prior() const { return {alpha, beta}; }
  int total_sweeps() const { return nskip + ndpost * keepevery; }
};

/// Leaf prior SD on the [-0.5, 0.5] regression scale: 0.5 / (k sqrt(m)).
double regression_leaf_sd(const BartConfig& config);

/// One posterior state of the ensemble.
struct TreeEnsembleDraw {
  std::vector<Tree> trees;
  double sigma = 1.0;  ///< on the sampler's working scale
};

/// h(x) = sum over trees, on the working scale.
template <typename Derived>
double ensemble_predict(const TreeEnsembleDraw& draw, const Eigen::DenseBase<Derived>& x, const CutpointGrid& grid) {
  double h = 0.0;
  for (const auto& tree : draw.trees) h += tree_predict(tree, x, grid);
  return h;
}

struct PosteriorDraws {
  std::vector<TreeEnsembleDraw> draws;
  CutpointGrid grid;
  /// Regression responses are mapped to [-0.5, 0.5]; y = center + scale * h.
  double response_center = 0.0;
  double response_scale = 1.0;

  Index size() const { return static_cast<Index>(draws.size()); }
  int num_trees() const { return draws.empty() ? 0 : static_cast<int>(draws.front().trees.size()); }
  Index dimension() const { return grid.dimension(); }
  double decode(double h) const { return response_center + response_scale * h; }

  /// S x N matrix of working-scale h^(s)(x_i).
  Eigen::MatrixXd working_predictions(const FeatureMatrix& x) const;
  /// Posterior mean of the decoded regression function at each row.
  Eigen::VectorXd mean_prediction(const FeatureMatrix& x) const;
};

/// Per-leaf sufficient statistics of the partial residuals.
struct LeafStats {
  Index count = 0;
  double sum = 0.0;
};

/// Sum over leaves of log p(residuals | sigma) with the leaf mean integrated
/// against Normal(0, sigma_mu^2), dropping constants shared by all trees:
///   1/2 log(s^2/(s^2 + n t^2)) + t^2 S^2 / (2 s^2 (s^2 + n t^2)).
double leaf_log_marginal(std::span<const LeafStats> leaves, double sigma, double sigma_mu);

/// What a tree update works against.
struct TreeContext {
  const RankedFeatures* ranks = nullptr;
  const CutpointGrid* grid = nullptr;
  TreePrior prior;
  double sigma_mu = 1.0;
};

/// Per-node leaf statistics for every training row (indexed by node id).
std::vector<LeafStats> leaf_statistics(const Tree& tree, const RankedFeatures& ranks, const Eigen::VectorXd& residuals);

enum class TreeMove { Grow, Prune, Change };

struct MhStep {
  Tree tree;
  TreeMove move = TreeMove::Grow;
  bool accepted = false;
};

/// One Metropolis-Hastings update of a tree's structure given partial
/// residuals. Moves: GROW 0.25, PRUNE 0.25, CHANGE 0.5. Proposals that are
/// impossible or that leave a terminal node without training rows are
/// rejected outright. `forced` fixes the move type (used by tests).
MhStep mh_tree_step(const Tree& tree, const TreeContext& context, const Eigen::VectorXd& residuals, double sigma,
                    Rng& rng, std::optional<TreeMove> forced = std::nullopt);

/// Conjugate redraw of every leaf value given the tree structure.
void draw_leaf_values(Tree& tree, const TreeContext& context, const Eigen::VectorXd& residuals, double sigma,
                      Rng& rng);

/// sigma from its scaled-inverse-chi-square posterior, df = sigdf + N.
double draw_sigma(const Eigen::VectorXd& residuals, double sigdf, double lambda, Rng& rng);

/// lambda such that P(sigma < sigest) = sigquant under the prior.
double sigma_prior_scale(double sigest, double sigdf, double sigquant);

/// Quantile of the chi-square distribution.
double chi_square_quantile(double p, double df);

/// SD of least-squares residuals, or SD of y when p >= N.
double estimate_sigest(const FeatureMatrix& x, const Eigen::VectorXd& y);

enum class SamplerMode { Regression, ProbitLatent };

/// Mutable state of one chain. Single-threaded; owns its RNG.
class Sampler {
 public:
  struct Options {
    SamplerMode mode = SamplerMode::Regression;
    double sigma_mu = 1.0;
    double sigma = 1.0;
    double sigdf = 3.0;
    double lambda = 1.0;
  };

  Sampler(const FeatureMatrix& x, CutpointGrid grid, Eigen::VectorXd response, const BartConfig& config,
          const Options& options, Rng rng);

  /// Visits trees 1..m: partial residuals, MH structure step, leaf redraw.
  /// In regression mode sigma is redrawn afterwards.
  void sweep();
  void update_sigma();

  const Eigen::VectorXd& fit() const { return fit_; }
  const Eigen::VectorXd& response() const { return response_; }
  void set_response(Eigen::VectorXd response);
  double sigma() const { return sigma_; }
  const std::vector<Tree>& trees() const { return trees_; }
  const CutpointGrid& grid() const { return grid_; }
  SamplerMode mode() const { return options_.mode; }
  Rng& rng() { return rng_; }

  /// max_i |cached fit - freshly recomputed sum of trees|.
  double fit_cache_error() const;
  TreeEnsembleDraw snapshot() const;

  struct MoveCounts {
    Index grow_accepted = 0;
    Index prune_accepted = 0;
    Index change_accepted = 0;
    Index proposals = 0;
  };
  const MoveCounts& move_counts() const { return counts_; }

 private:
  CutpointGrid grid_;
  RankedFeatures ranks_;
  Eigen::VectorXd response_;
  Options options_;
  TreeContext context_;
  std::vector<Tree> trees_;
  Eigen::MatrixXd tree_fits_;  ///< N x m
  Eigen::VectorXd fit_;
  double sigma_;
  Rng rng_;
  MoveCounts counts_;
};

struct SamplerHooks {
  /// Probit mode: replace the working response given the current fit.
  /// Called once before the first sweep (fit = 0) and after every sweep.
  std::function<void(const Eigen::VectorXd& fit, Eigen::VectorXd& response, Rng& rng)> refresh_response;
  std::function<void(const Sampler& sampler, int sweep)> after_sweep;
};

/// Runs nskip + ndpost * keepevery sweeps and keeps every keepevery-th
/// post-burn-in state. Regression: `y` is the raw response, rescaled to
/// [-0.5, 0.5] internally; sigma_mu = 0.5/(k sqrt m). Probit: `y` holds the
/// 0/1 labels, sigma = 1 and sigma_mu = 3/(k sqrt m), and the hook supplies
/// the latent working response.
PosteriorDraws run_sampler(const FeatureMatrix& x, const Eigen::VectorXd& y, const BartConfig& config,
                           SamplerMode mode, Rng& rng, const SamplerHooks& hooks = {});

/// Versioned line-oriented text format.
void write_posterior(std::ostream& out, const PosteriorDraws& posterior);
PosteriorDraws read_posterior(std::istream& in);

}  // namespace satclass
