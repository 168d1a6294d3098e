#pragma once

#include <optional>
#include <span>
#include <vector>

#include "rotbart/rng.hpp"
#include "rotbart/tree.hpp"

namespace rotbart {

struct Hyperparams {
  int m = 200;
  double split_alpha = 0.95;
  double split_beta = 2.0;
  double sigma_mu = 0.5 / (2.0 * 14.142135623730951);  // 0.5 / (k sqrt(m)), k = 2
  double nu = 3.0;
  double lambda = 0.1;
  int min_leaf_n = 5;
  int max_depth = 0;  // 0 means unbounded

  void validate() const;
};

// BART defaults on a response scaled to [-0.5, 0.5]: sigma_mu = 0.5/(k sqrt(m))
// and lambda placing `quantile` of the sigma^2 prior below sigma_hat2.
Hyperparams default_hyperparams(int m, double sigma_hat2, double k = 2.0, double nu = 3.0,
                                double quantile = 0.9);

struct ScaledData {
  Matrix x;                // n x d in [0,1]
  std::vector<double> y;   // scaled to [-0.5, 0.5]
  std::vector<double> x_min, x_max;
  double y_min = 0.0;
  double y_max = 1.0;

  std::size_t n() const { return x.rows; }
  std::size_t d() const { return x.cols; }
  double y_scale() const { return y_max - y_min; }
  double unscale_y(double v) const { return (v + 0.5) * y_scale() + y_min; }
  double scale_y(double v) const { return (v - y_min) / y_scale() - 0.5; }
  double scale_x(std::size_t col, double v) const;
};

struct LeafStats {
  std::size_t n = 0;
  double sum = 0.0;
  double sum_sq = 0.0;
};

// Log prior of the tree shape under the depth penalty alpha (1 + depth)^-beta.
double log_tree_prior(const RegressionTree& tree, const Hyperparams& hyper);
double log_tree_prior(const Node& node, int depth, const Hyperparams& hyper);
// Uniform variable choice, then uniform over that variable's usable cutpoints.
double log_rule_prior(const RegressionTree& tree, const CutpointGrid& grid);
double log_full_prior(const RegressionTree& tree, const CutpointGrid& grid,
                      const Hyperparams& hyper);

// Per-leaf sufficient statistics of the residuals routed into the subtree at
// `node`, leaves in pre-order.
std::vector<LeafStats> leaf_stats(const RegressionTree& tree, const CutpointGrid& grid,
                                  const Matrix& x, std::span<const double> residual,
                                  NodeId node = kRootId);

// Closed-form log of  integral prod_i N(r_i; mu, sigma2) N(mu; 0, sigma_mu^2) dmu.
double leaf_log_marginal(const LeafStats& s, double sigma2, double sigma_mu);

// Sum of leaf log marginals over the subtree at `node`. Returns nullopt when
// some leaf holds fewer than min_leaf_n observations.
std::optional<double> log_integrated_likelihood(const RegressionTree& tree,
                                                const CutpointGrid& grid, const Matrix& x,
                                                std::span<const double> residual, double sigma2,
                                                const Hyperparams& hyper, NodeId node = kRootId);

// Gaussian log likelihood of the residuals given the tree's current leaf values.
std::optional<double> log_conditional_likelihood(const RegressionTree& tree,
                                                 const CutpointGrid& grid, const Matrix& x,
                                                 std::span<const double> residual, double sigma2,
                                                 const Hyperparams& hyper,
                                                 NodeId node = kRootId);

struct LeafPosterior {
  double mean = 0.0;
  double variance = 0.0;
};
LeafPosterior leaf_posterior(const LeafStats& s, double sigma2, double sigma_mu);

void draw_leaf_mus(RegressionTree& tree, const CutpointGrid& grid, const Matrix& x,
                   std::span<const double> residual, double sigma2, const Hyperparams& hyper,
                   Rng& rng);

// Scaled-inverse-chi^2(nu + n, (nu lambda + sum r^2) / (nu + n)).
double draw_sigma2(std::span<const double> residual, const Hyperparams& hyper, Rng& rng);

struct SumOfTreesState {
  std::vector<RegressionTree> trees;
  double sigma2 = 1.0;
};

// Cached per-tree fits for Bayesian backfitting.
class ForestFit {
 public:
  ForestFit(const SumOfTreesState& state, const CutpointGrid& grid, const Matrix& x);

  // y - sum_{k != j} g(x; T_k).
  std::vector<double> residual_targets(std::span<const double> y, std::size_t j) const;
  // Full-model residual y - sum_k g(x; T_k).
  std::vector<double> residuals(std::span<const double> y) const;
  void update_tree(std::size_t j, const RegressionTree& tree, const CutpointGrid& grid,
                   const Matrix& x);

  std::span<const double> total() const { return total_; }
  std::span<const double> tree_fit(std::size_t j) const { return fits_[j]; }

 private:
  std::vector<std::vector<double>> fits_;
  std::vector<double> total_;
};

}  // namespace rotbart
