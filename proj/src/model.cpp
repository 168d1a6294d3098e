#include "rotbart/model.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace rotbart {

void Hyperparams::validate() const {
  if (m < 1) throw std::invalid_argument("m must be >= 1");
  if (!(split_alpha > 0.0 && split_alpha < 1.0))
    throw std::invalid_argument("split_alpha must lie in (0,1)");
  if (split_beta < 0.0) throw std::invalid_argument("split_beta must be >= 0");
  if (!(sigma_mu > 0.0)) throw std::invalid_argument("sigma_mu must be > 0");
  if (!(nu > 0.0)) throw std::invalid_argument("nu must be > 0");
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be > 0");
  if (min_leaf_n < 1) throw std::invalid_argument("min_leaf_n must be >= 1");
  if (max_depth < 0) throw std::invalid_argument("max_depth must be >= 0");
}

Hyperparams default_hyperparams(int m, double sigma_hat2, double k, double nu, double quantile) {
  Hyperparams h;
  h.m = m;
  h.sigma_mu = 0.5 / (k * std::sqrt(static_cast<double>(m)));
  h.nu = nu;
  // P(sigma^2 < sigma_hat2) = quantile  <=>  nu lambda / sigma_hat2 = chi2_nu^{-1}(1 - quantile)
  const boost::math::chi_squared chi(nu);
  h.lambda = sigma_hat2 * boost::math::quantile(chi, 1.0 - quantile) / nu;
  return h;
}

double ScaledData::scale_x(std::size_t col, double v) const {
  const double range = x_max[col] - x_min[col];
  if (range <= 0.0) return 0.5;
  return (v - x_min[col]) / range;
}

namespace {

double split_probability(int depth, const Hyperparams& h) {
  return h.split_alpha * std::pow(1.0 + depth, -h.split_beta);
}

void stats_rec(const Node& node, const CutpointGrid& grid, const Matrix& x,
               std::span<const double> residual, std::vector<std::size_t>& idx,
               std::vector<LeafStats>& out) {
  if (node.is_leaf()) {
    LeafStats s;
    for (std::size_t i : idx) {
      ++s.n;
      s.sum += residual[i];
      s.sum_sq += residual[i] * residual[i];
    }
    out.push_back(s);
    return;
  }
  const double c = grid.value(node.rule.var, node.rule.cut);
  std::vector<std::size_t> left, right;
  left.reserve(idx.size());
  right.reserve(idx.size());
  for (std::size_t i : idx) (x(i, node.rule.var) < c ? left : right).push_back(i);
  idx.clear();
  idx.shrink_to_fit();
  stats_rec(*node.left, grid, x, residual, left, out);
  stats_rec(*node.right, grid, x, residual, right, out);
}

// Observations that reach `node`, in index order.
std::vector<std::size_t> route_to(const RegressionTree& tree, const CutpointGrid& grid,
                                  const Matrix& x, NodeId node) {
  std::vector<std::size_t> idx;
  idx.reserve(x.rows);
  const int depth = depth_of(node);
  for (std::size_t i = 0; i < x.rows; ++i) {
    const Node* cur = &tree.root();
    bool reaches = true;
    for (int level = depth - 1; level >= 0; --level) {
      const bool go_right = (node >> level) & 1u;
      const bool is_right = !(x(i, cur->rule.var) < grid.value(cur->rule.var, cur->rule.cut));
      if (go_right != is_right) {
        reaches = false;
        break;
      }
      cur = go_right ? cur->right.get() : cur->left.get();
    }
    if (reaches) idx.push_back(i);
  }
  return idx;
}

template <typename Fn>
void for_each_leaf_with_rows(const Node& node, const CutpointGrid& grid, const Matrix& x,
                             std::vector<std::size_t> idx, Fn&& fn) {
  if (node.is_leaf()) {
    fn(node, idx);
    return;
  }
  const double c = grid.value(node.rule.var, node.rule.cut);
  std::vector<std::size_t> left, right;
  for (std::size_t i : idx) (x(i, node.rule.var) < c ? left : right).push_back(i);
  for_each_leaf_with_rows(*node.left, grid, x, std::move(left), fn);
  for_each_leaf_with_rows(*node.right, grid, x, std::move(right), fn);
}

}  // namespace

double log_tree_prior(const Node& node, int depth, const Hyperparams& hyper) {
  const double p = split_probability(depth, hyper);
  if (node.is_leaf()) return std::log1p(-p);
  return std::log(p) + log_tree_prior(*node.left, depth + 1, hyper) +
         log_tree_prior(*node.right, depth + 1, hyper);
}

double log_tree_prior(const RegressionTree& tree, const Hyperparams& hyper) {
  return log_tree_prior(tree.root(), 0, hyper);
}

double log_rule_prior(const RegressionTree& tree, const CutpointGrid& grid) {
  double lp = 0.0;
  const double log_d = std::log(static_cast<double>(grid.dim()));
  for (NodeId id : internal_nodes(tree)) {
    const int var = tree.find(id)->rule.var;
    lp -= log_d + std::log(static_cast<double>(grid.usable(var)));
  }
  return lp;
}

double log_full_prior(const RegressionTree& tree, const CutpointGrid& grid,
                      const Hyperparams& hyper) {
  return log_tree_prior(tree, hyper) + log_rule_prior(tree, grid);
}

std::vector<LeafStats> leaf_stats(const RegressionTree& tree, const CutpointGrid& grid,
                                  const Matrix& x, std::span<const double> residual,
                                  NodeId node) {
  std::vector<std::size_t> idx;
  if (node == kRootId) {
    idx.resize(x.rows);
    for (std::size_t i = 0; i < x.rows; ++i) idx[i] = i;
  } else {
    idx = route_to(tree, grid, x, node);
  }
  std::vector<LeafStats> out;
  stats_rec(*tree.find(node), grid, x, residual, idx, out);
  return out;
}

double leaf_log_marginal(const LeafStats& s, double sigma2, double sigma_mu) {
  const double n = static_cast<double>(s.n);
  const double tau2 = sigma_mu * sigma_mu;
  const double denom = sigma2 + n * tau2;
  return -0.5 * n * std::log(2.0 * std::numbers::pi * sigma2) + 0.5 * std::log(sigma2 / denom) -
         0.5 * (s.sum_sq / sigma2 - tau2 * s.sum * s.sum / (sigma2 * denom));
}

std::optional<double> log_integrated_likelihood(const RegressionTree& tree,
                                                const CutpointGrid& grid, const Matrix& x,
                                                std::span<const double> residual, double sigma2,
                                                const Hyperparams& hyper, NodeId node) {
  double total = 0.0;
  for (const LeafStats& s : leaf_stats(tree, grid, x, residual, node)) {
    if (s.n < static_cast<std::size_t>(hyper.min_leaf_n)) return std::nullopt;
    total += leaf_log_marginal(s, sigma2, hyper.sigma_mu);
  }
  return total;
}

std::optional<double> log_conditional_likelihood(const RegressionTree& tree,
                                                 const CutpointGrid& grid, const Matrix& x,
                                                 std::span<const double> residual, double sigma2,
                                                 const Hyperparams& hyper, NodeId node) {
  std::vector<std::size_t> idx = route_to(tree, grid, x, node);
  double total = 0.0;
  bool ok = true;
  const double log_norm = -0.5 * std::log(2.0 * std::numbers::pi * sigma2);
  for_each_leaf_with_rows(*tree.find(node), grid, x, std::move(idx),
                          [&](const Node& leaf, const std::vector<std::size_t>& rows) {
                            if (rows.size() < static_cast<std::size_t>(hyper.min_leaf_n))
                              ok = false;
                            for (std::size_t i : rows) {
                              const double e = residual[i] - leaf.mu;
                              total += log_norm - 0.5 * e * e / sigma2;
                            }
                          });
  if (!ok) return std::nullopt;
  return total;
}

LeafPosterior leaf_posterior(const LeafStats& s, double sigma2, double sigma_mu) {
  const double precision = static_cast<double>(s.n) / sigma2 + 1.0 / (sigma_mu * sigma_mu);
  return {(s.sum / sigma2) / precision, 1.0 / precision};
}

void draw_leaf_mus(RegressionTree& tree, const CutpointGrid& grid, const Matrix& x,
                   std::span<const double> residual, double sigma2, const Hyperparams& hyper,
                   Rng& rng) {
  const auto stats = leaf_stats(tree, grid, x, residual);
  std::size_t k = 0;
  for (NodeId id : leaf_nodes(tree)) {
    const LeafPosterior post = leaf_posterior(stats[k++], sigma2, hyper.sigma_mu);
    tree.find(id)->mu = rng.normal(post.mean, std::sqrt(post.variance));
  }
}

double draw_sigma2(std::span<const double> residual, const Hyperparams& hyper, Rng& rng) {
  double ss = 0.0;
  for (double r : residual) ss += r * r;
  const double dof = hyper.nu + static_cast<double>(residual.size());
  return (hyper.nu * hyper.lambda + ss) / rng.chi_squared(dof);
}

ForestFit::ForestFit(const SumOfTreesState& state, const CutpointGrid& grid, const Matrix& x)
    : fits_(state.trees.size(), std::vector<double>(x.rows, 0.0)), total_(x.rows, 0.0) {
  for (std::size_t j = 0; j < state.trees.size(); ++j) {
    for (std::size_t i = 0; i < x.rows; ++i) {
      fits_[j][i] = evaluate(state.trees[j], grid, x.row(i));
      total_[i] += fits_[j][i];
    }
  }
}

std::vector<double> ForestFit::residual_targets(std::span<const double> y, std::size_t j) const {
  std::vector<double> r(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) r[i] = y[i] - (total_[i] - fits_[j][i]);
  return r;
}

std::vector<double> ForestFit::residuals(std::span<const double> y) const {
  std::vector<double> r(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) r[i] = y[i] - total_[i];
  return r;
}

void ForestFit::update_tree(std::size_t j, const RegressionTree& tree, const CutpointGrid& grid,
                            const Matrix& x) {
  for (std::size_t i = 0; i < x.rows; ++i) {
    const double v = evaluate(tree, grid, x.row(i));
    total_[i] += v - fits_[j][i];
    fits_[j][i] = v;
  }
}

}  // namespace rotbart
