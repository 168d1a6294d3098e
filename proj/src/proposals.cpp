#include "rotbart/proposals.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "rotbart/structural_ops.hpp"

namespace rotbart {

std::string_view to_string(ProposalKind kind) {
  switch (kind) {
    case ProposalKind::kBirth: return "birth";
    case ProposalKind::kDeath: return "death";
    case ProposalKind::kPerturb: return "perturb";
    case ProposalKind::kChangeVar: return "changevar";
    case ProposalKind::kRotate: return "rotate";
  }
  return "?";
}

std::optional<ProposalKind> parse_proposal_kind(std::string_view name) {
  for (int k = 0; k < kProposalKinds; ++k) {
    const auto kind = static_cast<ProposalKind>(k);
    if (to_string(kind) == name) return kind;
  }
  return std::nullopt;
}

double ProposalSettings::alpha_for(int var) const {
  if (!perturb_alpha_by_var.empty()) return perturb_alpha_by_var.at(static_cast<std::size_t>(var));
  return perturb_alpha;
}

CorrelationPreconditioner::CorrelationPreconditioner(std::size_t d, std::vector<double> weights,
                                                     double cutoff)
    : d_(d), w_(std::move(weights)), cutoff_(cutoff) {
  if (w_.size() != d_ * d_) throw std::invalid_argument("preconditioner needs d*d weights");
}

CorrelationPreconditioner build_preconditioner(const Matrix& x, double cutoff) {
  const std::size_t n = x.rows, d = x.cols;
  if (n < 2) throw std::invalid_argument("correlations need at least 2 rows");
  std::vector<double> mean(d, 0.0), sd(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) mean[j] += x(i, j);
  for (auto& m : mean) m /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) sd[j] += (x(i, j) - mean[j]) * (x(i, j) - mean[j]);
  for (auto& s : sd) s = std::sqrt(s);

  std::vector<double> w(d * d, 0.0);
  for (std::size_t a = 0; a < d; ++a) {
    w[a * d + a] = 1.0;
    for (std::size_t b = a + 1; b < d; ++b) {
      if (sd[a] == 0.0 || sd[b] == 0.0) continue;
      double cov = 0.0;
      for (std::size_t i = 0; i < n; ++i) cov += (x(i, a) - mean[a]) * (x(i, b) - mean[b]);
      const double r = std::min(1.0, std::abs(cov / (sd[a] * sd[b])));
      if (r > cutoff) w[a * d + b] = w[b * d + a] = r;
    }
  }
  return CorrelationPreconditioner(d, std::move(w), cutoff);
}

namespace {

std::vector<int> splittable_vars(const RegressionTree& tree, const CutpointGrid& grid, NodeId node) {
  std::vector<int> vars;
  for (std::size_t v = 0; v < grid.dim(); ++v)
    if (!valid_cut_interval(tree, grid, node, static_cast<int>(v)).empty())
      vars.push_back(static_cast<int>(v));
  return vars;
}

// Log integrated likelihood over the subtree at node, without the leaf-size
// check (used for the current state).
double current_il(const RegressionTree& tree, NodeId node, const ProposalContext& ctx) {
  double total = 0.0;
  for (const LeafStats& s : leaf_stats(tree, ctx.grid, ctx.x, ctx.residual, node))
    total += leaf_log_marginal(s, ctx.sigma2, ctx.hyper.sigma_mu);
  return total;
}

bool depth_ok(const RegressionTree& tree, const Hyperparams& hyper) {
  return hyper.max_depth == 0 || tree.depth() <= hyper.max_depth;
}

// Fills the likelihood part and makes the accept decision.
void finish(ProposalOutcome& out, Rng& rng) {
  out.log_ratio = out.delta_log_il + out.log_prior_ratio + out.log_proposal_ratio;
  out.accepted = std::log(rng.uniform()) < out.log_ratio;
}

ProposalOutcome rejected(ProposalKind kind, NodeId node = 0) {
  ProposalOutcome out;
  out.kind = kind;
  out.node = node;
  out.log_ratio = -std::numeric_limits<double>::infinity();
  return out;
}

}  // namespace

std::vector<NodeId> growable_leaves(const RegressionTree& tree, const CutpointGrid& grid,
                                    const Hyperparams& hyper) {
  std::vector<NodeId> out;
  for (NodeId id : leaf_nodes(tree)) {
    if (hyper.max_depth > 0 && depth_of(id) >= hyper.max_depth) continue;
    if (!splittable_vars(tree, grid, id).empty()) out.push_back(id);
  }
  return out;
}

double birth_probability(const RegressionTree& tree, const CutpointGrid& grid,
                         const Hyperparams& hyper) {
  if (tree.root().is_leaf()) return 1.0;
  if (growable_leaves(tree, grid, hyper).empty()) return 0.0;
  return 0.5;
}

std::vector<int> perturb_window(const CutInterval& iv, int c, double alpha) {
  const double half = alpha * static_cast<double>(iv.upper - iv.lower) / 2.0;
  const double lo = std::max(c - half, static_cast<double>(iv.lower));
  const double hi = std::min(c + half, static_cast<double>(iv.upper));
  std::vector<int> pts;
  for (int k = iv.lower + 1; k < iv.upper; ++k)
    if (k != c && lo < k && k < hi) pts.push_back(k);
  return pts;
}

ProposalOutcome propose_birth(const RegressionTree& tree, const ProposalContext& ctx, Rng& rng) {
  const auto grow = growable_leaves(tree, ctx.grid, ctx.hyper);
  if (grow.empty()) return rejected(ProposalKind::kBirth);
  const NodeId leaf = grow[rng.index(grow.size())];
  const auto vars = splittable_vars(tree, ctx.grid, leaf);
  const int v = vars[rng.index(vars.size())];
  const CutInterval iv = valid_cut_interval(tree, ctx.grid, leaf, v);
  const int cut = iv.lower + 1 + static_cast<int>(rng.index(static_cast<std::size_t>(iv.size())));

  ProposalOutcome out = rejected(ProposalKind::kBirth, leaf);
  RegressionTree cand(tree);
  {
    Node* n = cand.find(leaf);
    n->rule = {v, cut};
    n->left = make_leaf(n->mu);
    n->right = make_leaf(n->mu);
  }
  const auto il_new = log_integrated_likelihood(cand, ctx.grid, ctx.x, ctx.residual, ctx.sigma2,
                                                ctx.hyper, leaf);
  if (!il_new) return out;

  out.admissible = true;
  out.delta_log_il = *il_new - current_il(tree, leaf, ctx);
  out.log_prior_ratio = log_full_prior(cand, ctx.grid, ctx.hyper) -
                        log_full_prior(tree, ctx.grid, ctx.hyper);
  const double log_fwd = std::log(birth_probability(tree, ctx.grid, ctx.hyper)) -
                         std::log(static_cast<double>(grow.size())) -
                         std::log(static_cast<double>(vars.size())) -
                         std::log(static_cast<double>(iv.size()));
  const double log_rev = std::log1p(-birth_probability(cand, ctx.grid, ctx.hyper)) -
                         std::log(static_cast<double>(prunable_nodes(cand).size()));
  out.log_proposal_ratio = log_rev - log_fwd;
  out.candidate = std::move(cand);
  finish(out, rng);
  return out;
}

ProposalOutcome propose_death(const RegressionTree& tree, const ProposalContext& ctx, Rng& rng) {
  const auto prunable = prunable_nodes(tree);
  if (prunable.empty()) return rejected(ProposalKind::kDeath);
  const NodeId node = prunable[rng.index(prunable.size())];

  ProposalOutcome out = rejected(ProposalKind::kDeath, node);
  RegressionTree cand(tree);
  {
    Node* n = cand.find(node);
    n->mu = n->left->mu;
    n->left.reset();
    n->right.reset();
  }
  const auto il_new = log_integrated_likelihood(cand, ctx.grid, ctx.x, ctx.residual, ctx.sigma2,
                                                ctx.hyper, node);
  if (!il_new) return out;

  out.admissible = true;
  out.delta_log_il = *il_new - current_il(tree, node, ctx);
  out.log_prior_ratio = log_full_prior(cand, ctx.grid, ctx.hyper) -
                        log_full_prior(tree, ctx.grid, ctx.hyper);
  const int v = tree.find(node)->rule.var;
  const double log_fwd = std::log1p(-birth_probability(tree, ctx.grid, ctx.hyper)) -
                         std::log(static_cast<double>(prunable.size()));
  const double log_rev =
      std::log(birth_probability(cand, ctx.grid, ctx.hyper)) -
      std::log(static_cast<double>(growable_leaves(cand, ctx.grid, ctx.hyper).size())) -
      std::log(static_cast<double>(splittable_vars(cand, ctx.grid, node).size())) -
      std::log(static_cast<double>(valid_cut_interval(cand, ctx.grid, node, v).size()));
  out.log_proposal_ratio = log_rev - log_fwd;
  out.candidate = std::move(cand);
  finish(out, rng);
  return out;
}

ProposalOutcome propose_birth_death(const RegressionTree& tree, const ProposalContext& ctx,
                                    Rng& rng) {
  const double pb = birth_probability(tree, ctx.grid, ctx.hyper);
  if (rng.uniform() < pb) return propose_birth(tree, ctx, rng);
  return propose_death(tree, ctx, rng);
}

ProposalOutcome propose_perturb(const RegressionTree& tree, NodeId node,
                                const ProposalContext& ctx, const ProposalSettings& settings,
                                Rng& rng) {
  ProposalOutcome out = rejected(ProposalKind::kPerturb, node);
  const Node* n = tree.find(node);
  if (!n || n->is_leaf()) return out;
  const SplitRule rule = n->rule;
  const CutInterval iv = valid_cut_interval(tree, ctx.grid, node, rule.var);
  const double alpha = settings.alpha_for(rule.var);
  const auto fwd = perturb_window(iv, rule.cut, alpha);
  if (fwd.empty()) return out;
  const int cut = fwd[rng.index(fwd.size())];
  const auto rev = perturb_window(iv, cut, alpha);

  RegressionTree cand(tree);
  cand.find(node)->rule.cut = cut;

  std::optional<double> new_ll;
  double old_ll = 0.0;
  if (settings.perturb_likelihood == PerturbLikelihood::kIntegrated) {
    new_ll = log_integrated_likelihood(cand, ctx.grid, ctx.x, ctx.residual, ctx.sigma2,
                                       ctx.hyper, node);
    if (new_ll) old_ll = current_il(tree, node, ctx);
  } else {
    new_ll = log_conditional_likelihood(cand, ctx.grid, ctx.x, ctx.residual, ctx.sigma2,
                                        ctx.hyper, node);
    if (new_ll) {
      Hyperparams loose = ctx.hyper;
      loose.min_leaf_n = 0;
      old_ll = *log_conditional_likelihood(tree, ctx.grid, ctx.x, ctx.residual, ctx.sigma2,
                                           loose, node);
    }
  }
  if (!new_ll) return out;

  out.admissible = true;
  out.delta_log_il = *new_ll - old_ll;
  out.log_proposal_ratio =
      std::log(static_cast<double>(fwd.size())) - std::log(static_cast<double>(rev.size()));
  out.candidate = std::move(cand);
  finish(out, rng);
  return out;
}

ProposalOutcome propose_change_var(const RegressionTree& tree, NodeId node,
                                   const ProposalContext& ctx,
                                   const CorrelationPreconditioner& precond, Rng& rng) {
  ProposalOutcome out = rejected(ProposalKind::kChangeVar, node);
  const Node* n = tree.find(node);
  if (!n || n->is_leaf()) return out;
  const int vk = n->rule.var;
  const std::size_t d = ctx.grid.dim();

  std::vector<int> sizes(d);
  for (std::size_t j = 0; j < d; ++j)
    sizes[j] = valid_cut_interval(tree, ctx.grid, node, static_cast<int>(j)).size();
  auto weights_from = [&](int from) {
    std::vector<double> w(d);
    for (std::size_t j = 0; j < d; ++j)
      w[j] = sizes[j] > 0 ? precond(static_cast<std::size_t>(from), j) : 0.0;
    return w;
  };
  const auto w = weights_from(vk);
  double total = 0.0, others = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    total += w[j];
    if (static_cast<int>(j) != vk) others += w[j];
  }
  if (others <= 0.0) return out;

  double u = rng.uniform() * total;
  int vj = vk;
  for (std::size_t j = 0; j < d; ++j) {
    if (w[j] <= 0.0) continue;
    vj = static_cast<int>(j);
    if (u < w[j]) break;
    u -= w[j];
  }
  const CutInterval iv = valid_cut_interval(tree, ctx.grid, node, vj);
  const int cut = iv.lower + 1 + static_cast<int>(rng.index(static_cast<std::size_t>(iv.size())));

  RegressionTree cand(tree);
  cand.find(node)->rule = {vj, cut};
  const auto il_new = log_integrated_likelihood(cand, ctx.grid, ctx.x, ctx.residual, ctx.sigma2,
                                                ctx.hyper, node);
  if (!il_new) return out;

  const auto w_back = weights_from(vj);
  double total_back = 0.0;
  for (double x : w_back) total_back += x;

  out.admissible = true;
  out.delta_log_il = *il_new - current_il(tree, node, ctx);
  out.log_prior_ratio = std::log(static_cast<double>(ctx.grid.usable(vk))) -
                        std::log(static_cast<double>(ctx.grid.usable(vj)));
  const double log_fwd = std::log(w[vj] / total) - std::log(static_cast<double>(sizes[vj]));
  const double log_rev = std::log(w_back[vk] / total_back) - std::log(static_cast<double>(sizes[vk]));
  out.log_proposal_ratio = log_rev - log_fwd;
  out.candidate = std::move(cand);
  finish(out, rng);
  return out;
}

ProposalOutcome propose_rotate(const RegressionTree& tree, const ProposalContext& ctx,
                               const ProposalSettings& settings, Rng& rng) {
  const auto nodes = rotatable_nodes(tree);
  if (nodes.empty()) return rejected(ProposalKind::kRotate);
  const NodeId node = nodes[rng.index(nodes.size())];
  ProposalOutcome out = rejected(ProposalKind::kRotate, node);

  auto prop = propose_rotation(tree, node, rng);
  if (!prop || !depth_ok(prop->tree, ctx.hyper)) return out;
  const NodeId parent = prop->parent;
  const auto il_new = log_integrated_likelihood(prop->tree, ctx.grid, ctx.x, ctx.residual,
                                                ctx.sigma2, ctx.hyper, parent);
  if (!il_new) return out;

  out.admissible = true;
  out.delta_log_il = *il_new - current_il(tree, parent, ctx);
  out.log_prior_ratio = log_full_prior(prop->tree, ctx.grid, ctx.hyper) -
                        log_full_prior(tree, ctx.grid, ctx.hyper);
  if (settings.rotate_ratio == RotateRatio::kExact) {
    out.log_proposal_ratio = std::log(rotation_transition_probability(prop->tree, tree)) -
                             std::log(rotation_transition_probability(tree, prop->tree));
  } else {
    out.log_proposal_ratio = std::log(prop->p_r_inverse * prop->p_s1 * prop->p_s2) -
                             std::log(prop->p_r_forward * prop->p_m1 * prop->p_m2);
  }
  out.candidate = std::move(prop->tree);
  finish(out, rng);
  return out;
}

}  // namespace rotbart
