#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "rotbart/model.hpp"
#include "rotbart/rng.hpp"
#include "rotbart/tree.hpp"

namespace rotbart {

enum class ProposalKind { kBirth, kDeath, kPerturb, kChangeVar, kRotate };
inline constexpr int kProposalKinds = 5;

std::string_view to_string(ProposalKind kind);
std::optional<ProposalKind> parse_proposal_kind(std::string_view name);

struct ProposalOutcome {
  ProposalKind kind = ProposalKind::kBirth;
  bool admissible = false;  // a candidate was built and every leaf holds enough data
  bool accepted = false;
  NodeId node = 0;
  // log-ratio components; log_ratio is their sum
  double delta_log_il = 0.0;
  double log_prior_ratio = 0.0;
  double log_proposal_ratio = 0.0;
  double log_ratio = 0.0;
  std::optional<RegressionTree> candidate;
};

// Everything a kernel reads besides the tree itself. `residual` is the
// partial residual the tree is fit to.
struct ProposalContext {
  const CutpointGrid& grid;
  const Matrix& x;
  std::span<const double> residual;
  double sigma2;
  const Hyperparams& hyper;
};

enum class PerturbLikelihood { kIntegrated, kConditional };
enum class RotateRatio { kExact, kListing };

struct ProposalSettings {
  double perturb_alpha = 0.85;
  std::vector<double> perturb_alpha_by_var;  // overrides perturb_alpha when set
  PerturbLikelihood perturb_likelihood = PerturbLikelihood::kIntegrated;
  RotateRatio rotate_ratio = RotateRatio::kExact;

  double alpha_for(int var) const;
};

// |sample correlation| with entries at or below the cutoff set to 0 and a
// unit diagonal.
class CorrelationPreconditioner {
 public:
  CorrelationPreconditioner() = default;
  CorrelationPreconditioner(std::size_t d, std::vector<double> weights, double cutoff);

  std::size_t dim() const { return d_; }
  double cutoff() const { return cutoff_; }
  double operator()(std::size_t i, std::size_t j) const { return w_[i * d_ + j]; }

 private:
  std::size_t d_ = 0;
  std::vector<double> w_;
  double cutoff_ = 0.0;
};

CorrelationPreconditioner build_preconditioner(const Matrix& x, double cutoff = 0.30);

// Leaves that can be split: depth below the limit and some variable with a
// usable cutpoint there.
std::vector<NodeId> growable_leaves(const RegressionTree& tree, const CutpointGrid& grid,
                                    const Hyperparams& hyper);
// Probability of choosing birth (rather than death) in tree.
double birth_probability(const RegressionTree& tree, const CutpointGrid& grid,
                         const Hyperparams& hyper);

// Grid points a perturb may move to from cutpoint c inside interval iv.
std::vector<int> perturb_window(const CutInterval& iv, int c, double alpha);

ProposalOutcome propose_birth(const RegressionTree& tree, const ProposalContext& ctx, Rng& rng);
ProposalOutcome propose_death(const RegressionTree& tree, const ProposalContext& ctx, Rng& rng);
// Birth or death with probability birth_probability, falling back when one
// side is infeasible.
ProposalOutcome propose_birth_death(const RegressionTree& tree, const ProposalContext& ctx,
                                    Rng& rng);
ProposalOutcome propose_perturb(const RegressionTree& tree, NodeId node,
                                const ProposalContext& ctx, const ProposalSettings& settings,
                                Rng& rng);
ProposalOutcome propose_change_var(const RegressionTree& tree, NodeId node,
                                   const ProposalContext& ctx,
                                   const CorrelationPreconditioner& precond, Rng& rng);
ProposalOutcome propose_rotate(const RegressionTree& tree, const ProposalContext& ctx,
                               const ProposalSettings& settings, Rng& rng);

}  // namespace rotbart
