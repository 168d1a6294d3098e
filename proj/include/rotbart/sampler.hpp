#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rotbart/model.hpp"
#include "rotbart/proposals.hpp"

namespace rotbart {

// Chain settings. The text form is one `key = value` per line; keys are the
// field names below, `#` starts a comment.
struct RunConfig {
  int burnin = 1000;
  int keep = 1000;
  int thin = 1;

  // proposal mixture; birth/death share one weight
  double w_birth_death = 0.5;
  double w_perturb = 0.2;
  double w_changevar = 0.1;
  double w_rotate = 0.2;

  int m = 200;
  double split_alpha = 0.95;
  double split_beta = 2.0;
  double k = 2.0;
  double nu = 3.0;
  double sigma_quantile = 0.9;
  std::optional<double> sigma_mu;  // overrides the k-based default
  std::optional<double> lambda;    // overrides the quantile-based default
  int min_leaf_n = 5;
  int max_depth = 0;

  int cutpoints = 100;  // grid points per variable, ends included
  double perturb_alpha = 0.85;
  std::string perturb_likelihood = "integrated";  // or "conditional"
  std::string rotate_ratio = "exact";             // or "listing"
  double changevar_cutoff = 0.30;

  std::uint64_t seed = 1;
  bool keep_trees = true;
  bool check_invariants = false;  // verify caches and leaf sizes every sweep

  void validate() const;
  static RunConfig parse(std::string_view text);
  static RunConfig load(const std::string& path);
  // Applies one key/value pair; throws std::invalid_argument on unknown keys.
  void set(std::string_view key, std::string_view value);
  std::string to_text() const;

  ProposalSettings proposal_settings() const;
  CutpointGrid grid(std::size_t dim) const;
};

Hyperparams make_hyperparams(const RunConfig& config, const ScaledData& data);

struct TraceEntry {
  int iter = 0;
  int tree = 0;
  ProposalKind kind = ProposalKind::kBirth;
  bool admissible = false;
  bool accepted = false;
  double delta_log_il = 0.0;
};

struct ChainResult {
  std::uint64_t seed = 0;
  int burnin = 0;
  Hyperparams hyper;
  std::vector<TraceEntry> trace;
  std::vector<double> sigma2;                     // per kept draw, scaled units
  std::vector<std::vector<double>> predictions;   // per kept draw, scaled units
  std::vector<std::vector<std::string>> trees;    // per kept draw, canonical text
  SumOfTreesState final_state;
};

// `points` are prediction inputs already on the unit scale. `init` replaces
// the all-leaf starting forest.
ChainResult run_chain(const RunConfig& config, const ScaledData& data, const Matrix& points,
                      const SumOfTreesState* init = nullptr);

// k chains seeded config.seed, config.seed + 1, ...; chain 0 equals run_chain.
std::vector<ChainResult> run_replicated(const RunConfig& config, const ScaledData& data,
                                        const Matrix& points, int chains, bool parallel = true);

}  // namespace rotbart
