#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rotbart/sampler.hpp"

namespace rotbart {

// Iterations [begin, end); an unset end runs to the last iteration.
struct IterWindow {
  int begin = 0;
  std::optional<int> end;
  bool contains(int iter) const { return iter >= begin && (!end || iter < *end); }
};

// Accepted / proposed over entries whose kind is in `kinds` (all kinds when
// empty). Absent when nothing matches.
std::optional<double> acceptance_rate(std::span<const TraceEntry> trace,
                                      std::span<const ProposalKind> kinds, IterWindow window);
// Same, restricted to the post-burn-in part of a chain.
std::optional<double> acceptance_rate(const ChainResult& chain,
                                      std::span<const ProposalKind> kinds = {});

// Birth, death, rotate: the moves that change the tree's shape.
inline constexpr ProposalKind kStructuralKinds[] = {ProposalKind::kBirth, ProposalKind::kDeath,
                                                    ProposalKind::kRotate};

std::vector<double> delta_logil_trace(std::span<const TraceEntry> trace,
                                      std::optional<ProposalKind> kind = std::nullopt);

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
  bool contains(double v) const { return lower <= v && v <= upper; }
};

// Equal-tailed interval from empirical quantiles (linear interpolation
// between order statistics). Needs at least 20 draws.
Interval predictive_interval(std::span<const double> draws, double level);
double empirical_quantile(std::vector<double> draws, double q);

struct PointSummary {
  double lower = 0.0;
  double mean = 0.0;
  double upper = 0.0;
};

// Per prediction point, on the raw response scale. Chains are pooled.
std::vector<PointSummary> summarize_predictions(std::span<const ChainResult> chains,
                                                const ScaledData& scaling, double level);

double empirical_coverage(std::span<const PointSummary> intervals, std::span<const double> truth);
double empirical_coverage(std::span<const Interval> intervals, std::span<const double> truth);

// Distinct tree structures (leaf values stripped) with visit counts, pooled
// over every tree of every draw; most visited first, ties by text.
using Census = std::vector<std::pair<std::string, std::size_t>>;
Census tree_census(const std::vector<std::vector<std::string>>& draws);
// Root split variable (0-based) of a canonical structure; absent for a leaf.
std::optional<int> root_variable(const std::string& canonical);

struct KindSummary {
  ProposalKind kind;
  std::size_t proposed = 0;
  std::size_t admissible = 0;
  std::size_t accepted = 0;
};
std::vector<KindSummary> acceptance_summary(std::span<const TraceEntry> trace, IterWindow window);

std::string traces_csv(std::span<const TraceEntry> trace);
std::string intervals_csv(std::span<const PointSummary> summary,
                          const std::optional<std::vector<double>>& truth);
std::string census_csv(const Census& census);
std::string acceptance_csv(std::span<const KindSummary> summary);

void write_text(const std::string& path, const std::string& text);

}  // namespace rotbart
