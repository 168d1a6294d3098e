#include "rotbart/diagnostics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>

namespace rotbart {

namespace {

bool kind_matches(std::span<const ProposalKind> kinds, ProposalKind k) {
  return kinds.empty() || std::find(kinds.begin(), kinds.end(), k) != kinds.end();
}

std::string fmt(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

std::optional<double> acceptance_rate(std::span<const TraceEntry> trace,
                                      std::span<const ProposalKind> kinds, IterWindow window) {
  std::size_t proposed = 0, accepted = 0;
  for (const auto& e : trace) {
    if (!window.contains(e.iter) || !kind_matches(kinds, e.kind)) continue;
    ++proposed;
    accepted += e.accepted;
  }
  if (proposed == 0) return std::nullopt;
  return static_cast<double>(accepted) / static_cast<double>(proposed);
}

std::optional<double> acceptance_rate(const ChainResult& chain,
                                      std::span<const ProposalKind> kinds) {
  return acceptance_rate(chain.trace, kinds, IterWindow{chain.burnin, std::nullopt});
}

std::vector<double> delta_logil_trace(std::span<const TraceEntry> trace,
                                      std::optional<ProposalKind> kind) {
  std::vector<double> out;
  for (const auto& e : trace)
    if (!kind || e.kind == *kind) out.push_back(e.delta_log_il);
  return out;
}

double empirical_quantile(std::vector<double> draws, double q) {
  if (draws.empty()) throw std::invalid_argument("quantile of no draws");
  std::sort(draws.begin(), draws.end());
  const double pos = q * static_cast<double>(draws.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, draws.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return draws[lo] + frac * (draws[hi] - draws[lo]);
}

Interval predictive_interval(std::span<const double> draws, double level) {
  if (draws.size() < 20) throw std::invalid_argument("predictive_interval needs at least 20 draws");
  if (!(level > 0.0 && level <= 1.0)) throw std::invalid_argument("level must be in (0, 1]");
  std::vector<double> v(draws.begin(), draws.end());
  std::sort(v.begin(), v.end());
  const double tail = (1.0 - level) / 2.0;
  return {empirical_quantile(v, tail), empirical_quantile(v, 1.0 - tail)};
}

std::vector<PointSummary> summarize_predictions(std::span<const ChainResult> chains,
                                                const ScaledData& scaling, double level) {
  std::size_t points = 0;
  for (const auto& c : chains)
    if (!c.predictions.empty()) points = c.predictions.front().size();
  std::vector<PointSummary> out(points);
  std::vector<double> draws;
  for (std::size_t p = 0; p < points; ++p) {
    draws.clear();
    for (const auto& c : chains)
      for (const auto& d : c.predictions) draws.push_back(scaling.unscale_y(d[p]));
    const Interval iv = predictive_interval(draws, level);
    double mean = 0.0;
    for (double v : draws) mean += v;
    out[p] = {iv.lower, mean / static_cast<double>(draws.size()), iv.upper};
  }
  return out;
}

double empirical_coverage(std::span<const Interval> intervals, std::span<const double> truth) {
  if (intervals.size() != truth.size())
    throw std::invalid_argument("empirical_coverage: length mismatch");
  if (truth.empty()) return 0.0;
  std::size_t in = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) in += intervals[i].contains(truth[i]);
  return static_cast<double>(in) / static_cast<double>(truth.size());
}

double empirical_coverage(std::span<const PointSummary> intervals, std::span<const double> truth) {
  std::vector<Interval> iv;
  iv.reserve(intervals.size());
  for (const auto& s : intervals) iv.push_back({s.lower, s.upper});
  return empirical_coverage(std::span<const Interval>(iv), truth);
}

Census tree_census(const std::vector<std::vector<std::string>>& draws) {
  std::map<std::string, std::size_t> counts;
  for (const auto& draw : draws)
    for (const auto& text : draw) ++counts[serialize_structure(parse_tree(text))];
  Census out(counts.begin(), counts.end());
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  return out;
}

std::optional<int> root_variable(const std::string& canonical) {
  const RegressionTree t = parse_tree(canonical);
  if (t.root().is_leaf()) return std::nullopt;
  return t.root().rule.var;
}

std::vector<KindSummary> acceptance_summary(std::span<const TraceEntry> trace, IterWindow window) {
  std::vector<KindSummary> out;
  for (int k = 0; k < kProposalKinds; ++k) out.push_back({static_cast<ProposalKind>(k)});
  for (const auto& e : trace) {
    if (!window.contains(e.iter)) continue;
    auto& s = out[static_cast<int>(e.kind)];
    ++s.proposed;
    s.admissible += e.admissible;
    s.accepted += e.accepted;
  }
  return out;
}

std::string traces_csv(std::span<const TraceEntry> trace) {
  std::string out = "iter,tree,kind,accepted,delta_logil\n";
  for (const auto& e : trace) {
    out += std::to_string(e.iter) + ',' + std::to_string(e.tree) + ',' +
           std::string(to_string(e.kind)) + ',' + (e.accepted ? "1" : "0") + ',' +
           fmt(e.delta_log_il) + '\n';
  }
  return out;
}

std::string intervals_csv(std::span<const PointSummary> summary,
                          const std::optional<std::vector<double>>& truth) {
  if (truth && truth->size() != summary.size())
    throw std::invalid_argument("intervals_csv: truth length mismatch");
  std::string out = "id,lower,mean,upper,truth\n";
  for (std::size_t i = 0; i < summary.size(); ++i) {
    out += std::to_string(i) + ',' + fmt(summary[i].lower) + ',' + fmt(summary[i].mean) + ',' +
           fmt(summary[i].upper) + ',' + (truth ? fmt((*truth)[i]) : std::string()) + '\n';
  }
  return out;
}

std::string census_csv(const Census& census) {
  std::string out = "canonical,count\n";
  // the canonical form has no commas or quotes, so no escaping is needed
  for (const auto& [text, count] : census) out += text + ',' + std::to_string(count) + '\n';
  return out;
}

std::string acceptance_csv(std::span<const KindSummary> summary) {
  std::string out = "kind,proposed,admissible,accepted,rate\n";
  for (const auto& s : summary) {
    out += std::string(to_string(s.kind)) + ',' + std::to_string(s.proposed) + ',' +
           std::to_string(s.admissible) + ',' + std::to_string(s.accepted) + ',' +
           (s.proposed ? fmt(static_cast<double>(s.accepted) / static_cast<double>(s.proposed))
                       : std::string()) +
           '\n';
  }
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path);
}

}  // namespace rotbart
