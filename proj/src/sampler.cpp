#include "rotbart/sampler.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <future>
#include <map>
#include <sstream>
#include <stdexcept>

namespace rotbart {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw std::invalid_argument("bad value for " + std::string(key) + ": '" + std::string(text) + "'");
  return value;
}

bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw std::invalid_argument("bad value for " + std::string(key) + ": '" + std::string(text) + "'");
}

std::string fmt(double v) {
  char buf[32];
  auto r = std::to_chars(buf, buf + sizeof buf, v);  // shortest round-trip
  return std::string(buf, r.ptr);
}

}  // namespace

void RunConfig::set(std::string_view key, std::string_view value) {
  using Setter = std::function<void(RunConfig&, std::string_view)>;
  static const std::map<std::string, Setter, std::less<>> setters = {
      {"burnin", [](RunConfig& c, auto v) { c.burnin = parse_number<int>("burnin", v); }},
      {"keep", [](RunConfig& c, auto v) { c.keep = parse_number<int>("keep", v); }},
      {"thin", [](RunConfig& c, auto v) { c.thin = parse_number<int>("thin", v); }},
      {"w_birth_death", [](RunConfig& c, auto v) { c.w_birth_death = parse_number<double>("w_birth_death", v); }},
      {"w_perturb", [](RunConfig& c, auto v) { c.w_perturb = parse_number<double>("w_perturb", v); }},
      {"w_changevar", [](RunConfig& c, auto v) { c.w_changevar = parse_number<double>("w_changevar", v); }},
      {"w_rotate", [](RunConfig& c, auto v) { c.w_rotate = parse_number<double>("w_rotate", v); }},
      {"m", [](RunConfig& c, auto v) { c.m = parse_number<int>("m", v); }},
      {"split_alpha", [](RunConfig& c, auto v) { c.split_alpha = parse_number<double>("split_alpha", v); }},
      {"split_beta", [](RunConfig& c, auto v) { c.split_beta = parse_number<double>("split_beta", v); }},
      {"k", [](RunConfig& c, auto v) { c.k = parse_number<double>("k", v); }},
      {"nu", [](RunConfig& c, auto v) { c.nu = parse_number<double>("nu", v); }},
      {"sigma_quantile", [](RunConfig& c, auto v) { c.sigma_quantile = parse_number<double>("sigma_quantile", v); }},
      {"sigma_mu", [](RunConfig& c, auto v) { c.sigma_mu = parse_number<double>("sigma_mu", v); }},
      {"lambda", [](RunConfig& c, auto v) { c.lambda = parse_number<double>("lambda", v); }},
      {"min_leaf_n", [](RunConfig& c, auto v) { c.min_leaf_n = parse_number<int>("min_leaf_n", v); }},
      {"max_depth", [](RunConfig& c, auto v) { c.max_depth = parse_number<int>("max_depth", v); }},
      {"cutpoints", [](RunConfig& c, auto v) { c.cutpoints = parse_number<int>("cutpoints", v); }},
      {"perturb_alpha", [](RunConfig& c, auto v) { c.perturb_alpha = parse_number<double>("perturb_alpha", v); }},
      {"perturb_likelihood", [](RunConfig& c, auto v) { c.perturb_likelihood = std::string(v); }},
      {"rotate_ratio", [](RunConfig& c, auto v) { c.rotate_ratio = std::string(v); }},
      {"changevar_cutoff", [](RunConfig& c, auto v) { c.changevar_cutoff = parse_number<double>("changevar_cutoff", v); }},
      {"seed", [](RunConfig& c, auto v) { c.seed = parse_number<std::uint64_t>("seed", v); }},
      {"keep_trees", [](RunConfig& c, auto v) { c.keep_trees = parse_bool("keep_trees", v); }},
      {"check_invariants", [](RunConfig& c, auto v) { c.check_invariants = parse_bool("check_invariants", v); }},
  };
  const auto it = setters.find(key);
  if (it == setters.end()) throw std::invalid_argument("unknown config key: " + std::string(key));
  it->second(*this, value);
}

RunConfig RunConfig::parse(std::string_view text) {
  RunConfig c;
  int line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key = value");
    try {
      c.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  c.validate();
  return c;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string RunConfig::to_text() const {
  std::ostringstream o;
  o << "burnin = " << burnin << "\nkeep = " << keep << "\nthin = " << thin
    << "\nw_birth_death = " << fmt(w_birth_death) << "\nw_perturb = " << fmt(w_perturb)
    << "\nw_changevar = " << fmt(w_changevar) << "\nw_rotate = " << fmt(w_rotate)
    << "\nm = " << m << "\nsplit_alpha = " << fmt(split_alpha)
    << "\nsplit_beta = " << fmt(split_beta) << "\nk = " << fmt(k) << "\nnu = " << fmt(nu)
    << "\nsigma_quantile = " << fmt(sigma_quantile);
  if (sigma_mu) o << "\nsigma_mu = " << fmt(*sigma_mu);
  if (lambda) o << "\nlambda = " << fmt(*lambda);
  o << "\nmin_leaf_n = " << min_leaf_n << "\nmax_depth = " << max_depth
    << "\ncutpoints = " << cutpoints << "\nperturb_alpha = " << fmt(perturb_alpha)
    << "\nperturb_likelihood = " << perturb_likelihood << "\nrotate_ratio = " << rotate_ratio
    << "\nchangevar_cutoff = " << fmt(changevar_cutoff) << "\nseed = " << seed
    << "\nkeep_trees = " << (keep_trees ? "true" : "false")
    << "\ncheck_invariants = " << (check_invariants ? "true" : "false") << "\n";
  return o.str();
}

void RunConfig::validate() const {
  if (burnin < 0 || keep < 0) throw std::invalid_argument("burnin and keep must be >= 0");
  if (thin < 1) throw std::invalid_argument("thin must be >= 1");
  for (double w : {w_birth_death, w_perturb, w_changevar, w_rotate})
    if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("proposal weights must be >= 0");
  if (cutpoints < 3) throw std::invalid_argument("cutpoints must be >= 3");
  if (!(perturb_alpha > 0.0)) throw std::invalid_argument("perturb_alpha must be > 0");
  if (perturb_likelihood != "integrated" && perturb_likelihood != "conditional")
    throw std::invalid_argument("perturb_likelihood must be integrated or conditional");
  if (rotate_ratio != "exact" && rotate_ratio != "listing")
    throw std::invalid_argument("rotate_ratio must be exact or listing");
  if (!(sigma_quantile > 0.0 && sigma_quantile < 1.0))
    throw std::invalid_argument("sigma_quantile must lie in (0,1)");
  if (!(k > 0.0)) throw std::invalid_argument("k must be > 0");
  if (changevar_cutoff < 0.0 || changevar_cutoff >= 1.0)
    throw std::invalid_argument("changevar_cutoff must lie in [0,1)");
  Hyperparams h;
  h.m = m;
  h.split_alpha = split_alpha;
  h.split_beta = split_beta;
  h.nu = nu;
  h.min_leaf_n = min_leaf_n;
  h.max_depth = max_depth;
  if (sigma_mu) h.sigma_mu = *sigma_mu;
  if (lambda) h.lambda = *lambda;
  h.validate();
}

ProposalSettings RunConfig::proposal_settings() const {
  ProposalSettings s;
  s.perturb_alpha = perturb_alpha;
  s.perturb_likelihood = perturb_likelihood == "conditional" ? PerturbLikelihood::kConditional
                                                             : PerturbLikelihood::kIntegrated;
  s.rotate_ratio = rotate_ratio == "listing" ? RotateRatio::kListing : RotateRatio::kExact;
  return s;
}

CutpointGrid RunConfig::grid(std::size_t dim) const { return CutpointGrid::uniform(dim, cutpoints); }

Hyperparams make_hyperparams(const RunConfig& config, const ScaledData& data) {
  double mean = 0.0, var = 0.0;
  for (double v : data.y) mean += v;
  mean /= static_cast<double>(data.y.size());
  for (double v : data.y) var += (v - mean) * (v - mean);
  var /= static_cast<double>(data.y.size() > 1 ? data.y.size() - 1 : 1);
  if (!(var > 0.0)) var = 1e-6;

  Hyperparams h = default_hyperparams(config.m, var, config.k, config.nu, config.sigma_quantile);
  h.split_alpha = config.split_alpha;
  h.split_beta = config.split_beta;
  h.min_leaf_n = config.min_leaf_n;
  h.max_depth = config.max_depth;
  if (config.sigma_mu) h.sigma_mu = *config.sigma_mu;
  if (config.lambda) h.lambda = *config.lambda;
  h.validate();
  return h;
}

namespace {

enum class Family { kBirthDeath, kPerturb, kChangeVar, kRotate, kNone };

Family draw_family(const std::array<double, 4>& w, double total, Rng& rng) {
  if (total <= 0.0) return Family::kNone;
  double u = rng.uniform() * total;
  for (int i = 0; i < 4; ++i) {
    if (w[i] <= 0.0) continue;
    if (u < w[i]) return static_cast<Family>(i);
    u -= w[i];
  }
  for (int i = 3; i >= 0; --i)
    if (w[i] > 0.0) return static_cast<Family>(i);
  return Family::kNone;
}

void check_sweep(const SumOfTreesState& state, const ForestFit& fit, const CutpointGrid& grid,
                 const ScaledData& data, const Hyperparams& hyper) {
  for (std::size_t i = 0; i < data.n(); ++i) {
    double direct = 0.0;
    for (const auto& t : state.trees) direct += evaluate(t, grid, data.x.row(i));
    if (std::abs(direct - fit.total()[i]) > 1e-10)
      throw std::logic_error("cached fit drifted from direct evaluation");
  }
  for (const auto& t : state.trees)
    for (std::size_t c : partition_counts(t, grid, data.x))
      if (c < static_cast<std::size_t>(hyper.min_leaf_n))
        throw std::logic_error("a leaf holds fewer than min_leaf_n observations");
}

}  // namespace

ChainResult run_chain(const RunConfig& config, const ScaledData& data, const Matrix& points,
                      const SumOfTreesState* init) {
  config.validate();
  if (data.n() == 0) throw std::invalid_argument("empty training data");
  if (points.rows > 0 && points.cols != data.d())
    throw std::invalid_argument("prediction points have the wrong number of columns");

  const Hyperparams hyper = make_hyperparams(config, data);
  const CutpointGrid grid = config.grid(data.d());
  const ProposalSettings settings = config.proposal_settings();
  const CorrelationPreconditioner precond = build_preconditioner(data.x, config.changevar_cutoff);
  Rng rng(config.seed);

  SumOfTreesState state;
  if (init) {
    state = *init;
    if (state.trees.size() != static_cast<std::size_t>(hyper.m))
      throw std::invalid_argument("initial forest size differs from m");
  } else {
    state.trees.assign(static_cast<std::size_t>(hyper.m), RegressionTree(0.0));
    double var = 0.0;
    for (double v : data.y) var += v * v;
    state.sigma2 = std::max(var / static_cast<double>(data.n()), 1e-6);
  }
  ForestFit fit(state, grid, data.x);

  const std::array<double, 4> weights = {config.w_birth_death, config.w_perturb,
                                         config.w_changevar, config.w_rotate};
  const double total_w = weights[0] + weights[1] + weights[2] + weights[3];

  ChainResult result;
  result.seed = config.seed;
  result.burnin = config.burnin;
  result.hyper = hyper;
  const int iterations = config.burnin + config.keep;
  if (total_w > 0.0) result.trace.reserve(static_cast<std::size_t>(iterations) * state.trees.size());

  for (int iter = 0; iter < iterations; ++iter) {
    for (std::size_t j = 0; j < state.trees.size(); ++j) {
      const std::vector<double> residual = fit.residual_targets(data.y, j);
      const ProposalContext ctx{grid, data.x, residual, state.sigma2, hyper};
      RegressionTree& tree = state.trees[j];

      const Family family = draw_family(weights, total_w, rng);
      if (family != Family::kNone) {
        ProposalOutcome out;
        switch (family) {
          case Family::kBirthDeath: out = propose_birth_death(tree, ctx, rng); break;
          case Family::kRotate: out = propose_rotate(tree, ctx, settings, rng); break;
          case Family::kPerturb:
          case Family::kChangeVar: {
            const auto internal = internal_nodes(tree);
            const ProposalKind kind =
                family == Family::kPerturb ? ProposalKind::kPerturb : ProposalKind::kChangeVar;
            if (internal.empty()) {
              out.kind = kind;
              break;
            }
            const NodeId node = internal[rng.index(internal.size())];
            out = kind == ProposalKind::kPerturb
                      ? propose_perturb(tree, node, ctx, settings, rng)
                      : propose_change_var(tree, node, ctx, precond, rng);
            break;
          }
          case Family::kNone: break;
        }
        if (out.accepted) tree = std::move(*out.candidate);
        result.trace.push_back({iter, static_cast<int>(j), out.kind, out.admissible, out.accepted,
                                out.delta_log_il});
      }
      draw_leaf_mus(tree, grid, data.x, residual, state.sigma2, hyper, rng);
      fit.update_tree(j, tree, grid, data.x);
    }
    state.sigma2 = draw_sigma2(fit.residuals(data.y), hyper, rng);
    if (config.check_invariants) check_sweep(state, fit, grid, data, hyper);

    if (iter >= config.burnin && (iter - config.burnin + 1) % config.thin == 0) {
      result.sigma2.push_back(state.sigma2);
      std::vector<double> pred(points.rows, 0.0);
      for (const auto& t : state.trees)
        for (std::size_t i = 0; i < points.rows; ++i) pred[i] += evaluate(t, grid, points.row(i));
      result.predictions.push_back(std::move(pred));
      if (config.keep_trees) {
        std::vector<std::string> text;
        text.reserve(state.trees.size());
        for (const auto& t : state.trees) text.push_back(serialize(t));
        result.trees.push_back(std::move(text));
      }
    }
  }
  result.final_state = std::move(state);
  return result;
}

std::vector<ChainResult> run_replicated(const RunConfig& config, const ScaledData& data,
                                        const Matrix& points, int chains, bool parallel) {
  if (chains < 1) throw std::invalid_argument("need at least one chain");
  config.validate();
  std::vector<RunConfig> configs(static_cast<std::size_t>(chains), config);
  for (int c = 0; c < chains; ++c) configs[static_cast<std::size_t>(c)].seed = config.seed + static_cast<std::uint64_t>(c);

  std::vector<ChainResult> out;
  out.reserve(configs.size());
  if (!parallel || chains == 1) {
    for (const auto& c : configs) out.push_back(run_chain(c, data, points));
    return out;
  }
  std::vector<std::future<ChainResult>> jobs;
  for (const auto& c : configs)
    jobs.push_back(std::async(std::launch::async, [&c, &data, &points] { return run_chain(c, data, points); }));
  for (auto& j : jobs) out.push_back(j.get());
  return out;
}

}  // namespace rotbart
