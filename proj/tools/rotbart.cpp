// Command line front end: generate, fit, predict, diagnose, oracle-merge.
#include <charconv>
#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "rotbart/datagen_io.hpp"
#include "rotbart/diagnostics.hpp"
#include "rotbart/sampler.hpp"
#include "rotbart/structural_ops.hpp"

namespace fs = std::filesystem;
using namespace rotbart;

namespace {

// Failures that carry their own exit code.
struct CliError : std::runtime_error {
  int code;
  CliError(const std::string& what, int c) : std::runtime_error(what), code(c) {}
};

enum Exit { kOk = 0, kRuntime = 1, kUsage = 2, kMissingFile = 3, kBadTree = 4, kBadConfig = 5 };

std::string fmt(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw CliError("missing file: " + p.string(), kMissingFile);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void require_file(const fs::path& p) {
  if (!fs::is_regular_file(p)) throw CliError("missing file: " + p.string(), kMissingFile);
}

RegressionTree parse_tree_arg(const std::string& text, const std::string& what) {
  try {
    return parse_tree(text);
  } catch (const std::invalid_argument& e) {
    throw CliError("malformed tree for " + what + ": " + e.what(), kBadTree);
  }
}

// ---- fit directory layout ----
// config.txt, scaling.csv, forest.txt (one kept draw per line, trees
// tab-separated), sigma2.csv, traces.csv, acceptance.csv, census.csv,
// intervals.csv, summary.txt. With several chains each gets chain_<i>/ and
// the top level holds the pooled summaries.

void write_scaling(const fs::path& p, const ScaledData& s, const std::vector<std::string>& names) {
  std::string out = "column,min,max\n";
  for (std::size_t j = 0; j < s.d(); ++j)
    out += names[j] + ',' + fmt(s.x_min[j]) + ',' + fmt(s.x_max[j]) + '\n';
  out += names.back() + ',' + fmt(s.y_min) + ',' + fmt(s.y_max) + '\n';
  write_text(p.string(), out);
}

struct Scaling {
  ScaledData s;
  std::vector<std::string> x_names;
};

Scaling read_scaling(const fs::path& p) {
  require_file(p);
  const std::string text = read_file(p);
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (f.size() != 3) throw CliError("corrupt scaling file " + p.string(), kRuntime);
    rows.push_back(f);
  }
  if (rows.size() < 2) throw CliError("corrupt scaling file " + p.string(), kRuntime);
  Scaling sc;
  for (std::size_t j = 0; j + 1 < rows.size(); ++j) {
    sc.x_names.push_back(rows[j][0]);
    sc.s.x_min.push_back(std::stod(rows[j][1]));
    sc.s.x_max.push_back(std::stod(rows[j][2]));
  }
  sc.s.y_min = std::stod(rows.back()[1]);
  sc.s.y_max = std::stod(rows.back()[2]);
  sc.s.x = Matrix(0, sc.x_names.size());
  return sc;
}

std::string forest_text(const ChainResult& r) {
  std::string out;
  for (const auto& draw : r.trees) {
    for (std::size_t t = 0; t < draw.size(); ++t) {
      if (t) out += '\t';
      out += draw[t];
    }
    out += '\n';
  }
  return out;
}

std::vector<std::vector<std::string>> read_forest(const fs::path& p) {
  require_file(p);
  const std::string text = read_file(p);
  std::vector<std::vector<std::string>> draws;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> trees;
    std::stringstream ls(line);
    std::string t;
    while (std::getline(ls, t, '\t')) trees.push_back(t);
    draws.push_back(std::move(trees));
  }
  return draws;
}

std::vector<TraceEntry> read_traces(const fs::path& p) {
  require_file(p);
  const std::string text = read_file(p);
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  std::vector<TraceEntry> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    const auto kind = f.size() == 5 ? parse_proposal_kind(f[2]) : std::nullopt;
    if (!kind)
      throw CliError(p.string() + ": line " + std::to_string(lineno) + ": corrupt trace row",
                     kRuntime);
    TraceEntry e;
    e.iter = std::stoi(f[0]);
    e.tree = std::stoi(f[1]);
    e.kind = *kind;
    e.accepted = f[3] == "1";
    e.admissible = e.accepted;  // not stored; only accepted moves are known admissible
    e.delta_log_il = std::stod(f[4]);
    out.push_back(e);
  }
  return out;
}

// Chain directories of a fit, in chain order.
std::vector<fs::path> chain_dirs(const fs::path& fit) {
  if (!fs::is_directory(fit)) throw CliError("missing fit directory: " + fit.string(), kMissingFile);
  std::vector<std::pair<int, fs::path>> found;
  for (const auto& entry : fs::directory_iterator(fit)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_directory() && name.rfind("chain_", 0) == 0)
      found.emplace_back(std::stoi(name.substr(6)), entry.path());
  }
  std::sort(found.begin(), found.end());
  std::vector<fs::path> out;
  for (auto& [i, p] : found) out.push_back(p);
  if (out.empty()) out.push_back(fit);
  return out;
}

RunConfig read_config(const fs::path& p) {
  require_file(p);
  try {
    return RunConfig::parse(read_file(p));
  } catch (const std::invalid_argument& e) {
    throw CliError(p.string() + ": " + e.what(), kBadConfig);
  }
}

double raw_sigma2(const ScaledData& s, double v) { return v * s.y_scale() * s.y_scale(); }

std::string summary_text(std::span<const ChainResult> chains, const ScaledData& s,
                         const std::optional<double>& coverage, double level) {
  std::vector<TraceEntry> post;
  double sig = 0.0;
  std::size_t draws = 0;
  for (const auto& c : chains) {
    for (const auto& e : c.trace)
      if (e.iter >= c.burnin) post.push_back(e);
    for (double v : c.sigma2) sig += raw_sigma2(s, v);
    draws += c.sigma2.size();
  }
  std::string out;
  out += "chains: " + std::to_string(chains.size()) + '\n';
  out += "draws: " + std::to_string(draws) + '\n';
  auto rate = [&](std::span<const ProposalKind> kinds) {
    const auto r = acceptance_rate(post, kinds, {});
    return r ? fmt(*r) : std::string("NA");
  };
  out += "acceptance_all: " + rate({}) + '\n';
  out += "acceptance_structural: " + rate(kStructuralKinds) + '\n';
  for (int k = 0; k < kProposalKinds; ++k) {
    const ProposalKind kind = static_cast<ProposalKind>(k);
    out += "acceptance_" + std::string(to_string(kind)) + ": " + rate(std::span(&kind, 1)) + '\n';
  }
  out += "sigma2_mean: " + (draws ? fmt(sig / static_cast<double>(draws)) : std::string("NA")) + '\n';
  out += "level: " + fmt(level) + '\n';
  if (coverage) out += "training_coverage: " + fmt(*coverage) + '\n';
  return out;
}

void write_chain_outputs(const fs::path& dir, const ChainResult& r, const RunConfig& config,
                         const ScaledData& s, const Dataset& data, double level) {
  fs::create_directories(dir);
  RunConfig c = config;
  c.seed = r.seed;
  write_text((dir / "config.txt").string(), c.to_text());
  write_scaling(dir / "scaling.csv", s, data.names);
  write_text((dir / "forest.txt").string(), forest_text(r));
  std::string sig = "draw,sigma2\n";
  for (std::size_t i = 0; i < r.sigma2.size(); ++i)
    sig += std::to_string(i) + ',' + fmt(raw_sigma2(s, r.sigma2[i])) + '\n';
  write_text((dir / "sigma2.csv").string(), sig);
  write_text((dir / "traces.csv").string(), traces_csv(r.trace));
  write_text((dir / "acceptance.csv").string(),
             acceptance_csv(acceptance_summary(r.trace, {r.burnin, std::nullopt})));
  write_text((dir / "census.csv").string(), census_csv(tree_census(r.trees)));
}

void write_pooled(const fs::path& dir, std::span<const ChainResult> chains, const ScaledData& s,
                  const Dataset& data, double level) {
  std::optional<double> coverage;
  if (!chains.empty() && !chains.front().predictions.empty()) {
    const auto summary = summarize_predictions(chains, s, level);
    write_text((dir / "intervals.csv").string(), intervals_csv(summary, data.truth));
    if (data.truth) coverage = empirical_coverage(summary, *data.truth);
  }
  write_text((dir / "summary.txt").string(), summary_text(chains, s, coverage, level));
}

// ---- subcommands ----

int cmd_generate(const std::string& benchmark, std::size_t n, std::optional<double> sigma2,
                 std::uint64_t seed, std::size_t d_total, const std::string& out) {
  Dataset ds;
  if (benchmark == "friedman") {
    ds = gen_friedman(n, sigma2.value_or(0.1), seed, d_total);
  } else {
    ds = gen_wu_synthetic(seed, sigma2.value_or(0.25));
  }
  write_csv(ds, out);
  return kOk;
}

int cmd_fit(const std::string& data_path, const std::optional<std::string>& config_path,
            const std::optional<std::uint64_t>& seed, int chains, double level,
            const std::vector<std::string>& overrides, const std::string& out) {
  require_file(data_path);
  const Dataset data = load_csv(data_path);
  RunConfig config;
  if (config_path) config = read_config(*config_path);
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw CliError("--set expects key=value, got '" + kv + "'", kUsage);
    try {
      config.set(kv.substr(0, eq), kv.substr(eq + 1));
    } catch (const std::invalid_argument& e) {
      throw CliError(e.what(), kBadConfig);
    }
  }
  if (seed) config.seed = *seed;
  try {
    config.validate();
  } catch (const std::invalid_argument& e) {
    throw CliError(std::string("invalid config: ") + e.what(), kBadConfig);
  }
  std::vector<std::size_t> constant;
  const ScaledData s = scale_dataset(data, &constant);
  for (std::size_t j : constant)
    std::cerr << "warning: column " << data.names[j] << " is constant; mapped to 0.5\n";

  // predictions at the training inputs give the in-sample intervals
  const auto results = run_replicated(config, s, s.x, chains);
  const fs::path dir(out);
  fs::create_directories(dir);
  if (chains == 1) {
    write_chain_outputs(dir, results[0], config, s, data, level);
  } else {
    for (int c = 0; c < chains; ++c)
      write_chain_outputs(dir / ("chain_" + std::to_string(c)), results[c], config, s, data, level);
    write_text((dir / "config.txt").string(), config.to_text());
    write_scaling(dir / "scaling.csv", s, data.names);
  }
  write_pooled(dir, results, s, data, level);
  std::cout << read_file(dir / "summary.txt");
  return kOk;
}

int cmd_predict(const std::string& fit, const std::string& points_path, double level,
                const std::string& out) {
  const fs::path dir(fit);
  const auto dirs = chain_dirs(dir);
  const RunConfig config = read_config(dir / "config.txt");
  const Scaling sc = read_scaling(dir / "scaling.csv");
  require_file(points_path);
  const CsvTable table = load_table(points_path);

  Matrix raw(table.values.rows, sc.x_names.size());
  for (std::size_t j = 0; j < sc.x_names.size(); ++j) {
    const auto col = table.column(sc.x_names[j]);
    if (!col) throw CliError(points_path + ": missing column " + sc.x_names[j], kRuntime);
    for (std::size_t i = 0; i < raw.rows; ++i) raw(i, j) = table.values(i, *col);
  }
  std::optional<std::vector<double>> truth;
  if (const auto col = table.column("truth")) {
    truth.emplace(raw.rows);
    for (std::size_t i = 0; i < raw.rows; ++i) (*truth)[i] = table.values(i, *col);
  }
  const Matrix pts = scale_points(sc.s, raw);
  const CutpointGrid grid = config.grid(sc.x_names.size());

  std::vector<ChainResult> pooled(1);
  for (const auto& d : dirs) {
    for (const auto& draw : read_forest(d / "forest.txt")) {
      std::vector<RegressionTree> trees;
      for (const auto& t : draw) trees.push_back(parse_tree_arg(t, (d / "forest.txt").string()));
      std::vector<double> pred(pts.rows, 0.0);
      for (const auto& t : trees)
        for (std::size_t i = 0; i < pts.rows; ++i) pred[i] += evaluate(t, grid, pts.row(i));
      pooled[0].predictions.push_back(std::move(pred));
    }
  }
  if (pooled[0].predictions.size() < 20)
    throw CliError("fit holds fewer than 20 draws; cannot form intervals", kRuntime);
  const auto summary = summarize_predictions(pooled, sc.s, level);
  write_text(out, intervals_csv(summary, truth));
  if (truth) std::cout << "coverage: " << fmt(empirical_coverage(summary, *truth)) << '\n';
  return kOk;
}

int cmd_diagnose(const std::string& fit, const std::string& out) {
  const fs::path dir(fit), odir(out);
  const auto dirs = chain_dirs(dir);
  fs::create_directories(odir);
  std::vector<TraceEntry> post;
  std::vector<std::vector<std::string>> draws;
  for (std::size_t c = 0; c < dirs.size(); ++c) {
    const RunConfig config = read_config(dirs[c] / "config.txt");
    const auto trace = read_traces(dirs[c] / "traces.csv");
    auto forest = read_forest(dirs[c] / "forest.txt");
    const fs::path target = dirs.size() == 1 ? odir : odir / ("chain_" + std::to_string(c));
    fs::create_directories(target);
    write_text((target / "traces.csv").string(), traces_csv(trace));
    if (dirs.size() > 1) write_text((target / "census.csv").string(), census_csv(tree_census(forest)));
    for (const auto& e : trace)
      if (e.iter >= config.burnin) post.push_back(e);
    for (auto& d : forest) draws.push_back(std::move(d));
  }
  const Census census = tree_census(draws);
  write_text((odir / "census.csv").string(), census_csv(census));
  const auto summary = acceptance_summary(post, {});
  std::string table = "kind,proposed,accepted,rate\n";
  for (const auto& s : summary)
    table += std::string(to_string(s.kind)) + ',' + std::to_string(s.proposed) + ',' +
             std::to_string(s.accepted) + ',' +
             (s.proposed ? fmt(static_cast<double>(s.accepted) / static_cast<double>(s.proposed))
                         : std::string()) +
             '\n';
  write_text((odir / "acceptance.csv").string(), table);
  std::cout << table;
  std::cout << "distinct_structures: " << census.size() << '\n';
  return kOk;
}

int cmd_oracle_merge(const std::string& left, const std::string& right, int var, int cut,
                     const std::string& scope) {
  const RegressionTree l = parse_tree_arg(left, "--left");
  const RegressionTree r = parse_tree_arg(right, "--right");
  if (var < 1) throw CliError("--var is 1-based and must be >= 1", kUsage);
  if (cut < 0) throw CliError("--cut must be a grid index >= 0", kUsage);
  const MergeSet merges = enumerate_merges(l, r, var - 1, cut,
                                           scope == "rule-free" ? MergeScope::kRuleFree
                                                                : MergeScope::kPreimage);
  for (const auto& t : merges.trees) std::cout << serialize_structure(t) << '\n';
  std::cout << "count " << merges.nontrivial() << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sum-of-trees regression with perturb, change-of-variable and rotation moves"};
  app.require_subcommand(1);

  std::string benchmark, gen_out;
  std::size_t gen_n = 1000, d_total = 10;
  std::optional<double> gen_sigma2;
  std::uint64_t gen_seed = 1;
  auto* gen = app.add_subcommand("generate", "Write a benchmark dataset as CSV");
  gen->add_option("--benchmark", benchmark, "friedman or wu")
      ->required()
      ->check(CLI::IsMember({"friedman", "wu"}));
  gen->add_option("--n", gen_n, "Rows (friedman only; wu has 300)")->check(CLI::PositiveNumber);
  gen->add_option("--sigma2", gen_sigma2, "Noise variance (default 0.1 friedman, 0.25 wu)")
      ->check(CLI::NonNegativeNumber);
  gen->add_option("--seed", gen_seed, "Random seed");
  gen->add_option("--d-total", d_total, "Covariates for friedman, at least 5")
      ->check(CLI::Range(5, 1000));
  gen->add_option("--out", gen_out, "Output CSV path")->required();

  std::string data_path, fit_out;
  std::optional<std::string> config_path;
  std::optional<std::uint64_t> fit_seed;
  int chains = 1;
  double fit_level = 0.9;
  std::vector<std::string> overrides;
  auto* fit = app.add_subcommand("fit", "Run the sampler and write posterior summaries");
  fit->add_option("--data", data_path, "Training CSV (covariates, response, optional truth)")
      ->required();
  fit->add_option("--config", config_path, "Config file of key = value lines");
  fit->add_option("--seed", fit_seed, "Seed; overrides the config");
  fit->add_option("--chains", chains, "Independent chains, seeds seed..seed+k-1")
      ->check(CLI::Range(1, 1024));
  fit->add_option("--level", fit_level, "Credible level for intervals.csv")
      ->check(CLI::Range(0.01, 1.0));
  fit->add_option("--set", overrides, "Config override key=value, repeatable");
  fit->add_option("--out", fit_out, "Output directory")->required();

  std::string pred_fit, points_path, pred_out;
  double level = 0.9;
  auto* pred = app.add_subcommand("predict", "Credible intervals at new points from a fit");
  pred->add_option("--fit", pred_fit, "Fit directory")->required();
  pred->add_option("--points", points_path, "CSV with the fit's covariate columns, optional truth")
      ->required();
  pred->add_option("--level", level, "Credible level")->check(CLI::Range(0.01, 1.0));
  pred->add_option("--out", pred_out, "Output intervals CSV")->required();

  std::string diag_fit, diag_out;
  auto* diag = app.add_subcommand("diagnose", "Traces, tree census and acceptance summary");
  diag->add_option("--fit", diag_fit, "Fit directory")->required();
  diag->add_option("--out", diag_out, "Output directory")->required();

  std::string left, right, scope = "preimage";
  int var = 1, cut = 0;
  auto* oracle = app.add_subcommand("oracle-merge", "List the merges of two cut pieces");
  oracle->add_option("--left", left, "Left piece, canonical tree text")->required();
  oracle->add_option("--right", right, "Right piece, canonical tree text")->required();
  oracle->add_option("--var", var, "Split variable, 1-based")->required();
  oracle->add_option("--cut", cut, "Cutpoint grid index")->required();
  oracle->add_option("--scope", scope, "preimage or rule-free")
      ->check(CLI::IsMember({"preimage", "rule-free"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }

  try {
    if (*gen) return cmd_generate(benchmark, gen_n, gen_sigma2, gen_seed, d_total, gen_out);
    if (*fit) return cmd_fit(data_path, config_path, fit_seed, chains, fit_level, overrides, fit_out);
    if (*pred) return cmd_predict(pred_fit, points_path, level, pred_out);
    if (*diag) return cmd_diagnose(diag_fit, diag_out);
    if (*oracle) return cmd_oracle_merge(left, right, var, cut, scope);
  } catch (const CliError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code;
  } catch (const CsvError& e) {
    std::cerr << "error: bad csv: " << e.what() << '\n';
    return kRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
  return kUsage;
}
