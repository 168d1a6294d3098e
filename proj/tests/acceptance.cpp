// Acceptance runner: one PASS/FAIL line per criterion. Exit code is the
// number of failures.
#include <CLI11.hpp>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>

#include "rotbart/datagen_io.hpp"
#include "rotbart/diagnostics.hpp"
#include "rotbart/sampler.hpp"
#include "rotbart/structural_ops.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using namespace rotbart;
using namespace rotbart::testing;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---- 1: merge preimages ----
Verdict merge_preimage() {
  const auto t0 = std::chrono::steady_clock::now();
  const CutpointGrid grid({5, 5});  // three usable cutpoints per variable
  const auto trees = all_trees(grid, 3);
  std::size_t checked = 0, missing = 0, bad_roundtrip = 0;
  for (const auto& t : trees) {
    if (t.root().is_leaf()) continue;  // no internal rule to cut along
    for (int v = 0; v < 2; ++v) {
      for (int c = 1; c <= 3; ++c) {
        const RegressionTree l = cut_left(t, v, c), r = cut_right(t, v, c);
        const MergeSet set = enumerate_merges(l, r, v, c);
        bool found = false;
        for (const auto& m : set.trees) {
          found = found || m.same_structure(t);
          if (!cut_left(m, v, c).same_structure(l) || !cut_right(m, v, c).same_structure(r))
            ++bad_roundtrip;
        }
        missing += !found;
        ++checked;
      }
    }
  }
  const double secs = seconds_since(t0);
  return {missing == 0 && bad_roundtrip == 0 && secs < 60.0,
          std::to_string(trees.size()) + " trees, " + std::to_string(checked) +
              " (tree, v, c) cases, missing preimage " + std::to_string(missing) +
              ", failed round trips " + std::to_string(bad_roundtrip) + ", " + fixed(secs, 1) + "s"};
}

// ---- 2: rotation keeps predictions ----
Verdict rotation_invariance() {
  const auto grid = CutpointGrid::uniform(3, 21);
  Rng rng(2024);
  int pairs = 0;
  double worst = 0.0;
  while (pairs < 1000) {
    const RegressionTree t = random_tree(grid, 5, 0.85, rng);
    const auto nodes = rotatable_nodes(t);
    if (nodes.empty()) continue;
    const NodeId node = nodes[rng.index(nodes.size())];
    const RegressionTree rotated = rotate_and_cut(t, node);
    std::vector<double> x(3);
    for (int i = 0; i < 100; ++i) {
      for (auto& v : x) v = rng.uniform();
      worst = std::max(worst, std::abs(evaluate(t, grid, x) - evaluate(rotated, grid, x)));
    }
    ++pairs;
  }
  char buf[96];
  std::snprintf(buf, sizeof buf, "1000 pairs x 100 points, max |diff| = %.3g", worst);
  return {worst <= 1e-12, buf};
}

// ---- 3: stationary distribution on an enumerable problem ----
struct ToyProblem {
  ScaledData data;
  CutpointGrid grid{std::vector<int>{5}};
};

ToyProblem toy_problem() {
  ToyProblem p;
  const int n = 20;
  p.data.x = Matrix(n, 1);
  p.data.y.resize(n);
  p.data.x_min = {0};
  p.data.x_max = {1};
  Rng g(2024);
  for (int i = 0; i < n; ++i) {
    p.data.x(i, 0) = (i + 0.5) / n;
    const double step = (i < 10 ? 0.15 : -0.1) + (i >= 15 ? 0.15 : 0.0);
    p.data.y[i] = 0.3 * step + g.normal(0, 0.08);
  }
  return p;
}

// Posterior over tree structures with sigma^2 integrated out numerically.
std::map<std::string, double> enumerated_posterior(const ToyProblem& p, const Hyperparams& h) {
  std::map<std::string, double> logw;
  for (const auto& t : all_trees(p.grid, 2)) {
    const auto counts = partition_counts(t, p.grid, p.data.x);
    if (*std::min_element(counts.begin(), counts.end()) < static_cast<std::size_t>(h.min_leaf_n))
      continue;
    // integrand over log sigma^2, including the Jacobian
    auto f = [&](double ls) {
      const double s2 = std::exp(ls);
      const double ll = *log_integrated_likelihood(t, p.grid, p.data.x, p.data.y, s2, h);
      const double lp = (h.nu / 2) * std::log(h.nu * h.lambda / 2) - std::lgamma(h.nu / 2) -
                        (h.nu / 2 + 1) * std::log(s2) - h.nu * h.lambda / (2 * s2);
      return ll + lp + ls;
    };
    double peak = -INFINITY;
    for (double ls = -12; ls < 3; ls += 0.01) peak = std::max(peak, f(ls));
    const double area = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        [&](double ls) { return std::exp(f(ls) - peak); }, -14, 4, 15, 1e-12);
    logw[serialize_structure(t)] = peak + std::log(area) + log_full_prior(t, p.grid, h);
  }
  double top = -INFINITY;
  for (const auto& [k, v] : logw) top = std::max(top, v);
  double z = 0.0;
  for (const auto& [k, v] : logw) z += std::exp(v - top);
  std::map<std::string, double> post;
  for (const auto& [k, v] : logw) post[k] = std::exp(v - top) / z;
  return post;
}

// Monte Carlo standard error of a series mean from its autocovariances,
// summed over Geyer's initial monotone positive sequence.
double mc_standard_error(const std::vector<double>& v) {
  const std::size_t n = v.size();
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(n);
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = v[i] - mean;
  auto gamma = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) s += d[i] * d[i + lag];
    return s / static_cast<double>(n);
  };
  const double g0 = gamma(0);
  if (g0 == 0.0) return 0.0;
  double var = -g0;
  double prev = INFINITY;
  for (std::size_t k = 0; 2 * k + 1 < n / 2; ++k) {
    double pair = gamma(2 * k) + gamma(2 * k + 1);
    if (pair <= 0.0) break;
    pair = std::min(pair, prev);
    prev = pair;
    var += 2.0 * pair;
  }
  return std::sqrt(std::max(var, g0) / static_cast<double>(n));
}

Verdict exhaustive_posterior() {
  const auto t0 = std::chrono::steady_clock::now();
  const ToyProblem p = toy_problem();
  struct Mix {
    const char* name;
    double perturb, rotate;
  };
  const Mix mixes[] = {{"birth/death", 0, 0}, {"+perturb", 0.5, 0}, {"+rotate", 0, 0.5}};
  bool ok = true;
  std::string detail;
  std::map<std::string, double> post;
  int mix_id = 0;
  for (const auto& mix : mixes) {
    RunConfig c;
    c.m = 1;
    c.cutpoints = 5;
    c.max_depth = 2;
    c.burnin = 2000;
    // 1e5 kept draws, every tenth of 1e6 sweeps
    c.keep = 1000000;
    c.thin = 10;
    c.seed = 7 + mix_id++;
    c.w_birth_death = 1.0;
    c.w_perturb = mix.perturb;
    c.w_changevar = 0.0;
    c.w_rotate = mix.rotate;
    const ChainResult r = run_chain(c, p.data, Matrix());
    if (post.empty()) post = enumerated_posterior(p, r.hyper);

    std::vector<std::string> shapes;
    shapes.reserve(r.trees.size());
    for (const auto& d : r.trees) shapes.push_back(serialize_structure(parse_tree(d[0])));
    double worst = 0.0;
    for (const auto& [shape, prob] : post) {
      std::vector<double> hit(shapes.size());
      double freq = 0.0;
      for (std::size_t i = 0; i < shapes.size(); ++i) {
        hit[i] = shapes[i] == shape ? 1.0 : 0.0;
        freq += hit[i];
      }
      freq /= static_cast<double>(shapes.size());
      const double se = mc_standard_error(hit);
      const double z = se > 0 ? std::abs(freq - prob) / se : (freq == prob ? 0.0 : INFINITY);
      worst = std::max(worst, z);
      if (std::getenv("ACCEPTANCE_VERBOSE"))
        std::fprintf(stderr, "  %s %-36s p=%.5f f=%.5f se=%.5f z=%.2f\n", mix.name, shape.c_str(), prob,
                     freq, se, z);
    }
    std::size_t unknown = 0;
    for (const auto& s : shapes) unknown += post.count(s) == 0;
    ok = ok && worst <= 3.0 && unknown == 0;
    detail += std::string(mix.name) + " max|z|=" + fixed(worst, 2) + "; ";
  }
  const double secs = seconds_since(t0);
  ok = ok && secs < 300.0;
  return {ok, std::to_string(post.size()) + " shapes, 1e5 draws per mix: " + detail + fixed(secs, 1) + "s"};
}

// ---- 4: confounded synthetic data ----
Verdict wu_synthetic() {
  int passed = 0;
  std::string detail;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const ScaledData data = scale_dataset(gen_wu_synthetic(seed));
    RunConfig base;
    base.burnin = 1000;
    base.keep = 50000;
    base.seed = 100 + seed;
    base.w_perturb = 0.0;

    auto roots = [](const Census& census) {
      std::set<int> out;
      for (const auto& [canon, count] : census)
        if (auto v = root_variable(canon)) out.insert(*v);
      return out;
    };

    RunConfig a = base;
    a.m = 1;
    a.w_birth_death = 1.0;
    a.w_changevar = a.w_rotate = 0.0;
    const ChainResult ra = run_chain(a, data, Matrix());
    const double acc_a = acceptance_rate(ra, kStructuralKinds).value_or(0.0);
    const Census ca = tree_census(ra.trees);
    const bool pa = acc_a < 0.01 && ca.size() == 1;

    RunConfig b = base;
    b.m = 1;
    b.w_birth_death = 0.4;
    b.w_changevar = 0.3;
    b.w_rotate = 0.3;
    const ChainResult rb = run_chain(b, data, Matrix());
    const Census cb = tree_census(rb.trees);
    const auto rootb = roots(cb);
    const bool pb = cb.size() >= 2 && rootb.count(0) && rootb.count(2);

    // rotation is the only move besides birth/death
    RunConfig c = base;
    c.m = 10;
    c.w_birth_death = 0.5;
    c.w_changevar = 0.0;
    c.w_rotate = 0.5;
    const ChainResult rc = run_chain(c, data, Matrix());
    const Census cc = tree_census(rc.trees);
    const auto rootc = roots(cc);
    const bool pc = cc.size() >= 2 && rootc.count(0) && rootc.count(2);

    passed += pa && pb && pc;
    detail += "seed " + std::to_string(seed) + " [a acc=" + fixed(acc_a, 4) + " census=" +
              std::to_string(ca.size()) + (pa ? " ok" : " FAIL") + "; b census=" +
              std::to_string(cb.size()) + " x1-root=" + std::to_string(rootb.count(0)) +
              " x3-root=" + std::to_string(rootb.count(2)) + (pb ? " ok" : " FAIL") +
              "; c census=" + std::to_string(cc.size()) + " x1-root=" +
              std::to_string(rootc.count(0)) + " x3-root=" + std::to_string(rootc.count(2)) +
              (pc ? " ok" : " FAIL") + "] ";
  }
  return {passed >= 4, std::to_string(passed) + "/5 seeds pass; " + detail};
}

// ---- 5: Friedman regimes ----
Verdict friedman_regimes() {
  const auto t0 = std::chrono::steady_clock::now();
  const Dataset train = gen_friedman(1000, 0.1, 1);
  const Dataset test = gen_friedman(500, 0.0, 2);
  const ScaledData data = scale_dataset(train);
  const Matrix pts = scale_points(data, test.x);

  struct Regime {
    const char* name;
    double bd, perturb, changevar, rotate;
  };
  const Regime regimes[] = {{"birth/death", 1.0, 0, 0, 0},
                            {"+rotate", 0.8, 0, 0, 0.2},
                            {"all", 0.5, 0.2, 0.1, 0.2}};
  double acc[3], cov[3];
  std::string detail;
  for (int i = 0; i < 3; ++i) {
    RunConfig c;
    c.m = 50;
    c.burnin = 1000;
    c.keep = 1000;
    c.seed = 11;
    c.keep_trees = false;
    c.w_birth_death = regimes[i].bd;
    c.w_perturb = regimes[i].perturb;
    c.w_changevar = regimes[i].changevar;
    c.w_rotate = regimes[i].rotate;
    const ChainResult r = run_chain(c, data, pts);
    acc[i] = acceptance_rate(r).value_or(0.0);
    const auto summary = summarize_predictions(std::span(&r, 1), data, 0.9);
    cov[i] = empirical_coverage(summary, *test.truth);
    detail += std::string(regimes[i].name) + ": acceptance " + fixed(acc[i], 3) + ", coverage " +
              fixed(cov[i], 3) + "; ";
  }
  const bool order = acc[0] < acc[1] && acc[1] < acc[2];
  const bool gain = cov[1] - cov[0] >= 0.15 && cov[2] - cov[0] >= 0.15;
  return {order && gain, detail + (order ? "ordering ok" : "ordering FAIL") +
                             (gain ? ", coverage gain ok" : ", coverage gain FAIL") + ", " +
                             fixed(seconds_since(t0), 1) + "s"};
}

// ---- 6: worked rotation example ----
Verdict worked_example() {
  const auto ex = rotation_example();
  const double inner = static_cast<double>(ex.tq_size + ex.tr_size);
  Rng rng(5);
  std::vector<std::string> bad;
  auto near = [](double a, double b) { return std::abs(a - b) < 1e-12; };

  const auto first = propose_rotation(ex.tree, 2, rng);
  if (!first) return {false, "first rotation inadmissible"};
  if (!near(first->p_s1, 1.0 / 3.0)) bad.push_back("p_s1");
  if (!near(first->p_s2, 1.0) || !near(first->p_m1, 1.0) || !near(first->p_m2, 1.0))
    bad.push_back("unit terms");
  if (!near(first->p_r_forward, 1.0 / (inner + 5))) bad.push_back("p_r(T)");
  if (!near(first->p_r_inverse, 2.0 / (inner + 6))) bad.push_back("p_r(T')");

  const RegressionTree& t1 = first->tree;
  if (!near(rotatable_nodes(t1).size(), inner + 6)) bad.push_back("|rotatable(T')|");
  int back_nodes = 0;
  for (NodeId node : {NodeId{2}, NodeId{3}}) {
    const auto second = propose_rotation(t1, node, rng);
    if (!second) {
      bad.push_back("second rotation inadmissible");
      continue;
    }
    if (!near(second->p_s1, 1.0) || !near(second->p_s2, 1.0)) bad.push_back("second p_s");
    if (!near(std::min(second->p_m1, second->p_m2), 1.0 / 3.0)) bad.push_back("merge choice 1/3");
    for (const auto& o : rotation_outcomes(t1, node))
      if (o.tree.same_structure(ex.tree)) {
        ++back_nodes;
        break;
      }
  }
  if (back_nodes != 2) bad.push_back("both nodes lead back");
  if (!near(rotation_transition_probability(t1, ex.tree), (2.0 / 3.0) / (inner + 6)))
    bad.push_back("q(T' -> T)");
  std::string detail = "p_s1=" + fixed(first->p_s1, 6) + " p_r(T)=" + fixed(first->p_r_forward, 6) +
                       " p_r(T')=" + fixed(first->p_r_inverse, 6) + " with |Tq|+|Tr|=" +
                       std::to_string(static_cast<int>(inner));
  for (const auto& b : bad) detail += " mismatch:" + b;
  return {bad.empty(), detail};
}

// ---- 7: CLI determinism ----
int run(const std::string& cmd) { return std::system((cmd + " >/dev/null 2>&1").c_str()); }

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    out[fs::relative(e.path(), dir).string()] = ss.str();
  }
  return out;
}

Verdict cli_determinism(const std::string& cli) {
  if (cli.empty() || !fs::exists(cli)) return {false, "CLI binary not found: " + cli};
  const fs::path root = fs::temp_directory_path() / ("rotbart_accept_" + std::to_string(::getpid()));
  fs::remove_all(root);
  int failures = 0;
  for (const char* run_name : {"a", "b"}) {
    const fs::path d = root / run_name;
    fs::create_directories(d);
    const std::string q = "'" + d.string() + "/";
    {
      std::ofstream cfg(d / "cfg.txt");
      cfg << "m = 10\nburnin = 100\nkeep = 100\ncutpoints = 50\n";
    }
    const std::string cmds[] = {
        "'" + cli + "' generate --benchmark friedman --n 200 --seed 3 --out " + q + "friedman.csv'",
        "'" + cli + "' generate --benchmark wu --seed 1 --out " + q + "wu.csv'",
        "'" + cli + "' fit --data " + q + "friedman.csv' --config " + q + "cfg.txt' --seed 9 --chains 2 --out " + q + "fit'",
        "'" + cli + "' fit --data " + q + "wu.csv' --config " + q + "cfg.txt' --seed 4 --set m=1 --set w_changevar=0.3 --out " + q + "fitwu'",
        "'" + cli + "' predict --fit " + q + "fit' --points " + q + "friedman.csv' --out " + q + "pred.csv'",
        "'" + cli + "' diagnose --fit " + q + "fit' --out " + q + "diag'",
        "'" + cli + "' diagnose --fit " + q + "fitwu' --out " + q + "diagwu'",
        "'" + cli + "' oracle-merge --left '(1:3:[] [])' --right '(1:7:[] (3:5:[] (3:7:[] [])))' --var 1 --cut 5 > " + q + "merges.txt'",
    };
    for (const auto& c : cmds) failures += run(c) != 0;
  }
  const auto a = snapshot(root / "a"), b = snapshot(root / "b");
  fs::remove_all(root);
  const bool same = a == b;
  return {failures == 0 && same && a.size() > 20,
          std::to_string(a.size()) + " files compared, " + std::to_string(failures) +
              " failed commands, " + (same ? "byte-identical" : "outputs differ")};
}

// ---- 8: numerics ----
Verdict numerics() {
  // leaf marginal against quadrature over mu
  Rng rng(77);
  double worst_rel = 0.0;
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 1 + static_cast<int>(rng.index(60));
    const double s2 = std::exp(rng.normal(-3, 1)), tau = std::exp(rng.normal(-2, 0.7));
    std::vector<double> r(n);
    LeafStats st;
    for (auto& v : r) {
      v = rng.normal(rng.normal(0, tau), std::sqrt(s2));
      ++st.n;
      st.sum += v;
      st.sum_sq += v * v;
    }
    const double prec = n / s2 + 1 / (tau * tau);
    const double mode = (st.sum / s2) / prec, sd = 1 / std::sqrt(prec);
    auto log_joint = [&](double mu) {
      double lp = -0.5 * std::log(2 * std::numbers::pi * tau * tau) - 0.5 * mu * mu / (tau * tau);
      for (double v : r) lp += -0.5 * std::log(2 * std::numbers::pi * s2) - 0.5 * (v - mu) * (v - mu) / s2;
      return lp;
    };
    const double peak = log_joint(mode);
    const double area = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        [&](double mu) { return std::exp(log_joint(mu) - peak); }, mode - 40 * sd, mode + 40 * sd,
        15, 1e-14);
    const double quad = peak + std::log(area);
    worst_rel = std::max(worst_rel, std::abs(std::expm1(leaf_log_marginal(st, s2, tau) - quad)));
  }

  // cached fits after random replacements
  const auto grid = CutpointGrid::uniform(3, 30);
  Matrix x(400, 3);
  for (auto& v : x.data) v = rng.uniform();
  std::vector<double> y(400);
  for (auto& v : y) v = rng.normal();
  SumOfTreesState state;
  for (int j = 0; j < 20; ++j) state.trees.push_back(random_tree(grid, 3, 0.7, rng));
  ForestFit fit(state, grid, x);
  for (int step = 0; step < 2000; ++step) {
    const std::size_t j = rng.index(state.trees.size());
    state.trees[j] = random_tree(grid, 4, 0.7, rng);
    fit.update_tree(j, state.trees[j], grid, x);
  }
  double worst_cache = 0.0;
  const ForestFit fresh(state, grid, x);
  for (std::size_t i = 0; i < x.rows; ++i)
    worst_cache = std::max(worst_cache, std::abs(fit.total()[i] - fresh.total()[i]));
  const auto r0 = fit.residual_targets(y, 3);
  for (std::size_t i = 0; i < x.rows; ++i) {
    double direct = y[i];
    for (std::size_t k = 0; k < state.trees.size(); ++k)
      if (k != 3) direct -= evaluate(state.trees[k], grid, x.row(i));
    worst_cache = std::max(worst_cache, std::abs(direct - r0[i]));
  }

  // subtree likelihood differences against full recomputation
  Hyperparams h;
  h.sigma_mu = 0.3;
  h.min_leaf_n = 1;
  double worst_sub = 0.0;
  for (int trial = 0; trial < 300; ++trial) {
    const RegressionTree t = random_tree(grid, 4, 0.8, rng);
    const auto nodes = rotatable_nodes(t);
    if (nodes.empty()) continue;
    const NodeId node = nodes[rng.index(nodes.size())];
    const NodeId parent = parent_id(node);
    const RegressionTree u = rotate_and_cut(t, node);
    const auto ft = log_integrated_likelihood(t, grid, x, y, 0.5, h);
    const auto fu = log_integrated_likelihood(u, grid, x, y, 0.5, h);
    const auto st = log_integrated_likelihood(t, grid, x, y, 0.5, h, parent);
    const auto su = log_integrated_likelihood(u, grid, x, y, 0.5, h, parent);
    if (!ft || !fu || !st || !su) continue;
    worst_sub = std::max(worst_sub, std::abs((*fu - *ft) - (*su - *st)));
  }

  // the sampler's own per-sweep check throws past 1e-10
  bool sweep_ok = true;
  try {
    RunConfig c;
    c.m = 20;
    c.burnin = 100;
    c.keep = 100;
    c.check_invariants = true;
    run_chain(c, scale_dataset(gen_friedman(300, 0.1, 5)), Matrix());
  } catch (const std::exception&) {
    sweep_ok = false;
  }
  const bool ok = worst_rel <= 1e-6 && worst_cache <= 1e-10 && worst_sub <= 1e-10 && sweep_ok;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "leaf marginal max rel err %.2e; cache max err %.2e; subtree delta max err "
                "%.2e; sweep checks %s",
                worst_rel, worst_cache, worst_sub, sweep_ok ? "clean" : "FAILED");
  return {ok, buf};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::string cli;
  std::vector<int> only;
  app.add_option("--cli", cli, "Path to the rotbart command line binary");
  app.add_option("--only", only, "Run only these criteria");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"merge preimage oracle", merge_preimage},
      {"rotation prediction invariance", rotation_invariance},
      {"exhaustive posterior equivalence", exhaustive_posterior},
      {"confounded synthetic census", wu_synthetic},
      {"friedman regime ordering", friedman_regimes},
      {"worked rotation example", worked_example},
      {"cli determinism", [&] { return cli_determinism(cli); }},
      {"numerical checks", numerics},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failures += !v.pass;
    std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << criteria[i].first
              << "): " << v.detail << std::endl;
  }
  return failures;
}
