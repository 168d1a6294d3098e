#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "rotbart/diagnostics.hpp"
#include "rotbart/rng.hpp"

using namespace rotbart;

namespace {

std::vector<TraceEntry> stream(int n, int accepted_every, ProposalKind kind = ProposalKind::kBirth) {
  std::vector<TraceEntry> t;
  for (int i = 0; i < n; ++i)
    t.push_back({i, 0, kind, true, accepted_every > 0 && i % accepted_every == 0, -0.5 * i});
  return t;
}

}  // namespace

TEST_CASE("acceptance rate") {
  const std::vector<ProposalKind> none;
  CHECK(*acceptance_rate(stream(100, 1), none, {}) == 1.0);
  CHECK(*acceptance_rate(stream(100, 0), none, {}) == 0.0);
  CHECK(*acceptance_rate(stream(1000, 4), none, {}) == 0.25);

  const std::vector<ProposalKind> rotate = {ProposalKind::kRotate};
  CHECK_FALSE(acceptance_rate(stream(100, 1), rotate, {}).has_value());
  CHECK_FALSE(acceptance_rate(stream(100, 1), none, {200, std::nullopt}).has_value());

  // window keeps iterations 10..19, where every second entry is accepted
  CHECK(*acceptance_rate(stream(100, 2), none, {10, 20}) == 0.5);

  ChainResult chain;
  chain.burnin = 50;
  chain.trace = stream(100, 1);
  for (int i = 0; i < 50; ++i) chain.trace[i].accepted = false;
  CHECK(*acceptance_rate(chain) == 1.0);
}

TEST_CASE("delta log likelihood trace passes values through") {
  auto t = stream(10, 0);
  t[3].kind = ProposalKind::kRotate;
  t[3].delta_log_il = -1e6;
  const auto all = delta_logil_trace(t);
  REQUIRE(all.size() == 10);
  CHECK(all[3] == -1e6);
  const auto rot = delta_logil_trace(t, ProposalKind::kRotate);
  REQUIRE(rot.size() == 1);
  CHECK(rot[0] == -1e6);
}

TEST_CASE("predictive intervals") {
  const std::vector<double> flat(50, 2.5);
  const Interval c = predictive_interval(flat, 0.9);
  CHECK(c.lower == 2.5);
  CHECK(c.upper == 2.5);

  Rng rng(5);
  std::vector<double> z(200000);
  for (auto& v : z) v = rng.normal();
  const Interval n90 = predictive_interval(z, 0.9);
  // sd of the 5% sample quantile: sqrt(p(1-p)/N) / phi(1.645)
  const double se = std::sqrt(0.05 * 0.95 / z.size()) / 0.10314;
  CHECK(std::abs(n90.lower + 1.644854) < 4 * se);
  CHECK(std::abs(n90.upper - 1.644854) < 4 * se);

  const Interval full = predictive_interval(z, 1.0);
  CHECK(full.lower == *std::min_element(z.begin(), z.end()));
  CHECK(full.upper == *std::max_element(z.begin(), z.end()));

  std::vector<double> small(z.begin(), z.begin() + 100);
  double prev = 0.0;
  for (double level : {0.5, 0.8, 0.9, 0.95, 1.0}) {
    const Interval iv = predictive_interval(small, level);
    CHECK(iv.upper - iv.lower >= prev);
    prev = iv.upper - iv.lower;
  }
  CHECK_THROWS(predictive_interval(std::vector<double>(19, 0.0), 0.9));
}

TEST_CASE("summaries are on the raw scale") {
  ScaledData s;
  s.y_min = 10;
  s.y_max = 14;
  ChainResult c;
  for (int i = 0; i < 40; ++i) c.predictions.push_back({0.0, 0.25});
  const auto sum = summarize_predictions(std::span<const ChainResult>(&c, 1), s, 0.9);
  REQUIRE(sum.size() == 2);
  CHECK(sum[0].mean == doctest::Approx(12.0));
  CHECK(sum[1].lower == doctest::Approx(13.0));
}

TEST_CASE("empirical coverage") {
  const std::vector<Interval> iv = {{0, 1}, {0, 1}, {0, 1}, {0, 1}};
  CHECK(empirical_coverage(iv, std::vector<double>{0.5, 0.2, 1.0, 0.0}) == 1.0);
  CHECK(empirical_coverage(iv, std::vector<double>{2, -1, 1.5, 3}) == 0.0);
  CHECK(empirical_coverage(iv, std::vector<double>{0.5, 2, 0.3, -2}) == 0.5);
  CHECK_THROWS(empirical_coverage(iv, std::vector<double>{0.5}));
}

TEST_CASE("tree census") {
  const std::vector<std::vector<std::string>> draws = {
      {"(1:3:[0.5] [1])"}, {"(1:3:[-2] [7])"}, {"(3:2:[0] [0])"}, {"[4]"}, {"(1:3:[0] [0])"}};
  const Census census = tree_census(draws);
  REQUIRE(census.size() == 3);
  CHECK(census[0] == std::pair<std::string, std::size_t>{"(1:3:[] [])", 3});
  CHECK(root_variable(census[0].first) == 0);
  CHECK(root_variable("(3:2:[] [])") == 2);
  CHECK_FALSE(root_variable("[]").has_value());

  auto reversed = draws;
  std::reverse(reversed.begin(), reversed.end());
  CHECK(tree_census(reversed) == census);

  const std::vector<std::vector<std::string>> stuck(20, {"(2:5:[1] [2])"});
  CHECK(tree_census(stuck).size() == 1);
}

TEST_CASE("csv text") {
  std::vector<TraceEntry> t = {{0, 1, ProposalKind::kRotate, true, true, -0.25}};
  CHECK(traces_csv(t) == "iter,tree,kind,accepted,delta_logil\n0,1,rotate,1,-0.25\n");
  const std::vector<PointSummary> s = {{1, 2, 3}};
  CHECK(intervals_csv(s, std::vector<double>{2.5}) == "id,lower,mean,upper,truth\n0,1,2,3,2.5\n");
  CHECK(census_csv({{"[]", 4}}) == "canonical,count\n[],4\n");
  const auto summary = acceptance_summary(t, {});
  CHECK(summary[static_cast<int>(ProposalKind::kRotate)].accepted == 1);
  CHECK(acceptance_csv(summary).find("rotate,1,1,1,1\n") != std::string::npos);
}
