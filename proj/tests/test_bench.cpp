#include <filesystem>

#include <gtest/gtest.h>

#include "clickscale/bench.hpp"
#include "oracles.hpp"

using namespace clickscale;

namespace {

const std::filesystem::path kFixtures = CLICKSCALE_FIXTURES;

class FnGrounder final : public Grounder {
 public:
  explicit FnGrounder(std::function<Point(const std::string&, const ScreenInput&)> f) : f_(std::move(f)) {}
  Point locate(const std::string& d, const ScreenInput& s) override { return f_(d, s); }

 private:
  std::function<Point(const std::string&, const ScreenInput&)> f_;
};

std::vector<EvalCase> fixture_cases() {
  std::vector<EvalCase> out;
  for (const auto& r : load_records(kFixtures / "clean_records.jsonl")) out.push_back(eval_case(r));
  return out;
}

}  // namespace

TEST(EvalGrounding, OracleGrounderIsPerfect) {
  const auto cases = fixture_cases();
  FnGrounder g([&](const std::string& d, const ScreenInput&) {
    for (const auto& c : cases) {
      if (c.instruction == d) return c.bbox.center();
    }
    return Point{};
  });
  const auto rep = eval_grounding(g, cases);
  EXPECT_EQ(rep.accuracy(), 1.0);
  EXPECT_TRUE(rep.failures.empty());
}

TEST(EvalGrounding, OriginGrounderScoresZeroWhereNoBoxHoldsOrigin) {
  std::vector<EvalCase> cases;
  for (auto c : fixture_cases()) {
    if (!contains(c.bbox, {0, 0})) cases.push_back(c);
  }
  FnGrounder g([](const std::string&, const ScreenInput&) { return Point{0, 0}; });
  EXPECT_EQ(eval_grounding(g, cases).accuracy(), 0.0);
}

TEST(EvalGrounding, MixedFixtureMatchesRecount) {
  auto cases = fixture_cases();
  cases.resize(10);
  // answer inside the box for the first six, just outside for the rest
  FnGrounder g([&](const std::string& d, const ScreenInput&) {
    for (std::size_t i = 0; i < cases.size(); ++i) {
      if (cases[i].instruction != d) continue;
      return i < 6 ? Point{cases[i].bbox.x_max, cases[i].bbox.y_max}
                   : Point{cases[i].bbox.x_max + 0.5, cases[i].bbox.y_min};
    }
    return Point{};
  });
  const auto rep = eval_grounding(g, cases);
  std::size_t brute = 0;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const Point p = i < 6 ? Point{cases[i].bbox.x_max, cases[i].bbox.y_max}
                          : Point{cases[i].bbox.x_max + 0.5, cases[i].bbox.y_min};
    brute += p.x >= cases[i].bbox.x_min && p.x <= cases[i].bbox.x_max && p.y >= cases[i].bbox.y_min &&
             p.y <= cases[i].bbox.y_max;
  }
  EXPECT_EQ(rep.correct, brute);
  EXPECT_DOUBLE_EQ(rep.accuracy(), 0.6);
  std::size_t sum = 0;
  for (const auto& [k, v] : rep.per_category) sum += v.total;
  EXPECT_EQ(sum, rep.total);
}

TEST(EvalGrounding, FailuresAreListedNotFatal) {
  const auto cases = fixture_cases();
  FnGrounder g([](const std::string& d, const ScreenInput&) -> Point {
    if (d == "Search box") throw GroundingError("model refused");
    return Point{5000, 5000};  // off-screen for everyone else
  });
  const auto rep = eval_grounding(g, cases);
  EXPECT_EQ(rep.correct, 0u);
  EXPECT_EQ(rep.failures.size(), cases.size());
  EXPECT_EQ(rep.failures[2].error, "model refused");
}

TEST(EvalGrounding, UnionIsCountWeightedCombination) {
  const auto cases = fixture_cases();
  FnGrounder g([](const std::string&, const ScreenInput&) { return Point{150, 150}; });
  const std::vector<EvalCase> a(cases.begin(), cases.begin() + 5), b(cases.begin() + 5, cases.end());
  const auto whole = eval_grounding(g, cases);
  const auto merged = combine(eval_grounding(g, a), eval_grounding(g, b));
  EXPECT_EQ(merged.total, whole.total);
  EXPECT_EQ(merged.correct, whole.correct);
  EXPECT_EQ(merged.per_category, whole.per_category);
}

TEST(EvalGrounding, EmptyIsContractError) {
  FnGrounder g([](const std::string&, const ScreenInput&) { return Point{}; });
  EXPECT_THROW(eval_grounding(g, std::vector<EvalCase>{}), ContractError);
}

TEST(Stats, WilsonContainsEstimate) {
  for (std::size_t n : {1u, 10u, 500u}) {
    for (std::size_t s = 0; s <= n; s += std::max<std::size_t>(1, n / 7)) {
      const Interval ci = wilson_interval(s, n);
      const double ph = double(s) / double(n);
      EXPECT_LE(ci.lo, ph + 1e-15);
      EXPECT_GE(ci.hi, ph - 1e-15);
      EXPECT_GE(ci.lo, 0.0);
      EXPECT_LE(ci.hi, 1.0);
    }
  }
  const Interval ci = wilson_interval(50, 100);
  EXPECT_NEAR(ci.lo, 0.4038, 1e-4);
  EXPECT_NEAR(ci.hi, 0.5962, 1e-4);
}

TEST(Stats, TwoProportion) {
  EXPECT_DOUBLE_EQ(two_proportion_p_value(0, 100, 0, 100), 1.0);
  EXPECT_NEAR(two_proportion_p_value(50, 100, 50, 100), 1.0, 1e-12);
  EXPECT_LT(two_proportion_p_value(90, 100, 50, 100), 1e-6);
}

TEST(Chain, ScenarioShape) {
  const Scenario sc = chain_scenario(10);
  EXPECT_EQ(sc.states.size(), 12u);
  EXPECT_TRUE(traps_absorbing(sc));
}

TEST(Sweep, AnalyticValues) {
  EXPECT_NEAR(analytic_success(JudgeModel::oracle, 0.5, 8, 10), 0.9616, 1e-4);
  EXPECT_NEAR(analytic_success(JudgeModel::oracle, 0.5, 1, 10), 0.000977, 1e-6);
  EXPECT_NEAR(analytic_success(JudgeModel::uniform, 0.5, 32, 10), 0.000977, 1e-6);
  EXPECT_DOUBLE_EQ(analytic_success(JudgeModel::oracle, 0.3, 4, 5), oracle::chain_success(0.3, 4, 5, true));
}

TEST(Sweep, SmallRunIsSelfConsistentAndJobIndependent) {
  StubSweep s{chain_scenario(3), 0.5, JudgeModel::oracle, 3};
  SweepConfig cfg;
  cfg.ks = {8, 1};
  cfg.episodes = 12;
  cfg.seed = 4;
  const SweepReport a = sweep_k_stub(cfg, s);
  cfg.jobs = 3;
  const SweepReport b = sweep_k_stub(cfg, s);
  EXPECT_EQ(sweep_report_to_json(a), sweep_report_to_json(b));
  ASSERT_EQ(a.entries.size(), 2u);
  EXPECT_EQ(a.entries[0].k, 1);
  for (const auto& e : a.entries) {
    EXPECT_LE(e.successes, e.episodes);
    EXPECT_EQ(e.success_rate, double(e.successes) / double(e.episodes));
    EXPECT_LE(e.ci.lo, e.success_rate);
    EXPECT_GE(e.ci.hi, e.success_rate);
    EXPECT_TRUE(e.analytic.has_value());
  }
}

TEST(Sweep, RejectsBadInput) {
  SweepConfig cfg;
  cfg.ks = {};
  EXPECT_THROW(sweep_k(cfg, [](const AgentConfig&) { return true; }), ContractError);
  cfg.ks = {1, 1};
  EXPECT_THROW(sweep_k(cfg, [](const AgentConfig&) { return true; }), ContractError);
  cfg.ks = {1};
  cfg.episodes = 0;
  EXPECT_THROW(sweep_k(cfg, [](const AgentConfig&) { return true; }), ContractError);
}

TEST(Sweep, EpisodeExceptionsCountAsFailures) {
  SweepConfig cfg;
  cfg.ks = {1};
  cfg.episodes = 4;
  const auto rep = sweep_k(cfg, [](const AgentConfig&) -> bool { throw EndpointError("x"); });
  EXPECT_EQ(rep.entries[0].errors, 4u);
  EXPECT_EQ(rep.entries[0].successes, 0u);
}
