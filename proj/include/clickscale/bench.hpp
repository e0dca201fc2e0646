#pragma once

// Evaluation harness: grounding accuracy, K-sweeps over simulated scenarios
// and the small amount of statistics needed to report them.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "clickscale/dataset.hpp"
#include "clickscale/gateway.hpp"
#include "clickscale/grpo.hpp"
#include "clickscale/orchestrator.hpp"
#include "clickscale/rng.hpp"
#include "clickscale/sim_env.hpp"
#include "clickscale/stubs.hpp"

namespace clickscale {

// ---------------------------------------------------------------------------
// Statistics

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

inline constexpr double kZ95 = 1.959963984540054;

inline Interval wilson_interval(std::size_t successes, std::size_t n, double z = kZ95) {
  if (n == 0) return {0.0, 1.0};
  const double nn = static_cast<double>(n);
  const double ph = static_cast<double>(successes) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double centre = (ph + z2 / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(ph * (1.0 - ph) / nn + z2 / (4.0 * nn * nn)) / denom;
  // the closed form leaves rounding dust at the extremes
  return {successes == 0 ? 0.0 : std::max(0.0, centre - half),
          successes == n ? 1.0 : std::min(1.0, centre + half)};
}

// Two-sided pooled z-test for equal proportions. Returns the p-value; when
// the pooled rate is 0 or 1 the samples cannot differ and 1 is returned.
inline double two_proportion_p_value(std::size_t s1, std::size_t n1, std::size_t s2, std::size_t n2) {
  if (n1 == 0 || n2 == 0) throw ContractError("two_proportion_p_value: empty sample");
  const double a = static_cast<double>(n1), b = static_cast<double>(n2);
  const double pooled = static_cast<double>(s1 + s2) / (a + b);
  const double var = pooled * (1.0 - pooled) * (1.0 / a + 1.0 / b);
  if (var <= 0.0) return 1.0;
  const double z = (static_cast<double>(s1) / a - static_cast<double>(s2) / b) / std::sqrt(var);
  return std::erfc(std::abs(z) / std::sqrt(2.0));
}

inline double binomial_sigma(double p, std::size_t n) {
  return std::sqrt(p * (1.0 - p) / static_cast<double>(n));
}

// ---------------------------------------------------------------------------
// Grounding evaluation

struct EvalCase {
  std::string instruction;
  BoundingBox bbox;
  Resolution resolution;
  std::optional<std::string> category;
  std::vector<double> features;
  std::string screen;  // descriptor handed to the grounder
};

inline EvalCase eval_case(const GroundingRecord& r) {
  return {r.instruction, r.bbox, r.resolution, r.category, {},
          nlohmann::json{{"screen_id", r.screen_id}, {"image", r.image_ref}}.dump()};
}

inline EvalCase eval_case(const TrainingExample& ex, std::string instruction = "target") {
  return {std::move(instruction), ex.bbox, ex.resolution, ex.category, ex.features, "{}"};
}

struct CategoryCount {
  std::size_t total = 0;
  std::size_t correct = 0;
  friend bool operator==(const CategoryCount&, const CategoryCount&) = default;
};

struct EvalFailure {
  std::size_t index = 0;
  std::string error;
};

struct GroundingEvalReport {
  std::size_t total = 0;
  std::size_t correct = 0;
  std::map<std::string, CategoryCount> per_category;
  std::vector<EvalFailure> failures;

  double accuracy() const noexcept {
    return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
  }
};

inline const std::string kUncategorized = "uncategorized";

inline GroundingEvalReport eval_grounding(Grounder& grounder, std::span<const EvalCase> cases) {
  if (cases.empty()) throw ContractError("eval_grounding: no records");
  GroundingEvalReport rep;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const EvalCase& c = cases[i];
    bool ok = false;
    try {
      const Point p = ground(grounder, c.instruction, {c.screen, c.resolution, c.features});
      ok = contains(c.bbox, p);
    } catch (const Error& e) {
      rep.failures.push_back({i, e.what()});
    }
    ++rep.total;
    auto& cat = rep.per_category[c.category.value_or(kUncategorized)];
    ++cat.total;
    if (ok) {
      ++rep.correct;
      ++cat.correct;
    }
  }
  return rep;
}

// Report of the concatenation a ++ b; failure indices of b are shifted.
inline GroundingEvalReport combine(const GroundingEvalReport& a, const GroundingEvalReport& b) {
  GroundingEvalReport out = a;
  out.total += b.total;
  out.correct += b.correct;
  for (const auto& [k, v] : b.per_category) {
    out.per_category[k].total += v.total;
    out.per_category[k].correct += v.correct;
  }
  for (const auto& f : b.failures) out.failures.push_back({f.index + a.total, f.error});
  return out;
}

inline nlohmann::json eval_report_to_json(const GroundingEvalReport& r) {
  nlohmann::json cats = nlohmann::json::object();
  for (const auto& [k, v] : r.per_category) {
    cats[k] = {{"total", v.total},
               {"correct", v.correct},
               {"accuracy", static_cast<double>(v.correct) / static_cast<double>(v.total)}};
  }
  nlohmann::json fails = nlohmann::json::array();
  for (const auto& f : r.failures) fails.push_back({{"index", f.index}, {"error", f.error}});
  return {{"total", r.total},
          {"correct", r.correct},
          {"accuracy", r.accuracy()},
          {"per_category", cats},
          {"failures", fails}};
}

// ---------------------------------------------------------------------------
// Chain scenario: L screens, each with a button that advances and a button
// that breaks the task for good.

inline Scenario chain_scenario(int length) {
  if (length < 1) throw ContractError("chain_scenario: length must be >= 1");
  Scenario sc;
  sc.resolution = {1280, 720};
  sc.instruction = "Press Continue until the wizard finishes.";
  auto state_name = [](int i) { return "page" + std::to_string(i); };
  for (int i = 0; i < length; ++i) {
    ScreenState st;
    st.id = state_name(i);
    st.elements.push_back({"continue", {100, 300, 300, 360}, "Continue button", ElementKind::button});
    st.elements.push_back({"reset", {700, 300, 900, 360}, "Reset button", ElementKind::button});
    st.elements.push_back({"title", {100, 40, 1180, 100}, "Page " + std::to_string(i + 1), ElementKind::text});
    sc.states.emplace(st.id, st);
    sc.transitions.push_back({st.id, {TriggerKind::click, "continue"}, i + 1 == length ? "finished" : state_name(i + 1)});
    sc.transitions.push_back({st.id, {TriggerKind::click, "reset"}, "broken"});
    sc.script[st.id] = {{"correct", "agent.click('Continue button')"},
                        {"wrong", "agent.click('Reset button')"}};
  }
  sc.states.emplace("finished", ScreenState{"finished", {{"msg", {100, 40, 1180, 100}, "All done", ElementKind::text}}});
  sc.states.emplace("broken", ScreenState{"broken", {{"msg", {100, 40, 1180, 100}, "Setup was reset", ElementKind::text}}});
  sc.script["broken"] = "agent.fail()";
  sc.script["finished"] = "agent.done()";
  sc.initial = state_name(0);
  sc.success.push_back({"finished", std::nullopt, std::nullopt});
  sc.traps.insert("broken");
  sc.auto_success = true;
  validate(sc);
  return sc;
}

// ---------------------------------------------------------------------------
// K-sweep

enum class JudgeModel { oracle, uniform };

inline const char* to_string(JudgeModel j) noexcept {
  return j == JudgeModel::oracle ? "oracle" : "uniform";
}

struct SweepConfig {
  std::vector<int> ks{1, 8, 16, 32};
  int episodes = 100;
  std::uint64_t seed = 0;
  int jobs = 1;
  int max_steps = 100;
  AgentConfig agent{};  // k, max_steps and seed are overwritten per episode
};

struct SweepEntry {
  int k = 0;
  std::size_t episodes = 0;
  std::size_t successes = 0;
  std::size_t errors = 0;  // episodes that threw; counted as failures
  double success_rate = 0.0;
  Interval ci;
  std::optional<double> analytic;
};

struct SweepReport {
  std::vector<SweepEntry> entries;
  std::optional<double> p;
  std::optional<int> horizon;
  std::string judge;
};

// Runs one episode and reports success. Called concurrently.
using EpisodeFn = std::function<bool(const AgentConfig&)>;

inline double analytic_success(JudgeModel judge, double p, int k, int horizon) {
  const double step = judge == JudgeModel::oracle ? 1.0 - std::pow(1.0 - p, k) : p;
  return std::pow(step, horizon);
}

// Runs `cfg.episodes` isolated episodes per K on up to `cfg.jobs` threads.
// Episode e of K uses seed derive_seed(cfg.seed, {K, e}), so results do not
// depend on scheduling.
inline SweepReport sweep_k(const SweepConfig& cfg, const EpisodeFn& episode) {
  if (cfg.ks.empty()) throw ContractError("sweep_k: no K values");
  if (cfg.episodes < 1) throw ContractError("sweep_k: episodes must be >= 1");
  std::vector<int> ks = cfg.ks;
  std::sort(ks.begin(), ks.end());
  if (std::adjacent_find(ks.begin(), ks.end()) != ks.end()) throw ContractError("sweep_k: duplicate K");
  if (ks.front() < 1) throw ContractError("sweep_k: K must be >= 1");

  SweepReport rep;
  const std::size_t n = static_cast<std::size_t>(cfg.episodes);
  for (int k : ks) {
    std::vector<signed char> outcome(n, 0);  // 1 success, 0 failure, -1 error
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t e = next++; e < n; e = next++) {
        AgentConfig a = cfg.agent;
        a.k = k;
        a.max_steps = cfg.max_steps;
        a.seed = derive_seed(cfg.seed, {static_cast<std::uint64_t>(k), e});
        try {
          outcome[e] = episode(a) ? 1 : 0;
        } catch (const std::exception&) {
          outcome[e] = -1;
        }
      }
    };
    const int jobs = std::max(1, std::min<int>(cfg.jobs, cfg.episodes));
    if (jobs == 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
      for (auto& t : pool) t.join();
    }
    SweepEntry en;
    en.k = k;
    en.episodes = n;
    for (signed char o : outcome) {
      en.successes += o == 1;
      en.errors += o == -1;
    }
    en.success_rate = static_cast<double>(en.successes) / static_cast<double>(n);
    en.ci = wilson_interval(en.successes, n);
    rep.entries.push_back(en);
  }
  return rep;
}

struct StubSweep {
  Scenario scenario;
  double p = 0.5;
  JudgeModel judge = JudgeModel::oracle;
  // set when the scenario is a chain of this many decisions
  std::optional<int> horizon;
};

// Sweep with the scripted Bernoulli planner, a stub judge and the label
// grounder; attaches the analytic curve when the horizon is known.
inline SweepReport sweep_k_stub(const SweepConfig& cfg, const StubSweep& s) {
  stub::ScriptedPlanner planner(s.scenario.script, s.p);
  stub::OracleJudge oracle(s.scenario.script);
  stub::RandomJudge uniform;
  stub::LabelGrounder label_endpoint;
  RemoteGrounder grounder(label_endpoint);
  ChatEndpoint& judge = s.judge == JudgeModel::oracle ? static_cast<ChatEndpoint&>(oracle)
                                                      : static_cast<ChatEndpoint&>(uniform);
  SweepReport rep = sweep_k(cfg, [&](const AgentConfig& a) {
    Clients clients{planner, judge, grounder};
    return run_task(s.scenario, clients, a).success;
  });
  rep.p = s.p;
  rep.horizon = s.horizon;
  rep.judge = to_string(s.judge);
  if (s.horizon) {
    for (auto& e : rep.entries) e.analytic = analytic_success(s.judge, s.p, e.k, *s.horizon);
  }
  return rep;
}

inline nlohmann::json sweep_report_to_json(const SweepReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& e : r.entries) {
    nlohmann::json row{{"k", e.k},
                       {"episodes", e.episodes},
                       {"successes", e.successes},
                       {"errors", e.errors},
                       {"success_rate", e.success_rate},
                       {"ci95", {e.ci.lo, e.ci.hi}}};
    row["analytic"] = e.analytic ? nlohmann::json(*e.analytic) : nlohmann::json(nullptr);
    rows.push_back(std::move(row));
  }
  nlohmann::json j{{"entries", rows}, {"judge", r.judge}};
  j["p"] = r.p ? nlohmann::json(*r.p) : nlohmann::json(nullptr);
  j["horizon"] = r.horizon ? nlohmann::json(*r.horizon) : nlohmann::json(nullptr);
  return j;
}

}  // namespace clickscale
