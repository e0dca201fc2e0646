#pragma once

// The agent loop: per step, sample K proposals concurrently, let the judge
// pick one, ground it if it targets an element, execute it against the
// environment, and record everything.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "clickscale/action_dsl.hpp"
#include "clickscale/gateway.hpp"
#include "clickscale/rng.hpp"
#include "clickscale/sim_env.hpp"

namespace clickscale {

enum class StepErrorPolicy { replan, abort };

struct AgentConfig {
  int k = 8;
  int max_steps = 100;
  double proposal_temperature = 1.0;
  int proposal_retries = 2;
  int judge_reprompts = 1;
  std::uint64_t seed = 0;
  int history_window = 10;
  // a run ends with step_error once this many steps have failed
  int error_cap = 5;
  StepErrorPolicy on_error = StepErrorPolicy::replan;
  // false removes the judging phase entirely: candidate 0 is executed
  bool judge_enabled = true;

  void validate() const {
    if (k < 1) throw ContractError("K must be >= 1");
    if (max_steps < 1) throw ContractError("max_steps must be >= 1");
    if (proposal_retries < 0 || judge_reprompts < 0) throw ContractError("retry counts must be >= 0");
    if (history_window < 0) throw ContractError("history_window must be >= 0");
    if (error_cap < 1) throw ContractError("error_cap must be >= 1");
  }
};

struct Clients {
  ChatEndpoint& planner;
  ChatEndpoint& judge;
  Grounder& grounder;
  PromptTemplates templates{};
};

struct PhaseLatency {
  double propose_ms = 0.0;
  double judge_ms = 0.0;
  double ground_ms = 0.0;
  double env_ms = 0.0;
};

struct TrajectoryStep {
  int step_index = 0;
  std::string screen_hash;
  std::vector<ActionProposal> candidates;
  // present only when the judge endpoint was actually consulted
  std::optional<JudgeVerdict> verdict;
  int judge_calls = 0;
  std::optional<int> chosen;  // candidate_index of the executed proposal
  std::optional<std::string> action;
  std::vector<Point> grounded_points;
  int grounding_calls = 0;
  std::optional<EnvEvent> event;
  std::optional<std::string> error;
  PhaseLatency latency;
};

enum class Termination { success, fail_action, budget_exhausted, step_error };

inline const char* to_string(Termination t) noexcept {
  switch (t) {
    case Termination::success: return "success";
    case Termination::fail_action: return "fail_action";
    case Termination::budget_exhausted: return "budget_exhausted";
    case Termination::step_error: return "step_error";
  }
  return "?";
}

struct RunResult {
  bool success = false;
  Termination termination = Termination::budget_exhausted;
  std::vector<TrajectoryStep> steps;

  int grounding_calls() const noexcept {
    int n = 0;
    for (const auto& s : steps) n += s.grounding_calls;
    return n;
  }
};

struct StepOutcome {
  EnvState state;
  TrajectoryStep step;
  bool terminal = false;
};

inline std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace detail {

using Clock = std::chrono::steady_clock;

inline double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

}  // namespace detail

inline StepOutcome execute_step(const Scenario& sc, const EnvState& state, Clients& clients,
                                const AgentConfig& cfg, int step_index,
                                const std::string& instruction, const std::string& history) {
  StepOutcome out;
  out.state = state;
  TrajectoryStep& rec = out.step;
  rec.step_index = step_index;

  const std::string descriptor = render_descriptor(sc, state);
  rec.screen_hash = fnv1a_hex(descriptor);
  const PlanningContext ctx{instruction, history, descriptor, sc.resolution, step_index, cfg.max_steps};

  auto t0 = detail::Clock::now();
  try {
    rec.candidates = request_proposals(clients.planner, ctx, cfg.k,
                                       {cfg.proposal_temperature, cfg.proposal_retries, cfg.seed},
                                       clients.templates);
  } catch (const EndpointError& e) {
    rec.latency.propose_ms = detail::ms_since(t0);
    rec.error = e.what();
    return out;
  }
  rec.latency.propose_ms = detail::ms_since(t0);

  std::vector<ActionProposal> surviving;
  for (const auto& p : rec.candidates) {
    if (p.usable()) surviving.push_back(p);
  }
  if (surviving.empty()) {
    rec.error = "no usable proposals among " + std::to_string(rec.candidates.size());
    return out;
  }

  t0 = detail::Clock::now();
  int position = 0;
  if (cfg.judge_enabled) {
    const JudgeResult jr = judge_select(
        clients.judge, surviving, ctx,
        derive_seed(cfg.seed, {static_cast<std::uint64_t>(step_index), 0x7d}), clients.templates,
        cfg.judge_reprompts);
    position = jr.position;
    rec.judge_calls = jr.calls;
    if (jr.calls > 0) rec.verdict = jr.verdict;
  }
  rec.latency.judge_ms = detail::ms_since(t0);

  const ActionProposal& chosen = surviving[static_cast<std::size_t>(position)];
  rec.chosen = chosen.candidate_index;
  const dsl::ParsedAction& parsed = *chosen.parsed;
  rec.action = dsl::to_source(parsed);

  t0 = detail::Clock::now();
  const ScreenInput screen{descriptor, sc.resolution, {}};
  try {
    for (const auto& target : dsl::grounding_targets(parsed)) {
      ++rec.grounding_calls;
      rec.grounded_points.push_back(ground(clients.grounder, target, screen));
    }
  } catch (const GroundingError& e) {
    rec.latency.ground_ms = detail::ms_since(t0);
    rec.error = e.what();
    return out;
  }
  rec.latency.ground_ms = detail::ms_since(t0);

  t0 = detail::Clock::now();
  try {
    StepResult sr = step(sc, state, dsl::to_env_action(parsed, rec.grounded_points));
    out.state = std::move(sr.state);
    rec.event = sr.event;
    out.terminal = sr.event.terminal();
  } catch (const EnvError& e) {
    rec.error = e.what();
  }
  rec.latency.env_ms = detail::ms_since(t0);
  return out;
}

// The planner sees the executed action text of the last `window` steps.
inline std::string summarize(const std::deque<std::string>& lines) {
  std::string out;
  for (const auto& l : lines) {
    if (!out.empty()) out += '\n';
    out += l;
  }
  return out;
}

inline RunResult run_task(const Scenario& sc, Clients& clients, const AgentConfig& cfg,
                          std::optional<std::string> instruction = std::nullopt) {
  cfg.validate();
  const std::string task = instruction.value_or(sc.instruction);
  RunResult result;
  EnvState state = reset(sc);
  std::deque<std::string> history;
  int errors = 0;

  for (int i = 0; i < cfg.max_steps; ++i) {
    StepOutcome o = execute_step(sc, state, clients, cfg, i, task, summarize(history));
    const bool failed = o.step.error.has_value();
    std::string line = "Step " + std::to_string(i + 1) + ": " +
                       (o.step.action ? *o.step.action : std::string("(no action: step error)"));
    result.steps.push_back(std::move(o.step));
    if (failed) {
      ++errors;
      if (cfg.on_error == StepErrorPolicy::abort || errors >= cfg.error_cap) {
        result.termination = Termination::step_error;
        return result;
      }
    }
    if (cfg.history_window > 0) {
      history.push_back(std::move(line));
      while (history.size() > static_cast<std::size_t>(cfg.history_window)) history.pop_front();
    }
    state = std::move(o.state);
    if (o.terminal) {
      result.success = result.steps.back().event->kind == EventKind::success;
      result.termination = result.success ? Termination::success : Termination::fail_action;
      return result;
    }
  }
  result.termination = Termination::budget_exhausted;
  return result;
}

// ---------------------------------------------------------------------------
// Trajectory log: one JSON object per step, then {"result": ...}.

inline nlohmann::json step_to_json(const TrajectoryStep& s, bool include_timing) {
  using nlohmann::json;
  json cands = json::array();
  for (const auto& c : s.candidates) {
    cands.push_back({{"index", c.candidate_index},
                     {"status", to_string(c.status)},
                     {"text", c.raw_text},
                     {"action", c.parsed ? json(dsl::to_source(*c.parsed)) : json(nullptr)},
                     {"error", c.error},
                     {"attempts", c.attempts}});
  }
  json points = json::array();
  for (const auto& p : s.grounded_points) points.push_back({p.x, p.y});
  json j{{"step", s.step_index},
         {"screen", s.screen_hash},
         {"candidates", cands},
         {"verdict", s.verdict ? json{{"explaining", s.verdict->explaining},
                                      {"index", s.verdict->index},
                                      {"fallback", s.verdict->fallback}}
                               : json(nullptr)},
         {"judge_calls", s.judge_calls},
         {"chosen", s.chosen ? json(*s.chosen) : json(nullptr)},
         {"action", s.action ? json(*s.action) : json(nullptr)},
         {"grounded_point", points.empty() ? json(nullptr) : points[0]},
         {"grounded_points", points},
         {"grounding_calls", s.grounding_calls},
         {"event", s.event ? json{{"kind", to_string(s.event->kind)}, {"detail", s.event->detail}}
                           : json(nullptr)},
         {"error", s.error ? json(*s.error) : json(nullptr)}};
  if (include_timing) {
    j["latency_ms"] = {{"propose", s.latency.propose_ms},
                       {"judge", s.latency.judge_ms},
                       {"ground", s.latency.ground_ms},
                       {"env", s.latency.env_ms}};
  }
  return j;
}

inline nlohmann::json result_summary_json(const RunResult& r) {
  return {{"success", r.success},
          {"termination", to_string(r.termination)},
          {"steps", r.steps.size()},
          {"grounding_calls", r.grounding_calls()}};
}

inline std::string trajectory_log(const RunResult& r, bool include_timing = false) {
  std::string out;
  for (const auto& s : r.steps) {
    out += step_to_json(s, include_timing).dump();
    out += '\n';
  }
  out += nlohmann::json{{"result", result_summary_json(r)}}.dump();
  out += '\n';
  return out;
}

}  // namespace clickscale
