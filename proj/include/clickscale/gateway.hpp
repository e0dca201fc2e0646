#pragma once

// Chat-style model endpoints and the three roles built on them: planner
// fan-out, judge selection and grounding.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <functional>
#include <future>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "clickscale/action_dsl.hpp"
#include "clickscale/error.hpp"
#include "clickscale/geometry.hpp"
#include "clickscale/grpo.hpp"
#include "clickscale/protocol.hpp"

namespace clickscale {

// ---------------------------------------------------------------------------
// Wire types

struct ContentPart {
  enum class Type { text, screen };
  Type type = Type::text;
  std::string value;
};

struct ChatMessage {
  std::string role;
  std::vector<ContentPart> content;
};

struct ChatRequest {
  std::vector<ChatMessage> messages;
  double temperature = 1.0;
  int n = 1;
  std::optional<std::uint64_t> seed;
  // candidate slot of a fan-out request; in-process only, never serialized
  int slot = 0;
};

struct ChatResponse {
  std::vector<std::string> choices;
};

inline nlohmann::json request_to_json(const ChatRequest& r) {
  nlohmann::json msgs = nlohmann::json::array();
  for (const auto& m : r.messages) {
    nlohmann::json parts = nlohmann::json::array();
    for (const auto& p : m.content) {
      parts.push_back({{"type", p.type == ContentPart::Type::text ? "text" : "screen"},
                       {"value", p.value}});
    }
    msgs.push_back({{"role", m.role}, {"content", parts}});
  }
  nlohmann::json j{{"messages", msgs}, {"temperature", r.temperature}, {"n", r.n}};
  if (r.seed) j["seed"] = *r.seed;
  return j;
}

inline ChatRequest request_from_json(const nlohmann::json& j) {
  ChatRequest r;
  if (!j.is_object() || !j.contains("messages") || !j["messages"].is_array()) {
    throw FormatError(0, "request must be an object with a messages array");
  }
  for (const auto& mj : j["messages"]) {
    ChatMessage m;
    m.role = mj.value("role", std::string{});
    if (!mj.contains("content") || !mj["content"].is_array()) {
      throw FormatError(0, "message content must be an array of parts");
    }
    for (const auto& pj : mj["content"]) {
      const std::string type = pj.value("type", std::string{});
      if (type != "text" && type != "screen") {
        throw FormatError(0, "content part type must be text or screen");
      }
      m.content.push_back({type == "text" ? ContentPart::Type::text : ContentPart::Type::screen,
                           pj.value("value", std::string{})});
    }
    r.messages.push_back(std::move(m));
  }
  if (r.messages.empty()) throw FormatError(0, "request has no messages");
  r.temperature = j.value("temperature", 1.0);
  r.n = j.value("n", 1);
  if (j.contains("seed") && j["seed"].is_number_unsigned()) r.seed = j["seed"].get<std::uint64_t>();
  return r;
}

inline nlohmann::json response_to_json(const ChatResponse& r) {
  nlohmann::json choices = nlohmann::json::array();
  for (const auto& c : r.choices) choices.push_back({{"text", c}});
  return {{"choices", choices}};
}

inline ChatResponse response_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("choices") || !j["choices"].is_array()) {
    throw EndpointError("response has no choices array");
  }
  ChatResponse r;
  for (const auto& c : j["choices"]) {
    if (!c.is_object() || !c.contains("text") || !c["text"].is_string()) {
      throw EndpointError("response choice has no text");
    }
    r.choices.push_back(c["text"].get<std::string>());
  }
  return r;
}

// Implementations must tolerate concurrent calls.
class ChatEndpoint {
 public:
  virtual ~ChatEndpoint() = default;
  virtual ChatResponse complete(const ChatRequest& request) = 0;
};

// Wraps a callable; handy for tests and scripted roles.
class FunctionEndpoint final : public ChatEndpoint {
 public:
  using Fn = std::function<ChatResponse(const ChatRequest&)>;
  explicit FunctionEndpoint(Fn fn) : fn_(std::move(fn)) {}
  ChatResponse complete(const ChatRequest& request) override { return fn_(request); }

 private:
  Fn fn_;
};

// ---------------------------------------------------------------------------
// Prompt templates. Placeholders: {width} {height} {count} {max_index}
// {step} {max_steps}.

struct PromptTemplates {
  std::string planner_system =
      "You operate a desktop computer through the `agent` API (click, type, hotkey, "
      "scroll, drag_and_drop, open, wait, done, fail, hold_and_press, "
      "switch_applications, highlight_text_span, set_cell_values). The screen is "
      "{width}x{height}. This is step {step} of at most {max_steps}. Reply with your "
      "reasoning followed by exactly one line of python calling the agent.";
  std::string judge_system =
      "Pick the single candidate plan that makes the most progress toward the task "
      "on the current screen ({width}x{height}). There are {count} candidates, "
      "indexed 0..{max_index}. Similar candidates do not gain weight by number. Reply "
      "with JSON only: {\"explaining\": <string>, \"index\": <integer>}.";
  std::string grounder_system =
      "Locate the described element on the {width}x{height} screen and reply with "
      "its centre point, formatted exactly as (x,y).";
  std::string judge_reprompt =
      "Your reply could not be used. Respond with a JSON object holding exactly the "
      "keys \"explaining\" and \"index\" and nothing else.";
};

inline std::string fill_template(std::string text, const std::map<std::string, std::string>& vars) {
  for (const auto& [k, v] : vars) {
    const std::string key = "{" + k + "}";
    for (std::size_t pos = text.find(key); pos != std::string::npos;
         pos = text.find(key, pos + v.size())) {
      text.replace(pos, key.size(), v);
    }
  }
  return text;
}

// ---------------------------------------------------------------------------
// Planner fan-out

struct PlanningContext {
  std::string instruction;
  std::string history;  // bounded textual trajectory summary
  std::string screen;   // canonical screen descriptor
  Resolution resolution;
  int step = 0;
  int max_steps = 100;
};

struct ActionProposal {
  enum class Status { ok, request_failed, parse_failed };
  int candidate_index = 0;
  Status status = Status::ok;
  std::string raw_text;
  std::optional<dsl::ParsedAction> parsed;
  std::string error;
  int attempts = 0;

  bool usable() const noexcept { return status == Status::ok && parsed.has_value(); }
};

inline const char* to_string(ActionProposal::Status s) noexcept {
  switch (s) {
    case ActionProposal::Status::ok: return "ok";
    case ActionProposal::Status::request_failed: return "request_failed";
    case ActionProposal::Status::parse_failed: return "parse_failed";
  }
  return "?";
}

struct FanOutConfig {
  double temperature = 1.0;
  int retries = 2;  // extra attempts per slot after the first
  std::uint64_t seed = 0;
};

inline std::map<std::string, std::string> context_vars(const PlanningContext& ctx) {
  return {{"width", std::to_string(ctx.resolution.width)},
          {"height", std::to_string(ctx.resolution.height)},
          {"step", std::to_string(ctx.step + 1)},
          {"max_steps", std::to_string(ctx.max_steps)}};
}

inline ChatRequest planner_request(const PlanningContext& ctx, const PromptTemplates& tpl,
                                   double temperature, std::uint64_t seed, int slot) {
  ChatRequest r;
  r.temperature = temperature;
  r.n = 1;
  r.seed = seed;
  r.slot = slot;
  r.messages.push_back({"system", {{ContentPart::Type::text, fill_template(tpl.planner_system, context_vars(ctx))}}});
  r.messages.push_back(
      {"user",
       {{ContentPart::Type::text, "Task: " + ctx.instruction},
        {ContentPart::Type::text, "History:\n" + (ctx.history.empty() ? std::string("(none)") : ctx.history)},
        {ContentPart::Type::screen, ctx.screen}}});
  return r;
}

// Issues K planner requests concurrently. The result always has K entries in
// candidate-index order; a slot whose request keeps failing is marked
// request_failed. Throws EndpointError only if every slot failed.
inline std::vector<ActionProposal> request_proposals(ChatEndpoint& planner,
                                                     const PlanningContext& ctx, int k,
                                                     const FanOutConfig& cfg,
                                                     const PromptTemplates& tpl = {}) {
  if (k < 1) throw ContractError("request_proposals: K must be >= 1");
  auto run_slot = [&](int slot) {
    ActionProposal p;
    p.candidate_index = slot;
    const ChatRequest req = planner_request(
        ctx, tpl, cfg.temperature,
        derive_seed(cfg.seed, {static_cast<std::uint64_t>(ctx.step), static_cast<std::uint64_t>(slot), 0x91}),
        slot);
    for (int attempt = 0; attempt <= cfg.retries; ++attempt) {
      ++p.attempts;
      try {
        ChatResponse resp = planner.complete(req);
        if (resp.choices.empty()) throw EndpointError("empty choices");
        p.raw_text = std::move(resp.choices.front());
        p.status = ActionProposal::Status::ok;
        p.error.clear();
        break;
      } catch (const std::exception& e) {
        p.status = ActionProposal::Status::request_failed;
        p.error = e.what();
      }
    }
    if (p.status == ActionProposal::Status::ok) {
      try {
        p.parsed = dsl::parse_action(p.raw_text);
      } catch (const ParseError& e) {
        p.status = ActionProposal::Status::parse_failed;
        p.error = e.what();
      }
    }
    return p;
  };

  std::vector<ActionProposal> out(static_cast<std::size_t>(k));
  if (k == 1) {
    out[0] = run_slot(0);
  } else {
    std::vector<std::future<ActionProposal>> futures;
    futures.reserve(out.size());
    for (int s = 0; s < k; ++s) futures.push_back(std::async(std::launch::async, run_slot, s));
    for (int s = 0; s < k; ++s) out[static_cast<std::size_t>(s)] = futures[static_cast<std::size_t>(s)].get();
  }
  const bool any = std::any_of(out.begin(), out.end(), [](const ActionProposal& p) {
    return p.status != ActionProposal::Status::request_failed;
  });
  if (!any) {
    throw EndpointError("all " + std::to_string(k) + " proposal requests failed: " + out.front().error);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Judge

struct JudgeResult {
  int position = 0;  // index into the candidate list that was judged
  JudgeVerdict verdict;
  int calls = 0;
};

inline ChatRequest judge_request(std::span<const ActionProposal> candidates,
                                 const PlanningContext& ctx, const PromptTemplates& tpl,
                                 std::uint64_t seed) {
  ChatRequest r;
  r.temperature = 0.0;
  r.seed = seed;
  auto vars = context_vars(ctx);
  vars["count"] = std::to_string(candidates.size());
  vars["max_index"] = std::to_string(candidates.size() - 1);
  r.messages.push_back({"system", {{ContentPart::Type::text, fill_template(tpl.judge_system, vars)}}});
  ChatMessage user{"user",
                   {{ContentPart::Type::text, "Task: " + ctx.instruction},
                    {ContentPart::Type::text,
                     "History:\n" + (ctx.history.empty() ? std::string("(none)") : ctx.history)}}};
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    user.content.push_back(
        {ContentPart::Type::text, "Candidate " + std::to_string(i) + ":\n" + candidates[i].raw_text});
  }
  user.content.push_back({ContentPart::Type::screen, ctx.screen});
  r.messages.push_back(std::move(user));
  return r;
}

// Chooses one of `candidates`. A single candidate is chosen without calling
// the endpoint. An unusable reply gets `reprompts` more tries, after which the
// first candidate is chosen and the verdict is flagged.
inline JudgeResult judge_select(ChatEndpoint& judge, std::span<const ActionProposal> candidates,
                                const PlanningContext& ctx, std::uint64_t seed,
                                const PromptTemplates& tpl = {}, int reprompts = 1) {
  if (candidates.empty()) throw ContractError("judge_select: no candidates");
  JudgeResult out;
  if (candidates.size() == 1) {
    out.verdict = {"single candidate", 0, false};
    return out;
  }
  ChatRequest req = judge_request(candidates, ctx, tpl, seed);
  std::string last_error;
  for (int attempt = 0; attempt <= reprompts; ++attempt) {
    ++out.calls;
    std::string reply;
    try {
      ChatResponse resp = judge.complete(req);
      if (resp.choices.empty()) throw EndpointError("empty choices");
      reply = resp.choices.front();
      out.verdict = parse_verdict(reply, candidates.size());
      out.position = out.verdict.index;
      return out;
    } catch (const std::exception& e) {
      last_error = e.what();
    }
    req.messages.push_back({"assistant", {{ContentPart::Type::text, reply}}});
    req.messages.push_back({"user", {{ContentPart::Type::text, tpl.judge_reprompt}}});
  }
  out.position = 0;
  out.verdict = {"fallback: " + last_error, 0, true};
  return out;
}

// ---------------------------------------------------------------------------
// Grounding

struct ScreenInput {
  std::string descriptor;
  Resolution resolution;
  // used by feature-based local grounders when present
  std::vector<double> features;
};

class Grounder {
 public:
  virtual ~Grounder() = default;
  virtual Point locate(const std::string& description, const ScreenInput& screen) = 0;
};

inline ChatRequest grounder_request(const std::string& description, const ScreenInput& screen,
                                    const PromptTemplates& tpl) {
  ChatRequest r;
  r.temperature = 0.0;
  r.messages.push_back(
      {"system",
       {{ContentPart::Type::text,
         fill_template(tpl.grounder_system, {{"width", std::to_string(screen.resolution.width)},
                                             {"height", std::to_string(screen.resolution.height)}})}}});
  r.messages.push_back({"user",
                        {{ContentPart::Type::text, description},
                         {ContentPart::Type::screen, screen.descriptor}}});
  return r;
}

// Grounding through a chat endpoint that answers "(x,y)".
class RemoteGrounder final : public Grounder {
 public:
  explicit RemoteGrounder(ChatEndpoint& endpoint, PromptTemplates tpl = {})
      : endpoint_(endpoint), tpl_(std::move(tpl)) {}

  Point locate(const std::string& description, const ScreenInput& screen) override {
    ChatResponse resp;
    try {
      resp = endpoint_.complete(grounder_request(description, screen, tpl_));
    } catch (const GroundingError&) {
      throw;
    } catch (const std::exception& e) {
      throw GroundingError(std::string("grounder request failed: ") + e.what());
    }
    if (resp.choices.size() != 1) {
      throw GroundingError("grounder returned " + std::to_string(resp.choices.size()) + " choices");
    }
    return parse_coordinate(resp.choices.front());
  }

 private:
  ChatEndpoint& endpoint_;
  PromptTemplates tpl_;
};

// Greedy (argmax cell) evaluation of a trained GridPolicy.
class PolicyGrounder final : public Grounder {
 public:
  using Featurizer = std::function<std::vector<double>(const std::string&, const ScreenInput&)>;

  explicit PolicyGrounder(GridPolicy policy, Featurizer featurize = {}, std::int64_t resize_multiple = 28)
      : policy_(std::move(policy)), featurize_(std::move(featurize)), multiple_(resize_multiple) {}

  Point locate(const std::string& description, const ScreenInput& screen) override {
    std::vector<double> f = screen.features;
    if (f.empty()) {
      if (!featurize_) throw GroundingError("local grounder needs features for \"" + description + "\"");
      f = featurize_(description, screen);
    }
    // predict in the resized space, report in original pixels
    const ResizeResult rs = smart_resize(screen.resolution, multiple_);
    const Point p = policy_.cell_center(policy_.greedy_cell(f), rs.resolution);
    return rescale_point(p, 1.0 / rs.scale_x, 1.0 / rs.scale_y);
  }

  const GridPolicy& policy() const noexcept { return policy_; }

 private:
  GridPolicy policy_;
  Featurizer featurize_;
  std::int64_t multiple_;
};

// Resolves a description to an on-screen point or throws GroundingError.
inline Point ground(Grounder& grounder, const std::string& description, const ScreenInput& screen) {
  if (description.empty()) throw GroundingError("empty element description");
  const Point p = grounder.locate(description, screen);
  if (!within(screen.resolution, p)) {
    throw GroundingError("grounded point (" + std::to_string(p.x) + "," + std::to_string(p.y) +
                         ") lies outside the " + std::to_string(screen.resolution.width) + "x" +
                         std::to_string(screen.resolution.height) + " screen");
  }
  return p;
}

}  // namespace clickscale
