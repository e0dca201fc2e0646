#pragma once

// Offline stand-ins for the planner, judge and grounder endpoints.
//
// Scripts map a screen state id to what a planner should do there:
//
//   "state": "agent.done()"                                  always this
//   "state": {"correct": "...", "wrong": "..."}              Bernoulli(p)
//   "state": [ {"correct": ..., "when_buffer": {"f": "x"}},  first rule
//              {"correct": ..., "history_lacks": "wait("},   that matches
//              {"correct": ...} ]
//
// The scripted planner emits `correct` with probability p, else `wrong`.
// The oracle judge picks the first candidate equal to `correct`.

#include <algorithm>
#include <cctype>
#include <optional>
#include <random>
#include <string>

#include <nlohmann/json.hpp>

#include "clickscale/action_dsl.hpp"
#include "clickscale/gateway.hpp"
#include "clickscale/protocol.hpp"
#include "clickscale/rng.hpp"

namespace clickscale::stub {

struct ScriptRule {
  std::string correct;
  std::optional<std::string> wrong;
};

inline const std::string* screen_part(const ChatRequest& r) {
  for (auto m = r.messages.rbegin(); m != r.messages.rend(); ++m) {
    for (auto p = m->content.rbegin(); p != m->content.rend(); ++p) {
      if (p->type == ContentPart::Type::screen) return &p->value;
    }
  }
  return nullptr;
}

inline std::string text_part_with_prefix(const ChatRequest& r, const std::string& prefix) {
  for (const auto& m : r.messages) {
    for (const auto& p : m.content) {
      if (p.type == ContentPart::Type::text && p.value.rfind(prefix, 0) == 0) {
        return p.value.substr(prefix.size());
      }
    }
  }
  return {};
}

inline nlohmann::json screen_of(const ChatRequest& r) {
  const std::string* s = screen_part(r);
  if (!s) throw EndpointError("stub: request carries no screen part");
  try {
    return nlohmann::json::parse(*s);
  } catch (const nlohmann::json::parse_error&) {
    throw EndpointError("stub: screen part is not a descriptor");
  }
}

inline bool rule_matches(const nlohmann::json& rule, const nlohmann::json& screen,
                         const std::string& history) {
  if (auto it = rule.find("when_buffer"); it != rule.end()) {
    const nlohmann::json buffers = screen.value("buffers", nlohmann::json::object());
    for (const auto& [k, v] : it->items()) {
      const std::string have = buffers.contains(k) ? buffers[k].get<std::string>() : std::string{};
      if (have != v.get<std::string>()) return false;
    }
  }
  if (auto it = rule.find("history_lacks"); it != rule.end()) {
    if (history.find(it->get<std::string>()) != std::string::npos) return false;
  }
  if (auto it = rule.find("history_has"); it != rule.end()) {
    if (history.find(it->get<std::string>()) == std::string::npos) return false;
  }
  return true;
}

inline std::optional<ScriptRule> resolve(const nlohmann::json& script, const nlohmann::json& screen,
                                         const std::string& history) {
  const std::string state = screen.value("state", std::string{});
  if (!script.is_object() || !script.contains(state)) return std::nullopt;
  const nlohmann::json& entry = script[state];
  auto from_obj = [](const nlohmann::json& o) {
    ScriptRule r{o.at("correct").get<std::string>(), std::nullopt};
    if (o.contains("wrong")) r.wrong = o["wrong"].get<std::string>();
    return r;
  };
  if (entry.is_string()) return ScriptRule{entry.get<std::string>(), std::nullopt};
  if (entry.is_object()) return rule_matches(entry, screen, history) ? std::optional(from_obj(entry)) : std::nullopt;
  if (entry.is_array()) {
    for (const auto& rule : entry) {
      if (rule.is_string()) return ScriptRule{rule.get<std::string>(), std::nullopt};
      if (rule_matches(rule, screen, history)) return from_obj(rule);
    }
  }
  return std::nullopt;
}

inline std::string fenced(const std::string& line) {
  return "Thought: scripted proposal.\n```python\n" + line + "\n```";
}

// Planner whose proposals are independently correct with probability p.
class ScriptedPlanner final : public ChatEndpoint {
 public:
  ScriptedPlanner(nlohmann::json script, double p) : script_(std::move(script)), p_(p) {}

  ChatResponse complete(const ChatRequest& r) override {
    const nlohmann::json screen = screen_of(r);
    const std::string history = text_part_with_prefix(r, "History:\n");
    const auto rule = resolve(script_, screen, history);
    if (!rule) return {{fenced("agent.fail()")}};
    std::mt19937_64 rng(r.seed.value_or(static_cast<std::uint64_t>(r.slot)));
    const bool correct = uniform01(rng) < p_;
    return {{fenced(correct || !rule->wrong ? rule->correct : *rule->wrong)}};
  }

 private:
  nlohmann::json script_;
  double p_;
};

inline std::optional<std::string> canonical(const std::string& text) {
  try {
    return dsl::to_source(dsl::parse_action(text));
  } catch (const ParseError&) {
    return std::nullopt;
  }
}

inline std::vector<std::string> judge_candidates(const ChatRequest& r) {
  std::vector<std::string> out;
  for (const auto& m : r.messages) {
    if (m.role != "user") continue;
    for (const auto& p : m.content) {
      const std::string prefix = "Candidate " + std::to_string(out.size()) + ":\n";
      if (p.type == ContentPart::Type::text && p.value.rfind(prefix, 0) == 0) {
        out.push_back(p.value.substr(prefix.size()));
      }
    }
    if (!out.empty()) break;
  }
  return out;
}

inline ChatResponse verdict_response(const std::string& why, std::size_t index) {
  return {{"```json\n" + nlohmann::json{{"explaining", why}, {"index", index}}.dump() + "\n```"}};
}

// Picks a candidate matching the script's correct action whenever one exists.
class OracleJudge final : public ChatEndpoint {
 public:
  explicit OracleJudge(nlohmann::json script) : script_(std::move(script)) {}

  ChatResponse complete(const ChatRequest& r) override {
    const nlohmann::json screen = screen_of(r);
    const auto cands = judge_candidates(r);
    if (cands.empty()) throw EndpointError("oracle judge: no candidates in request");
    const auto rule = resolve(script_, screen, text_part_with_prefix(r, "History:\n"));
    if (rule) {
      const auto want = canonical(rule->correct);
      for (std::size_t i = 0; i < cands.size(); ++i) {
        if (want && canonical(cands[i]) == want) return verdict_response("matches the scripted correct action", i);
      }
    }
    return verdict_response("no candidate matches; taking the first", 0);
  }

 private:
  nlohmann::json script_;
};

// Uniformly random choice, seeded by the request.
class RandomJudge final : public ChatEndpoint {
 public:
  ChatResponse complete(const ChatRequest& r) override {
    const auto cands = judge_candidates(r);
    if (cands.empty()) throw EndpointError("random judge: no candidates in request");
    std::mt19937_64 rng(r.seed.value_or(0));
    const auto i = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(cands.size()));
    return verdict_response("uniform random pick", std::min(i, cands.size() - 1));
  }
};

inline std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

// Answers "(x,y)" with the centre of the element whose label best matches the
// description: exact (case-insensitive) label first, then substring either
// way. Unknown descriptions get the screen origin.
class LabelGrounder final : public ChatEndpoint {
 public:
  ChatResponse complete(const ChatRequest& r) override {
    const nlohmann::json screen = screen_of(r);
    std::string description;
    for (const auto& m : r.messages) {
      if (m.role != "user") continue;
      for (const auto& p : m.content) {
        if (p.type == ContentPart::Type::text) {
          description = p.value;
          break;
        }
      }
    }
    const std::string want = lower(description);
    const nlohmann::json elements = screen.value("elements", nlohmann::json::array());
    const nlohmann::json* best = nullptr;
    for (const auto& e : elements) {
      if (lower(e.value("label", std::string{})) == want) {
        best = &e;
        break;
      }
    }
    if (!best) {
      for (const auto& e : elements) {
        const std::string label = lower(e.value("label", std::string{}));
        if (!label.empty() && (want.find(label) != std::string::npos || label.find(want) != std::string::npos)) {
          best = &e;
          break;
        }
      }
    }
    if (!best) return {{"(0,0)"}};
    const auto& b = (*best)["bbox"];
    const Point c{(b[0].get<double>() + b[2].get<double>()) / 2.0,
                  (b[1].get<double>() + b[3].get<double>()) / 2.0};
    return {{format_coordinate(c)}};
  }
};

}  // namespace clickscale::stub
