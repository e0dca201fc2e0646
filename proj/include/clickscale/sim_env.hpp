#pragma once

#include <algorithm>
#include <cctype>
#include <deque>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "clickscale/error.hpp"
#include "clickscale/geometry.hpp"
#include "clickscale/json_io.hpp"

namespace clickscale {

// ---------------------------------------------------------------------------
// Actions the environment understands. Anything needing a coordinate carries
// an already-grounded Point.

namespace action {

struct Click {
  Point point;
  std::string button = "left";
  int count = 1;
  friend bool operator==(const Click&, const Click&) = default;
};

struct Type {
  std::optional<Point> target;  // empty: type into the focused field
  std::string content;
  bool overwrite = false;
  bool enter = false;
  friend bool operator==(const Type&, const Type&) = default;
};

struct Hotkey {
  std::vector<std::string> keys;
  friend bool operator==(const Hotkey&, const Hotkey&) = default;
};

struct Scroll {
  std::optional<Point> target;
  int amount = 0;
  bool shift = false;
  friend bool operator==(const Scroll&, const Scroll&) = default;
};

struct Drag {
  Point from;
  Point to;
  friend bool operator==(const Drag&, const Drag&) = default;
};

struct Open {
  std::string name;
  friend bool operator==(const Open&, const Open&) = default;
};

struct Wait {
  double seconds = 0.0;
  friend bool operator==(const Wait&, const Wait&) = default;
};

// Accepted and recorded, never changes state (highlighting, cell edits).
struct Passive {
  std::string what;
  friend bool operator==(const Passive&, const Passive&) = default;
};

struct Done {
  friend bool operator==(const Done&, const Done&) = default;
};

struct Fail {
  friend bool operator==(const Fail&, const Fail&) = default;
};

}  // namespace action

using EnvAction =
    std::variant<action::Click, action::Type, action::Hotkey, action::Scroll,
                 action::Drag, action::Open, action::Wait, action::Passive,
                 action::Done, action::Fail>;

// ---------------------------------------------------------------------------

enum class ElementKind { button, field, icon, text };

inline const char* to_string(ElementKind k) noexcept {
  switch (k) {
    case ElementKind::button: return "button";
    case ElementKind::field: return "field";
    case ElementKind::icon: return "icon";
    case ElementKind::text: return "text";
  }
  return "?";
}

inline std::optional<ElementKind> element_kind_from(const std::string& s) {
  if (s == "button") return ElementKind::button;
  if (s == "field") return ElementKind::field;
  if (s == "icon") return ElementKind::icon;
  if (s == "text") return ElementKind::text;
  return std::nullopt;
}

struct Element {
  std::string id;
  BoundingBox bbox;
  std::string label;
  ElementKind kind = ElementKind::button;
};

// Elements are kept in declaration order, which is also the z-order: the
// last declared element is on top.
struct ScreenState {
  std::string id;
  std::vector<Element> elements;

  const Element* find(const std::string& element_id) const {
    for (const auto& e : elements) {
      if (e.id == element_id) return &e;
    }
    return nullptr;
  }
};

enum class TriggerKind { click, hotkey, type };

struct Trigger {
  TriggerKind kind = TriggerKind::click;
  // element id for click/type, normalized "ctrl+s" for hotkey
  std::string key;

  auto operator<=>(const Trigger&) const = default;
};

struct Transition {
  std::string from;
  Trigger trigger;
  std::string to;
};

struct SuccessCondition {
  std::string state;
  std::optional<std::string> element;
  std::optional<std::string> equals;
};

struct Scenario {
  Resolution resolution;
  std::map<std::string, ScreenState> states;
  std::string initial;
  std::vector<Transition> transitions;
  std::vector<SuccessCondition> success;
  std::set<std::string> traps;
  // entering a state that satisfies `success` ends the episode
  bool auto_success = false;
  std::string instruction;
  // free-form payload for scripted planners, untouched by the environment
  json script;

  std::map<std::pair<std::string, Trigger>, std::string> index;
};

// One episode's mutable state. The Scenario itself is never modified.
struct EnvState {
  std::string state_id;
  std::map<std::string, std::string> buffers;
  std::optional<std::string> focus;

  friend bool operator==(const EnvState&, const EnvState&) = default;
};

enum class EventKind { transition, noop, typed, success, failure, done_unsatisfied };

inline const char* to_string(EventKind k) noexcept {
  switch (k) {
    case EventKind::transition: return "transition";
    case EventKind::noop: return "noop";
    case EventKind::typed: return "typed";
    case EventKind::success: return "success";
    case EventKind::failure: return "failure";
    case EventKind::done_unsatisfied: return "done_unsatisfied";
  }
  return "?";
}

struct EnvEvent {
  EventKind kind = EventKind::noop;
  std::string detail;

  bool terminal() const noexcept {
    return kind == EventKind::success || kind == EventKind::failure ||
           kind == EventKind::done_unsatisfied;
  }
  friend bool operator==(const EnvEvent&, const EnvEvent&) = default;
};

struct StepResult {
  EnvState state;
  EnvEvent event;
};

inline std::string normalize_keys(const std::vector<std::string>& keys) {
  std::string out;
  for (const auto& k : keys) {
    if (!out.empty()) out += '+';
    for (char c : k) out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

inline EnvState reset(const Scenario& sc) { return EnvState{sc.initial, {}, {}}; }

inline bool is_success(const Scenario& sc, const EnvState& st) {
  for (const auto& c : sc.success) {
    if (c.state != st.state_id) continue;
    if (!c.element) return true;
    auto it = st.buffers.find(*c.element);
    const std::string have = it == st.buffers.end() ? std::string{} : it->second;
    if (have == c.equals.value_or("")) return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Loading and validation

namespace detail {

inline std::string describe(const Transition& t) {
  std::string trig;
  switch (t.trigger.kind) {
    case TriggerKind::click: trig = "click " + t.trigger.key; break;
    case TriggerKind::hotkey: trig = "hotkey " + t.trigger.key; break;
    case TriggerKind::type: trig = "type " + t.trigger.key; break;
  }
  return "(" + t.from + ", " + trig + ") -> " + t.to;
}

inline bool reaches_success(const Scenario& sc, const std::string& start) {
  std::set<std::string> success_states;
  for (const auto& c : sc.success) success_states.insert(c.state);
  std::set<std::string> seen{start};
  std::deque<std::string> queue{start};
  while (!queue.empty()) {
    const std::string cur = queue.front();
    queue.pop_front();
    if (success_states.count(cur)) return true;
    for (const auto& t : sc.transitions) {
      if (t.from == cur && seen.insert(t.to).second) queue.push_back(t.to);
    }
  }
  return false;
}

}  // namespace detail

inline void validate(Scenario& sc) {
  if (!sc.resolution.valid()) throw ValidationError("invalid resolution");
  if (sc.initial.empty() || !sc.states.count(sc.initial)) {
    throw ValidationError("initial state \"" + sc.initial + "\" is not declared");
  }
  for (const auto& [sid, st] : sc.states) {
    std::set<std::string> ids;
    for (const auto& e : st.elements) {
      if (!ids.insert(e.id).second) {
        throw ValidationError("state \"" + sid + "\": duplicate element id \"" + e.id + "\"");
      }
      if (!within(sc.resolution, e.bbox)) {
        throw ValidationError("state \"" + sid + "\": element \"" + e.id +
                              "\" lies outside the screen");
      }
    }
  }
  sc.index.clear();
  for (const auto& t : sc.transitions) {
    auto from = sc.states.find(t.from);
    if (from == sc.states.end()) {
      throw ValidationError("transition " + detail::describe(t) +
                            ": unknown source state \"" + t.from + "\"");
    }
    if (!sc.states.count(t.to)) {
      throw ValidationError("transition " + detail::describe(t) +
                            ": unknown target state \"" + t.to + "\"");
    }
    if (t.trigger.kind != TriggerKind::hotkey) {
      const Element* e = from->second.find(t.trigger.key);
      if (!e) {
        throw ValidationError("transition " + detail::describe(t) +
                              ": unknown element \"" + t.trigger.key + "\"");
      }
      if (t.trigger.kind == TriggerKind::type && e->kind != ElementKind::field) {
        throw ValidationError("transition " + detail::describe(t) +
                              ": type trigger on non-field element");
      }
    }
    if (!sc.index.emplace(std::make_pair(t.from, t.trigger), t.to).second) {
      throw ValidationError("transition " + detail::describe(t) + ": duplicate trigger");
    }
  }
  for (const auto& c : sc.success) {
    if (!sc.states.count(c.state)) {
      throw ValidationError("success condition names unknown state \"" + c.state + "\"");
    }
  }
  for (const auto& trap : sc.traps) {
    if (!sc.states.count(trap)) {
      throw ValidationError("unknown trap state \"" + trap + "\"");
    }
    if (detail::reaches_success(sc, trap)) {
      throw ValidationError("trap state \"" + trap + "\" can reach a success state");
    }
  }
}

inline Trigger trigger_from_json(const json& j, std::size_t rule) {
  const std::string where = "transition #" + std::to_string(rule) + ": ";
  if (!j.is_object() || j.size() != 1) {
    throw FormatError(0, where + "trigger must be one of {click|hotkey|type}");
  }
  if (auto it = j.find("click"); it != j.end() && it->is_string()) {
    return {TriggerKind::click, it->get<std::string>()};
  }
  if (auto it = j.find("type"); it != j.end() && it->is_string()) {
    return {TriggerKind::type, it->get<std::string>()};
  }
  if (auto it = j.find("hotkey"); it != j.end() && it->is_array()) {
    std::vector<std::string> keys;
    for (const auto& k : *it) {
      if (!k.is_string()) throw FormatError(0, where + "hotkey keys must be strings");
      keys.push_back(k.get<std::string>());
    }
    if (keys.empty()) throw FormatError(0, where + "empty hotkey");
    return {TriggerKind::hotkey, normalize_keys(keys)};
  }
  throw FormatError(0, where + "trigger must be one of {click|hotkey|type}");
}

inline Scenario scenario_from_json(const json& doc) {
  if (!doc.is_object()) throw FormatError(0, "scenario must be a JSON object");
  Scenario sc;
  sc.resolution = jsonio::resolution_from_json(jsonio::require(doc, "resolution", 0), 0);
  if (!doc.contains("initial")) throw FormatError(0, "missing field \"initial\"");
  sc.initial = jsonio::require_string(doc, "initial", 0);

  const json& states = jsonio::require(doc, "states", 0);
  if (!states.is_object()) throw FormatError(0, "states must be an object");
  for (const auto& [sid, sj] : states.items()) {
    ScreenState st;
    st.id = sid;
    const json& elems = sj.is_object() && sj.contains("elements") ? sj["elements"] : json::array();
    if (!elems.is_array()) throw FormatError(0, "state \"" + sid + "\": elements must be an array");
    for (const auto& ej : elems) {
      Element e;
      e.id = jsonio::require_string(ej, "id", 0);
      e.label = ej.value("label", std::string{});
      const std::string kind = ej.value("kind", std::string{"button"});
      auto k = element_kind_from(kind);
      if (!k) throw FormatError(0, "element \"" + e.id + "\": unknown kind \"" + kind + "\"");
      e.kind = *k;
      e.bbox = jsonio::box_from_json(jsonio::require(ej, "bbox", 0), "element \"" + e.id + "\" bbox", 0);
      st.elements.push_back(std::move(e));
    }
    sc.states.emplace(sid, std::move(st));
  }

  if (auto it = doc.find("transitions"); it != doc.end()) {
    if (!it->is_array()) throw FormatError(0, "transitions must be an array");
    std::size_t rule = 0;
    for (const auto& tj : *it) {
      Transition t;
      t.from = jsonio::require_string(tj, "from", 0);
      t.to = jsonio::require_string(tj, "to", 0);
      t.trigger = trigger_from_json(jsonio::require(tj, "trigger", 0), rule++);
      sc.transitions.push_back(std::move(t));
    }
  }
  if (auto it = doc.find("success"); it != doc.end()) {
    if (!it->is_array()) throw FormatError(0, "success must be an array");
    for (const auto& cj : *it) {
      SuccessCondition c;
      if (cj.is_string()) {
        c.state = cj.get<std::string>();
      } else {
        c.state = jsonio::require_string(cj, "state", 0);
        if (auto b = cj.find("buffer"); b != cj.end()) {
          c.element = jsonio::require_string(*b, "element", 0);
          c.equals = jsonio::require_string(*b, "equals", 0);
        }
      }
      sc.success.push_back(std::move(c));
    }
  }
  if (auto it = doc.find("traps"); it != doc.end()) {
    if (!it->is_array()) throw FormatError(0, "traps must be an array");
    for (const auto& t : *it) sc.traps.insert(t.get<std::string>());
  }
  sc.auto_success = doc.value("auto_success", false);
  sc.instruction = doc.value("instruction", std::string{});
  if (auto it = doc.find("script"); it != doc.end()) sc.script = *it;
  validate(sc);
  return sc;
}

inline Scenario load_scenario(const std::filesystem::path& path) {
  try {
    return scenario_from_json(jsonio::parse_document(path));
  } catch (const FormatError& e) {
    throw FormatError(0, path.string() + ": " + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Stepping

inline const ScreenState& screen(const Scenario& sc, const std::string& state_id) {
  auto it = sc.states.find(state_id);
  if (it == sc.states.end()) throw EnvError("unknown state \"" + state_id + "\"");
  return it->second;
}

// Topmost (last declared) element containing the point.
inline const Element* hit_test(const ScreenState& st, const Point& p) {
  for (auto it = st.elements.rbegin(); it != st.elements.rend(); ++it) {
    if (contains(it->bbox, p)) return &*it;
  }
  return nullptr;
}

namespace detail {

inline void check_point(const Scenario& sc, const Point& p) {
  if (!within(sc.resolution, p)) {
    throw EnvError("point (" + std::to_string(p.x) + "," + std::to_string(p.y) +
                   ") is outside the screen");
  }
}

inline const ScreenState& screen_of(const Scenario& sc, const std::string& id) {
  return sc.states.at(id);
}

inline StepResult fire(const Scenario& sc, EnvState st, const Trigger& trig,
                       EventKind fallback, std::string detail) {
  auto it = sc.index.find({st.state_id, trig});
  if (it == sc.index.end()) return {std::move(st), {fallback, std::move(detail)}};
  st.state_id = it->second;
  if (st.focus && !screen_of(sc, st.state_id).find(*st.focus)) st.focus.reset();
  return {std::move(st), {EventKind::transition, it->second}};
}

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace detail

inline StepResult step(const Scenario& sc, const EnvState& state, const EnvAction& act) {
  const ScreenState& cur = screen(sc, state.state_id);
  EnvState st = state;

  StepResult out = std::visit(
      detail::overloaded{
          [&](const action::Click& c) -> StepResult {
            detail::check_point(sc, c.point);
            const Element* hit = hit_test(cur, c.point);
            if (!hit) return {std::move(st), {EventKind::noop, "background"}};
            if (hit->kind == ElementKind::field) st.focus = hit->id;
            return detail::fire(sc, std::move(st), {TriggerKind::click, hit->id},
                                EventKind::noop, hit->id);
          },
          [&](const action::Type& t) -> StepResult {
            const Element* target = nullptr;
            if (t.target) {
              detail::check_point(sc, *t.target);
              target = hit_test(cur, *t.target);
            } else if (st.focus) {
              target = cur.find(*st.focus);
            }
            if (!target || target->kind != ElementKind::field) {
              return {std::move(st), {EventKind::noop, "no field"}};
            }
            st.focus = target->id;
            auto& buf = st.buffers[target->id];
            if (t.overwrite) buf.clear();
            buf += t.content;
            const std::string id = target->id;
            if (sc.index.count({st.state_id, Trigger{TriggerKind::type, id}})) {
              return detail::fire(sc, std::move(st), {TriggerKind::type, id},
                                  EventKind::typed, id);
            }
            if (t.enter) {
              return detail::fire(sc, std::move(st), {TriggerKind::hotkey, "enter"},
                                  EventKind::typed, id);
            }
            return {std::move(st), {EventKind::typed, id}};
          },
          [&](const action::Hotkey& h) -> StepResult {
            const std::string key = normalize_keys(h.keys);
            return detail::fire(sc, std::move(st), {TriggerKind::hotkey, key},
                                EventKind::noop, key);
          },
          [&](const action::Scroll& s) -> StepResult {
            if (s.target) detail::check_point(sc, *s.target);
            return {std::move(st), {EventKind::noop, "scroll"}};
          },
          [&](const action::Drag& d) -> StepResult {
            detail::check_point(sc, d.from);
            detail::check_point(sc, d.to);
            return {std::move(st), {EventKind::noop, "drag"}};
          },
          [&](const action::Open& o) -> StepResult {
            return {std::move(st), {EventKind::noop, "open " + o.name}};
          },
          [&](const action::Wait&) -> StepResult {
            return {std::move(st), {EventKind::noop, "wait"}};
          },
          [&](const action::Passive& p) -> StepResult {
            return {std::move(st), {EventKind::noop, p.what}};
          },
          [&](const action::Done&) -> StepResult {
            const bool ok = is_success(sc, st);
            return {std::move(st),
                    {ok ? EventKind::success : EventKind::done_unsatisfied, "done"}};
          },
          [&](const action::Fail&) -> StepResult {
            return {std::move(st), {EventKind::failure, "fail"}};
          }},
      act);

  if (sc.auto_success && !out.event.terminal() && is_success(sc, out.state)) {
    out.event = {EventKind::success, out.state.state_id};
  }
  return out;
}

// ---------------------------------------------------------------------------
// Canonical textual screen descriptor: single-line JSON, keys sorted,
// elements sorted by id.

inline json descriptor_json(const Scenario& sc, const EnvState& st) {
  const ScreenState& s = screen(sc, st.state_id);
  std::vector<const Element*> sorted;
  for (const auto& e : s.elements) sorted.push_back(&e);
  std::sort(sorted.begin(), sorted.end(),
            [](const Element* a, const Element* b) { return a->id < b->id; });
  json elems = json::array();
  for (const Element* e : sorted) {
    elems.push_back({{"id", e->id},
                     {"kind", to_string(e->kind)},
                     {"label", e->label},
                     {"bbox", jsonio::box_to_json(e->bbox)}});
  }
  json buffers = json::object();
  for (const auto& [k, v] : st.buffers) buffers[k] = v;
  return json{{"state", st.state_id},
              {"resolution", jsonio::resolution_to_json(sc.resolution)},
              {"elements", elems},
              {"buffers", buffers}};
}

inline std::string render_descriptor(const Scenario& sc, const EnvState& st) {
  return descriptor_json(sc, st).dump();
}

inline std::string render_descriptor(const Scenario& sc, const std::string& state_id) {
  return render_descriptor(sc, EnvState{state_id, {}, {}});
}

// Exhaustive check that no trap can reach a success state.
inline bool traps_absorbing(const Scenario& sc) {
  for (const auto& t : sc.traps) {
    if (detail::reaches_success(sc, t)) return false;
  }
  return true;
}

}  // namespace clickscale
