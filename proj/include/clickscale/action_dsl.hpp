#pragma once

// Parser for single-line planner actions of the form
//
//   agent.NAME(ARG, ..., KEY=ARG, ...)
//
// ARG is a Python-style literal: 'str' or "str" (backslash escapes), integer,
// float, True/False/None, [list], (tuple) or {dict}. Keyword arguments follow
// positional ones. A trailing `# comment` is allowed.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <variant>
#include <vector>

#include "clickscale/error.hpp"
#include "clickscale/geometry.hpp"
#include "clickscale/sim_env.hpp"

namespace clickscale::dsl {

struct Value {
  enum class Kind { none, boolean, integer, real, string, list, tuple, dict };
  Kind kind = Kind::none;
  bool b = false;
  std::int64_t i = 0;
  double d = 0.0;
  std::string s;
  std::vector<Value> items;  // list/tuple elements, dict values
  std::vector<Value> keys;   // dict keys, parallel to items

  static Value none() { return {}; }
  static Value boolean(bool v) { Value x; x.kind = Kind::boolean; x.b = v; return x; }
  static Value integer(std::int64_t v) { Value x; x.kind = Kind::integer; x.i = v; return x; }
  static Value real(double v) { Value x; x.kind = Kind::real; x.d = v; return x; }
  static Value string(std::string v) { Value x; x.kind = Kind::string; x.s = std::move(v); return x; }
  static Value list(std::vector<Value> v) { Value x; x.kind = Kind::list; x.items = std::move(v); return x; }

  friend bool operator==(const Value&, const Value&) = default;
};

struct ClickCall {
  std::string instruction;
  std::int64_t num_clicks = 1;
  std::string button_type = "left";
  std::vector<std::string> hold_keys;
  friend bool operator==(const ClickCall&, const ClickCall&) = default;
};
struct TypeCall {
  std::optional<std::string> element_description;
  std::string text;
  bool overwrite = false;
  bool enter = false;
  friend bool operator==(const TypeCall&, const TypeCall&) = default;
};
struct HotkeyCall {
  std::vector<std::string> keys;
  friend bool operator==(const HotkeyCall&, const HotkeyCall&) = default;
};
struct ScrollCall {
  std::string instruction;
  std::int64_t clicks = 0;
  bool shift = false;
  friend bool operator==(const ScrollCall&, const ScrollCall&) = default;
};
struct DragAndDropCall {
  std::string starting_description;
  std::string ending_description;
  std::vector<std::string> hold_keys;
  friend bool operator==(const DragAndDropCall&, const DragAndDropCall&) = default;
};
struct OpenCall {
  std::string app_or_filename;
  friend bool operator==(const OpenCall&, const OpenCall&) = default;
};
struct WaitCall {
  double time = 0.0;
  friend bool operator==(const WaitCall&, const WaitCall&) = default;
};
struct DoneCall {
  Value return_value;
  friend bool operator==(const DoneCall&, const DoneCall&) = default;
};
struct FailCall {
  friend bool operator==(const FailCall&, const FailCall&) = default;
};
struct HoldAndPressCall {
  std::vector<std::string> hold_keys;
  std::vector<std::string> press_keys;
  friend bool operator==(const HoldAndPressCall&, const HoldAndPressCall&) = default;
};
struct SwitchApplicationsCall {
  std::string app_code;
  friend bool operator==(const SwitchApplicationsCall&, const SwitchApplicationsCall&) = default;
};
struct HighlightTextSpanCall {
  std::string starting_phrase;
  std::string ending_phrase;
  friend bool operator==(const HighlightTextSpanCall&, const HighlightTextSpanCall&) = default;
};
struct SetCellValuesCall {
  Value cell_values;  // dict
  std::string app_name;
  std::string sheet_name;
  friend bool operator==(const SetCellValuesCall&, const SetCellValuesCall&) = default;
};

using ParsedAction =
    std::variant<ClickCall, TypeCall, HotkeyCall, ScrollCall, DragAndDropCall, OpenCall,
                 WaitCall, DoneCall, FailCall, HoldAndPressCall, SwitchApplicationsCall,
                 HighlightTextSpanCall, SetCellValuesCall>;

inline constexpr std::string_view kActionNames[] = {
    "click", "type", "hotkey", "scroll", "drag_and_drop", "open", "wait", "done", "fail",
    "hold_and_press", "switch_applications", "highlight_text_span", "set_cell_values"};

inline std::string_view call_name(const ParsedAction& a) { return kActionNames[a.index()]; }

// ---------------------------------------------------------------------------
// Literal parsing

namespace detail {

class Cursor {
 public:
  explicit Cursor(std::string_view text) : text_(text) {}

  std::size_t pos() const noexcept { return pos_; }
  bool eof() const noexcept { return pos_ >= text_.size(); }
  char peek() const noexcept { return eof() ? '\0' : text_[pos_]; }
  char get() { return eof() ? '\0' : text_[pos_++]; }
  std::string_view rest() const { return text_.substr(std::min(pos_, text_.size())); }

  void skip_ws() {
    while (!eof() && (text_[pos_] == ' ' || text_[pos_] == '\t')) ++pos_;
  }
  bool consume(char c) {
    skip_ws();
    if (peek() != c) return false;
    ++pos_;
    return true;
  }
  void expect(char c, const char* what) {
    if (!consume(c)) fail(std::string("expected ") + what);
  }
  bool starts_with(std::string_view s) const { return rest().substr(0, s.size()) == s; }
  void advance(std::size_t n) { pos_ += n; }

  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, pos_); }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
};

inline bool ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}
inline bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

inline std::string parse_identifier(Cursor& cur) {
  cur.skip_ws();
  if (!ident_start(cur.peek())) cur.fail("expected identifier");
  std::string out;
  while (ident_char(cur.peek())) out += cur.get();
  return out;
}

inline int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

inline std::string parse_string(Cursor& cur) {
  const char quote = cur.get();
  std::string out;
  while (true) {
    if (cur.eof()) cur.fail("unterminated string literal");
    char c = cur.get();
    if (c == quote) return out;
    if (c != '\\') {
      out += c;
      continue;
    }
    if (cur.eof()) cur.fail("unterminated string literal");
    const char e = cur.get();
    switch (e) {
      case '\\': out += '\\'; break;
      case '\'': out += '\''; break;
      case '"': out += '"'; break;
      case 'n': out += '\n'; break;
      case 't': out += '\t'; break;
      case 'r': out += '\r'; break;
      case '0': out += '\0'; break;
      case 'x': {
        const int hi = hex_value(cur.get());
        const int lo = hex_value(cur.get());
        if (hi < 0 || lo < 0) cur.fail("bad \\x escape");
        out += static_cast<char>(hi * 16 + lo);
        break;
      }
      default:
        out += '\\';
        out += e;
    }
  }
}

inline Value parse_number(Cursor& cur) {
  const std::size_t start = cur.pos();
  std::string tok;
  if (cur.peek() == '+' || cur.peek() == '-') tok += cur.get();
  bool is_real = false;
  bool digits = false;
  while (std::isdigit(static_cast<unsigned char>(cur.peek()))) { tok += cur.get(); digits = true; }
  if (cur.peek() == '.') {
    is_real = true;
    tok += cur.get();
    while (std::isdigit(static_cast<unsigned char>(cur.peek()))) { tok += cur.get(); digits = true; }
  }
  if (!digits) throw ParseError("malformed number", start);
  if (cur.peek() == 'e' || cur.peek() == 'E') {
    is_real = true;
    tok += cur.get();
    if (cur.peek() == '+' || cur.peek() == '-') tok += cur.get();
    if (!std::isdigit(static_cast<unsigned char>(cur.peek()))) cur.fail("malformed exponent");
    while (std::isdigit(static_cast<unsigned char>(cur.peek()))) tok += cur.get();
  }
  if (ident_char(cur.peek())) cur.fail("malformed number");
  const char* b = tok.data() + (tok[0] == '+' ? 1 : 0);
  const char* e = tok.data() + tok.size();
  if (is_real) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc{} || p != e) throw ParseError("malformed number", start);
    return Value::real(v);
  }
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(b, e, v);
  if (ec != std::errc{} || p != e) throw ParseError("integer out of range", start);
  return Value::integer(v);
}

inline Value parse_value(Cursor& cur, int depth = 0);

inline std::vector<Value> parse_sequence(Cursor& cur, char close, int depth) {
  std::vector<Value> items;
  if (cur.consume(close)) return items;
  while (true) {
    items.push_back(parse_value(cur, depth + 1));
    if (cur.consume(close)) return items;
    cur.expect(',', "',' or closing bracket");
    if (cur.consume(close)) return items;  // trailing comma
  }
}

inline Value parse_value(Cursor& cur, int depth) {
  if (depth > 32) cur.fail("literal nested too deeply");
  cur.skip_ws();
  const char c = cur.peek();
  if (c == '\'' || c == '"') return Value::string(parse_string(cur));
  if (c == '[') {
    cur.get();
    return Value::list(parse_sequence(cur, ']', depth));
  }
  if (c == '(') {
    cur.get();
    Value v;
    v.kind = Value::Kind::tuple;
    v.items = parse_sequence(cur, ')', depth);
    return v;
  }
  if (c == '{') {
    cur.get();
    Value v;
    v.kind = Value::Kind::dict;
    if (cur.consume('}')) return v;
    while (true) {
      v.keys.push_back(parse_value(cur, depth + 1));
      cur.expect(':', "':' in dict literal");
      v.items.push_back(parse_value(cur, depth + 1));
      if (cur.consume('}')) return v;
      cur.expect(',', "',' or '}'");
      if (cur.consume('}')) return v;
    }
  }
  if (c == '-' || c == '+' || c == '.' || std::isdigit(static_cast<unsigned char>(c))) {
    return parse_number(cur);
  }
  if (ident_start(c)) {
    const std::size_t start = cur.pos();
    const std::string word = parse_identifier(cur);
    if (word == "True") return Value::boolean(true);
    if (word == "False") return Value::boolean(false);
    if (word == "None") return Value::none();
    throw ParseError("unexpected identifier '" + word + "' in argument", start);
  }
  if (cur.eof()) cur.fail("unexpected end of input");
  cur.fail(std::string("unexpected character '") + c + "'");
}

struct RawCall {
  std::string name;
  std::size_t name_pos = 0;
  std::vector<std::pair<Value, std::size_t>> positional;
  std::vector<std::tuple<std::string, Value, std::size_t>> keyword;
};

inline RawCall parse_raw_call(std::string_view line) {
  Cursor cur(line);
  cur.skip_ws();
  if (!cur.starts_with("agent.")) cur.fail("action must start with 'agent.'");
  cur.advance(6);
  RawCall call;
  call.name_pos = cur.pos();
  call.name = parse_identifier(cur);
  cur.expect('(', "'(' after action name");
  if (!cur.consume(')')) {
    while (true) {
      cur.skip_ws();
      const std::size_t arg_pos = cur.pos();
      // keyword argument?
      bool is_kw = false;
      if (ident_start(cur.peek())) {
        Cursor probe = cur;
        const std::string id = parse_identifier(probe);
        probe.skip_ws();
        if (probe.peek() == '=' && id != "True" && id != "False" && id != "None") {
          probe.get();
          if (probe.peek() == '=') cur.fail("unexpected '=='");
          cur = probe;
          for (const auto& [k, v, p] : call.keyword) {
            if (k == id) throw ParseError("duplicate keyword argument '" + id + "'", arg_pos);
          }
          call.keyword.emplace_back(id, parse_value(cur), arg_pos);
          is_kw = true;
        }
      }
      if (!is_kw) {
        if (!call.keyword.empty()) {
          throw ParseError("positional argument follows keyword argument", arg_pos);
        }
        call.positional.emplace_back(parse_value(cur), arg_pos);
      }
      if (cur.consume(')')) break;
      cur.expect(',', "',' or ')' in argument list");
      if (cur.consume(')')) break;
    }
  }
  cur.skip_ws();
  if (!cur.eof() && cur.peek() != '#') cur.fail("unexpected text after action call");
  return call;
}

// ----- binding to signatures

enum class ParamType { str, opt_str, integer, real, boolean, key_list, dict, any };

struct Param {
  const char* name;
  ParamType type;
  std::optional<Value> default_value;
};

inline const char* type_name(ParamType t) {
  switch (t) {
    case ParamType::str: return "str";
    case ParamType::opt_str: return "Optional[str]";
    case ParamType::integer: return "int";
    case ParamType::real: return "float";
    case ParamType::boolean: return "bool";
    case ParamType::key_list: return "List[str]";
    case ParamType::dict: return "Dict";
    case ParamType::any: return "any";
  }
  return "?";
}

inline bool type_ok(ParamType t, const Value& v) {
  using K = Value::Kind;
  switch (t) {
    case ParamType::str: return v.kind == K::string;
    case ParamType::opt_str: return v.kind == K::string || v.kind == K::none;
    case ParamType::integer: return v.kind == K::integer;
    case ParamType::real: return v.kind == K::integer || v.kind == K::real;
    case ParamType::boolean: return v.kind == K::boolean;
    case ParamType::key_list:
      if (v.kind != K::list && v.kind != K::tuple) return false;
      for (const auto& it : v.items) {
        if (it.kind != K::string) return false;
      }
      return true;
    case ParamType::dict: return v.kind == K::dict;
    case ParamType::any: return true;
  }
  return false;
}

inline std::vector<Value> bind(const RawCall& call, std::span<const Param> sig) {
  if (call.positional.size() > sig.size()) {
    throw ParseError("too many arguments to " + call.name + "(): takes " +
                         std::to_string(sig.size()),
                     call.positional[sig.size()].second);
  }
  std::vector<std::optional<Value>> slots(sig.size());
  std::vector<std::size_t> where(sig.size(), call.name_pos);
  for (std::size_t i = 0; i < call.positional.size(); ++i) {
    slots[i] = call.positional[i].first;
    where[i] = call.positional[i].second;
  }
  for (const auto& [k, v, p] : call.keyword) {
    std::size_t idx = sig.size();
    for (std::size_t i = 0; i < sig.size(); ++i) {
      if (k == sig[i].name) idx = i;
    }
    if (idx == sig.size()) {
      throw ParseError(call.name + "() got an unexpected keyword argument '" + k + "'", p);
    }
    if (slots[idx]) throw ParseError(call.name + "() got multiple values for '" + k + "'", p);
    slots[idx] = v;
    where[idx] = p;
  }
  std::vector<Value> out;
  out.reserve(sig.size());
  for (std::size_t i = 0; i < sig.size(); ++i) {
    if (!slots[i]) {
      if (!sig[i].default_value) {
        throw ParseError(call.name + "() missing required argument '" +
                             std::string(sig[i].name) + "'",
                         call.name_pos);
      }
      slots[i] = sig[i].default_value;
    }
    if (!type_ok(sig[i].type, *slots[i])) {
      throw ParseError(call.name + "() argument '" + sig[i].name + "' must be " +
                           type_name(sig[i].type),
                       where[i]);
    }
    out.push_back(std::move(*slots[i]));
  }
  return out;
}

inline std::vector<std::string> strings_of(const Value& v) {
  std::vector<std::string> out;
  for (const auto& it : v.items) out.push_back(it.s);
  return out;
}

inline double real_of(const Value& v) {
  return v.kind == Value::Kind::integer ? static_cast<double>(v.i) : v.d;
}

}  // namespace detail

// Parses exactly one `agent.NAME(...)` call.
inline ParsedAction parse_call(std::string_view line) {
  using detail::Param;
  using detail::ParamType;
  const detail::RawCall call = detail::parse_raw_call(line);

  if (call.name == "click") {
    static const Param sig[] = {{"instruction", ParamType::str, {}},
                                {"num_clicks", ParamType::integer, Value::integer(1)},
                                {"button_type", ParamType::str, Value::string("left")},
                                {"hold_keys", ParamType::key_list, Value::list({})}};
    auto a = detail::bind(call, sig);
    if (a[1].i < 1) throw ParseError("click() num_clicks must be >= 1", call.name_pos);
    if (a[2].s != "left" && a[2].s != "middle" && a[2].s != "right") {
      throw ParseError("click() button_type must be left, middle or right", call.name_pos);
    }
    return ClickCall{a[0].s, a[1].i, a[2].s, detail::strings_of(a[3])};
  }
  if (call.name == "type") {
    static const Param sig[] = {{"element_description", ParamType::opt_str, Value::none()},
                                {"text", ParamType::str, Value::string("")},
                                {"overwrite", ParamType::boolean, Value::boolean(false)},
                                {"enter", ParamType::boolean, Value::boolean(false)}};
    auto a = detail::bind(call, sig);
    TypeCall t;
    if (a[0].kind == Value::Kind::string) t.element_description = a[0].s;
    t.text = a[1].s;
    t.overwrite = a[2].b;
    t.enter = a[3].b;
    return t;
  }
  if (call.name == "hotkey") {
    static const Param sig[] = {{"keys", ParamType::key_list, {}}};
    auto a = detail::bind(call, sig);
    if (a[0].items.empty()) throw ParseError("hotkey() needs at least one key", call.name_pos);
    return HotkeyCall{detail::strings_of(a[0])};
  }
  if (call.name == "scroll") {
    static const Param sig[] = {{"instruction", ParamType::str, {}},
                                {"clicks", ParamType::integer, {}},
                                {"shift", ParamType::boolean, Value::boolean(false)}};
    auto a = detail::bind(call, sig);
    return ScrollCall{a[0].s, a[1].i, a[2].b};
  }
  if (call.name == "drag_and_drop") {
    static const Param sig[] = {{"starting_description", ParamType::str, {}},
                                {"ending_description", ParamType::str, {}},
                                {"hold_keys", ParamType::key_list, Value::list({})}};
    auto a = detail::bind(call, sig);
    return DragAndDropCall{a[0].s, a[1].s, detail::strings_of(a[2])};
  }
  if (call.name == "open") {
    static const Param sig[] = {{"app_or_filename", ParamType::str, {}}};
    return OpenCall{detail::bind(call, sig)[0].s};
  }
  if (call.name == "wait") {
    static const Param sig[] = {{"time", ParamType::real, {}}};
    const double t = detail::real_of(detail::bind(call, sig)[0]);
    if (!(t >= 0.0) || !std::isfinite(t)) throw ParseError("wait() time must be >= 0", call.name_pos);
    return WaitCall{t};
  }
  if (call.name == "done") {
    static const Param sig[] = {{"return_value", ParamType::any, Value::none()}};
    return DoneCall{detail::bind(call, sig)[0]};
  }
  if (call.name == "fail") {
    detail::bind(call, {});
    return FailCall{};
  }
  if (call.name == "hold_and_press") {
    static const Param sig[] = {{"hold_keys", ParamType::key_list, {}},
                                {"press_keys", ParamType::key_list, {}}};
    auto a = detail::bind(call, sig);
    return HoldAndPressCall{detail::strings_of(a[0]), detail::strings_of(a[1])};
  }
  if (call.name == "switch_applications") {
    static const Param sig[] = {{"app_code", ParamType::str, {}}};
    return SwitchApplicationsCall{detail::bind(call, sig)[0].s};
  }
  if (call.name == "highlight_text_span") {
    static const Param sig[] = {{"starting_phrase", ParamType::str, {}},
                                {"ending_phrase", ParamType::str, {}}};
    auto a = detail::bind(call, sig);
    return HighlightTextSpanCall{a[0].s, a[1].s};
  }
  if (call.name == "set_cell_values") {
    static const Param sig[] = {{"cell_values", ParamType::dict, {}},
                                {"app_name", ParamType::str, {}},
                                {"sheet_name", ParamType::str, {}}};
    auto a = detail::bind(call, sig);
    for (const auto& k : a[0].keys) {
      if (k.kind != Value::Kind::string) {
        throw ParseError("set_cell_values() cell keys must be strings", call.name_pos);
      }
    }
    return SetCellValuesCall{a[0], a[1].s, a[2].s};
  }
  throw ParseError("unknown action '" + call.name + "'", call.name_pos);
}

// Finds the single action line in a model response. Surrounding prose,
// code fences and inline backticks are ignored.
inline std::string extract_action_line(std::string_view raw) {
  std::vector<std::string> found;
  std::size_t start = 0;
  while (start <= raw.size()) {
    std::size_t end = raw.find('\n', start);
    if (end == std::string_view::npos) end = raw.size();
    std::string_view line = raw.substr(start, end - start);
    auto trim = [](std::string_view s) {
      while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '`')) s.remove_prefix(1);
      while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '`')) s.remove_suffix(1);
      return s;
    };
    line = trim(line);
    if (line.substr(0, 6) == "agent.") found.emplace_back(line);
    start = end + 1;
  }
  if (found.empty()) throw ParseError("no action line found", 0);
  if (found.size() > 1) {
    throw ParseError("expected exactly one action line, found " + std::to_string(found.size()), 0);
  }
  return found.front();
}

inline ParsedAction parse_action(std::string_view raw_text) {
  return parse_call(extract_action_line(raw_text));
}

// ---------------------------------------------------------------------------
// Canonical source form: every parameter positional, single-quoted strings.

namespace detail {

inline void quote(std::string& out, const std::string& s) {
  out += '\'';
  for (char c : s) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\'': out += "\\'"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20 || c == 0x7f) {
          static const char* hex = "0123456789abcdef";
          out += "\\x";
          out += hex[(static_cast<unsigned char>(c) >> 4) & 0xf];
          out += hex[static_cast<unsigned char>(c) & 0xf];
        } else {
          out += c;
        }
    }
  }
  out += '\'';
}

inline void format_real(std::string& out, double d) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, d);
  std::string s(buf, p);
  if (s.find_first_of(".e") == std::string::npos) s += ".0";
  out += s;
}

inline void format_value(std::string& out, const Value& v) {
  using K = Value::Kind;
  switch (v.kind) {
    case K::none: out += "None"; break;
    case K::boolean: out += v.b ? "True" : "False"; break;
    case K::integer: out += std::to_string(v.i); break;
    case K::real: format_real(out, v.d); break;
    case K::string: quote(out, v.s); break;
    case K::list:
    case K::tuple: {
      out += v.kind == K::list ? '[' : '(';
      for (std::size_t i = 0; i < v.items.size(); ++i) {
        if (i) out += ", ";
        format_value(out, v.items[i]);
      }
      if (v.kind == K::tuple && v.items.size() == 1) out += ',';
      out += v.kind == K::list ? ']' : ')';
      break;
    }
    case K::dict: {
      out += '{';
      for (std::size_t i = 0; i < v.items.size(); ++i) {
        if (i) out += ", ";
        format_value(out, v.keys[i]);
        out += ": ";
        format_value(out, v.items[i]);
      }
      out += '}';
      break;
    }
  }
}

inline Value key_list(const std::vector<std::string>& keys) {
  std::vector<Value> items;
  for (const auto& k : keys) items.push_back(Value::string(k));
  return Value::list(std::move(items));
}

inline std::string render(std::string_view name, std::initializer_list<Value> args) {
  std::string out = "agent.";
  out += name;
  out += '(';
  bool first = true;
  for (const auto& a : args) {
    if (!first) out += ", ";
    first = false;
    format_value(out, a);
  }
  out += ')';
  return out;
}

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace detail

inline std::string to_source(const ParsedAction& a) {
  using detail::key_list;
  using detail::render;
  return std::visit(
      detail::overloaded{
          [](const ClickCall& c) {
            return render("click", {Value::string(c.instruction), Value::integer(c.num_clicks),
                                    Value::string(c.button_type), key_list(c.hold_keys)});
          },
          [](const TypeCall& t) {
            return render("type", {t.element_description ? Value::string(*t.element_description)
                                                         : Value::none(),
                                   Value::string(t.text), Value::boolean(t.overwrite),
                                   Value::boolean(t.enter)});
          },
          [](const HotkeyCall& h) { return render("hotkey", {key_list(h.keys)}); },
          [](const ScrollCall& s) {
            return render("scroll", {Value::string(s.instruction), Value::integer(s.clicks),
                                     Value::boolean(s.shift)});
          },
          [](const DragAndDropCall& d) {
            return render("drag_and_drop", {Value::string(d.starting_description),
                                            Value::string(d.ending_description),
                                            key_list(d.hold_keys)});
          },
          [](const OpenCall& o) { return render("open", {Value::string(o.app_or_filename)}); },
          [](const WaitCall& w) { return render("wait", {Value::real(w.time)}); },
          [](const DoneCall& d) {
            return d.return_value.kind == Value::Kind::none ? std::string("agent.done()")
                                                            : render("done", {d.return_value});
          },
          [](const FailCall&) { return std::string("agent.fail()"); },
          [](const HoldAndPressCall& h) {
            return render("hold_and_press", {key_list(h.hold_keys), key_list(h.press_keys)});
          },
          [](const SwitchApplicationsCall& s) {
            return render("switch_applications", {Value::string(s.app_code)});
          },
          [](const HighlightTextSpanCall& h) {
            return render("highlight_text_span",
                          {Value::string(h.starting_phrase), Value::string(h.ending_phrase)});
          },
          [](const SetCellValuesCall& s) {
            return render("set_cell_values", {s.cell_values, Value::string(s.app_name),
                                               Value::string(s.sheet_name)});
          }},
      a);
}

// ---------------------------------------------------------------------------
// Routing

// Element descriptions that must be grounded to coordinates before the
// action can execute; empty for actions that run directly.
inline std::vector<std::string> grounding_targets(const ParsedAction& a) {
  if (auto* c = std::get_if<ClickCall>(&a)) return {c->instruction};
  if (auto* s = std::get_if<ScrollCall>(&a)) return {s->instruction};
  if (auto* d = std::get_if<DragAndDropCall>(&a)) {
    return {d->starting_description, d->ending_description};
  }
  if (auto* t = std::get_if<TypeCall>(&a); t && t->element_description) {
    return {*t->element_description};
  }
  return {};
}

inline bool requires_grounding(const ParsedAction& a) { return !grounding_targets(a).empty(); }

inline bool is_terminal(const ParsedAction& a) {
  return std::holds_alternative<DoneCall>(a) || std::holds_alternative<FailCall>(a);
}

// `points` must hold one grounded point per grounding target, in order.
inline EnvAction to_env_action(const ParsedAction& a, std::span<const Point> points) {
  const std::size_t need = grounding_targets(a).size();
  if (points.size() != need) {
    throw ContractError("action " + std::string(call_name(a)) + " needs " +
                        std::to_string(need) + " grounded points, got " +
                        std::to_string(points.size()));
  }
  return std::visit(
      detail::overloaded{
          [&](const ClickCall& c) -> EnvAction {
            return action::Click{points[0], c.button_type, static_cast<int>(c.num_clicks)};
          },
          [&](const TypeCall& t) -> EnvAction {
            action::Type out;
            if (t.element_description) out.target = points[0];
            out.content = t.text;
            out.overwrite = t.overwrite;
            out.enter = t.enter;
            return out;
          },
          [&](const HotkeyCall& h) -> EnvAction { return action::Hotkey{h.keys}; },
          [&](const ScrollCall& s) -> EnvAction {
            return action::Scroll{points[0], static_cast<int>(s.clicks), s.shift};
          },
          [&](const DragAndDropCall&) -> EnvAction { return action::Drag{points[0], points[1]}; },
          [&](const OpenCall& o) -> EnvAction { return action::Open{o.app_or_filename}; },
          [&](const WaitCall& w) -> EnvAction { return action::Wait{w.time}; },
          [&](const DoneCall&) -> EnvAction { return action::Done{}; },
          [&](const FailCall&) -> EnvAction { return action::Fail{}; },
          [&](const HoldAndPressCall& h) -> EnvAction {
            std::vector<std::string> keys = h.hold_keys;
            keys.insert(keys.end(), h.press_keys.begin(), h.press_keys.end());
            return action::Hotkey{keys};
          },
          [&](const SwitchApplicationsCall& s) -> EnvAction { return action::Open{s.app_code}; },
          [&](const HighlightTextSpanCall&) -> EnvAction {
            return action::Passive{"highlight_text_span"};
          },
          [&](const SetCellValuesCall&) -> EnvAction {
            return action::Passive{"set_cell_values"};
          }},
      a);
}

}  // namespace clickscale::dsl
