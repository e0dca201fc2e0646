#pragma once

// Machine-parsed response formats of the judge and grounder roles.

#include <cctype>
#include <cstdint>
#include <cstdio>
#include <regex>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "clickscale/error.hpp"
#include "clickscale/geometry.hpp"

namespace clickscale {

struct JudgeVerdict {
  std::string explaining;
  int index = 0;
  // set when the verdict was synthesized after an unusable reply
  bool fallback = false;

  friend bool operator==(const JudgeVerdict&, const JudgeVerdict&) = default;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Strips one surrounding ``` fence (with optional language tag).
inline std::string_view unfence(std::string_view s) {
  s = trim(s);
  if (s.substr(0, 3) != "```") return s;
  const std::size_t nl = s.find('\n');
  if (nl == std::string_view::npos) return s;
  std::string_view body = s.substr(nl + 1);
  body = trim(body);
  if (body.size() < 3 || body.substr(body.size() - 3) != "```") return s;
  body.remove_suffix(3);
  return trim(body);
}

}  // namespace detail

// Verdict text must be a JSON object with exactly the keys "explaining"
// (string) and "index" (integer in [0, candidates)), optionally wrapped in a
// single ```json fence.
inline JudgeVerdict parse_verdict(std::string_view text, std::size_t candidates) {
  const std::string_view body = detail::unfence(text);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("verdict is not valid JSON", e.byte ? e.byte - 1 : 0);
  }
  if (!j.is_object()) throw ParseError("verdict must be a JSON object", 0);
  if (!j.contains("explaining")) throw ParseError("verdict is missing key \"explaining\"", 0);
  if (!j.contains("index")) throw ParseError("verdict is missing key \"index\"", 0);
  if (j.size() != 2) throw ParseError("verdict has keys other than explaining/index", 0);
  if (!j["explaining"].is_string()) throw ParseError("verdict \"explaining\" must be a string", 0);
  const auto& idx = j["index"];
  if (!idx.is_number_integer()) throw ParseError("verdict \"index\" must be an integer", 0);
  const std::int64_t k = idx.get<std::int64_t>();
  if (k < 0 || static_cast<std::uint64_t>(k) >= candidates) {
    throw ParseError("verdict index " + std::to_string(k) + " outside [0, " +
                         std::to_string(candidates) + ")",
                     0);
  }
  return {j["explaining"].get<std::string>(), static_cast<int>(k), false};
}

inline std::string verdict_to_json(const JudgeVerdict& v) {
  return nlohmann::json{{"explaining", v.explaining}, {"index", v.index}}.dump();
}

// Grounder output: "(x,y)" with optional whitespace, non-negative decimals.
inline Point parse_coordinate(std::string_view text) {
  static const std::regex re(R"(^\s*\(\s*([0-9]+(?:\.[0-9]+)?)\s*,\s*([0-9]+(?:\.[0-9]+)?)\s*\)\s*$)");
  std::match_results<std::string_view::const_iterator> m;
  if (!std::regex_match(text.begin(), text.end(), m, re)) {
    throw GroundingError("grounder output is not a single (x,y) pair: \"" +
                         std::string(text.substr(0, 80)) + "\"");
  }
  return {std::stod(m[1].str()), std::stod(m[2].str())};
}

inline std::string format_coordinate(const Point& p) {
  auto num = [](double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    std::string s(buf);
    while (s.back() == '0') s.pop_back();
    if (s.back() == '.') s.pop_back();
    return s;
  };
  return "(" + num(p.x) + "," + num(p.y) + ")";
}

}  // namespace clickscale
