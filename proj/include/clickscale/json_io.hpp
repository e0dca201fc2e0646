#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "clickscale/error.hpp"
#include "clickscale/geometry.hpp"

namespace clickscale {

using json = nlohmann::json;

namespace jsonio {

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string(), "cannot open for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError(path.string(), "read failed");
  return ss.str();
}

inline void write_file(const std::filesystem::path& path,
                       const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  out << content;
  out.flush();
  if (!out) throw IoError(path.string(), "write failed");
}

inline json parse_document(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(0, path.string() + ": " + e.what());
  }
}

// Calls `fn(object, line_number)` for every non-blank line.
inline void for_each_line(
    const std::filesystem::path& path,
    const std::function<void(const json&, std::size_t)>& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string(), "cannot open for reading");
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw FormatError(lineno, std::string("invalid JSON: ") + e.what());
    }
    if (!obj.is_object()) throw FormatError(lineno, "expected a JSON object");
    fn(obj, lineno);
  }
  if (in.bad()) throw IoError(path.string(), "read failed");
}

inline const json& require(const json& obj, const char* key,
                           std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw FormatError(line, std::string("missing field \"") + key + "\"");
  }
  return *it;
}

inline std::string require_string(const json& obj, const char* key,
                                  std::size_t line) {
  const json& v = require(obj, key, line);
  if (!v.is_string()) {
    throw FormatError(line, std::string("field \"") + key + "\" must be a string");
  }
  return v.get<std::string>();
}

inline double as_number(const json& v, const std::string& what,
                        std::size_t line) {
  if (!v.is_number()) throw FormatError(line, what + " must be a number");
  return v.get<double>();
}

inline BoundingBox box_from_json(const json& v, const std::string& what,
                                 std::size_t line) {
  if (!v.is_array() || v.size() != 4) {
    throw FormatError(line, what + " must be an array of 4 numbers");
  }
  BoundingBox b{as_number(v[0], what, line), as_number(v[1], what, line),
                as_number(v[2], what, line), as_number(v[3], what, line)};
  if (!b.valid()) throw FormatError(line, what + " is not a valid box");
  return b;
}

inline json box_to_json(const BoundingBox& b) {
  return json::array({b.x_min, b.y_min, b.x_max, b.y_max});
}

inline Resolution resolution_from_json(const json& v, std::size_t line) {
  if (!v.is_object()) {
    throw FormatError(line, "resolution must be an object {width,height}");
  }
  const json& w = require(v, "width", line);
  const json& h = require(v, "height", line);
  if (!w.is_number_integer() || !h.is_number_integer()) {
    throw FormatError(line, "resolution width/height must be integers");
  }
  Resolution r{w.get<std::int64_t>(), h.get<std::int64_t>()};
  if (!r.valid()) throw FormatError(line, "resolution must be positive");
  return r;
}

inline json resolution_to_json(const Resolution& r) {
  return json{{"width", r.width}, {"height", r.height}};
}

inline std::string to_jsonl(const std::vector<json>& rows) {
  std::string out;
  for (const auto& r : rows) {
    out += r.dump();
    out += '\n';
  }
  return out;
}

}  // namespace jsonio
}  // namespace clickscale
