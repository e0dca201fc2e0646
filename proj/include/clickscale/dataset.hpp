#pragma once

#include <algorithm>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "clickscale/error.hpp"
#include "clickscale/geometry.hpp"
#include "clickscale/json_io.hpp"

namespace clickscale {

struct GroundingRecord {
  std::string screen_id;
  std::string image_ref;
  std::string instruction;
  BoundingBox bbox;
  Resolution resolution;
  std::optional<std::string> category;

  friend bool operator==(const GroundingRecord&, const GroundingRecord&) = default;
};

struct DetectionSet {
  std::string screen_id;
  std::vector<BoundingBox> boxes;
};

struct CleanConfig {
  double tau = 0.3;
};

struct CleanResult {
  std::vector<GroundingRecord> kept;
  std::vector<GroundingRecord> discarded;
  // max-IoU of every input record, in input order
  std::vector<double> max_iou;
};

struct ScreenStat {
  std::string screen_id;
  double max_iou = 0.0;
};

struct CleanReport {
  std::size_t input = 0;
  std::size_t kept = 0;
  std::size_t discarded = 0;
  double tau = 0.3;
  std::vector<ScreenStat> per_screen;

  double discard_rate() const noexcept {
    return input ? static_cast<double>(discarded) / static_cast<double>(input)
                 : 0.0;
  }
};

inline json record_to_json(const GroundingRecord& r) {
  json j{{"screen_id", r.screen_id},
         {"image_ref", r.image_ref},
         {"instruction", r.instruction},
         {"bbox", jsonio::box_to_json(r.bbox)},
         {"resolution", jsonio::resolution_to_json(r.resolution)}};
  if (r.category) j["category"] = *r.category;
  return j;
}

inline GroundingRecord record_from_json(const json& obj, std::size_t line) {
  GroundingRecord r;
  r.screen_id = jsonio::require_string(obj, "screen_id", line);
  r.image_ref = jsonio::require_string(obj, "image_ref", line);
  r.instruction = jsonio::require_string(obj, "instruction", line);
  r.bbox = jsonio::box_from_json(jsonio::require(obj, "bbox", line), "bbox", line);
  r.resolution = jsonio::resolution_from_json(
      jsonio::require(obj, "resolution", line), line);
  if (auto it = obj.find("category"); it != obj.end() && !it->is_null()) {
    if (!it->is_string()) throw FormatError(line, "category must be a string");
    r.category = it->get<std::string>();
  }
  if (r.instruction.empty()) throw FormatError(line, "instruction is empty");
  if (!within(r.resolution, r.bbox)) {
    throw FormatError(line, "bbox lies outside the resolution");
  }
  return r;
}

inline std::vector<GroundingRecord> load_records(
    const std::filesystem::path& path) {
  std::vector<GroundingRecord> out;
  jsonio::for_each_line(path, [&](const json& obj, std::size_t line) {
    out.push_back(record_from_json(obj, line));
  });
  return out;
}

inline std::vector<DetectionSet> load_detections(
    const std::filesystem::path& path) {
  std::vector<DetectionSet> out;
  jsonio::for_each_line(path, [&](const json& obj, std::size_t line) {
    DetectionSet d;
    d.screen_id = jsonio::require_string(obj, "screen_id", line);
    const json& boxes = jsonio::require(obj, "boxes", line);
    if (!boxes.is_array()) throw FormatError(line, "boxes must be an array");
    for (const auto& b : boxes) {
      d.boxes.push_back(jsonio::box_from_json(b, "boxes entry", line));
    }
    out.push_back(std::move(d));
  });
  return out;
}

// Max over an empty set is 0.
inline double max_iou(const BoundingBox& ann,
                      const std::vector<BoundingBox>& detections) noexcept {
  double best = 0.0;
  for (const auto& d : detections) best = std::max(best, iou(ann, d));
  return best;
}

// A record is discarded iff its best overlap with any detection on the same
// screen is strictly below tau. Screens without a detection set are treated
// as having no detections.
inline CleanResult clean_records(const std::vector<GroundingRecord>& records,
                                 const std::vector<DetectionSet>& detections,
                                 const CleanConfig& cfg) {
  if (!(cfg.tau >= 0.0) || !std::isfinite(cfg.tau)) {
    throw ContractError("tau must be a finite non-negative number");
  }
  std::unordered_map<std::string, std::vector<BoundingBox>> by_screen;
  for (const auto& d : detections) {
    auto& v = by_screen[d.screen_id];
    v.insert(v.end(), d.boxes.begin(), d.boxes.end());
  }
  static const std::vector<BoundingBox> kNone;

  CleanResult out;
  out.max_iou.reserve(records.size());
  for (const auto& r : records) {
    auto it = by_screen.find(r.screen_id);
    const double best = max_iou(r.bbox, it == by_screen.end() ? kNone : it->second);
    out.max_iou.push_back(best);
    if (best < cfg.tau) {
      out.discarded.push_back(r);
    } else {
      out.kept.push_back(r);
    }
  }
  return out;
}

inline CleanReport make_report(const std::vector<GroundingRecord>& records,
                               const CleanResult& result, double tau) {
  CleanReport rep;
  rep.input = records.size();
  rep.kept = result.kept.size();
  rep.discarded = result.discarded.size();
  rep.tau = tau;
  rep.per_screen.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    rep.per_screen.push_back({records[i].screen_id, result.max_iou[i]});
  }
  return rep;
}

inline json report_to_json(const CleanReport& rep) {
  json per = json::array();
  for (const auto& s : rep.per_screen) {
    per.push_back({{"screen_id", s.screen_id}, {"max_iou", s.max_iou}});
  }
  return json{{"input", rep.input},
              {"kept", rep.kept},
              {"discarded", rep.discarded},
              {"tau", rep.tau},
              {"per_screen", per}};
}

struct PartitionPaths {
  std::filesystem::path kept;
  std::filesystem::path discarded;
  std::filesystem::path report;
};

inline PartitionPaths partition_paths(const std::filesystem::path& out_dir) {
  return {out_dir / "kept.jsonl", out_dir / "discarded.jsonl",
          out_dir / "report.json"};
}

inline std::string records_to_jsonl(const std::vector<GroundingRecord>& rs) {
  std::string out;
  for (const auto& r : rs) {
    out += record_to_json(r).dump();
    out += '\n';
  }
  return out;
}

// Writes kept.jsonl, discarded.jsonl and report.json under out_dir.
inline CleanReport write_partition(const std::vector<GroundingRecord>& records,
                                   const CleanResult& result, double tau,
                                   const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError(out_dir.string(), ec.message());
  const auto paths = partition_paths(out_dir);
  const CleanReport rep = make_report(records, result, tau);
  jsonio::write_file(paths.kept, records_to_jsonl(result.kept));
  jsonio::write_file(paths.discarded, records_to_jsonl(result.discarded));
  jsonio::write_file(paths.report, report_to_json(rep).dump(2) + "\n");
  return rep;
}

}  // namespace clickscale
