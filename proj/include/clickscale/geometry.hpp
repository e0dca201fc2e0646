#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "clickscale/error.hpp"

namespace clickscale {

// Pixel-space coordinates are real valued everywhere; rounding only happens
// when something is written out.
struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

struct BoundingBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  double width() const noexcept { return x_max - x_min; }
  double height() const noexcept { return y_max - y_min; }
  double area() const noexcept { return width() * height(); }
  Point center() const noexcept {
    return {(x_min + x_max) / 2.0, (y_min + y_max) / 2.0};
  }

  bool valid() const noexcept {
    return std::isfinite(x_min) && std::isfinite(y_min) &&
           std::isfinite(x_max) && std::isfinite(y_max) && x_min >= 0.0 &&
           y_min >= 0.0 && x_min <= x_max && y_min <= y_max;
  }

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

struct Resolution {
  std::int64_t width = 1;
  std::int64_t height = 1;

  bool valid() const noexcept { return width >= 1 && height >= 1; }
  friend bool operator==(const Resolution&, const Resolution&) = default;
};

inline bool valid_point(const Point& p) noexcept {
  return std::isfinite(p.x) && std::isfinite(p.y) && p.x >= 0.0 && p.y >= 0.0;
}

inline BoundingBox make_box(double x_min, double y_min, double x_max,
                            double y_max) {
  BoundingBox b{x_min, y_min, x_max, y_max};
  if (!b.valid()) {
    throw ContractError("invalid bounding box (" + std::to_string(x_min) +
                        "," + std::to_string(y_min) + "," +
                        std::to_string(x_max) + "," + std::to_string(y_max) +
                        ")");
  }
  return b;
}

// Inclusive on all four edges.
inline bool contains(const BoundingBox& box, const Point& p) noexcept {
  return box.x_min <= p.x && p.x <= box.x_max && box.y_min <= p.y &&
         p.y <= box.y_max;
}

inline bool within(const Resolution& res, const Point& p) noexcept {
  return valid_point(p) && p.x <= static_cast<double>(res.width) &&
         p.y <= static_cast<double>(res.height);
}

inline bool within(const Resolution& res, const BoundingBox& b) noexcept {
  return b.valid() && b.x_max <= static_cast<double>(res.width) &&
         b.y_max <= static_cast<double>(res.height);
}

// Continuous-area IoU. Zero-area unions give 0.
inline double iou(const BoundingBox& a, const BoundingBox& b) noexcept {
  const double iw = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double ih = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  const double inter = (iw > 0.0 && ih > 0.0) ? iw * ih : 0.0;
  const double uni = a.area() + b.area() - inter;
  if (!(uni > 0.0)) return 0.0;
  return inter / uni;
}

struct ResizeResult {
  Resolution resolution;
  double scale_x = 1.0;
  double scale_y = 1.0;
};

namespace detail {
inline std::int64_t nearest_multiple(std::int64_t value, std::int64_t multiple) {
  std::int64_t q = value / multiple;
  const std::int64_t r = value - q * multiple;
  if (2 * r >= multiple) ++q;  // ties round up
  return std::max<std::int64_t>(q, 1) * multiple;
}
}  // namespace detail

// Maps each dimension to the nearest positive multiple of `multiple`.
inline ResizeResult smart_resize(const Resolution& res, std::int64_t multiple) {
  if (multiple < 1) throw ContractError("smart_resize: multiple must be >= 1");
  if (!res.valid()) throw ContractError("smart_resize: invalid resolution");
  ResizeResult out;
  out.resolution.width = detail::nearest_multiple(res.width, multiple);
  out.resolution.height = detail::nearest_multiple(res.height, multiple);
  out.scale_x = static_cast<double>(out.resolution.width) /
                static_cast<double>(res.width);
  out.scale_y = static_cast<double>(out.resolution.height) /
                static_cast<double>(res.height);
  return out;
}

inline BoundingBox rescale_box(const BoundingBox& box, double scale_x,
                               double scale_y) {
  if (!(scale_x > 0.0) || !(scale_y > 0.0)) {
    throw ContractError("rescale_box: scales must be positive");
  }
  return {box.x_min * scale_x, box.y_min * scale_y, box.x_max * scale_x,
          box.y_max * scale_y};
}

inline Point rescale_point(const Point& p, double scale_x, double scale_y) {
  if (!(scale_x > 0.0) || !(scale_y > 0.0)) {
    throw ContractError("rescale_point: scales must be positive");
  }
  return {p.x * scale_x, p.y * scale_y};
}

}  // namespace clickscale
