#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "geomask/errors.hpp"

namespace geomask {

/// Planar point in standardized map units.
struct Point {
  double x = 0.0;
  double y = 0.0;

  bool finite() const noexcept { return std::isfinite(x) && std::isfinite(y); }
  friend bool operator==(const Point&, const Point&) = default;
};

/// Axis-aligned region that constrains masking. Closed on all sides.
class StudyArea {
 public:
  enum class Kind { unit_square_centered, axis_aligned_rectangle };

  static StudyArea unit_square() { return StudyArea(Kind::unit_square_centered, -0.5, 0.5, -0.5, 0.5); }

  static StudyArea rectangle(double x_min, double x_max, double y_min, double y_max) {
    if (!(x_min < x_max) || !(y_min < y_max)) {
      throw InvalidArgument("study area bounds must satisfy x_min < x_max and y_min < y_max");
    }
    if (x_min == -0.5 && x_max == 0.5 && y_min == -0.5 && y_max == 0.5) return unit_square();
    return StudyArea(Kind::axis_aligned_rectangle, x_min, x_max, y_min, y_max);
  }

  Kind kind() const noexcept { return kind_; }
  double x_min() const noexcept { return x_min_; }
  double x_max() const noexcept { return x_max_; }
  double y_min() const noexcept { return y_min_; }
  double y_max() const noexcept { return y_max_; }
  double width() const noexcept { return x_max_ - x_min_; }
  double height() const noexcept { return y_max_ - y_min_; }
  double surface() const noexcept { return width() * height(); }
  Point center() const noexcept { return {0.5 * (x_min_ + x_max_), 0.5 * (y_min_ + y_max_)}; }

  bool contains(const Point& p) const noexcept {
    return x_min_ <= p.x && p.x <= x_max_ && y_min_ <= p.y && p.y <= y_max_;
  }

  friend bool operator==(const StudyArea&, const StudyArea&) = default;

 private:
  StudyArea(Kind kind, double x_min, double x_max, double y_min, double y_max)
      : kind_(kind), x_min_(x_min), x_max_(x_max), y_min_(y_min), y_max_(y_max) {}

  Kind kind_;
  double x_min_;
  double x_max_;
  double y_min_;
  double y_max_;
};

/// One polar perturbation: distance theta and angle delta (radians, [0, 2pi)).
struct Displacement {
  double theta = 0.0;
  double delta = 0.0;

  Displacement() = default;
  Displacement(double theta_, double delta_) : theta(theta_), delta(normalize_angle(delta_)) {
    if (!(theta_ >= 0.0) || !std::isfinite(theta_)) {
      throw InvalidArgument("displacement distance must be finite and >= 0");
    }
  }

  static double normalize_angle(double a) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    if (a >= 0.0 && a < two_pi) return a;
    double r = std::fmod(a, two_pi);
    if (r < 0.0) r += two_pi;
    if (r >= two_pi) r = 0.0;
    return r;
  }
};

inline double euclidean_distance(const Point& p, const Point& q) noexcept {
  return std::hypot(p.x - q.x, p.y - q.y);
}

/// Additive polar offset: (x + theta cos delta, y + theta sin delta).
inline Point displace(const Point& p, const Displacement& d) noexcept {
  return {p.x + d.theta * std::cos(d.delta), p.y + d.theta * std::sin(d.delta)};
}

/// Distance from the displaced point to `origin`. The subtractive form
/// sqrt((x - theta cos delta)^2 + ...) is the same law because delta is
/// uniform on the full circle; only the additive path is implemented.
inline double distorted_distance(const Point& p, const Displacement& d, const Point& origin) noexcept {
  return euclidean_distance(displace(p, d), origin);
}

inline double equivalent_circle_radius(double surface_area) {
  if (!(surface_area > 0.0) || !std::isfinite(surface_area)) {
    throw InvalidArgument("equivalent_circle_radius: surface area must be a positive finite number");
  }
  return std::sqrt(surface_area / std::numbers::pi);
}

/// Uniform scale + translation: mapped = (p - center) * scale.
struct AffineTransform {
  double scale = 1.0;
  Point center{};

  Point apply(const Point& p) const noexcept { return {(p.x - center.x) * scale, (p.y - center.y) * scale}; }
  Point invert(const Point& p) const noexcept { return {p.x / scale + center.x, p.y / scale + center.y}; }
};

struct Standardized {
  std::vector<Point> points;
  AffineTransform transform;
};

/// Maps the bounding box into the centered unit square; the longer side
/// becomes length 1 and the aspect ratio is preserved.
inline Standardized standardize_coordinates(std::span<const Point> points) {
  if (points.size() < 2) throw InvalidArgument("standardize_coordinates: need at least 2 points");
  double x_lo = points[0].x, x_hi = points[0].x, y_lo = points[0].y, y_hi = points[0].y;
  for (const auto& p : points) {
    if (!p.finite()) throw InvalidArgument("standardize_coordinates: non-finite coordinate");
    x_lo = std::min(x_lo, p.x);
    x_hi = std::max(x_hi, p.x);
    y_lo = std::min(y_lo, p.y);
    y_hi = std::max(y_hi, p.y);
  }
  const double extent = std::max(x_hi - x_lo, y_hi - y_lo);
  if (!(extent > 0.0)) throw DegenerateExtent("standardize_coordinates: all points are identical");

  Standardized out;
  out.transform.scale = 1.0 / extent;
  out.transform.center = {0.5 * (x_lo + x_hi), 0.5 * (y_lo + y_hi)};
  out.points.reserve(points.size());
  for (const auto& p : points) out.points.push_back(out.transform.apply(p));
  return out;
}

}  // namespace geomask
