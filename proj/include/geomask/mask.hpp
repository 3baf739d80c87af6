#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "geomask/dataset.hpp"
#include "geomask/errors.hpp"
#include "geomask/geometry.hpp"
#include "geomask/rng.hpp"

namespace geomask {

enum class Mechanism { uniform, gaussian };

struct BoundaryPolicy {
  enum class Kind { redraw, unconstrained };

  Kind kind = Kind::unconstrained;
  std::size_t max_attempts = 1000;

  static BoundaryPolicy redraw(std::size_t max_attempts = 1000) { return {Kind::redraw, max_attempts}; }
  static BoundaryPolicy unconstrained() { return {Kind::unconstrained, 1000}; }
  friend bool operator==(const BoundaryPolicy&, const BoundaryPolicy&) = default;
};

/// sqrt(2 ln 100): with per-axis sigma = theta_star / this constant, the
/// Rayleigh displacement radius satisfies P(theta <= theta_star) = 0.99.
inline const double kGaussianRadiusFactor = std::sqrt(2.0 * std::log(100.0));

struct MaskSpec {
  Mechanism mechanism = Mechanism::uniform;
  double theta_star = 0.0;
  BoundaryPolicy boundary = BoundaryPolicy::unconstrained();

  void validate() const {
    if (!(theta_star >= 0.0) || !std::isfinite(theta_star)) throw InvalidArgument("theta_star must be finite and >= 0");
    if (boundary.kind == BoundaryPolicy::Kind::redraw && boundary.max_attempts < 1) {
      throw InvalidArgument("redraw max_attempts must be >= 1");
    }
  }

  double gaussian_sigma() const { return theta_star / kGaussianRadiusFactor; }
  friend bool operator==(const MaskSpec&, const MaskSpec&) = default;
};

/// Draws one (theta, delta). Uniform: theta ~ U(0, theta*), delta ~ U(0, 2pi),
/// independent. Gaussian: isotropic normal offset converted to polar form.
inline Displacement draw_displacement(const MaskSpec& spec, RngStream& rng) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  if (spec.mechanism == Mechanism::uniform) {
    const double theta = spec.theta_star * rng.uniform01();
    const double delta = two_pi * rng.uniform01();
    return {theta, delta};
  }
  const double sigma = spec.gaussian_sigma();
  const double dx = sigma * rng.normal();
  const double dy = sigma * rng.normal();
  const double theta = std::hypot(dx, dy);
  if (theta == 0.0) return {0.0, 0.0};
  return {theta, std::atan2(dy, dx)};
}

/// Masks one point. Under the redraw policy a displacement landing outside
/// `area` is discarded and redrawn, up to max_attempts draws in total.
inline Point mask_point(const Point& p, const MaskSpec& spec, const StudyArea& area, RngStream& rng,
                        std::size_t point_index = 0) {
  if (spec.boundary.kind == BoundaryPolicy::Kind::unconstrained) return displace(p, draw_displacement(spec, rng));
  if (!area.contains(p)) {
    throw InvalidArgument("mask_point: point " + std::to_string(point_index) + " lies outside the study area");
  }
  for (std::size_t attempt = 0; attempt < spec.boundary.max_attempts; ++attempt) {
    const Point q = displace(p, draw_displacement(spec, rng));
    if (area.contains(q)) return q;
  }
  throw BoundaryExhaustion(point_index, spec.boundary.max_attempts);
}

inline std::vector<Point> mask_points(std::span<const Point> points, const MaskSpec& spec, const StudyArea& area,
                                      RngStream& rng) {
  spec.validate();
  std::vector<Point> out;
  out.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) out.push_back(mask_point(points[i], spec, area, rng, i));
  return out;
}

/// Re-masks the true coordinates of `ds`; choices are untouched and
/// distances to every facility are recomputed from the masked points.
inline ChoiceDataset mask_dataset(const ChoiceDataset& ds, const MaskSpec& spec, RngStream& rng) {
  return ds.with_masked_points(mask_points(ds.points(), spec, ds.area(), rng));
}

}  // namespace geomask
