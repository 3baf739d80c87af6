#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "geomask/errors.hpp"
#include "geomask/geometry.hpp"

namespace geomask {

/// Individuals, facilities, the n x H distance matrix and binary choices.
///
/// Distances are derived from the active coordinate set: the masked points
/// when present, the true points otherwise. Storage is column-major so each
/// facility's distance column is a contiguous span.
class ChoiceDataset {
 public:
  ChoiceDataset(std::vector<Point> points, std::vector<Point> facilities, std::vector<std::uint8_t> choices,
                StudyArea area = StudyArea::unit_square())
      : points_(std::move(points)),
        facilities_(std::move(facilities)),
        choices_(std::move(choices)),
        area_(area) {
    if (points_.empty()) throw InvalidArgument("dataset needs at least one individual");
    if (facilities_.empty()) throw InvalidArgument("dataset needs at least one facility");
    if (choices_.size() != points_.size()) throw InvalidArgument("choices and points differ in length");
    for (auto y : choices_) {
      if (y > 1) throw InvalidArgument("choices must be 0 or 1");
    }
    for (const auto& p : points_) {
      if (!p.finite()) throw InvalidArgument("non-finite point coordinate");
    }
    recompute_distances();
  }

  std::size_t size() const noexcept { return points_.size(); }
  std::size_t facility_count() const noexcept { return facilities_.size(); }

  const std::vector<Point>& points() const noexcept { return points_; }
  const std::optional<std::vector<Point>>& masked_points() const noexcept { return masked_; }
  const std::vector<Point>& active_points() const noexcept { return masked_ ? *masked_ : points_; }
  const std::vector<Point>& facilities() const noexcept { return facilities_; }
  const std::vector<std::uint8_t>& choices() const noexcept { return choices_; }
  const StudyArea& area() const noexcept { return area_; }

  double distance(std::size_t i, std::size_t h) const noexcept { return distances_[h * size() + i]; }

  std::span<const double> distances_to(std::size_t h = 0) const {
    if (h >= facility_count()) throw InvalidArgument("facility index out of range");
    return {distances_.data() + h * size(), size()};
  }

  bool has_both_outcomes() const noexcept {
    bool zero = false, one = false;
    for (auto y : choices_) (y ? one : zero) = true;
    return zero && one;
  }

  /// Copy sharing choices and true points but with new active coordinates.
  ChoiceDataset with_masked_points(std::vector<Point> masked) const {
    if (masked.size() != size()) throw InvalidArgument("masked point count differs from dataset size");
    ChoiceDataset out = *this;
    out.masked_ = std::move(masked);
    out.recompute_distances();
    return out;
  }

  ChoiceDataset with_choices(std::vector<std::uint8_t> choices) const {
    ChoiceDataset out = *this;
    if (choices.size() != size()) throw InvalidArgument("choices and points differ in length");
    out.choices_ = std::move(choices);
    return out;
  }

  /// Checks that stored distances agree with the active coordinates.
  bool distances_consistent(double tol = 1e-12) const {
    const auto& pts = active_points();
    for (std::size_t h = 0; h < facility_count(); ++h) {
      for (std::size_t i = 0; i < size(); ++i) {
        const double d = distance(i, h);
        if (!(d >= 0.0) || std::abs(d - euclidean_distance(pts[i], facilities_[h])) > tol) return false;
      }
    }
    return true;
  }

 private:
  void recompute_distances() {
    const auto& pts = active_points();
    distances_.resize(size() * facility_count());
    for (std::size_t h = 0; h < facility_count(); ++h) {
      for (std::size_t i = 0; i < size(); ++i) distances_[h * size() + i] = euclidean_distance(pts[i], facilities_[h]);
    }
  }

  std::vector<Point> points_;
  std::optional<std::vector<Point>> masked_;
  std::vector<Point> facilities_;
  std::vector<double> distances_;
  std::vector<std::uint8_t> choices_;
  StudyArea area_;
};

}  // namespace geomask
