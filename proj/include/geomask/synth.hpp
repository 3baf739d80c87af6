#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "geomask/dataset.hpp"
#include "geomask/errors.hpp"
#include "geomask/geometry.hpp"
#include "geomask/logit.hpp"
#include "geomask/rng.hpp"

namespace geomask {

/// n i.i.d. uniform points on `area` (x drawn before y for each point).
inline std::vector<Point> generate_csr(std::size_t n, const StudyArea& area, RngStream& rng) {
  if (n == 0) throw InvalidArgument("generate_csr: n must be >= 1");
  std::vector<Point> pts;
  pts.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = rng.uniform(area.x_min(), area.x_max());
    const double y = rng.uniform(area.y_min(), area.y_max());
    pts.push_back({x, y});
  }
  return pts;
}

/// y_i ~ Bernoulli(Lambda(alpha + beta d_i)) with d_i the distance to `facility`.
inline ChoiceDataset simulate_choices(std::vector<Point> points, const Point& facility, const LogitParams& p,
                                      RngStream& rng, const StudyArea& area = StudyArea::unit_square()) {
  std::vector<std::uint8_t> y(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double d = euclidean_distance(points[i], facility);
    y[i] = rng.bernoulli(logistic(p.alpha + p.beta * d)) ? 1 : 0;
  }
  return ChoiceDataset(std::move(points), {facility}, std::move(y), area);
}

/// Fresh choices for the active distances of an existing dataset.
inline std::vector<std::uint8_t> resimulate_choices(const ChoiceDataset& ds, const LogitParams& p, RngStream& rng) {
  const auto d = ds.distances_to(0);
  std::vector<std::uint8_t> y(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) y[i] = rng.bernoulli(logistic(p.alpha + p.beta * d[i])) ? 1 : 0;
  return y;
}

struct GridCell {
  StudyArea bounds;
  Point centroid;
  double equivalent_radius = 0.0;
};

/// k x k equal tiles of a study area; the synthetic stand-in for municipalities.
class MunicipalityGrid {
 public:
  MunicipalityGrid(const StudyArea& area, std::size_t k) : area_(area), k_(k) {
    if (k == 0) throw InvalidArgument("municipality grid needs k >= 1");
    const double w = area.width() / static_cast<double>(k);
    const double h = area.height() / static_cast<double>(k);
    auto edge = [k](double lo, double hi, double step, std::size_t j) {
      return j == k ? hi : lo + step * static_cast<double>(j);
    };
    cells_.reserve(k * k);
    for (std::size_t r = 0; r < k; ++r) {
      for (std::size_t c = 0; c < k; ++c) {
        const double x0 = edge(area.x_min(), area.x_max(), w, c), x1 = edge(area.x_min(), area.x_max(), w, c + 1);
        const double y0 = edge(area.y_min(), area.y_max(), h, r), y1 = edge(area.y_min(), area.y_max(), h, r + 1);
        auto bounds = StudyArea::rectangle(x0, x1, y0, y1);
        cells_.push_back({bounds, bounds.center(), equivalent_circle_radius(bounds.surface())});
      }
    }
  }

  const StudyArea& area() const noexcept { return area_; }
  std::size_t k() const noexcept { return k_; }
  const std::vector<GridCell>& cells() const noexcept { return cells_; }

  /// Row-major index of the cell holding p; shared edges go to the upper cell.
  std::size_t cell_index(const Point& p) const {
    if (!area_.contains(p)) throw OutOfGrid("point outside the municipality grid");
    auto axis = [this](double v, double lo, double span) {
      auto j = static_cast<std::size_t>(std::floor((v - lo) / span * static_cast<double>(k_)));
      return std::min(j, k_ - 1);
    };
    std::size_t c = axis(p.x, area_.x_min(), area_.width());
    std::size_t r = axis(p.y, area_.y_min(), area_.height());
    // Floating-point rounding near an edge can land one cell over.
    while (c > 0 && p.x < cells_[r * k_ + c].bounds.x_min()) --c;
    while (c + 1 < k_ && p.x >= cells_[r * k_ + c + 1].bounds.x_min()) ++c;
    while (r > 0 && p.y < cells_[r * k_ + c].bounds.y_min()) --r;
    while (r + 1 < k_ && p.y >= cells_[(r + 1) * k_ + c].bounds.y_min()) ++r;
    return r * k_ + c;
  }

  const GridCell& cell_of(const Point& p) const { return cells_[cell_index(p)]; }

 private:
  StudyArea area_;
  std::size_t k_;
  std::vector<GridCell> cells_;
};

inline MunicipalityGrid build_municipality_grid(const StudyArea& area, std::size_t k) { return {area, k}; }

/// Moves every active coordinate to its cell centroid.
inline ChoiceDataset assign_to_centroid(const ChoiceDataset& ds, const MunicipalityGrid& grid) {
  std::vector<Point> moved;
  moved.reserve(ds.size());
  for (const auto& p : ds.active_points()) moved.push_back(grid.cell_of(p).centroid);
  return ds.with_masked_points(std::move(moved));
}

}  // namespace geomask
