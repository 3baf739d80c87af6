#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "geomask/errors.hpp"

namespace geomask {

struct KdeEstimate {
  std::vector<double> grid;
  std::vector<double> density;
  double bandwidth = 0.0;

  double integral() const noexcept {
    double s = 0.0;
    for (std::size_t i = 1; i < grid.size(); ++i) s += 0.5 * (density[i] + density[i - 1]) * (grid[i] - grid[i - 1]);
    return s;
  }
};

/// Linear-interpolation quantile of a sorted sample.
inline double sorted_quantile(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw InvalidArgument("quantile of empty sample");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

/// Silverman's rule of thumb: 0.9 min(sd, IQR / 1.34) n^(-1/5). Falls back to
/// sd when the IQR is zero.
inline double silverman_bandwidth(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 2) throw DegenerateSample("bandwidth needs at least 2 values");
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (!(sd > 0.0)) throw DegenerateSample("kde: all values are identical");

  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double iqr = sorted_quantile(sorted, 0.75) - sorted_quantile(sorted, 0.25);
  const double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
  return 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
}

inline constexpr std::size_t kKdeGridPoints = 512;

/// Gaussian-kernel density on 512 equally spaced points over
/// [min - 3h, max + 3h].
inline KdeEstimate kde(std::span<const double> values, std::optional<double> bandwidth = std::nullopt) {
  if (values.size() < 2) throw DegenerateSample("kde needs at least 2 values");
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it, hi = *hi_it;
  if (!(hi > lo)) throw DegenerateSample("kde: all values are identical");

  KdeEstimate est;
  est.bandwidth = bandwidth ? *bandwidth : silverman_bandwidth(values);
  if (!(est.bandwidth > 0.0) || !std::isfinite(est.bandwidth)) throw InvalidArgument("kde: bandwidth must be > 0");
  const double h = est.bandwidth;
  const double a = lo - 3.0 * h, b = hi + 3.0 * h;
  const double step = (b - a) / static_cast<double>(kKdeGridPoints - 1);
  const double norm = 1.0 / (static_cast<double>(values.size()) * h * std::sqrt(2.0 * std::numbers::pi));

  est.grid.resize(kKdeGridPoints);
  est.density.assign(kKdeGridPoints, 0.0);
  for (std::size_t g = 0; g < kKdeGridPoints; ++g) est.grid[g] = a + step * static_cast<double>(g);
  est.grid.back() = b;
  for (double v : values) {
    for (std::size_t g = 0; g < kKdeGridPoints; ++g) {
      const double z = (est.grid[g] - v) / h;
      if (z > -40.0 && z < 40.0) est.density[g] += std::exp(-0.5 * z * z);
    }
  }
  for (auto& d : est.density) d *= norm;
  return est;
}

}  // namespace geomask
