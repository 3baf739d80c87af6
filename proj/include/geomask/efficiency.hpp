#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "geomask/dataset.hpp"
#include "geomask/errors.hpp"
#include "geomask/logit.hpp"
#include "geomask/rng.hpp"

namespace geomask {

/// Which closed form to use for E(dbar^2) under uniform masking.
///   as_printed: d^2 + theta* / 3
///   derived:    d^2 + theta*^2 / 3  (E[theta^2] for theta ~ U(0, theta*); the
///               cross term vanishes because delta is uniform)
/// The derived form is the default: it is the one a direct Monte Carlo of the
/// masking law reproduces.
enum class MomentFormula { as_printed, derived };

inline constexpr MomentFormula kDefaultMomentFormula = MomentFormula::derived;

inline std::string_view to_string(MomentFormula f) noexcept {
  return f == MomentFormula::as_printed ? "as-printed" : "derived";
}

inline double expected_sq_masked_distance(double d, double theta_star, MomentFormula variant = kDefaultMomentFormula) {
  if (!(d >= 0.0) || !(theta_star >= 0.0)) throw InvalidArgument("expected_sq_masked_distance: negative argument");
  const double extra = variant == MomentFormula::as_printed ? theta_star / 3.0 : theta_star * theta_star / 3.0;
  return d * d + extra;
}

struct MaskedMoment {
  double theta_star = 0.0;
  MomentFormula variant = kDefaultMomentFormula;
};

/// Where the weights Lambda_i (1 - Lambda_i) are evaluated.
enum class LambdaAt { true_distances, active_distances };

namespace detail {

inline std::vector<double> true_distances(const ChoiceDataset& ds) {
  std::vector<double> d(ds.size());
  const Point& f = ds.facilities().front();
  for (std::size_t i = 0; i < ds.size(); ++i) d[i] = euclidean_distance(ds.points()[i], f);
  return d;
}

}  // namespace detail

/// beta-beta information sum_i Lambda_i (1 - Lambda_i) x_i, with x_i = d_i^2
/// or, when `masked` is given, E(dbar_i^2) from the moment formula.
inline double information_beta(std::span<const double> weight_distances, std::span<const double> true_distances,
                               const LogitParams& p, const std::optional<MaskedMoment>& masked = std::nullopt,
                               InterceptMode mode = InterceptMode::with_intercept) {
  if (weight_distances.size() != true_distances.size()) throw InvalidArgument("information_beta: length mismatch");
  double info = 0.0;
  for (std::size_t i = 0; i < true_distances.size(); ++i) {
    const double lam = logistic(linear_predictor(p, weight_distances[i], mode));
    const double d = true_distances[i];
    const double sq = masked ? expected_sq_masked_distance(d, masked->theta_star, masked->variant) : d * d;
    info += lam * (1.0 - lam) * sq;
  }
  return info;
}

inline double information_beta(const ChoiceDataset& ds, const LogitParams& p,
                               const std::optional<MaskedMoment>& masked = std::nullopt,
                               InterceptMode mode = InterceptMode::with_intercept,
                               LambdaAt lambda_at = LambdaAt::true_distances) {
  const auto d_true = detail::true_distances(ds);
  if (lambda_at == LambdaAt::true_distances) return information_beta(d_true, d_true, p, masked, mode);
  const auto active = ds.distances_to(0);
  return information_beta(active, d_true, p, masked, mode);
}

/// Ratio of the true-distance information to the masked-moment information.
/// Equals 1 at theta* = 0 and decreases strictly as theta* grows.
inline double efficiency_loss(const ChoiceDataset& ds, const LogitParams& p, double theta_star,
                              MomentFormula variant = kDefaultMomentFormula,
                              InterceptMode mode = InterceptMode::with_intercept) {
  const double info_true = information_beta(ds, p, std::nullopt, mode);
  if (!(info_true > 0.0)) throw DegenerateInformation("efficiency_loss: true information is zero");
  return info_true / information_beta(ds, p, MaskedMoment{theta_star, variant}, mode);
}

struct EfficiencyReport {
  double theta_star = 0.0;
  double info_true = 0.0;
  double info_masked_analytic = 0.0;
  double el_analytic = 1.0;
  std::optional<double> el_empirical;
  MomentFormula moment_formula = kDefaultMomentFormula;

  /// Inverse-information (asymptotic) variances of beta-hat.
  double asymptotic_var_true() const noexcept { return 1.0 / info_true; }
  double asymptotic_var_masked() const noexcept { return 1.0 / info_masked_analytic; }
};

inline EfficiencyReport efficiency_report(const ChoiceDataset& ds, const LogitParams& p, double theta_star,
                                          MomentFormula variant = kDefaultMomentFormula,
                                          InterceptMode mode = InterceptMode::with_intercept) {
  EfficiencyReport r;
  r.theta_star = theta_star;
  r.moment_formula = variant;
  r.info_true = information_beta(ds, p, std::nullopt, mode);
  if (!(r.info_true > 0.0)) throw DegenerateInformation("efficiency_report: true information is zero");
  r.info_masked_analytic = information_beta(ds, p, MaskedMoment{theta_star, variant}, mode);
  r.el_analytic = r.info_true / r.info_masked_analytic;
  return r;
}

inline double sample_variance(std::span<const double> v) {
  if (v.size() < 2) throw InsufficientData("sample variance needs at least 2 values");
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(v.size() - 1);
}

inline std::vector<double> converged_betas(std::span<const LogitFit> fits) {
  std::vector<double> out;
  for (const auto& f : fits) {
    if (f.converged) out.push_back(f.params.beta);
  }
  return out;
}

inline constexpr std::size_t kMinEmpiricalFits = 30;

inline double empirical_variance_ratio(std::span<const double> true_betas, std::span<const double> masked_betas) {
  if (true_betas.size() < kMinEmpiricalFits || masked_betas.size() < kMinEmpiricalFits) {
    throw InsufficientData("empirical_variance_ratio: need at least 30 converged fits per list");
  }
  const double vm = sample_variance(masked_betas);
  if (!(vm > 0.0)) throw InsufficientData("empirical_variance_ratio: masked estimates have zero variance");
  return sample_variance(true_betas) / vm;
}

/// Var(beta-hat | true coordinates) / Var(beta-hat | masked coordinates)
/// over converged fits.
inline double empirical_variance_ratio(std::span<const LogitFit> true_fits, std::span<const LogitFit> masked_fits) {
  const auto t = converged_betas(true_fits);
  const auto m = converged_betas(masked_fits);
  return empirical_variance_ratio(t, m);
}

/// Percentile bootstrap interval of the variance ratio; both samples are
/// resampled independently.
inline Interval bootstrap_variance_ratio_ci(std::span<const double> true_betas, std::span<const double> masked_betas,
                                            RngStream rng, double level = 0.95, std::size_t resamples = 2000) {
  if (true_betas.size() < kMinEmpiricalFits || masked_betas.size() < kMinEmpiricalFits) {
    throw InsufficientData("bootstrap: need at least 30 values per sample");
  }
  std::vector<double> ratios;
  ratios.reserve(resamples);
  std::vector<double> a(true_betas.size()), b(masked_betas.size());
  auto pick = [&rng](std::size_t n) { return static_cast<std::size_t>(rng.uniform01() * static_cast<double>(n)); };
  for (std::size_t r = 0; r < resamples; ++r) {
    for (auto& x : a) x = true_betas[pick(a.size())];
    for (auto& x : b) x = masked_betas[pick(b.size())];
    const double vb = sample_variance(b);
    if (vb > 0.0) ratios.push_back(sample_variance(a) / vb);
  }
  if (ratios.empty()) throw InsufficientData("bootstrap: every resample had zero variance");
  std::sort(ratios.begin(), ratios.end());
  const double tail = 0.5 * (1.0 - level);
  auto at = [&ratios](double q) {
    const double pos = q * static_cast<double>(ratios.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, ratios.size() - 1);
    return ratios[lo] + (pos - static_cast<double>(lo)) * (ratios[hi] - ratios[lo]);
  };
  return {at(tail), at(1.0 - tail)};
}

}  // namespace geomask
