#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>

#include <boost/math/distributions/normal.hpp>

#include "geomask/dataset.hpp"
#include "geomask/errors.hpp"

namespace geomask {

struct LogitParams {
  double alpha = 0.0;
  double beta = 0.0;

  bool finite() const noexcept { return std::isfinite(alpha) && std::isfinite(beta); }
  friend bool operator==(const LogitParams&, const LogitParams&) = default;
};

/// Whether the linear predictor carries the intercept. Without it the
/// predictor is beta * d and alpha is pinned at 0.
enum class InterceptMode { with_intercept, no_intercept };

struct Gradient {
  double alpha = 0.0;
  double beta = 0.0;
  double max_norm() const noexcept { return std::max(std::abs(alpha), std::abs(beta)); }
};

/// Symmetric 2x2 matrix in (alpha, beta) order.
struct Matrix2 {
  double aa = 0.0;
  double ab = 0.0;
  double bb = 0.0;

  double det() const noexcept { return aa * bb - ab * ab; }
  bool positive_definite() const noexcept { return aa > 0.0 && det() > 0.0; }

  Matrix2 inverse() const {
    const double d = det();
    if (d == 0.0 || !std::isfinite(d)) throw SingularInformation("information matrix is singular");
    return {bb / d, -ab / d, aa / d};
  }
};

/// Standard logistic CDF, evaluated without overflow.
inline double logistic(double eta) noexcept {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

/// ln Lambda(eta), stable for large |eta|.
inline double log_logistic(double eta) noexcept {
  if (eta >= 0.0) return -std::log1p(std::exp(-eta));
  return eta - std::log1p(std::exp(eta));
}

inline double linear_predictor(const LogitParams& p, double d, InterceptMode mode) noexcept {
  return (mode == InterceptMode::with_intercept ? p.alpha : 0.0) + p.beta * d;
}

inline void check_design(std::span<const double> d, std::span<const std::uint8_t> y) {
  if (d.size() != y.size()) throw InvalidArgument("distance and choice vectors differ in length");
  if (d.empty()) throw InvalidArgument("empty design");
}

inline double log_likelihood(std::span<const double> d, std::span<const std::uint8_t> y, const LogitParams& p,
                             InterceptMode mode = InterceptMode::with_intercept) {
  check_design(d, y);
  double ll = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double eta = linear_predictor(p, d[i], mode);
    ll += y[i] ? log_logistic(eta) : log_logistic(-eta);
  }
  return ll;
}

/// Gradient of the log-likelihood: (sum (y - Lambda), sum (y - Lambda) d).
inline Gradient score(std::span<const double> d, std::span<const std::uint8_t> y, const LogitParams& p,
                      InterceptMode mode = InterceptMode::with_intercept) {
  check_design(d, y);
  Gradient g;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double r = static_cast<double>(y[i]) - logistic(linear_predictor(p, d[i], mode));
    g.alpha += r;
    g.beta += r * d[i];
  }
  return g;
}

/// Negative Hessian: sum Lambda (1 - Lambda) (1, d; d, d^2).
inline Matrix2 observed_information(std::span<const double> d, const LogitParams& p,
                                    InterceptMode mode = InterceptMode::with_intercept) {
  Matrix2 m;
  for (double di : d) {
    const double lam = logistic(linear_predictor(p, di, mode));
    const double w = lam * (1.0 - lam);
    m.aa += w;
    m.ab += w * di;
    m.bb += w * di * di;
  }
  return m;
}

inline double log_likelihood(const ChoiceDataset& ds, const LogitParams& p,
                             InterceptMode mode = InterceptMode::with_intercept) {
  return log_likelihood(ds.distances_to(0), ds.choices(), p, mode);
}

inline Gradient score(const ChoiceDataset& ds, const LogitParams& p,
                      InterceptMode mode = InterceptMode::with_intercept) {
  return score(ds.distances_to(0), ds.choices(), p, mode);
}

inline Matrix2 observed_information(const ChoiceDataset& ds, const LogitParams& p,
                                    InterceptMode mode = InterceptMode::with_intercept) {
  return observed_information(ds.distances_to(0), p, mode);
}

struct FitOptions {
  double tol = 1e-8;
  std::size_t max_iter = 100;
  InterceptMode mode = InterceptMode::with_intercept;
  LogitParams init{};
};

struct StdErrors {
  double alpha = std::numeric_limits<double>::quiet_NaN();
  double beta = std::numeric_limits<double>::quiet_NaN();
};

struct LogitFit {
  LogitParams params;
  StdErrors std_errors;
  double loglik = 0.0;
  Matrix2 information;
  bool converged = false;
  std::size_t iterations = 0;
  double gradient_norm = std::numeric_limits<double>::infinity();
  InterceptMode mode = InterceptMode::with_intercept;
};

namespace detail {

// Information is treated as singular when its determinant is negligible
// relative to the product of its diagonal.
inline bool numerically_singular(const Matrix2& m, InterceptMode mode) {
  if (mode == InterceptMode::no_intercept) return !(m.bb > 0.0);
  return !(m.aa > 0.0) || !(m.bb > 0.0) || !(m.det() > 1e-13 * m.aa * m.bb);
}

inline constexpr double kDivergenceBound = 1e6;

/// Complete or quasi-complete separation: some nonzero linear predictor
/// weakly orders every 1 above every 0, so the MLE is at infinity. With an
/// intercept this means a distance threshold splits the two outcomes; without
/// one the threshold is pinned at d = 0.
inline bool separated(std::span<const double> d, std::span<const std::uint8_t> y, InterceptMode mode) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  double lo[2] = {inf, inf}, hi[2] = {-inf, -inf};
  for (std::size_t i = 0; i < d.size(); ++i) {
    lo[y[i]] = std::min(lo[y[i]], d[i]);
    hi[y[i]] = std::max(hi[y[i]], d[i]);
  }
  if (mode == InterceptMode::with_intercept) return hi[1] <= lo[0] || hi[0] <= lo[1];
  return (hi[1] <= 0.0 && lo[0] >= 0.0) || (lo[1] >= 0.0 && hi[0] <= 0.0);
}

}  // namespace detail

/// Newton-Raphson with step halving. Returns converged = false instead of an
/// estimate when the iteration runs away (separation) or stalls.
inline LogitFit fit_logit(std::span<const double> d, std::span<const std::uint8_t> y, const FitOptions& opt = {}) {
  check_design(d, y);
  bool zero = false, one = false;
  for (auto v : y) (v ? one : zero) = true;
  if (!(zero && one)) throw SeparationError("fit_logit: all choices are identical; the MLE does not exist");

  const InterceptMode mode = opt.mode;
  const bool separated = detail::separated(d, y, mode);
  LogitFit fit;
  fit.mode = mode;
  LogitParams p = opt.init;
  if (mode == InterceptMode::no_intercept) p.alpha = 0.0;
  if (!p.finite()) throw InvalidArgument("fit_logit: non-finite initial parameters");

  double ll = log_likelihood(d, y, p, mode);
  Matrix2 info = observed_information(d, p, mode);
  if (detail::numerically_singular(info, mode)) {
    throw SingularInformation("fit_logit: information is singular at the initial point (no distance variation?)");
  }
  Gradient g = score(d, y, p, mode);
  auto grad_norm = [mode](const Gradient& gr) {
    return mode == InterceptMode::with_intercept ? gr.max_norm() : std::abs(gr.beta);
  };

  std::size_t it = 0;
  bool stalled = false;
  while (grad_norm(g) >= opt.tol && it < opt.max_iter) {
    ++it;
    if (detail::numerically_singular(info, mode)) {
      stalled = true;
      break;
    }
    double step_a = 0.0, step_b = 0.0;
    if (mode == InterceptMode::with_intercept) {
      const Matrix2 inv = info.inverse();
      step_a = inv.aa * g.alpha + inv.ab * g.beta;
      step_b = inv.ab * g.alpha + inv.bb * g.beta;
    } else {
      step_b = g.beta / info.bb;
    }

    double scale = 1.0;
    LogitParams trial{};
    double trial_ll = -std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int halving = 0; halving < 40; ++halving) {
      trial = {p.alpha + scale * step_a, p.beta + scale * step_b};
      trial_ll = log_likelihood(d, y, trial, mode);
      if (std::isfinite(trial_ll) && trial_ll >= ll - 1e-12 * std::abs(ll)) {
        accepted = true;
        break;
      }
      scale *= 0.5;
    }
    if (!accepted) {
      stalled = true;
      break;
    }
    p = trial;
    ll = trial_ll;
    if (!p.finite() || std::abs(p.alpha) > detail::kDivergenceBound || std::abs(p.beta) > detail::kDivergenceBound) {
      stalled = true;
      break;
    }
    g = score(d, y, p, mode);
    info = observed_information(d, p, mode);
  }

  fit.params = p;
  fit.loglik = ll;
  fit.information = info;
  fit.iterations = it;
  fit.gradient_norm = grad_norm(g);
  const bool info_ok = !detail::numerically_singular(info, mode);
  fit.converged = !stalled && !separated && fit.gradient_norm < opt.tol && info_ok;
  if (info_ok) {
    if (mode == InterceptMode::with_intercept) {
      const Matrix2 inv = info.inverse();
      fit.std_errors = {std::sqrt(inv.aa), std::sqrt(inv.bb)};
    } else {
      fit.std_errors.beta = std::sqrt(1.0 / info.bb);
    }
  }
  return fit;
}

inline LogitFit fit_logit(const ChoiceDataset& ds, const FitOptions& opt = {}) {
  return fit_logit(ds.distances_to(0), ds.choices(), opt);
}

inline LogitFit fit_logit(const ChoiceDataset& ds, const LogitParams& init, double tol, std::size_t max_iter,
                          InterceptMode mode = InterceptMode::with_intercept) {
  return fit_logit(ds.distances_to(0), ds.choices(), FitOptions{tol, max_iter, mode, init});
}

/// Two-sided standard normal quantile z_{(1+level)/2}.
inline double normal_quantile_two_sided(double level) {
  if (!(level > 0.0 && level < 1.0)) throw InvalidArgument("confidence level must lie in (0, 1)");
  return boost::math::quantile(boost::math::normal(), 0.5 * (1.0 + level));
}

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double v) const noexcept { return lo <= v && v <= hi; }
};

struct WaldIntervals {
  Interval alpha;
  Interval beta;
};

inline Interval wald_interval(double estimate, double se, double level) {
  const double z = normal_quantile_two_sided(level);
  return {estimate - z * se, estimate + z * se};
}

inline WaldIntervals wald_ci(const LogitFit& fit, double level = 0.95) {
  if (!fit.converged) throw InvalidFit("wald_ci: fit did not converge");
  const double z = normal_quantile_two_sided(level);
  WaldIntervals ci;
  ci.beta = {fit.params.beta - z * fit.std_errors.beta, fit.params.beta + z * fit.std_errors.beta};
  if (fit.mode == InterceptMode::with_intercept) {
    ci.alpha = {fit.params.alpha - z * fit.std_errors.alpha, fit.params.alpha + z * fit.std_errors.alpha};
  } else {
    ci.alpha = {0.0, 0.0};
  }
  return ci;
}

/// Two-sided Wald p-value for H0: parameter = 0.
inline double wald_p_value(double estimate, double se) noexcept {
  if (!(se > 0.0)) return estimate == 0.0 ? 1.0 : 0.0;
  return std::erfc(std::abs(estimate / se) / std::sqrt(2.0));
}

inline bool beta_significant(const LogitFit& fit, double alpha_level = 0.05) {
  return fit.converged && wald_p_value(fit.params.beta, fit.std_errors.beta) < alpha_level;
}

}  // namespace geomask
