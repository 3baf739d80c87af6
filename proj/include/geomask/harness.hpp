#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "geomask/dataset.hpp"
#include "geomask/efficiency.hpp"
#include "geomask/errors.hpp"
#include "geomask/geometry.hpp"
#include "geomask/logit.hpp"
#include "geomask/mask.hpp"
#include "geomask/rng.hpp"
#include "geomask/synth.hpp"

namespace geomask {

enum class ExperimentKind { centroid, fixed_area_grid, csr_population };

inline std::string_view to_string(ExperimentKind k) noexcept {
  switch (k) {
    case ExperimentKind::centroid: return "centroid";
    case ExperimentKind::fixed_area_grid: return "fixed-area-grid";
    case ExperimentKind::csr_population: return "csr-population";
  }
  return "?";
}

inline constexpr std::size_t kFastReplications = 200;

inline std::vector<double> default_theta_grid() {
  std::vector<double> g;
  for (int i = 1; i <= 10; ++i) g.push_back(static_cast<double>(i) / 10.0);
  return g;
}

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::csr_population;
  std::size_t n = 1000;
  std::size_t replications = 1000;
  /// Fractions of reference_radius; the masked theta* values are their products.
  std::vector<double> theta_grid = default_theta_grid();
  double reference_radius = 0.707;
  LogitParams generating_params{1.0, -2.0};
  MaskSpec mask{Mechanism::uniform, 0.0, BoundaryPolicy::unconstrained()};
  std::uint64_t seed = 1;
  std::size_t workers = 1;

  StudyArea area = StudyArea::unit_square();
  Point facility{0.0, 0.0};
  /// Cells per side of the centroid experiment's grid.
  std::size_t grid_k = 10;
  /// Replications of the variance-ratio cross-check; 0 disables it.
  std::size_t efficiency_replications = 1000;
  MomentFormula moment_variant = kDefaultMomentFormula;
  double fit_tol = 1e-8;
  std::size_t fit_max_iter = 100;
  /// Optional point file (id,x,y[,choice]) replacing the generated population.
  std::string points_file;

  void validate() const {
    auto fail = [](const std::string& m) { throw ConfigError(m); };
    if (replications < 1) fail("experiment.replications: must be >= 1");
    if (n < 1) fail("population.n: must be >= 1");
    if (!(reference_radius > 0.0) || !std::isfinite(reference_radius)) fail("grid.reference_radius: must be > 0");
    if (theta_grid.empty()) fail("grid.values: must not be empty");
    for (double v : theta_grid) {
      if (!(v >= 0.0 && v <= 1.0)) fail("grid.values: value " + std::to_string(v) + " outside [0, 1]");
    }
    if (!std::is_sorted(theta_grid.begin(), theta_grid.end())) fail("grid.values: must be sorted ascending");
    if (!generating_params.finite()) fail("population.alpha/beta: must be finite");
    if (grid_k < 1) fail("population.grid_k: must be >= 1");
    if (!(fit_tol > 0.0)) fail("fit.tol: must be > 0");
    if (fit_max_iter < 1) fail("fit.max_iter: must be >= 1");
    if (theta_grid.size() >= kReservedThetaIndex) fail("grid.values: too many grid points");
    if (replications > 0xFFFFFFFFULL) fail("experiment.replications: too large");
    try {
      mask.validate();
    } catch (const InvalidArgument& e) {
      fail(std::string("mask: ") + e.what());
    }
  }

  double theta_star(std::size_t theta_index) const { return reference_radius * theta_grid.at(theta_index); }

  FitOptions fit_options() const { return {fit_tol, fit_max_iter, InterceptMode::with_intercept, {}}; }
};

struct ReplicationRecord {
  double theta_star = 0.0;
  std::size_t theta_index = 0;
  std::size_t rep = 0;
  double beta_hat = std::numeric_limits<double>::quiet_NaN();
  double alpha_hat = std::numeric_limits<double>::quiet_NaN();
  double se_beta = std::numeric_limits<double>::quiet_NaN();
  bool converged = false;
  std::size_t iterations = 0;
  bool significant_beta = false;
  bool outside_true_ci = false;
};

struct CurveRow {
  double theta_star = 0.0;
  double mean_abs_beta = 0.0;
  double sd_beta = 0.0;
  double pct_outside_true_ci = 0.0;
  double pct_nonsignificant = 0.0;
  double convergence_rate = 0.0;
  std::size_t converged = 0;
  std::size_t total = 0;
  /// Monte Carlo standard error of mean_abs_beta.
  double se_mean_abs_beta = 0.0;
};

using AttenuationCurve = std::vector<CurveRow>;

struct Baseline {
  ChoiceDataset dataset;
  LogitFit fit;
  Interval beta_ci;
};

inline std::uint64_t choices_checksum(std::span<const std::uint8_t> y) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (auto v : y) {
    h ^= v;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// CSR population and its choices, both drawn from reserved streams of the seed.
inline ChoiceDataset generate_population(const ExperimentConfig& cfg) {
  auto pts_rng = purpose_stream(cfg.seed, StreamPurpose::population);
  auto y_rng = purpose_stream(cfg.seed, StreamPurpose::choices);
  return simulate_choices(generate_csr(cfg.n, cfg.area, pts_rng), cfg.facility, cfg.generating_params, y_rng,
                          cfg.area);
}

/// Fits the true-coordinate dataset; its beta-hat and 95% CI are the
/// reference every replication is compared against.
inline Baseline run_baseline(const ExperimentConfig& cfg, ChoiceDataset population) {
  cfg.validate();
  LogitFit fit = fit_logit(population, cfg.fit_options());
  if (!fit.converged) throw InvalidFit("baseline fit did not converge");
  const Interval ci = wald_ci(fit, 0.95).beta;
  return {std::move(population), fit, ci};
}

inline Baseline run_baseline(const ExperimentConfig& cfg) { return run_baseline(cfg, generate_population(cfg)); }

inline ReplicationRecord make_record(const LogitFit& fit, const Baseline& base, double theta_star,
                                     std::size_t theta_index, std::size_t rep) {
  ReplicationRecord r;
  r.theta_star = theta_star;
  r.theta_index = theta_index;
  r.rep = rep;
  r.converged = fit.converged;
  r.iterations = fit.iterations;
  if (fit.converged) {
    r.beta_hat = fit.params.beta;
    r.alpha_hat = fit.params.alpha;
    r.se_beta = fit.std_errors.beta;
    r.significant_beta = beta_significant(fit);
    r.outside_true_ci = !base.beta_ci.contains(fit.params.beta);
  }
  return r;
}

/// Aggregates one theta cell. Moments and percentages use converged records;
/// the convergence rate is over all records.
inline CurveRow summarize_replications(std::span<const ReplicationRecord> records, const Interval& baseline_ci) {
  if (records.empty()) throw EmptyCell("summarize_replications: empty theta cell");
  CurveRow row;
  row.theta_star = records.front().theta_star;
  row.total = records.size();
  // Moments are accumulated around the first converged estimate (shifted
  // data), which is exact when every estimate is identical.
  double pivot = 0.0;
  for (const auto& r : records) {
    if (r.converged) {
      pivot = r.beta_hat;
      break;
    }
  }
  const double abs_pivot = std::abs(pivot);
  double sum_abs = 0.0, sum = 0.0;
  std::size_t outside = 0, nonsig = 0;
  for (const auto& r : records) {
    if (!r.converged) continue;
    ++row.converged;
    sum_abs += std::abs(r.beta_hat) - abs_pivot;
    sum += r.beta_hat - pivot;
    if (!baseline_ci.contains(r.beta_hat)) ++outside;
    if (!r.significant_beta) ++nonsig;
  }
  if (row.converged == 0) throw EmptyCell("summarize_replications: no converged record in theta cell");
  const auto m = static_cast<double>(row.converged);
  const double shift = sum / m, shift_abs = sum_abs / m;
  row.mean_abs_beta = abs_pivot + shift_abs;
  double ss = 0.0, ss_abs = 0.0;
  for (const auto& r : records) {
    if (!r.converged) continue;
    const double e = r.beta_hat - pivot - shift, e_abs = std::abs(r.beta_hat) - abs_pivot - shift_abs;
    ss += e * e;
    ss_abs += e_abs * e_abs;
  }
  row.sd_beta = row.converged > 1 ? std::sqrt(ss / (m - 1.0)) : 0.0;
  row.se_mean_abs_beta = row.converged > 1 ? std::sqrt(ss_abs / (m - 1.0) / m) : 0.0;
  row.pct_outside_true_ci = 100.0 * static_cast<double>(outside) / m;
  row.pct_nonsignificant = 100.0 * static_cast<double>(nonsig) / m;
  row.convergence_rate = m / static_cast<double>(row.total);
  return row;
}

inline CurveRow summarize_replications(std::span<const ReplicationRecord> records, const Baseline& baseline) {
  return summarize_replications(records, baseline.beta_ci);
}

namespace detail {

/// Runs task(i) for i in [0, count) on `workers` threads. Each task writes
/// only its own output slot, so results do not depend on scheduling.
template <class Task>
void parallel_for(std::size_t count, std::size_t workers, Task&& task) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, std::max<std::size_t>(count, 1));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
          try {
            task(i);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!first_error) first_error = std::current_exception();
          }
        }
      });
    }
  }
  if (first_error) std::rethrow_exception(first_error);
}

inline LogitFit fit_or_fail(const ChoiceDataset& ds, const FitOptions& opt) {
  try {
    return fit_logit(ds, opt);
  } catch (const Error&) {
    return LogitFit{};
  }
}

inline void check_convergence(const AttenuationCurve& curve) {
  for (const auto& row : curve) {
    if (row.convergence_rate < 0.5) {
      throw BatchFailure("theta* = " + std::to_string(row.theta_star) + ": only " + std::to_string(row.converged) +
                         " of " + std::to_string(row.total) + " replications converged");
    }
  }
}

inline CurveRow summarize_or_fail(std::span<const ReplicationRecord> cell, const Interval& ci) {
  try {
    return summarize_replications(cell, ci);
  } catch (const EmptyCell&) {
    CurveRow row;
    row.theta_star = cell.empty() ? 0.0 : cell.front().theta_star;
    row.total = cell.size();
    return row;
  }
}

}  // namespace detail

struct AttenuationResult {
  Baseline baseline;
  AttenuationCurve curve;
  std::vector<ReplicationRecord> records;
  std::vector<EfficiencyReport> efficiency;
  /// Every replication saw the baseline choice vector.
  bool choices_fixed = true;
};

struct EfficiencySamples {
  std::vector<double> true_betas;
  std::vector<std::vector<double>> masked_betas;  // per theta index
};

/// Variance-ratio cross-check. True-coordinate replications redraw y on the
/// fixed points; masked replications redraw y from an independent stream and
/// refit on coordinates masked with the same streams as the attenuation run.
inline EfficiencySamples run_efficiency_replications(const ExperimentConfig& cfg, const Baseline& base) {
  const std::size_t reps = cfg.efficiency_replications;
  const std::size_t grid = cfg.theta_grid.size();
  const auto opt = cfg.fit_options();
  std::vector<LogitFit> true_fits(reps);
  std::vector<LogitFit> masked_fits(reps * grid);
  detail::parallel_for(reps * (grid + 1), cfg.workers, [&](std::size_t task) {
    if (task < reps) {
      auto y_rng = purpose_stream(cfg.seed, StreamPurpose::efficiency_true_choices, task);
      auto ds = base.dataset.with_choices(resimulate_choices(base.dataset, cfg.generating_params, y_rng));
      if (ds.has_both_outcomes()) true_fits[task] = detail::fit_or_fail(ds, opt);
      return;
    }
    const std::size_t t = (task - reps) / reps, r = (task - reps) % reps;
    auto y_rng = purpose_stream(cfg.seed, StreamPurpose::efficiency_masked_choices, r);
    auto ds = base.dataset.with_choices(resimulate_choices(base.dataset, cfg.generating_params, y_rng));
    if (!ds.has_both_outcomes()) return;
    MaskSpec spec = cfg.mask;
    spec.theta_star = cfg.theta_star(t);
    auto rng = derive_stream(cfg.seed, t, r);
    try {
      masked_fits[task - reps] = detail::fit_or_fail(mask_dataset(ds, spec, rng), opt);
    } catch (const Error&) {
    }
  });
  EfficiencySamples out;
  out.true_betas = converged_betas(true_fits);
  for (std::size_t t = 0; t < grid; ++t) {
    out.masked_betas.push_back(converged_betas(std::span(masked_fits).subspan(t * reps, reps)));
  }
  return out;
}

/// Masks, refits and summarizes every (theta*, replication) pair with the
/// baseline choices held fixed.
inline AttenuationResult run_attenuation_experiment(const ExperimentConfig& cfg, Baseline base) {
  cfg.validate();
  const std::size_t grid = cfg.theta_grid.size();
  const std::size_t reps = cfg.replications;
  const auto opt = cfg.fit_options();
  const std::uint64_t checksum = choices_checksum(base.dataset.choices());

  AttenuationResult res{std::move(base), {}, std::vector<ReplicationRecord>(grid * reps), {}, true};
  std::vector<std::uint8_t> same_choices(grid * reps, 1);
  const Baseline& b = res.baseline;

  detail::parallel_for(grid * reps, cfg.workers, [&](std::size_t task) {
    const std::size_t t = task / reps, r = task % reps;
    MaskSpec spec = cfg.mask;
    spec.theta_star = cfg.theta_star(t);
    auto rng = derive_stream(cfg.seed, t, r);
    LogitFit fit;
    try {
      const ChoiceDataset masked = mask_dataset(b.dataset, spec, rng);
      same_choices[task] = choices_checksum(masked.choices()) == checksum;
      fit = detail::fit_or_fail(masked, opt);
    } catch (const Error&) {
    }
    res.records[task] = make_record(fit, b, spec.theta_star, t, r);
  });

  res.choices_fixed = std::all_of(same_choices.begin(), same_choices.end(), [](auto v) { return v != 0; });
  for (std::size_t t = 0; t < grid; ++t) {
    res.curve.push_back(detail::summarize_or_fail(std::span(res.records).subspan(t * reps, reps), b.beta_ci));
  }

  std::optional<EfficiencySamples> samples;
  if (cfg.efficiency_replications > 0) samples = run_efficiency_replications(cfg, b);
  for (std::size_t t = 0; t < grid; ++t) {
    auto rep = efficiency_report(b.dataset, b.fit.params, cfg.theta_star(t), cfg.moment_variant);
    if (samples) {
      try {
        rep.el_empirical = empirical_variance_ratio(samples->true_betas, samples->masked_betas[t]);
      } catch (const InsufficientData&) {
      }
    }
    res.efficiency.push_back(rep);
  }
  detail::check_convergence(res.curve);
  return res;
}

inline AttenuationResult run_attenuation_experiment(const ExperimentConfig& cfg) {
  return run_attenuation_experiment(cfg, run_baseline(cfg));
}

struct CentroidSummary {
  std::size_t grid_k = 0;
  double cell_theta_star = 0.0;
  LogitFit baseline_fit;
  Interval baseline_ci;
  /// Fit with every individual moved to its cell centroid.
  std::optional<LogitFit> centroid_fit;
  CurveRow row;
  /// Share (%) of converged replications whose beta-hat lies inside the baseline CI.
  double pct_inside_true_ci = 0.0;
};

struct CentroidResult {
  CentroidSummary summary;
  std::vector<ReplicationRecord> records;
};

/// Each replication re-masks every individual inside its own grid cell with
/// theta* equal to the cell's equivalent-circle radius, then refits.
inline CentroidResult run_centroid_experiment(const ExperimentConfig& cfg, Baseline base) {
  cfg.validate();
  const auto grid = build_municipality_grid(cfg.area, cfg.grid_k);
  const std::size_t reps = cfg.replications;
  const auto opt = cfg.fit_options();
  const auto& pts = base.dataset.points();

  std::vector<std::size_t> cell_of(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) cell_of[i] = grid.cell_index(pts[i]);
  const double cell_theta = grid.cells().front().equivalent_radius;

  CentroidResult res;
  res.records.resize(reps);
  detail::parallel_for(reps, cfg.workers, [&](std::size_t r) {
    auto rng = derive_stream(cfg.seed, 0, r);
    LogitFit fit;
    try {
      std::vector<Point> masked;
      masked.reserve(pts.size());
      for (std::size_t i = 0; i < pts.size(); ++i) {
        const GridCell& cell = grid.cells()[cell_of[i]];
        MaskSpec spec{cfg.mask.mechanism, cell.equivalent_radius,
                      BoundaryPolicy::redraw(cfg.mask.boundary.max_attempts)};
        masked.push_back(mask_point(pts[i], spec, cell.bounds, rng, i));
      }
      fit = detail::fit_or_fail(base.dataset.with_masked_points(std::move(masked)), opt);
    } catch (const Error&) {
    }
    res.records[r] = make_record(fit, base, cell_theta, 0, r);
  });

  auto& s = res.summary;
  s.grid_k = cfg.grid_k;
  s.cell_theta_star = cell_theta;
  s.baseline_fit = base.fit;
  s.baseline_ci = base.beta_ci;
  s.row = detail::summarize_or_fail(res.records, base.beta_ci);
  s.pct_inside_true_ci = s.row.converged ? 100.0 - s.row.pct_outside_true_ci : 0.0;
  try {
    auto fit = fit_logit(assign_to_centroid(base.dataset, grid), opt);
    s.centroid_fit = fit;
  } catch (const Error&) {
  }
  detail::check_convergence({s.row});
  return res;
}

inline CentroidResult run_centroid_experiment(const ExperimentConfig& cfg) {
  return run_centroid_experiment(cfg, run_baseline(cfg));
}

}  // namespace geomask
