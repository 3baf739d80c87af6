// geomask: run geo-masking attenuation experiments and related utilities.
//
//   geomask simulate --config run.cfg [--seed N] [--workers N] [--out-dir DIR] [--fast]
//   geomask mask --in points.csv --out masked.csv --theta-star 0.1 [--seed N]
//   geomask fit --in points.csv
//   geomask efficiency --in points.csv --out el.csv
//   geomask plot --curve out/curve.csv --records out/records.csv
//
// Exit codes: 0 success, 1 validation error, 2 runtime or convergence failure.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "geomask.hpp"

namespace fs = std::filesystem;
using namespace geomask;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

StudyArea parse_area(const std::vector<double>& b) {
  if (b.empty()) return StudyArea::unit_square();
  if (b.size() != 4) throw ConfigError("--area: expected x_min,x_max,y_min,y_max");
  try {
    return StudyArea::rectangle(b[0], b[1], b[2], b[3]);
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("--area: ") + e.what());
  }
}

ChoiceDataset dataset_from_table(const PointTable& t, const Point& facility, const StudyArea& area) {
  if (!t.choices) throw ConfigError("point file has no 'choice' column");
  return ChoiceDataset(t.points, {facility}, *t.choices, area);
}

std::string path_in(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

nlohmann::json fit_json(const LogitFit& fit) {
  nlohmann::json j{{"alpha", fit.params.alpha},     {"beta", fit.params.beta},
                   {"se_alpha", fit.std_errors.alpha}, {"se_beta", fit.std_errors.beta},
                   {"loglik", fit.loglik},           {"converged", fit.converged},
                   {"iterations", fit.iterations},   {"gradient_norm", fit.gradient_norm}};
  if (fit.converged) {
    const auto ci = wald_ci(fit, 0.95);
    j["beta_ci95"] = {ci.beta.lo, ci.beta.hi};
    j["beta_p_value"] = wald_p_value(fit.params.beta, fit.std_errors.beta);
  }
  return j;
}

void write_json(const nlohmann::json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << j.dump(2) << "\n";
}

// --- simulate ---------------------------------------------------------------

struct SimulateArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::string out_dir;
  bool fast = false;
};

int run_simulate(const SimulateArgs& a) {
  const auto started = std::chrono::system_clock::now();
  RunConfig rc = parse_config(a.config);
  ExperimentConfig& cfg = rc.experiment;
  if (a.seed) cfg.seed = *a.seed;
  if (a.workers) cfg.workers = *a.workers;
  if (a.fast) {
    cfg.replications = kFastReplications;
    if (cfg.efficiency_replications > kFastReplications) cfg.efficiency_replications = kFastReplications;
  }
  if (!a.out_dir.empty()) rc.out_dir = a.out_dir;
  cfg.validate();

  ChoiceDataset population = [&] {
    if (cfg.points_file.empty()) return generate_population(cfg);
    const auto table = read_points_csv(cfg.points_file);
    if (table.choices) return ChoiceDataset(table.points, {cfg.facility}, *table.choices, cfg.area);
    auto y_rng = purpose_stream(cfg.seed, StreamPurpose::choices);
    return simulate_choices(table.points, cfg.facility, cfg.generating_params, y_rng, cfg.area);
  }();
  Baseline base = run_baseline(cfg, std::move(population));

  fs::create_directories(rc.out_dir);
  RunManifest manifest;
  manifest.config_hash = config_hash(rc);
  manifest.seed = cfg.seed;
  manifest.started = iso8601_utc(started);

  const std::string records_path = path_in(rc.out_dir, "records.csv");
  const std::string curve_path = path_in(rc.out_dir, "curve.csv");
  const std::string baseline_path = path_in(rc.out_dir, "baseline.json");
  const std::string kde_path = path_in(rc.out_dir, "kde.svg");
  nlohmann::json baseline_json = fit_json(base.fit);
  baseline_json["experiment"] = std::string(to_string(cfg.experiment));

  std::vector<ReplicationRecord> records;
  int status = 0;
  try {
    if (cfg.experiment == ExperimentKind::centroid) {
      auto res = run_centroid_experiment(cfg, base);
      records = res.records;
      const auto& s = res.summary;
      write_curve_csv(std::span(&s.row, 1), {}, curve_path);
      baseline_json["grid_k"] = s.grid_k;
      baseline_json["cell_theta_star"] = s.cell_theta_star;
      baseline_json["pct_inside_true_ci"] = s.pct_inside_true_ci;
      if (s.centroid_fit) baseline_json["centroid_fit"] = fit_json(*s.centroid_fit);
      std::printf("centroid experiment: k=%zu cell theta*=%.6g baseline beta=%.6g\n", s.grid_k, s.cell_theta_star,
                  base.fit.params.beta);
      std::printf("  inside baseline 95%% CI: %.2f%%  mean |beta|=%.6g  sd=%.6g  converged=%.3f\n",
                  s.pct_inside_true_ci, s.row.mean_abs_beta, s.row.sd_beta, s.row.convergence_rate);
    } else {
      auto res = run_attenuation_experiment(cfg, base);
      records = res.records;
      write_curve_csv(res.curve, res.efficiency, curve_path);
      render_attenuation_svg(res.curve, base.fit.params.beta, path_in(rc.out_dir, "attenuation.svg"));
      manifest.outputs.push_back(path_in(rc.out_dir, "attenuation.svg"));
      baseline_json["choices_fixed"] = res.choices_fixed;
      std::printf("%s experiment: baseline beta=%.6g (se %.4g), 95%% CI [%.6g, %.6g]\n",
                  std::string(to_string(cfg.experiment)).c_str(), base.fit.params.beta, base.fit.std_errors.beta,
                  base.beta_ci.lo, base.beta_ci.hi);
      std::printf("%10s %12s %10s %9s %9s %8s %8s\n", "theta*", "mean|beta|", "sd", "out_ci%", "nonsig%", "EL", "EL_mc");
      for (std::size_t i = 0; i < res.curve.size(); ++i) {
        const auto& r = res.curve[i];
        const auto& e = res.efficiency[i];
        std::printf("%10.4f %12.5f %10.5f %9.2f %9.2f %8.4f %8s\n", r.theta_star, r.mean_abs_beta, r.sd_beta,
                    r.pct_outside_true_ci, r.pct_nonsignificant, e.el_analytic,
                    e.el_empirical ? std::to_string(*e.el_empirical).substr(0, 6).c_str() : "-");
      }
    }
  } catch (const BatchFailure& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    status = kExitRuntime;
  }

  if (!records.empty()) {
    write_records_csv(records, records_path);
    manifest.outputs.push_back(records_path);
    // Density of the estimates in the last theta cell.
    std::vector<double> betas;
    for (const auto& r : records) {
      if (r.converged && r.theta_star == records.back().theta_star) betas.push_back(r.beta_hat);
    }
    try {
      render_kde_svg(kde(betas), base.fit.params.beta, base.beta_ci, kde_path);
      manifest.outputs.push_back(kde_path);
    } catch (const DegenerateSample&) {
    }
  }
  if (status == 0) manifest.outputs.push_back(curve_path);
  write_json(baseline_json, baseline_path);
  manifest.outputs.push_back(baseline_path);

  const std::string config_out = path_in(rc.out_dir, "config.cfg");
  {
    std::ofstream out(config_out);
    out << serialize_config(rc);
  }
  manifest.outputs.push_back(config_out);
  manifest.finished = iso8601_utc(std::chrono::system_clock::now());
  write_manifest(manifest, path_in(rc.out_dir, "manifest.json"));
  return status;
}

// --- mask -------------------------------------------------------------------

struct MaskArgs {
  std::string in, out;
  double theta_star = 0.0;
  std::string mechanism = "uniform";
  std::string boundary = "unconstrained";
  std::size_t max_attempts = 1000;
  std::uint64_t seed = 1;
  std::vector<double> area;
};

int run_mask(const MaskArgs& a) {
  auto table = read_points_csv(a.in);
  MaskSpec spec{parse_mechanism(a.mechanism), a.theta_star,
                a.boundary == "redraw" ? BoundaryPolicy::redraw(a.max_attempts) : BoundaryPolicy::unconstrained()};
  if (a.boundary != "redraw" && a.boundary != "unconstrained") {
    throw ConfigError("--boundary: expected 'redraw' or 'unconstrained'");
  }
  try {
    spec.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  auto rng = derive_stream(a.seed, 0, 0);
  table.points = mask_points(table.points, spec, parse_area(a.area), rng);
  write_points_csv(table, a.out);
  return 0;
}

// --- fit --------------------------------------------------------------------

struct FitArgs {
  std::string in;
  double facility_x = 0.0, facility_y = 0.0;
  bool no_intercept = false;
  double level = 0.95;
  bool json = false;
};

int run_fit(const FitArgs& a) {
  const auto table = read_points_csv(a.in);
  const auto ds = dataset_from_table(table, {a.facility_x, a.facility_y}, StudyArea::unit_square());
  FitOptions opt;
  opt.mode = a.no_intercept ? InterceptMode::no_intercept : InterceptMode::with_intercept;
  const LogitFit fit = fit_logit(ds, opt);
  if (a.json) {
    std::cout << fit_json(fit).dump(2) << "\n";
  } else {
    std::printf("n=%zu converged=%s iterations=%zu loglik=%.10g\n", ds.size(), fit.converged ? "yes" : "no",
                fit.iterations, fit.loglik);
    if (!a.no_intercept) std::printf("alpha = %.10g (se %.6g)\n", fit.params.alpha, fit.std_errors.alpha);
    std::printf("beta  = %.10g (se %.6g)\n", fit.params.beta, fit.std_errors.beta);
    if (fit.converged) {
      const auto ci = wald_ci(fit, a.level);
      std::printf("beta %.4g%% Wald CI: [%.10g, %.10g]  p=%.4g\n", 100.0 * a.level, ci.beta.lo, ci.beta.hi,
                  wald_p_value(fit.params.beta, fit.std_errors.beta));
    }
  }
  return fit.converged ? 0 : kExitRuntime;
}

// --- efficiency -------------------------------------------------------------

struct EfficiencyArgs {
  std::string in, out;
  double facility_x = 0.0, facility_y = 0.0;
  std::vector<double> grid = default_theta_grid();
  double reference_radius = 0.707;
  std::string variant = "derived";
};

int run_efficiency(const EfficiencyArgs& a) {
  const auto table = read_points_csv(a.in);
  const auto ds = dataset_from_table(table, {a.facility_x, a.facility_y}, StudyArea::unit_square());
  const auto variant = parse_moment_formula(a.variant);
  const LogitFit fit = fit_logit(ds);
  if (!fit.converged) throw InvalidFit("fit on the point file did not converge");
  std::string csv = "theta_star,info_true,info_masked_analytic,el_analytic,var_true,var_masked,moment_variant\n";
  for (double g : a.grid) {
    if (!(g >= 0.0 && g <= 1.0)) throw ConfigError("--grid: values must lie in [0, 1]");
    const auto r = efficiency_report(ds, fit.params, a.reference_radius * g, variant);
    csv += format_g17(r.theta_star) + "," + format_g17(r.info_true) + "," + format_g17(r.info_masked_analytic) + "," +
           format_g17(r.el_analytic) + "," + format_g17(r.asymptotic_var_true()) + "," +
           format_g17(r.asymptotic_var_masked()) + "," + std::string(to_string(variant)) + "\n";
  }
  if (a.out.empty()) {
    std::cout << csv;
  } else {
    auto out = csv_detail::open_out(a.out);
    out << csv;
  }
  return 0;
}

// --- plot -------------------------------------------------------------------

struct PlotArgs {
  std::string curve, records, baseline, out_dir;
};

int run_plot(const PlotArgs& a) {
  const std::string base_dir = fs::path(!a.curve.empty() ? a.curve : a.records).parent_path().string();
  const std::string out_dir = a.out_dir.empty() ? base_dir : a.out_dir;
  const std::string baseline_path = a.baseline.empty() ? path_in(base_dir, "baseline.json") : a.baseline;
  std::ifstream bin(baseline_path);
  if (!bin) throw ConfigError("cannot read baseline file '" + baseline_path + "'");
  nlohmann::json b;
  try {
    b = nlohmann::json::parse(bin);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(baseline_path + ": " + e.what());
  }
  const double beta = b.at("beta").get<double>();
  Interval ci{b.at("beta_ci95").at(0).get<double>(), b.at("beta_ci95").at(1).get<double>()};

  if (!a.curve.empty()) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& r : read_curve_csv(a.curve)) pts.emplace_back(r.theta_star, r.mean_abs_beta);
    attenuation_plot(pts, beta).save(path_in(out_dir, "attenuation.svg"));
  }
  if (!a.records.empty()) {
    const auto recs = read_records_csv(a.records);
    if (recs.empty()) throw ConfigError(a.records + ": no records");
    double last = recs.front().theta_star;
    for (const auto& r : recs) last = std::max(last, r.theta_star);
    std::vector<double> betas;
    for (const auto& r : recs) {
      if (r.converged && r.theta_star == last) betas.push_back(r.beta_hat);
    }
    render_kde_svg(kde(betas), beta, ci, path_in(out_dir, "kde.svg"));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Geo-masking attenuation experiments for distance-based logit models"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Run an experiment from a config file");
  s->add_option("--config", sim.config, "Config file")->required()->check(CLI::ExistingFile);
  s->add_option("--seed", sim.seed, "Override the config seed");
  s->add_option("--workers", sim.workers, "Worker threads (0 = hardware concurrency)");
  s->add_option("--out-dir", sim.out_dir, "Output directory (overrides output.dir)");
  s->add_flag("--fast", sim.fast, "Use 200 replications");

  MaskArgs mask;
  auto* m = app.add_subcommand("mask", "Geo-mask a point CSV once");
  m->add_option("--in", mask.in, "Input point CSV (id,x,y[,choice])")->required();
  m->add_option("--out", mask.out, "Output point CSV")->required();
  m->add_option("--theta-star", mask.theta_star, "Maximum displacement distance (map units)")->required();
  m->add_option("--mechanism", mask.mechanism, "uniform | gaussian");
  m->add_option("--boundary", mask.boundary, "unconstrained | redraw");
  m->add_option("--max-attempts", mask.max_attempts, "Redraw cap");
  m->add_option("--seed", mask.seed, "Random seed");
  m->add_option("--area", mask.area, "Study area x_min,x_max,y_min,y_max")->delimiter(',');

  FitArgs fit;
  auto* f = app.add_subcommand("fit", "Fit the distance logit on a point+choice CSV");
  f->add_option("--in", fit.in, "Input point CSV with a choice column")->required();
  f->add_option("--facility-x", fit.facility_x);
  f->add_option("--facility-y", fit.facility_y);
  f->add_flag("--no-intercept", fit.no_intercept, "Fit beta only");
  f->add_option("--level", fit.level, "Confidence level");
  f->add_flag("--json", fit.json, "Print JSON");

  EfficiencyArgs eff;
  auto* e = app.add_subcommand("efficiency", "Analytic efficiency-loss table for a dataset");
  e->add_option("--in", eff.in, "Input point CSV with a choice column")->required();
  e->add_option("--out", eff.out, "Output CSV (stdout when omitted)");
  e->add_option("--facility-x", eff.facility_x);
  e->add_option("--facility-y", eff.facility_y);
  e->add_option("--grid", eff.grid, "Fractions of the reference radius")->delimiter(',');
  e->add_option("--reference-radius", eff.reference_radius);
  e->add_option("--variant", eff.variant, "derived | as-printed");

  PlotArgs plot;
  auto* p = app.add_subcommand("plot", "Render SVG plots from curve/record CSVs");
  p->add_option("--curve", plot.curve, "curve.csv");
  p->add_option("--records", plot.records, "records.csv");
  p->add_option("--baseline", plot.baseline, "baseline.json (default: next to the inputs)");
  p->add_option("--out-dir", plot.out_dir);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (*s) return run_simulate(sim);
    if (*m) return run_mask(mask);
    if (*f) return run_fit(fit);
    if (*e) return run_efficiency(eff);
    if (*p) {
      if (plot.curve.empty() && plot.records.empty()) throw ConfigError("plot: pass --curve and/or --records");
      return run_plot(plot);
    }
  } catch (const ConfigError& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return kExitValidation;
  } catch (const InvalidArgument& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return kExitValidation;
  } catch (const std::exception& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return kExitRuntime;
  }
  return 0;
}
