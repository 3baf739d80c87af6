#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "geomask/errors.hpp"
#include "geomask/harness.hpp"

namespace geomask {

/// Harness configuration plus the output settings owned by the CLI.
struct RunConfig {
  ExperimentConfig experiment;
  std::string out_dir = "out";
};

/// Config file syntax:
///
///   # comment
///   [experiment]
///   type = csr-population
///   replications = 1000
///
/// Sections: experiment, population, mask, grid, output. A bare
/// `experiment = <type>` line before any section is accepted as shorthand.
/// Unknown keys, duplicate keys and out-of-range values are errors that name
/// the line or field.
namespace config_detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

struct Entry {
  std::string value;
  std::size_t line;
};

using Table = std::map<std::string, Entry>;  // "section.key" -> value

inline Table tokenize(std::istream& in, const std::string& source) {
  Table table;
  std::string section;
  std::string raw;
  std::size_t line_no = 0;
  auto where = [&](std::size_t l) { return source + ":" + std::to_string(l) + ": "; };
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where(line_no) + "malformed section header '" + line + "'");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      static const std::set<std::string> known{"experiment", "population", "mask", "grid", "output"};
      if (!known.contains(section)) throw ConfigError(where(line_no) + "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where(line_no) + "expected 'key = value', got '" + line + "'");
    std::string key = trim(std::string_view(line).substr(0, eq));
    std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) throw ConfigError(where(line_no) + "empty key");
    std::string full;
    if (section.empty()) {
      if (key != "experiment") throw ConfigError(where(line_no) + "key '" + key + "' outside of a section");
      full = "experiment.type";
    } else {
      full = section + "." + key;
    }
    auto [it, inserted] = table.emplace(full, Entry{value, line_no});
    if (!inserted) {
      throw ConfigError(where(line_no) + "duplicate key '" + full + "' (first set on line " +
                        std::to_string(it->second.line) + ")");
    }
  }
  return table;
}

inline double to_double(const std::string& field, const std::string& v) {
  double out = 0.0;
  const auto* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || p != end) throw ConfigError(field + ": '" + v + "' is not a number");
  return out;
}

inline std::uint64_t to_u64(const std::string& field, const std::string& v) {
  std::uint64_t out = 0;
  const auto* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || p != end) throw ConfigError(field + ": '" + v + "' is not a non-negative integer");
  return out;
}

inline std::vector<double> to_list(const std::string& field, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double(field, trim(item)));
  if (out.empty()) throw ConfigError(field + ": empty list");
  return out;
}

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace config_detail

inline ExperimentKind parse_experiment_kind(const std::string& v) {
  if (v == "csr-population") return ExperimentKind::csr_population;
  if (v == "fixed-area-grid") return ExperimentKind::fixed_area_grid;
  if (v == "centroid") return ExperimentKind::centroid;
  throw ConfigError("experiment.type: unknown experiment '" + v + "' (centroid | fixed-area-grid | csr-population)");
}

inline MomentFormula parse_moment_formula(const std::string& v) {
  if (v == "derived") return MomentFormula::derived;
  if (v == "as-printed") return MomentFormula::as_printed;
  throw ConfigError("output.moment_variant: expected 'derived' or 'as-printed', got '" + v + "'");
}

inline Mechanism parse_mechanism(const std::string& v) {
  if (v == "uniform") return Mechanism::uniform;
  if (v == "gaussian") return Mechanism::gaussian;
  throw ConfigError("mask.mechanism: expected 'uniform' or 'gaussian', got '" + v + "'");
}

inline RunConfig parse_config(std::istream& in, const std::string& source = "<config>") {
  using namespace config_detail;
  Table t = tokenize(in, source);
  auto take = [&t](const std::string& key) -> std::optional<std::string> {
    auto it = t.find(key);
    if (it == t.end()) return std::nullopt;
    std::string v = it->second.value;
    t.erase(it);
    return v;
  };

  RunConfig rc;
  ExperimentConfig& c = rc.experiment;
  if (auto v = take("experiment.type")) c.experiment = parse_experiment_kind(*v);
  if (auto v = take("experiment.replications")) c.replications = to_u64("experiment.replications", *v);
  if (auto v = take("experiment.seed")) c.seed = to_u64("experiment.seed", *v);
  if (auto v = take("experiment.workers")) c.workers = to_u64("experiment.workers", *v);
  if (auto v = take("experiment.efficiency_replications")) {
    c.efficiency_replications = to_u64("experiment.efficiency_replications", *v);
  }
  if (auto v = take("experiment.fit_tol")) c.fit_tol = to_double("experiment.fit_tol", *v);
  if (auto v = take("experiment.fit_max_iter")) c.fit_max_iter = to_u64("experiment.fit_max_iter", *v);

  if (auto v = take("population.n")) c.n = to_u64("population.n", *v);
  if (auto v = take("population.alpha")) c.generating_params.alpha = to_double("population.alpha", *v);
  if (auto v = take("population.beta")) c.generating_params.beta = to_double("population.beta", *v);
  if (auto v = take("population.facility_x")) c.facility.x = to_double("population.facility_x", *v);
  if (auto v = take("population.facility_y")) c.facility.y = to_double("population.facility_y", *v);
  if (auto v = take("population.grid_k")) c.grid_k = to_u64("population.grid_k", *v);
  if (auto v = take("population.points_file")) c.points_file = *v;
  if (auto v = take("population.area")) {
    auto b = to_list("population.area", *v);
    if (b.size() != 4) throw ConfigError("population.area: expected x_min,x_max,y_min,y_max");
    try {
      c.area = StudyArea::rectangle(b[0], b[1], b[2], b[3]);
    } catch (const InvalidArgument& e) {
      throw ConfigError(std::string("population.area: ") + e.what());
    }
  }

  // Boundary default depends on the experiment; see below.
  std::optional<std::string> boundary = take("mask.boundary");
  if (auto v = take("mask.mechanism")) c.mask.mechanism = parse_mechanism(*v);
  if (auto v = take("mask.max_attempts")) c.mask.boundary.max_attempts = to_u64("mask.max_attempts", *v);
  if (!boundary) {
    c.mask.boundary.kind = c.experiment == ExperimentKind::csr_population ? BoundaryPolicy::Kind::unconstrained
                                                                          : BoundaryPolicy::Kind::redraw;
  } else if (*boundary == "redraw") {
    c.mask.boundary.kind = BoundaryPolicy::Kind::redraw;
  } else if (*boundary == "unconstrained") {
    c.mask.boundary.kind = BoundaryPolicy::Kind::unconstrained;
  } else {
    throw ConfigError("mask.boundary: expected 'redraw' or 'unconstrained', got '" + *boundary + "'");
  }
  if (c.mask.boundary.max_attempts < 1) throw ConfigError("mask.max_attempts: must be >= 1");

  if (auto v = take("grid.reference_radius")) {
    c.reference_radius = to_double("grid.reference_radius", *v);
  } else if (c.experiment == ExperimentKind::fixed_area_grid) {
    c.reference_radius = equivalent_circle_radius(c.area.surface());
  }
  if (auto v = take("grid.values")) c.theta_grid = to_list("grid.values", *v);

  if (auto v = take("output.dir")) rc.out_dir = *v;
  if (auto v = take("output.moment_variant")) c.moment_variant = parse_moment_formula(*v);

  if (!t.empty()) {
    const auto& [key, entry] = *t.begin();
    throw ConfigError(source + ":" + std::to_string(entry.line) + ": unknown key '" + key + "'");
  }
  c.validate();
  return rc;
}

inline RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in, path);
}

inline RunConfig parse_config_text(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

/// Canonical text form: every field explicit, fixed key order, 17-digit floats.
inline std::string serialize_config(const RunConfig& rc) {
  using config_detail::fmt;
  const ExperimentConfig& c = rc.experiment;
  std::ostringstream o;
  o << "[experiment]\n"
    << "type = " << to_string(c.experiment) << "\n"
    << "replications = " << c.replications << "\n"
    << "seed = " << c.seed << "\n"
    << "workers = " << c.workers << "\n"
    << "efficiency_replications = " << c.efficiency_replications << "\n"
    << "fit_tol = " << fmt(c.fit_tol) << "\n"
    << "fit_max_iter = " << c.fit_max_iter << "\n"
    << "\n[population]\n"
    << "n = " << c.n << "\n"
    << "alpha = " << fmt(c.generating_params.alpha) << "\n"
    << "beta = " << fmt(c.generating_params.beta) << "\n"
    << "facility_x = " << fmt(c.facility.x) << "\n"
    << "facility_y = " << fmt(c.facility.y) << "\n"
    << "grid_k = " << c.grid_k << "\n"
    << "area = " << fmt(c.area.x_min()) << "," << fmt(c.area.x_max()) << "," << fmt(c.area.y_min()) << ","
    << fmt(c.area.y_max()) << "\n";
  if (!c.points_file.empty()) o << "points_file = " << c.points_file << "\n";
  o << "\n[mask]\n"
    << "mechanism = " << (c.mask.mechanism == Mechanism::uniform ? "uniform" : "gaussian") << "\n"
    << "boundary = " << (c.mask.boundary.kind == BoundaryPolicy::Kind::redraw ? "redraw" : "unconstrained") << "\n"
    << "max_attempts = " << c.mask.boundary.max_attempts << "\n"
    << "\n[grid]\n"
    << "reference_radius = " << fmt(c.reference_radius) << "\n"
    << "values = ";
  for (std::size_t i = 0; i < c.theta_grid.size(); ++i) o << (i ? "," : "") << fmt(c.theta_grid[i]);
  o << "\n\n[output]\n"
    << "dir = " << rc.out_dir << "\n"
    << "moment_variant = " << to_string(c.moment_variant) << "\n";
  return o.str();
}

inline std::uint64_t fnv1a64(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// 16 hex digits of FNV-1a over the canonical serialization.
inline std::string config_hash(const RunConfig& rc) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(serialize_config(rc))));
  return buf;
}

inline bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
  return a.experiment == b.experiment && a.n == b.n && a.replications == b.replications &&
         a.theta_grid == b.theta_grid && a.reference_radius == b.reference_radius &&
         a.generating_params == b.generating_params && a.mask == b.mask && a.seed == b.seed &&
         a.workers == b.workers && a.area == b.area && a.facility == b.facility && a.grid_k == b.grid_k &&
         a.efficiency_replications == b.efficiency_replications && a.moment_variant == b.moment_variant &&
         a.fit_tol == b.fit_tol && a.fit_max_iter == b.fit_max_iter && a.points_file == b.points_file;
}

inline bool operator==(const RunConfig& a, const RunConfig& b) {
  return a.experiment == b.experiment && a.out_dir == b.out_dir;
}

}  // namespace geomask
