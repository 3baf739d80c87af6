#pragma once

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "geomask/config.hpp"
#include "geomask/efficiency.hpp"
#include "geomask/errors.hpp"
#include "geomask/harness.hpp"

namespace geomask {

inline constexpr const char* kVersion = "1.0.0";

inline constexpr const char* kRecordsHeader =
    "theta_star,rep,alpha_hat,beta_hat,se_beta,converged,iterations,significant_beta,outside_true_ci";
inline constexpr const char* kCurveHeader =
    "theta_star,mean_abs_beta,sd_beta,pct_outside_true_ci,pct_nonsignificant,convergence_rate,el_analytic,"
    "el_empirical,moment_variant";

/// 17 significant digits; exact round trip through strtod.
inline std::string format_g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Shortest text that parses back to the same double.
inline std::string format_shortest(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

namespace csv_detail {

inline std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  for (auto& c : out) {
    while (!c.empty() && (c.back() == '\r' || c.back() == ' ')) c.pop_back();
    while (!c.empty() && c.front() == ' ') c.erase(c.begin());
  }
  return out;
}

inline double parse_double(const std::string& s, const std::string& where) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw ConfigError(where + ": '" + s + "' is not a number");
  return v;
}

inline std::size_t parse_size(const std::string& s, const std::string& where) {
  std::size_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw ConfigError(where + ": '" + s + "' is not an integer");
  return v;
}

inline bool parse_bool(const std::string& s, const std::string& where) {
  if (s == "1" || s == "true") return true;
  if (s == "0" || s == "false") return false;
  throw ConfigError(where + ": '" + s + "' is not a boolean");
}

inline std::ofstream open_out(const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(parent, ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  return out;
}

inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path + "'");
  std::vector<std::string> lines;
  std::string l;
  while (std::getline(in, l)) {
    if (!l.empty() && l.back() == '\r') l.pop_back();
    if (!l.empty()) lines.push_back(l);
  }
  return lines;
}

inline void check_header(const std::vector<std::string>& lines, const std::string& expected, const std::string& path) {
  if (lines.empty() || lines.front() != expected) {
    throw ConfigError(path + ": unexpected header, expected '" + expected + "'");
  }
}

}  // namespace csv_detail

inline std::string records_csv(std::span<const ReplicationRecord> records) {
  std::vector<const ReplicationRecord*> sorted;
  sorted.reserve(records.size());
  for (const auto& r : records) sorted.push_back(&r);
  std::stable_sort(sorted.begin(), sorted.end(), [](const auto* a, const auto* b) {
    return a->theta_star != b->theta_star ? a->theta_star < b->theta_star : a->rep < b->rep;
  });
  std::string out = std::string(kRecordsHeader) + "\n";
  for (const auto* r : sorted) {
    out += format_g17(r->theta_star) + "," + std::to_string(r->rep) + "," + format_g17(r->alpha_hat) + "," +
           format_g17(r->beta_hat) + "," + format_g17(r->se_beta) + "," + (r->converged ? "1" : "0") + "," +
           std::to_string(r->iterations) + "," + (r->significant_beta ? "1" : "0") + "," +
           (r->outside_true_ci ? "1" : "0") + "\n";
  }
  return out;
}

/// Rows sorted by (theta_star, rep); floats at 17 significant digits.
inline void write_records_csv(std::span<const ReplicationRecord> records, const std::string& path) {
  if (records.empty()) throw InvalidArgument("write_records_csv: no records");
  auto out = csv_detail::open_out(path);
  out << records_csv(records);
  if (!out) throw IoError("write failed for '" + path + "'");
}

inline std::vector<ReplicationRecord> read_records_csv(const std::string& path) {
  using namespace csv_detail;
  const auto lines = read_lines(path);
  check_header(lines, kRecordsHeader, path);
  std::vector<ReplicationRecord> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto c = split(lines[i]);
    const std::string where = path + ":" + std::to_string(i + 1);
    if (c.size() != 9) throw ConfigError(where + ": expected 9 columns");
    ReplicationRecord r;
    r.theta_star = parse_double(c[0], where);
    r.rep = parse_size(c[1], where);
    r.alpha_hat = parse_double(c[2], where);
    r.beta_hat = parse_double(c[3], where);
    r.se_beta = parse_double(c[4], where);
    r.converged = parse_bool(c[5], where);
    r.iterations = parse_size(c[6], where);
    r.significant_beta = parse_bool(c[7], where);
    r.outside_true_ci = parse_bool(c[8], where);
    out.push_back(r);
  }
  return out;
}

/// One curve row joined with its efficiency report (when available).
struct CurveCsvRow {
  double theta_star = 0.0;
  double mean_abs_beta = 0.0;
  double sd_beta = 0.0;
  double pct_outside_true_ci = 0.0;
  double pct_nonsignificant = 0.0;
  double convergence_rate = 0.0;
  std::optional<double> el_analytic;
  std::optional<double> el_empirical;
  std::optional<MomentFormula> moment_variant;
};

inline std::string curve_csv(std::span<const CurveRow> curve, std::span<const EfficiencyReport> reports) {
  if (!reports.empty() && reports.size() != curve.size()) {
    throw InvalidArgument("write_curve_csv: one efficiency report per curve row required");
  }
  auto opt = [](const std::optional<double>& v) { return v ? format_g17(*v) : std::string(); };
  std::string out = std::string(kCurveHeader) + "\n";
  for (std::size_t i = 0; i < curve.size(); ++i) {
    const auto& r = curve[i];
    out += format_g17(r.theta_star) + "," + format_g17(r.mean_abs_beta) + "," + format_g17(r.sd_beta) + "," +
           format_g17(r.pct_outside_true_ci) + "," + format_g17(r.pct_nonsignificant) + "," +
           format_g17(r.convergence_rate) + ",";
    if (!reports.empty()) {
      out += format_g17(reports[i].el_analytic) + "," + opt(reports[i].el_empirical) + "," +
             std::string(to_string(reports[i].moment_formula));
    } else {
      out += ",,";
    }
    out += "\n";
  }
  return out;
}

inline void write_curve_csv(std::span<const CurveRow> curve, std::span<const EfficiencyReport> reports,
                            const std::string& path) {
  auto out = csv_detail::open_out(path);
  out << curve_csv(curve, reports);
  if (!out) throw IoError("write failed for '" + path + "'");
}

inline std::vector<CurveCsvRow> read_curve_csv(const std::string& path) {
  using namespace csv_detail;
  const auto lines = read_lines(path);
  check_header(lines, kCurveHeader, path);
  std::vector<CurveCsvRow> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    auto c = split(lines[i]);
    const std::string where = path + ":" + std::to_string(i + 1);
    if (c.size() != 9) throw ConfigError(where + ": expected 9 columns");
    CurveCsvRow r;
    r.theta_star = parse_double(c[0], where);
    r.mean_abs_beta = parse_double(c[1], where);
    r.sd_beta = parse_double(c[2], where);
    r.pct_outside_true_ci = parse_double(c[3], where);
    r.pct_nonsignificant = parse_double(c[4], where);
    r.convergence_rate = parse_double(c[5], where);
    if (!c[6].empty()) r.el_analytic = parse_double(c[6], where);
    if (!c[7].empty()) r.el_empirical = parse_double(c[7], where);
    if (!c[8].empty()) r.moment_variant = parse_moment_formula(c[8]);
    out.push_back(r);
  }
  return out;
}

/// Point file: columns id,x,y[,choice].
struct PointTable {
  std::vector<std::string> ids;
  std::vector<Point> points;
  std::optional<std::vector<std::uint8_t>> choices;
};

inline PointTable read_points_csv(const std::string& path) {
  using namespace csv_detail;
  const auto lines = read_lines(path);
  if (lines.empty()) throw ConfigError(path + ": empty point file");
  const auto header = split(lines.front());
  const bool with_choice = header.size() == 4 && header[3] == "choice";
  if (header.size() < 3 || header[0] != "id" || header[1] != "x" || header[2] != "y" ||
      (header.size() == 4 && !with_choice) || header.size() > 4) {
    throw ConfigError(path + ": header must be id,x,y[,choice]");
  }
  PointTable t;
  if (with_choice) t.choices.emplace();
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto c = split(lines[i]);
    const std::string where = path + ":" + std::to_string(i + 1);
    if (c.size() != header.size()) throw ConfigError(where + ": expected " + std::to_string(header.size()) + " columns");
    t.ids.push_back(c[0]);
    Point p{parse_double(c[1], where), parse_double(c[2], where)};
    if (!p.finite()) throw ConfigError(where + ": non-finite coordinate");
    t.points.push_back(p);
    if (with_choice) {
      const auto y = parse_size(c[3], where);
      if (y > 1) throw ConfigError(where + ": choice must be 0 or 1");
      t.choices->push_back(static_cast<std::uint8_t>(y));
    }
  }
  if (t.points.empty()) throw ConfigError(path + ": no data rows");
  return t;
}

inline std::string points_csv(const PointTable& t) {
  std::string out = t.choices ? "id,x,y,choice\n" : "id,x,y\n";
  for (std::size_t i = 0; i < t.points.size(); ++i) {
    out += t.ids[i] + "," + format_shortest(t.points[i].x) + "," + format_shortest(t.points[i].y);
    if (t.choices) out += "," + std::to_string((*t.choices)[i]);
    out += "\n";
  }
  return out;
}

inline void write_points_csv(const PointTable& t, const std::string& path) {
  auto out = csv_detail::open_out(path);
  out << points_csv(t);
  if (!out) throw IoError("write failed for '" + path + "'");
}

inline std::string iso8601_utc(std::chrono::system_clock::time_point tp) {
  const std::time_t t = std::chrono::system_clock::to_time_t(tp);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct RunManifest {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string version = kVersion;
  std::string started;
  std::string finished;
  std::vector<std::string> outputs;

  nlohmann::json to_json() const {
    return {{"config_hash", config_hash}, {"seed", seed},         {"version", version},
            {"started", started},         {"finished", finished}, {"outputs", outputs}};
  }
};

inline void write_manifest(const RunManifest& m, const std::string& path) {
  auto out = csv_detail::open_out(path);
  out << m.to_json().dump(2) << "\n";
}

}  // namespace geomask
