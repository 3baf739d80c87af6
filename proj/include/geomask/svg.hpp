#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "geomask/errors.hpp"
#include "geomask/harness.hpp"
#include "geomask/kde.hpp"
#include "geomask/logit.hpp"
#include "geomask/report.hpp"

namespace geomask {

/// Minimal line-chart writer producing standalone SVG 1.1.
class SvgPlot {
 public:
  SvgPlot(double x_lo, double x_hi, double y_lo, double y_hi) : x_lo_(x_lo), x_hi_(x_hi), y_lo_(y_lo), y_hi_(y_hi) {
    if (!(x_hi_ > x_lo_)) x_hi_ = x_lo_ + 1.0;
    if (!(y_hi_ > y_lo_)) y_hi_ = y_lo_ + 1.0;
  }

  static constexpr double kWidth = 640, kHeight = 420;
  static constexpr double kLeft = 70, kRight = 20, kTop = 40, kBottom = 55;

  double sx(double x) const { return kLeft + (x - x_lo_) / (x_hi_ - x_lo_) * (kWidth - kLeft - kRight); }
  double sy(double y) const { return kHeight - kBottom - (y - y_lo_) / (y_hi_ - y_lo_) * (kHeight - kTop - kBottom); }

  void title(const std::string& t) { title_ = t; }
  void labels(const std::string& x, const std::string& y) {
    x_label_ = x;
    y_label_ = y;
  }

  void polyline(std::span<const std::pair<double, double>> pts, const std::string& color, bool markers = false) {
    std::string s = "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"2\" points=\"";
    for (const auto& [x, y] : pts) s += num(sx(x)) + "," + num(sy(y)) + " ";
    s += "\"/>\n";
    if (markers) {
      for (const auto& [x, y] : pts) {
        s += "<circle cx=\"" + num(sx(x)) + "\" cy=\"" + num(sy(y)) + "\" r=\"3\" fill=\"" + color + "\"/>\n";
      }
    }
    body_ += s;
  }

  void hline(double y, const std::string& color, bool dashed) {
    body_ += "<line x1=\"" + num(sx(x_lo_)) + "\" y1=\"" + num(sy(y)) + "\" x2=\"" + num(sx(x_hi_)) + "\" y2=\"" +
             num(sy(y)) + "\" stroke=\"" + color + "\" stroke-width=\"1.5\"" + dash(dashed) + "/>\n";
  }

  void vline(double x, const std::string& color, bool dashed) {
    body_ += "<line x1=\"" + num(sx(x)) + "\" y1=\"" + num(sy(y_lo_)) + "\" x2=\"" + num(sx(x)) + "\" y2=\"" +
             num(sy(y_hi_)) + "\" stroke=\"" + color + "\" stroke-width=\"1.5\"" + dash(dashed) + "/>\n";
  }

  std::string str() const {
    std::string s = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) +
         "\" viewBox=\"0 0 " + num(kWidth) + " " + num(kHeight) + "\">\n";
    s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s += axes();
    s += body_;
    s += "</svg>\n";
    return s;
  }

  void save(const std::string& path) const {
    auto out = csv_detail::open_out(path);
    out << str();
    if (!out) throw IoError("write failed for '" + path + "'");
  }

 private:
  static std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
  }
  static std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", std::abs(v) < 1e-12 ? 0.0 : v);
    return buf;
  }
  static std::string dash(bool dashed) { return dashed ? " stroke-dasharray=\"6,4\"" : ""; }
  static std::string escape(const std::string& t) {
    std::string o;
    for (char c : t) {
      if (c == '<') o += "&lt;";
      else if (c == '>') o += "&gt;";
      else if (c == '&') o += "&amp;";
      else o += c;
    }
    return o;
  }

  std::string axes() const {
    const double x0 = sx(x_lo_), x1 = sx(x_hi_), y0 = sy(y_lo_), y1 = sy(y_hi_);
    std::string s = "<g stroke=\"black\" stroke-width=\"1\">\n";
    s += "<line x1=\"" + num(x0) + "\" y1=\"" + num(y0) + "\" x2=\"" + num(x1) + "\" y2=\"" + num(y0) + "\"/>\n";
    s += "<line x1=\"" + num(x0) + "\" y1=\"" + num(y0) + "\" x2=\"" + num(x0) + "\" y2=\"" + num(y1) + "\"/>\n";
    s += "</g>\n<g font-family=\"sans-serif\" font-size=\"11\" fill=\"black\">\n";
    constexpr int ticks = 5;
    for (int i = 0; i <= ticks; ++i) {
      const double xv = x_lo_ + (x_hi_ - x_lo_) * i / ticks;
      const double yv = y_lo_ + (y_hi_ - y_lo_) * i / ticks;
      s += "<text x=\"" + num(sx(xv)) + "\" y=\"" + num(y0 + 16) + "\" text-anchor=\"middle\">" + tick_label(xv) +
           "</text>\n";
      s += "<text x=\"" + num(x0 - 6) + "\" y=\"" + num(sy(yv) + 4) + "\" text-anchor=\"end\">" + tick_label(yv) +
           "</text>\n";
    }
    s += "<text x=\"" + num(0.5 * (x0 + x1)) + "\" y=\"" + num(kHeight - 12) + "\" text-anchor=\"middle\">" +
         escape(x_label_) + "</text>\n";
    s += "<text x=\"16\" y=\"" + num(0.5 * (y0 + y1)) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
         num(0.5 * (y0 + y1)) + ")\">" + escape(y_label_) + "</text>\n";
    s += "<text x=\"" + num(0.5 * (x0 + x1)) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" +
         escape(title_) + "</text>\n";
    s += "</g>\n";
    return s;
  }

  double x_lo_, x_hi_, y_lo_, y_hi_;
  std::string title_, x_label_, y_label_, body_;
};

/// Mean |beta-hat| against theta* with a reference line at |baseline beta|.
inline SvgPlot attenuation_plot(std::span<const std::pair<double, double>> theta_vs_abs_beta, double baseline_beta) {
  if (theta_vs_abs_beta.empty()) throw InvalidArgument("attenuation plot: empty curve");
  double x_hi = 0.0, y_hi = std::abs(baseline_beta);
  for (const auto& [x, y] : theta_vs_abs_beta) {
    x_hi = std::max(x_hi, x);
    y_hi = std::max(y_hi, y);
  }
  SvgPlot plot(0.0, x_hi > 0.0 ? x_hi : 1.0, 0.0, y_hi > 0.0 ? 1.1 * y_hi : 1.0);
  plot.title("Attenuation of the distance coefficient under geo-masking");
  plot.labels("maximum displacement distance theta* (map units)", "mean |beta-hat| (per map unit)");
  plot.hline(std::abs(baseline_beta), "#c0392b", false);
  plot.polyline(theta_vs_abs_beta, "#1f77b4", true);
  return plot;
}

inline void render_attenuation_svg(std::span<const CurveRow> curve, double baseline_beta, const std::string& path) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& r : curve) pts.emplace_back(r.theta_star, r.mean_abs_beta);
  attenuation_plot(pts, baseline_beta).save(path);
}

/// Density of beta-hat with the baseline estimate (solid) and its CI (dashed).
inline SvgPlot kde_plot(const KdeEstimate& est, double baseline_beta, const Interval& baseline_ci) {
  double x_lo = std::min({est.grid.front(), baseline_ci.lo, baseline_beta});
  double x_hi = std::max({est.grid.back(), baseline_ci.hi, baseline_beta});
  const double y_hi = *std::max_element(est.density.begin(), est.density.end());
  SvgPlot plot(x_lo, x_hi, 0.0, 1.1 * y_hi);
  plot.title("Monte Carlo distribution of beta-hat after geo-masking");
  plot.labels("beta-hat (per map unit)", "kernel density");
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < est.grid.size(); ++i) pts.emplace_back(est.grid[i], est.density[i]);
  plot.polyline(pts, "#1f77b4");
  plot.vline(baseline_beta, "#c0392b", false);
  plot.vline(baseline_ci.lo, "#c0392b", true);
  plot.vline(baseline_ci.hi, "#c0392b", true);
  return plot;
}

inline void render_kde_svg(const KdeEstimate& est, double baseline_beta, const Interval& baseline_ci,
                           const std::string& path) {
  kde_plot(est, baseline_beta, baseline_ci).save(path);
}

}  // namespace geomask
