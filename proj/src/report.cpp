#include "druopf/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include "druopf/error.hpp"

namespace druopf {

namespace {

using nlohmann::json;

std::string num(double v, const char* format = "%.10g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

std::string px(double v) { return num(v, "%.2f"); }

json breakdown_json(const LossBreakdown& b) {
  return {{"cables", b.cables},
          {"transformers", b.transformers},
          {"filters", b.filters},
          {"dru_ac", b.dru_ac},
          {"dc_cable", b.dc_cable},
          {"total", b.total()}};
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// Round outward to a tidy range for the axis.
std::pair<double, double> nice_range(double lo, double hi) {
  if (!std::isfinite(lo) || !std::isfinite(hi)) return {0.0, 1.0};
  if (hi - lo < 1e-12 * std::max(1.0, std::abs(hi))) {
    const double pad = std::max(1e-6, std::abs(hi) * 1e-3);
    return {lo - pad, hi + pad};
  }
  const double pad = 0.05 * (hi - lo);
  return {lo - pad, hi + pad};
}

constexpr double kWidth = 720.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 80.0;
constexpr double kRight = 150.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 55.0;

}  // namespace

json interval_json(const IntervalRecord& r, const FrequencyBand& band, const SolverSettings& solver,
                   const FarmCase& farm) {
  json turbines = json::array();
  for (std::size_t t = 0; t < farm.turbines.size(); ++t) {
    json jt = {{"id", farm.turbines[t].bus_id}, {"p", t < r.p.size() ? r.p[t] : 0.0}};
    jt["q_opt"] = t < r.q_opt.size() ? json(r.q_opt[t]) : json(nullptr);
    jt["q_baseline"] = r.baseline_q;
    turbines.push_back(std::move(jt));
  }
  json j;
  j["hour"] = r.hour;
  j["p_farm"] = r.p_farm;
  j["loading"] = r.loading;
  j["turbines"] = std::move(turbines);
  j["demand_line"] = {{"d1", r.line.d1},
                      {"d2", r.line.d2},
                      {"max_abs_err", r.line.max_abs_err},
                      {"omega_lo", r.line.omega_lo},
                      {"omega_hi", r.line.omega_hi}};
  j["band"] = {{"omega_min", band.omega_min_h}, {"omega_max", band.omega_max_h}, {"omega_0", band.omega_0}};
  j["solver"] = {{"feas_tol", solver.feas_tol}, {"gap_tol", solver.gap_tol}, {"max_iter", solver.max_iter}};
  j["optimized"] = {{"status", r.opf_status},
                    {"outer_converged", r.outer_converged},
                    {"outer_iterations", r.outer_iterations},
                    {"solver_iterations", r.solver_iterations},
                    {"omega_star", r.omega_star},
                    {"objective", r.opf_objective},
                    {"relaxed_losses", r.opf_losses},
                    {"rank1_residual", std::isfinite(r.rank1_residual) ? json(r.rank1_residual) : json(nullptr)},
                    {"primal_residual", r.primal_residual},
                    {"dual_residual", r.dual_residual},
                    {"dru_blocked", r.dru_blocked},
                    {"power_flow_converged", r.validation_converged},
                    {"power_flow_mismatch", r.validation_mismatch},
                    {"losses", r.optimized_losses},
                    {"losses_with_dc", r.optimized_losses_total},
                    {"breakdown", breakdown_json(r.optimized_breakdown)}};
  j["baseline"] = {{"converged", r.baseline_converged},
                   {"omega", band.omega_0},
                   {"q_uniform", r.baseline_q},
                   {"losses", r.baseline_losses},
                   {"losses_with_dc", r.baseline_losses_total},
                   {"breakdown", breakdown_json(r.baseline_breakdown)}};
  j["converged_both"] = r.converged_both;
  j["loss_ratio"] = r.loss_ratio ? json(*r.loss_ratio) : json(nullptr);
  j["message"] = r.message;
  return j;
}

json day_json(const DayReport& report, const FarmCase& farm) {
  json intervals = json::array();
  for (const auto& r : report.intervals) intervals.push_back(interval_json(r, report.band, report.solver, farm));
  const auto& s = report.summary;
  json j;
  j["description"] = farm.description;
  j["intervals"] = std::move(intervals);
  j["summary"] = {{"intervals", s.intervals},
                  {"converged_both", s.converged_both},
                  {"omega_min", s.omega_min},
                  {"omega_max", s.omega_max},
                  {"omega_in_band", s.omega_in_band},
                  {"loading_window", {s.window_lo, s.window_hi}},
                  {"window_intervals", s.window_intervals},
                  {"window_all_lower", s.window_all_lower},
                  {"mean_loss_reduction", s.mean_reduction},
                  {"max_loss_reduction", s.max_reduction},
                  {"min_loss_reduction", s.min_reduction},
                  {"reference_loss_reduction", s.reference_reduction}};
  return j;
}

void write_day_csv(std::ostream& out, const DayReport& report, const FarmCase& farm) {
  out << "hour,loading,p_farm,status,converged_both,omega_star,opt_losses,base_losses,loss_ratio,rank1_residual";
  for (const auto& t : farm.turbines) out << ",q_" << t.bus_id;
  out << '\n';
  for (const auto& r : report.intervals) {
    out << r.hour << ',' << num(r.loading) << ',' << num(r.p_farm) << ',' << r.opf_status << ','
        << (r.converged_both ? 1 : 0) << ',' << num(r.omega_star) << ',' << num(r.optimized_losses) << ','
        << num(r.baseline_losses) << ',' << (r.loss_ratio ? num(*r.loss_ratio) : std::string()) << ','
        << (std::isfinite(r.rank1_residual) ? num(r.rank1_residual) : std::string("inf"));
    for (std::size_t t = 0; t < farm.turbines.size(); ++t) {
      out << ',' << (t < r.q_opt.size() ? num(r.q_opt[t]) : std::string());
    }
    out << '\n';
  }
}

void write_interval_csv(std::ostream& out, const IntervalRecord& r, const FarmCase& farm) {
  out << "turbine,p,q_opt,q_baseline\n";
  for (std::size_t t = 0; t < farm.turbines.size(); ++t) {
    out << farm.turbines[t].bus_id << ',' << num(t < r.p.size() ? r.p[t] : 0.0) << ','
        << (t < r.q_opt.size() ? num(r.q_opt[t]) : std::string()) << ',' << num(r.baseline_q) << '\n';
  }
}

std::string render_svg(const LinePlot& plot) {
  double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo, ylo = xlo, yhi = -xlo;
  for (const auto& s : plot.series) {
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      xlo = std::min(xlo, s.x[i]);
      xhi = std::max(xhi, s.x[i]);
      ylo = std::min(ylo, s.y[i]);
      yhi = std::max(yhi, s.y[i]);
    }
  }
  for (double g : plot.y_guides) {
    ylo = std::min(ylo, g);
    yhi = std::max(yhi, g);
  }
  std::tie(xlo, xhi) = nice_range(xlo, xhi);
  std::tie(ylo, yhi) = nice_range(ylo, yhi);
  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  auto sx = [&](double x) { return kLeft + (x - xlo) / (xhi - xlo) * pw; };
  auto sy = [&](double y) { return kTop + ph - (y - ylo) / (yhi - ylo) * ph; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << px(kWidth / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
    << escape_xml(plot.title) << "</text>\n";
  o << "<rect x=\"" << px(kLeft) << "\" y=\"" << px(kTop) << "\" width=\"" << px(pw) << "\" height=\"" << px(ph)
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 5; ++k) {
    const double xv = xlo + (xhi - xlo) * k / 5.0;
    const double yv = ylo + (yhi - ylo) * k / 5.0;
    o << "<text x=\"" << px(sx(xv)) << "\" y=\"" << px(kTop + ph + 18) << "\" text-anchor=\"middle\">"
      << num(xv, "%.4g") << "</text>\n";
    o << "<text x=\"" << px(kLeft - 6) << "\" y=\"" << px(sy(yv) + 4) << "\" text-anchor=\"end\">"
      << num(yv, "%.5g") << "</text>\n";
    o << "<line x1=\"" << px(kLeft) << "\" y1=\"" << px(sy(yv)) << "\" x2=\"" << px(kLeft + pw) << "\" y2=\""
      << px(sy(yv)) << "\" stroke=\"#e0e0e0\"/>\n";
  }
  o << "<text x=\"" << px(kLeft + pw / 2) << "\" y=\"" << px(kHeight - 12) << "\" text-anchor=\"middle\">"
    << escape_xml(plot.x_label) << "</text>\n";
  o << "<text x=\"18\" y=\"" << px(kTop + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
    << px(kTop + ph / 2) << ")\">" << escape_xml(plot.y_label) << "</text>\n";
  for (double g : plot.y_guides) {
    o << "<line x1=\"" << px(kLeft) << "\" y1=\"" << px(sy(g)) << "\" x2=\"" << px(kLeft + pw) << "\" y2=\""
      << px(sy(g)) << "\" stroke=\"#888888\" stroke-dasharray=\"6 4\"/>\n";
  }
  for (std::size_t si = 0; si < plot.series.size(); ++si) {
    const auto& s = plot.series[si];
    std::string points;
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      if (!points.empty()) points += ' ';
      points += px(sx(s.x[i])) + "," + px(sy(s.y[i]));
    }
    o << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.8\" points=\"" << points << "\"/>\n";
    if (s.markers) {
      for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
        if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
        o << "<circle cx=\"" << px(sx(s.x[i])) << "\" cy=\"" << px(sy(s.y[i])) << "\" r=\"2.5\" fill=\"" << s.color
          << "\"/>\n";
      }
    }
    const double ly = kTop + 14 + 18 * static_cast<double>(si);
    o << "<line x1=\"" << px(kLeft + pw + 12) << "\" y1=\"" << px(ly - 4) << "\" x2=\"" << px(kLeft + pw + 32)
      << "\" y2=\"" << px(ly - 4) << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"/>\n";
    o << "<text x=\"" << px(kLeft + pw + 36) << "\" y=\"" << px(ly) << "\">" << escape_xml(s.name) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

std::string render_heatmap_svg(const std::string& title, const std::vector<std::string>& row_labels,
                               const std::vector<std::string>& col_labels,
                               const std::vector<std::vector<double>>& values) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& row : values) {
    for (double v : row) {
      if (!std::isfinite(v)) continue;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (!std::isfinite(lo)) lo = hi = 0.0;
  const double span = hi - lo > 0.0 ? hi - lo : 1.0;
  const std::size_t nr = row_labels.size();
  const std::size_t nc = col_labels.size();
  const double cw = nc ? (kWidth - kLeft - kRight) / static_cast<double>(nc) : 0.0;
  const double ch = nr ? (kHeight - kTop - kBottom) / static_cast<double>(nr) : 0.0;

  // blue (low) to red (high) through white
  auto colour = [&](double v) {
    if (!std::isfinite(v)) return std::string("#cccccc");
    const double t = (v - lo) / span;
    int r, g, b;
    if (t < 0.5) {
      const double a = t / 0.5;
      r = static_cast<int>(std::lround(49 + a * (255 - 49)));
      g = static_cast<int>(std::lround(54 + a * (255 - 54)));
      b = static_cast<int>(std::lround(149 + a * (255 - 149)));
    } else {
      const double a = (t - 0.5) / 0.5;
      r = static_cast<int>(std::lround(255 - a * (255 - 165)));
      g = static_cast<int>(std::lround(255 - a * 255));
      b = static_cast<int>(std::lround(255 - a * (255 - 38)));
    }
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
    return std::string(buf);
  };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
    << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << px(kWidth / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape_xml(title)
    << "</text>\n";
  for (std::size_t i = 0; i < nr; ++i) {
    const double y = kTop + ch * static_cast<double>(i);
    o << "<text x=\"" << px(kLeft - 6) << "\" y=\"" << px(y + ch / 2 + 4) << "\" text-anchor=\"end\">"
      << escape_xml(row_labels[i]) << "</text>\n";
    for (std::size_t j = 0; j < nc; ++j) {
      const double v = i < values.size() && j < values[i].size() ? values[i][j] : std::nan("");
      o << "<rect x=\"" << px(kLeft + cw * static_cast<double>(j)) << "\" y=\"" << px(y) << "\" width=\"" << px(cw)
        << "\" height=\"" << px(ch) << "\" fill=\"" << colour(v) << "\"/>\n";
    }
  }
  for (std::size_t j = 0; j < nc; ++j) {
    o << "<text x=\"" << px(kLeft + cw * (static_cast<double>(j) + 0.5)) << "\" y=\"" << px(kHeight - kBottom + 16)
      << "\" text-anchor=\"middle\">" << escape_xml(col_labels[j]) << "</text>\n";
  }
  const double bx = kWidth - kRight + 30;
  for (int k = 0; k < 10; ++k) {
    const double v = hi - span * k / 9.0;
    o << "<rect x=\"" << px(bx) << "\" y=\"" << px(kTop + 20.0 * k) << "\" width=\"18\" height=\"20\" fill=\""
      << colour(v) << "\"/>\n";
  }
  o << "<text x=\"" << px(bx + 24) << "\" y=\"" << px(kTop + 12) << "\">" << num(hi, "%.4g") << "</text>\n";
  o << "<text x=\"" << px(bx + 24) << "\" y=\"" << px(kTop + 196) << "\">" << num(lo, "%.4g") << "</text>\n";
  o << "</svg>\n";
  return o.str();
}

LinePlot loss_plot(const DayReport& report) {
  LinePlot plot{"Network losses per interval", "hour", "losses (p.u.)", {}, {}};
  PlotSeries opt{"optimized", {}, {}, "#1f77b4"};
  PlotSeries base{"uniform Q", {}, {}, "#d62728"};
  for (const auto& r : report.intervals) {
    opt.x.push_back(r.hour);
    opt.y.push_back(r.optimized_converged ? r.optimized_losses : std::nan(""));
    base.x.push_back(r.hour);
    base.y.push_back(r.baseline_converged ? r.baseline_losses : std::nan(""));
  }
  plot.series = {std::move(opt), std::move(base)};
  return plot;
}

LinePlot omega_plot(const DayReport& report) {
  LinePlot plot{"Optimized frequency per interval", "hour", "omega (p.u.)", {}, {}};
  PlotSeries s{"omega*", {}, {}, "#2ca02c"};
  for (const auto& r : report.intervals) {
    s.x.push_back(r.hour);
    s.y.push_back(r.optimized_converged ? r.omega_star : std::nan(""));
  }
  plot.series = {std::move(s)};
  plot.y_guides = {report.band.omega_min_h, report.band.omega_max_h};
  return plot;
}

LinePlot demand_curve_plot(const std::vector<double>& p_levels, const std::vector<double>& omegas,
                           const FarmModels& models) {
  static const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  LinePlot plot{"Farm reactive demand against frequency", "omega (p.u.)", "Q demand (p.u.)", {}, {}};
  for (std::size_t k = 0; k < p_levels.size(); ++k) {
    PlotSeries s{"P = " + num(p_levels[k], "%.3g"), {}, {}, palette[k % 10], false};
    for (double w : omegas) {
      s.x.push_back(w);
      s.y.push_back(farm_demand(w, p_levels[k], models));
    }
    plot.series.push_back(std::move(s));
  }
  return plot;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Usage, "cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error(ErrorKind::Usage, "cannot write '" + path.string() + "'");
}

void write_day_outputs(const std::filesystem::path& dir, const DayReport& report, const FarmCase& farm) {
  write_text_file(dir / "day_report.json", day_json(report, farm).dump(2) + "\n");
  std::ostringstream csv;
  write_day_csv(csv, report, farm);
  write_text_file(dir / "day_report.csv", csv.str());
  for (const auto& r : report.intervals) {
    char name[32];
    std::snprintf(name, sizeof name, "interval_%03d.json", r.hour);
    write_text_file(dir / name, interval_json(r, report.band, report.solver, farm).dump(2) + "\n");
  }
  write_text_file(dir / "plots" / "losses.svg", render_svg(loss_plot(report)));
  write_text_file(dir / "plots" / "omega.svg", render_svg(omega_plot(report)));

  std::vector<std::string> rows, cols;
  for (const auto& t : farm.turbines) rows.push_back(t.bus_id);
  std::vector<std::vector<double>> q(farm.turbines.size());
  for (const auto& r : report.intervals) {
    cols.push_back(std::to_string(r.hour));
    for (std::size_t t = 0; t < farm.turbines.size(); ++t) {
      q[t].push_back(r.optimized_converged && t < r.q_opt.size() ? r.q_opt[t] : std::nan(""));
    }
  }
  write_text_file(dir / "plots" / "q_heatmap.svg",
                  render_heatmap_svg("Optimized turbine reactive power (p.u.)", rows, cols, q));
}

}  // namespace druopf
