#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "druopf/study.hpp"

namespace druopf {

nlohmann::json interval_json(const IntervalRecord& rec, const FrequencyBand& band, const SolverSettings& solver,
                             const FarmCase& farm);
nlohmann::json day_json(const DayReport& report, const FarmCase& farm);

/// One row per interval; Q columns follow the farm's turbine order.
void write_day_csv(std::ostream& out, const DayReport& report, const FarmCase& farm);
void write_interval_csv(std::ostream& out, const IntervalRecord& rec, const FarmCase& farm);

struct PlotSeries {
  std::string name;
  std::vector<double> x, y;
  std::string color = "#1f77b4";
  bool markers = true;
};

struct LinePlot {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<PlotSeries> series;
  std::vector<double> y_guides;  // dashed horizontal lines
};

/// Fixed-size SVG; output depends only on the input numbers.
std::string render_svg(const LinePlot& plot);
/// Rows are turbines, columns intervals.
std::string render_heatmap_svg(const std::string& title, const std::vector<std::string>& row_labels,
                               const std::vector<std::string>& col_labels,
                               const std::vector<std::vector<double>>& values);

LinePlot loss_plot(const DayReport& report);
LinePlot omega_plot(const DayReport& report);
LinePlot demand_curve_plot(const std::vector<double>& p_levels, const std::vector<double>& omegas,
                           const FarmModels& models);

/// day_report.{json,csv}, interval_###.json and plots/*.svg under dir.
void write_day_outputs(const std::filesystem::path& dir, const DayReport& report, const FarmCase& farm);

/// Writes text to a file, creating parent directories. Throws Error{Usage}
/// when the file cannot be written.
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace druopf
