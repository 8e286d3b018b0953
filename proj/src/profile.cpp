#include "druopf/profile.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string_view>

#include "druopf/error.hpp"

namespace druopf {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

[[noreturn]] void fail(std::size_t line_no, const std::string& what) {
  throw Error(ErrorKind::Schema, "profile line " + std::to_string(line_no) + ": " + what);
}

}  // namespace

std::vector<double> DayProfile::p_pu(std::size_t interval, const FarmCase& farm) const {
  const auto& mw = intervals.at(interval).p_mw;
  std::vector<double> p(mw.size());
  for (std::size_t t = 0; t < mw.size(); ++t) p[t] = mw[t] / farm.net.base().s_mva;
  return p;
}

DayProfile load_profile_csv(std::istream& in, const FarmCase& farm) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw Error(ErrorKind::Schema, "profile is empty");
  ++line_no;
  {
    const auto head = split(line);
    if (head.size() != 3 || head[0] != "hour" || head[1] != "turbine_id" || head[2] != "p_mw") {
      fail(line_no, "header must be 'hour,turbine_id,p_mw'");
    }
  }
  std::map<std::string, std::size_t, std::less<>> turbine_index;
  for (std::size_t t = 0; t < farm.turbines.size(); ++t) turbine_index.emplace(farm.turbines[t].bus_id, t);

  std::map<int, std::vector<double>> hours;
  const double nan = std::nan("");
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split(line);
    if (cells.size() != 3) fail(line_no, "expected 3 columns");
    int hour = 0;
    {
      const auto [ptr, ec] = std::from_chars(cells[0].data(), cells[0].data() + cells[0].size(), hour);
      if (ec != std::errc{} || ptr != cells[0].data() + cells[0].size()) fail(line_no, "hour must be an integer");
    }
    const auto it = turbine_index.find(cells[1]);
    if (it == turbine_index.end()) fail(line_no, "unknown turbine '" + std::string(cells[1]) + "'");
    double p = 0.0;
    try {
      std::size_t used = 0;
      const std::string text(cells[2]);
      p = std::stod(text, &used);
      if (used != text.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      fail(line_no, "p_mw must be a number");
    }
    if (!std::isfinite(p) || p < 0.0) fail(line_no, "p_mw must be finite and >= 0");
    auto& row = hours.try_emplace(hour, farm.turbines.size(), nan).first->second;
    if (!std::isnan(row[it->second])) fail(line_no, "turbine '" + it->first + "' listed twice in hour " + std::to_string(hour));
    row[it->second] = p;
  }
  DayProfile profile;
  for (auto& [hour, row] : hours) {
    for (std::size_t t = 0; t < row.size(); ++t) {
      if (std::isnan(row[t])) {
        throw Error(ErrorKind::Schema,
                    "profile hour " + std::to_string(hour) + " is missing turbine '" + farm.turbines[t].bus_id + "'");
      }
    }
    profile.intervals.push_back({hour, std::move(row)});
  }
  if (profile.intervals.empty()) throw Error(ErrorKind::Schema, "profile has no intervals");
  return profile;
}

DayProfile load_profile_file(const std::string& path, const FarmCase& farm) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Schema, "cannot open '" + path + "'");
  return load_profile_csv(in, farm);
}

}  // namespace druopf
