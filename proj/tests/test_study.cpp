#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "druopf/error.hpp"
#include "druopf/report.hpp"
#include "druopf/study.hpp"
#include "support.hpp"

using namespace druopf;

namespace {

const FarmCase& farm() { return testing::farm2(); }

std::string two_turbine_csv(const std::string& rows) {
  return "hour,turbine_id,p_mw\n" + rows;
}

ErrorKind parse_kind(const std::string& text) {
  std::istringstream in(text);
  try {
    load_profile_csv(in, farm());
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("profile accepted");
  return ErrorKind::Usage;
}

DayProfile small_profile() {
  const std::string a = farm().turbines[0].bus_id, b = farm().turbines[1].bus_id;
  const double pmax = farm().turbines[0].p_max * farm().net.base().s_mva;
  std::ostringstream csv;
  csv << "hour,turbine_id,p_mw\n";
  int hour = 1;
  for (double frac : {0.2, 0.55, 0.6, 0.65, 0.9}) {
    csv << hour << ',' << a << ',' << frac * pmax << '\n' << hour << ',' << b << ',' << frac * pmax << '\n';
    ++hour;
  }
  std::istringstream in(csv.str());
  return load_profile_csv(in, farm());
}

IntervalRecord synthetic(double loading, double omega, double opt, double base) {
  IntervalRecord r;
  r.loading = loading;
  r.omega_star = omega;
  r.optimized_converged = true;
  r.converged_both = true;
  r.optimized_losses = opt;
  r.baseline_losses = base;
  r.loss_ratio = opt / base;
  return r;
}

}  // namespace

TEST_SUITE("study") {

TEST_CASE("profile parsing") {
  const std::string a = farm().turbines[0].bus_id, b = farm().turbines[1].bus_id;
  std::istringstream ok(two_turbine_csv("2," + a + ",1.5\n2," + b + ",2\n1," + b + ",0\n1," + a + ",0.5\n"));
  const DayProfile prof = load_profile_csv(ok, farm());
  REQUIRE(prof.horizon() == 2);
  CHECK(prof.intervals[0].hour == 1);
  CHECK(prof.intervals[0].p_mw == std::vector<double>{0.5, 0.0});
  const auto pu = prof.p_pu(1, farm());
  CHECK(pu[1] == doctest::Approx(2.0 / farm().net.base().s_mva));

  CHECK(parse_kind("hour,id,p\n") == ErrorKind::Schema);
  CHECK(parse_kind(two_turbine_csv("")) == ErrorKind::Schema);
  CHECK(parse_kind(two_turbine_csv("1,nowhere,1\n")) == ErrorKind::Schema);
  CHECK(parse_kind(two_turbine_csv("1," + a + ",1\n")) == ErrorKind::Schema);
  CHECK(parse_kind(two_turbine_csv("1," + a + ",1\n1," + a + ",1\n1," + b + ",1\n")) == ErrorKind::Schema);
  CHECK(parse_kind(two_turbine_csv("1," + a + ",-1\n1," + b + ",1\n")) == ErrorKind::Schema);
  CHECK(parse_kind(two_turbine_csv("1," + a + ",nan\n1," + b + ",1\n")) == ErrorKind::Schema);
  CHECK(parse_kind(two_turbine_csv("x," + a + ",1\nx," + b + ",1\n")) == ErrorKind::Schema);
}

TEST_CASE("fixture profile covers a day") {
  const DayProfile prof = load_profile_file(testing::data_path("profile24.csv"), testing::farm12());
  CHECK(prof.horizon() == 24);
  for (std::size_t i = 0; i < prof.horizon(); ++i) CHECK(prof.intervals[i].p_mw.size() == 12);
}

TEST_CASE("summary statistics") {
  const FrequencyBand band;
  std::vector<IntervalRecord> recs{synthetic(0.3, 0.996, 1.0, 1.1), synthetic(0.5, 1.0, 0.9, 1.0),
                                   synthetic(0.7, 1.004, 0.8, 1.0)};
  IntervalRecord failed;
  failed.loading = 0.6;
  recs.push_back(failed);
  const auto s = summarize(recs, band);
  CHECK(s.intervals == 4);
  CHECK(s.converged_both == 3);
  CHECK(s.window_intervals == 2);
  CHECK(s.mean_reduction == doctest::Approx(0.15));
  CHECK(s.max_reduction == doctest::Approx(0.2));
  CHECK(s.min_reduction == doctest::Approx(0.1));
  CHECK(s.window_all_lower);
  CHECK(s.omega_min == 0.996);
  CHECK(s.omega_max == 1.004);
  CHECK(s.omega_in_band);

  recs.push_back(synthetic(0.6, 1.01, 1.0, 1.0));
  const auto t = summarize(recs, band);
  CHECK_FALSE(t.window_all_lower);
  CHECK_FALSE(t.omega_in_band);

  DayReport rep;
  rep.summary = s;
  CHECK(exit_code(rep) == 2);
  rep.summary.converged_both = 4;
  CHECK(exit_code(rep) == 0);
  rep.summary.converged_both = 0;
  CHECK(exit_code(rep) == 4);
}

TEST_CASE("day study is independent of the worker count") {
  const DayProfile prof = small_profile();
  StudySettings one;
  one.jobs = 1;
  StudySettings many = one;
  many.jobs = 3;
  const DayReport a = run_day(farm(), prof, one);
  const DayReport b = run_day(farm(), prof, many);
  CHECK(day_json(a, farm()).dump() == day_json(b, farm()).dump());
  std::ostringstream ca, cb;
  write_day_csv(ca, a, farm());
  write_day_csv(cb, b, farm());
  CHECK(ca.str() == cb.str());
  CHECK(exit_code(a) == 0);
  CHECK(a.summary.window_intervals == 3);
  CHECK(a.summary.window_all_lower);
  for (const auto& r : a.intervals) {
    CHECK(r.converged_both);
    CHECK(r.validation_mismatch <= 1e-9);
    REQUIRE(r.loss_ratio.has_value());
  }
}

TEST_CASE("interval failures are recorded, not thrown") {
  StudySettings st;
  const std::vector<double> too_much(farm().n_wt(), 10.0);
  IntervalRecord r;
  CHECK_NOTHROW(r = run_interval(farm(), 5, too_much, st));
  CHECK_FALSE(r.converged_both);
  CHECK_FALSE(r.message.empty());
  CHECK_FALSE(r.loss_ratio.has_value());
}

TEST_CASE("written outputs") {
  const DayProfile prof = small_profile();
  StudySettings st;
  st.jobs = 1;
  const DayReport rep = run_day(farm(), prof, st);
  const auto dir = std::filesystem::temp_directory_path() / "druopf_test_outputs";
  std::filesystem::remove_all(dir);
  write_day_outputs(dir, rep, farm());
  for (const char* name : {"day_report.json", "day_report.csv", "interval_001.json", "interval_005.json",
                           "plots/losses.svg", "plots/omega.svg", "plots/q_heatmap.svg"}) {
    CHECK_MESSAGE(std::filesystem::exists(dir / name), name);
  }
  const auto doc = testing::read_json((dir / "day_report.json").string());
  CHECK(doc.contains("summary"));
  std::ifstream csv(dir / "day_report.csv");
  std::string header;
  std::getline(csv, header);
  CHECK(header.rfind("hour,loading,p_farm,status,converged_both,omega_star", 0) == 0);
  std::filesystem::remove_all(dir);
}

TEST_CASE("plot rendering is a pure function of the data") {
  LinePlot plot;
  plot.title = "t";
  plot.series.push_back({"a", {0.0, 1.0, 2.0}, {1.0, 3.0, 2.0}});
  plot.y_guides = {2.5};
  const std::string svg = render_svg(plot);
  CHECK(svg == render_svg(plot));
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  const std::string heat = render_heatmap_svg("q", {"r1", "r2"}, {"1", "2"}, {{0.1, -0.1}, {0.0, 0.2}});
  CHECK(heat.find("r2") != std::string::npos);
}

}  // TEST_SUITE
