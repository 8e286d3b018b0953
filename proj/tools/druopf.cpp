// Batch front end for curves, fits, single-interval solves, day studies and
// the grid-search audit.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "druopf/error.hpp"
#include "druopf/farm_case.hpp"
#include "druopf/opf.hpp"
#include "druopf/oracle.hpp"
#include "druopf/profile.hpp"
#include "druopf/report.hpp"
#include "druopf/study.hpp"

namespace fs = std::filesystem;
using namespace druopf;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPartial = 2;
constexpr int kExitUsage = 3;
constexpr int kExitFailure = 4;

struct Options {
  std::string network;
  std::string profile;
  int hour = -1;
  std::string band;
  std::size_t jobs = 0;
  std::string out;
  bool regularize = false;
  double feas_tol = 0.0;
  double gap_tol = 0.0;
  std::uint64_t seed = 0;
  bool dump_conic = false;
  std::string p_levels = "0.01,0.2,0.4,0.6,0.8";
  std::string omega_grid = "0.9,1.1,41";
  std::size_t resolution = 11;
  int refine_rounds = 3;
  double loading = -1.0;
};

std::vector<double> parse_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(ErrorKind::Usage, std::string(what) + ": '" + item + "' is not a number");
    }
  }
  return out;
}

FrequencyBand parse_band(const std::string& text) {
  FrequencyBand band;
  if (text.empty()) return band;
  const auto v = parse_list(text, "--band");
  if (v.size() != 3) throw Error(ErrorKind::Usage, "--band expects lo,hi,nom");
  band.omega_min_h = v[0];
  band.omega_max_h = v[1];
  band.omega_0 = v[2];
  try {
    band.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::Usage, std::string("--band: ") + e.what());
  }
  return band;
}

StudySettings study_settings(const Options& o) {
  StudySettings s;
  s.band = parse_band(o.band);
  s.opf.regularize = o.regularize;
  s.opf.solver = SolverSettings::from_env();
  if (o.feas_tol > 0.0) s.opf.solver.feas_tol = o.feas_tol;
  if (o.gap_tol > 0.0) s.opf.solver.gap_tol = o.gap_tol;
  try {
    s.opf.solver.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::Usage, e.what());
  }
  s.jobs = o.jobs;
  return s;
}

FarmCase need_farm(const Options& o) {
  if (o.network.empty()) throw Error(ErrorKind::Usage, "--network is required");
  return load_farm_case_file(o.network);
}

DayProfile need_profile(const Options& o, const FarmCase& farm) {
  if (o.profile.empty()) throw Error(ErrorKind::Usage, "--profile is required");
  return load_profile_file(o.profile, farm);
}

std::size_t interval_of(const DayProfile& profile, int hour) {
  for (std::size_t i = 0; i < profile.intervals.size(); ++i) {
    if (profile.intervals[i].hour == hour) return i;
  }
  throw Error(ErrorKind::Usage, "hour " + std::to_string(hour) + " is not in the profile");
}

std::vector<double> omega_grid(const std::string& text) {
  const auto v = parse_list(text, "--omega");
  if (v.size() != 3 || v[2] < 1 || v[2] != std::floor(v[2])) throw Error(ErrorKind::Usage, "--omega expects lo,hi,n");
  const auto n = static_cast<std::size_t>(v[2]);
  std::vector<double> w;
  for (std::size_t k = 0; k < n; ++k) w.push_back(n == 1 ? v[0] : v[0] + (v[1] - v[0]) * k / static_cast<double>(n - 1));
  return w;
}

std::vector<double> p_levels(const Options& o, const FarmCase& farm) {
  auto frac = parse_list(o.p_levels, "--p-levels");
  if (frac.empty()) throw Error(ErrorKind::Usage, "--p-levels is empty");
  for (double& f : frac) {
    if (f < 0.0) throw Error(ErrorKind::Usage, "--p-levels must be >= 0");
    f *= farm.p_farm_max();
  }
  return frac;
}

void emit(const Options& o, const std::string& file, const std::string& text) {
  if (o.out.empty()) {
    std::cout << text;
  } else {
    write_text_file(fs::path(o.out) / file, text);
  }
}

void dump_program(const Options& o, const IntervalRecord& r) {
  if (!o.dump_conic || o.out.empty() || !r.program) return;
  std::ostringstream text;
  write_conic_text(text, *r.program);
  char name[32];
  std::snprintf(name, sizeof name, "interval_%03d.txt", r.hour);
  write_text_file(fs::path(o.out) / "conic" / name, text.str());
}

int cmd_curves(const Options& o) {
  const FarmCase farm = need_farm(o);
  const auto p = p_levels(o, farm);
  const auto w = omega_grid(o.omega_grid);
  const FarmModels models = farm.models();
  std::ostringstream csv;
  write_demand_curves_csv(csv, p, w, models);
  emit(o, "curves.csv", csv.str());
  if (!o.out.empty()) {
    write_text_file(fs::path(o.out) / "plots" / "demand_curves.svg", render_svg(demand_curve_plot(p, w, models)));
  }
  return kExitOk;
}

int cmd_linefit(const Options& o) {
  const FarmCase farm = need_farm(o);
  const auto p = p_levels(o, farm);
  const auto w = parse_list(o.omega_grid, "--omega");
  if (w.size() < 2) throw Error(ErrorKind::Usage, "--omega expects lo,hi[,n]");
  const FarmModels models = farm.models();
  std::ostringstream csv;
  csv << "p_farm,d1,d2,max_abs_err,q_min,q_max,rel_err\n";
  char buf[256];
  for (double pf : p) {
    const DemandLine line = fit_demand_line(pf, w[0], w[1], models);
    const double range = line.q_max - line.q_min;
    std::snprintf(buf, sizeof buf, "%.10g,%.10g,%.10g,%.6g,%.10g,%.10g,%.6g\n", pf, line.d1, line.d2,
                  line.max_abs_err, line.q_min, line.q_max, range > 0 ? line.max_abs_err / range : 0.0);
    csv << buf;
  }
  emit(o, "linefit.csv", csv.str());
  return kExitOk;
}

int cmd_solve(const Options& o) {
  const FarmCase farm = need_farm(o);
  const DayProfile profile = need_profile(o, farm);
  if (o.hour < 0) throw Error(ErrorKind::Usage, "--hour is required");
  const std::size_t i = interval_of(profile, o.hour);
  const StudySettings s = study_settings(o);
  const IntervalRecord r = run_interval(farm, profile.intervals[i].hour, profile.p_pu(i, farm), s);
  const std::string text = interval_json(r, s.band, s.opf.solver, farm).dump(2) + "\n";
  char name[32];
  std::snprintf(name, sizeof name, "interval_%03d", r.hour);
  emit(o, std::string(name) + ".json", text);
  if (!o.out.empty()) {
    std::ostringstream csv;
    write_interval_csv(csv, r, farm);
    write_text_file(fs::path(o.out) / (std::string(name) + ".csv"), csv.str());
    dump_program(o, r);
  }
  if (r.converged_both) return kExitOk;
  return r.optimized_converged || r.baseline_converged ? kExitPartial : kExitFailure;
}

int cmd_day(const Options& o) {
  const FarmCase farm = need_farm(o);
  const DayProfile profile = need_profile(o, farm);
  if (o.out.empty()) throw Error(ErrorKind::Usage, "--out is required for day");
  const StudySettings s = study_settings(o);
  const DayReport report = run_day(farm, profile, s);
  write_day_outputs(o.out, report, farm);
  for (const auto& r : report.intervals) dump_program(o, r);
  const auto& sm = report.summary;
  std::printf("intervals %zu, converged %zu, omega [%.6f, %.6f], window intervals %zu, mean reduction %.4f%% "
              "(reference %.1f%%)\n",
              sm.intervals, sm.converged_both, sm.omega_min, sm.omega_max, sm.window_intervals,
              100.0 * sm.mean_reduction, 100.0 * sm.reference_reduction);
  return exit_code(report);
}

int cmd_oracle(const Options& o) {
  const FarmCase farm = need_farm(o);
  OracleOptions oo;
  oo.resolution = o.resolution;
  oo.refine_rounds = o.refine_rounds;
  oo.jobs = o.jobs;
  oo.seed = o.seed;
  if (farm.n_wt() > 3) throw Error(ErrorKind::Usage, "dimensionality too high for the grid-search oracle");
  if (oo.resolution < 11) throw Error(ErrorKind::Usage, "oracle resolution must be at least 11");
  std::vector<double> p;
  if (o.loading >= 0.0) {
    for (const auto& t : farm.turbines) p.push_back(o.loading * t.p_max);
  } else if (o.hour >= 0) {
    const DayProfile profile = need_profile(o, farm);
    p = profile.p_pu(interval_of(profile, o.hour), farm);
  } else {
    throw Error(ErrorKind::Usage, "oracle needs --loading or --hour with --profile");
  }
  const StudySettings s = study_settings(o);
  const double p_farm = std::accumulate(p.begin(), p.end(), 0.0);
  const DemandLine line = fit_demand_line(p_farm, s.fit_omega_lo, s.fit_omega_hi, farm.models());
  const OpfSolution sol = frequency_iteration(farm, line, p, s.band, s.opf, s.outer);
  const OracleResult oracle = grid_search_oracle(farm, line, p, s.band, oo);
  json j;
  j["p"] = p;
  j["socp"] = {{"status", to_string(sol.status)},
               {"outer_converged", sol.outer_converged},
               {"objective", sol.objective},
               {"omega", sol.omega_star},
               {"q", sol.q_turbine}};
  j["oracle"] = {{"losses", oracle.losses},
                 {"omega", oracle.omega},
                 {"q", oracle.q},
                 {"evaluations", oracle.evaluations},
                 {"feasible", oracle.feasible},
                 {"round_losses", oracle.round_losses},
                 {"final_cell", oracle.final_cell},
                 {"resolution", oo.resolution},
                 {"seed", oracle.seed}};
  const double gap = sol.objective != 0.0 ? (oracle.losses - sol.objective) / std::abs(sol.objective) : 0.0;
  j["relative_gap"] = gap;
  emit(o, "oracle.json", j.dump(2) + "\n");
  return sol.status == SolverStatus::Optimal ? kExitOk : kExitFailure;
}

int cmd_validate_network(const Options& o) {
  const FarmCase farm = need_farm(o);
  json j;
  j["description"] = farm.description;
  j["buses"] = farm.net.n_buses();
  j["branches"] = farm.net.n_branches();
  j["turbines"] = farm.n_wt();
  j["topology"] = farm.net.topology() == Topology::Radial ? "radial" : "meshed";
  j["p_farm_max"] = farm.p_farm_max();
  if (farm.net.topology() == Topology::Radial) {
    const FarmModels m = farm.models();
    j["l_net"] = m.l_net;
    j["c_net"] = m.c_net;
  }
  emit(o, "network.json", j.dump(2) + "\n");
  return kExitOk;
}

int exit_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::Usage:
    case ErrorKind::Schema:
    case ErrorKind::Topology:
      return kExitUsage;
    default:
      return kExitFailure;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reactive-power and frequency dispatch for grid-forming offshore wind farms with diode-rectifier HVDC"};
  app.require_subcommand(1);
  Options o;

  auto common = [&o](CLI::App* c) {
    c->add_option("--network", o.network, "farm JSON document");
    c->add_option("--out", o.out, "output directory (stdout when omitted)");
  };
  auto study = [&o](CLI::App* c) {
    c->add_option("--profile", o.profile, "CSV hour,turbine_id,p_mw");
    c->add_option("--band", o.band, "frequency band lo,hi,nom (p.u.)");
    c->add_option("--jobs", o.jobs, "worker threads (0 = all cores)");
    c->add_flag("--regularize", o.regularize, "add a small penalty on sum Q^2 to pick a unique dispatch");
    c->add_option("--solver-feas-tol", o.feas_tol, "conic solver feasibility tolerance");
    c->add_option("--solver-gap-tol", o.gap_tol, "conic solver gap tolerance");
    c->add_flag("--dump-conic", o.dump_conic, "write the solved programs under <out>/conic");
  };

  auto* curves = app.add_subcommand("curves", "reactive demand against frequency at several farm powers");
  common(curves);
  curves->add_option("--p-levels", o.p_levels, "farm power levels as fractions of rated, comma separated");
  curves->add_option("--omega", o.omega_grid, "frequency grid lo,hi,n");

  auto* linefit = app.add_subcommand("linefit", "affine fits of the reactive demand in frequency");
  common(linefit);
  linefit->add_option("--p-levels", o.p_levels, "farm power levels as fractions of rated");
  linefit->add_option("--omega", o.omega_grid, "fit range lo,hi");

  auto* solve_cmd = app.add_subcommand("solve", "one interval: optimized dispatch against the uniform baseline");
  common(solve_cmd);
  study(solve_cmd);
  solve_cmd->add_option("--hour", o.hour, "profile hour");

  auto* day = app.add_subcommand("day", "all intervals of a profile");
  common(day);
  study(day);

  auto* oracle = app.add_subcommand("oracle", "grid-search audit of the relaxation on small farms");
  common(oracle);
  study(oracle);
  oracle->add_option("--hour", o.hour, "profile hour");
  oracle->add_option("--loading", o.loading, "uniform turbine loading as a fraction of p_max");
  oracle->add_option("--resolution", o.resolution, "coarse grid points per axis (>= 11)");
  oracle->add_option("--refine-rounds", o.refine_rounds, "refinement rounds");
  oracle->add_option("--seed", o.seed, "recorded for tie determinism");

  auto* validate = app.add_subcommand("validate-network", "load and summarize a farm document");
  common(validate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*curves) return cmd_curves(o);
    if (*linefit) return cmd_linefit(o);
    if (*solve_cmd) return cmd_solve(o);
    if (*day) return cmd_day(o);
    if (*oracle) return cmd_oracle(o);
    if (*validate) return cmd_validate_network(o);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}
