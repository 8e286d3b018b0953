#include "druopf/study.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "druopf/error.hpp"
#include "parallel.hpp"

namespace druopf {

IntervalRecord run_interval(const FarmCase& farm, int hour, const std::vector<double>& p,
                            const StudySettings& settings) {
  IntervalRecord rec;
  rec.hour = hour;
  rec.p = p;
  rec.p_farm = std::accumulate(p.begin(), p.end(), 0.0);
  rec.loading = rec.p_farm / farm.p_farm_max();
  const FarmModels models = farm.models();

  try {
    rec.line = fit_demand_line(rec.p_farm, settings.fit_omega_lo, settings.fit_omega_hi, models);
    const OpfSolution sol = frequency_iteration(farm, rec.line, p, settings.band, settings.opf, settings.outer);
    rec.opf_status = to_string(sol.status);
    rec.outer_converged = sol.outer_converged;
    rec.outer_iterations = static_cast<int>(sol.trace.size());
    rec.solver_iterations = sol.solver_iterations;
    rec.solve_time = sol.solve_time;
    rec.primal_residual = sol.primal_residual;
    rec.dual_residual = sol.dual_residual;
    rec.dru_blocked = sol.dru_blocked;
    rec.program = sol.program;
    if (!sol.message.empty()) rec.message = sol.message;
    if (sol.status == SolverStatus::Optimal) {
      rec.omega_star = sol.omega_star;
      rec.q_opt = sol.q_turbine;
      rec.opf_losses = sol.losses_total;
      rec.opf_objective = sol.objective;
      rec.rank1_residual = sol.rank1_residual;
      const PowerFlowResult pf = ac_power_flow(farm, p, rec.q_opt, rec.omega_star);
      rec.validation_converged = pf.converged;
      rec.optimized_losses = pf.losses_ac;
      rec.optimized_losses_total = pf.losses_total;
      rec.validation_mismatch = pf.max_mismatch;
      rec.optimized_breakdown = pf.breakdown;
      if (!pf.converged && rec.message.empty()) rec.message = "validation power flow: " + pf.message;
    }
  } catch (const Error& e) {
    rec.message = std::string("optimized path: ") + e.what();
  }
  rec.optimized_converged = rec.opf_status == "optimal" && rec.outer_converged && rec.validation_converged;

  try {
    const BaselineResult base = baseline_uniform(farm, p, settings.band, models);
    rec.baseline_converged = base.power_flow.converged;
    rec.baseline_q = base.q_uniform.empty() ? 0.0 : base.q_uniform.front();
    rec.baseline_losses = base.power_flow.losses_ac;
    rec.baseline_losses_total = base.power_flow.losses_total;
    rec.baseline_breakdown = base.power_flow.breakdown;
  } catch (const Error& e) {
    if (!rec.message.empty()) rec.message += "; ";
    rec.message += std::string("baseline: ") + e.what();
  }

  rec.converged_both = rec.optimized_converged && rec.baseline_converged;
  if (rec.converged_both && rec.baseline_losses > 0.0) rec.loss_ratio = rec.optimized_losses / rec.baseline_losses;
  return rec;
}

DaySummary summarize(const std::vector<IntervalRecord>& records, const FrequencyBand& band) {
  DaySummary s;
  s.intervals = records.size();
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  std::vector<double> reductions;
  constexpr double kWindowSlack = 1e-6;
  for (const auto& r : records) {
    if (r.optimized_converged) {
      lo = std::min(lo, r.omega_star);
      hi = std::max(hi, r.omega_star);
      constexpr double tol = 1e-7;
      if (r.omega_star < band.omega_min_h - tol || r.omega_star > band.omega_max_h + tol) s.omega_in_band = false;
    }
    if (!r.converged_both) continue;
    ++s.converged_both;
    if (r.loading < s.window_lo - kWindowSlack || r.loading > s.window_hi + kWindowSlack) continue;
    ++s.window_intervals;
    if (!(r.optimized_losses < r.baseline_losses)) s.window_all_lower = false;
    if (r.loss_ratio) reductions.push_back(1.0 - *r.loss_ratio);
  }
  if (std::isfinite(lo)) {
    s.omega_min = lo;
    s.omega_max = hi;
  }
  if (!reductions.empty()) {
    s.mean_reduction = std::accumulate(reductions.begin(), reductions.end(), 0.0) / static_cast<double>(reductions.size());
    s.max_reduction = *std::max_element(reductions.begin(), reductions.end());
    s.min_reduction = *std::min_element(reductions.begin(), reductions.end());
  }
  return s;
}

DayReport run_day(const FarmCase& farm, const DayProfile& profile, const StudySettings& settings) {
  DayReport report;
  report.band = settings.band;
  report.solver = settings.opf.solver;
  report.intervals.resize(profile.horizon());
  detail::parallel_for(profile.horizon(), settings.jobs, [&](std::size_t i) {
    report.intervals[i] = run_interval(farm, profile.intervals[i].hour, profile.p_pu(i, farm), settings);
  });
  report.summary = summarize(report.intervals, settings.band);
  return report;
}

int exit_code(const DayReport& report) {
  const auto& s = report.summary;
  if (s.intervals > 0 && s.converged_both == s.intervals) return 0;
  return s.converged_both > 0 ? 2 : 4;
}

}  // namespace druopf
