#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "druopf/farm_case.hpp"
#include "druopf/opf.hpp"
#include "druopf/power_flow.hpp"
#include "druopf/profile.hpp"

namespace druopf {

struct StudySettings {
  FrequencyBand band;
  OpfOptions opf;
  OuterSettings outer;
  double fit_omega_lo = 0.9;  // range of the reactive-demand line fit
  double fit_omega_hi = 1.1;
  std::size_t jobs = 0;       // interval workers, 0 = hardware concurrency
};

struct IntervalRecord {
  int hour = 0;
  std::vector<double> p;  // per turbine, p.u.
  double p_farm = 0.0;
  double loading = 0.0;   // p_farm / p_farm_max

  DemandLine line;

  // optimized dispatch
  std::string opf_status = "not_run";
  bool outer_converged = false;
  double omega_star = 0.0;
  std::vector<double> q_opt;
  double opf_losses = 0.0;  // from the flow variables
  double opf_objective = 0.0;
  double rank1_residual = 0.0;
  bool dru_blocked = false;
  int outer_iterations = 0;
  int solver_iterations = 0;
  double solve_time = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;

  // AC power flow at the optimized setpoints
  bool validation_converged = false;
  double optimized_losses = 0.0;  // AC network losses
  double optimized_losses_total = 0.0;
  double validation_mismatch = 0.0;
  LossBreakdown optimized_breakdown;

  // uniform-Q comparator
  bool baseline_converged = false;
  double baseline_q = 0.0;
  double baseline_losses = 0.0;
  double baseline_losses_total = 0.0;
  LossBreakdown baseline_breakdown;

  bool optimized_converged = false;
  bool converged_both = false;
  std::optional<double> loss_ratio;  // optimized / baseline, converged_both only
  std::string message;

  std::shared_ptr<const ConicProgram> program;  // last program solved, for dumps
};

/// One dispatch interval: demand-line fit at the farm power, outer
/// frequency iteration, AC power flow at the result, uniform-Q baseline.
/// Failures are recorded in the record rather than thrown.
IntervalRecord run_interval(const FarmCase& farm, int hour, const std::vector<double>& p,
                            const StudySettings& settings);

struct DaySummary {
  std::size_t intervals = 0;
  std::size_t converged_both = 0;
  double omega_min = 0.0;  // over converged optimized intervals
  double omega_max = 0.0;
  bool omega_in_band = true;
  double window_lo = 0.5;  // loading window of the reduction statistics
  double window_hi = 0.7;
  std::size_t window_intervals = 0;
  double mean_reduction = 0.0;  // 1 - optimized/baseline
  double max_reduction = 0.0;
  double min_reduction = 0.0;
  bool window_all_lower = true;  // optimized < baseline in every window interval
  double reference_reduction = 0.253;  // literature value, context only
};

struct DayReport {
  std::vector<IntervalRecord> intervals;
  DaySummary summary;
  FrequencyBand band;
  SolverSettings solver;
};

DaySummary summarize(const std::vector<IntervalRecord>& records, const FrequencyBand& band);

/// All intervals of the profile on a bounded worker pool; records come back
/// in profile order.
DayReport run_day(const FarmCase& farm, const DayProfile& profile, const StudySettings& settings);

/// 0 all intervals converged, 2 some, 4 none.
int exit_code(const DayReport& report);

}  // namespace druopf
