#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "druopf/conic.hpp"
#include "druopf/devices.hpp"
#include "druopf/farm_case.hpp"
#include "druopf/network.hpp"
#include "druopf/solver.hpp"

namespace druopf {

/// Row and cone tags used by build_opf.
namespace opf_tag {
inline constexpr const char* kVoltageBounds = "voltage_bounds";
inline constexpr const char* kGenerationLimits = "generation_limits";
inline constexpr const char* kFlowLimits = "flow_limits";
inline constexpr const char* kNodalBalance = "nodal_balance";
inline constexpr const char* kBranchFlow = "branch_flow";
inline constexpr const char* kFrequencyBand = "frequency_band";
inline constexpr const char* kReactiveDemand = "reactive_demand";
inline constexpr const char* kSocRelaxation = "soc_relaxation";
inline constexpr const char* kObjective = "objective";
inline constexpr const char* kRegularization = "regularization";
}  // namespace opf_tag

struct OpfOptions {
  bool regularize = false;
  double reg_weight = 1e-6;  // weight on sum Q_i^2
  SolverSettings solver;
  /// Frequency at which admittances and shunts are evaluated (band nominal
  /// when unset).
  std::optional<double> omega_eval;
  /// DRU AC voltage around which the DRU power row is linearized (from the
  /// farm power when unset).
  std::optional<double> u_eval;
  /// Pins omega with an equality row in place of the band rows.
  std::optional<double> omega_fixed;
};

/// Variable indices of one built program.
struct OpfFormulation {
  std::vector<std::size_t> w_diag;   // per bus
  std::vector<std::size_t> w_re;     // per branch
  std::vector<std::size_t> w_im;
  std::vector<std::size_t> p_from;   // flow entering the branch at its from end
  std::vector<std::size_t> q_from;
  std::vector<std::size_t> p_to;
  std::vector<std::size_t> q_to;
  std::vector<std::size_t> q_turbine;  // per turbine, in FarmCase order
  std::size_t omega = 0;
  std::optional<std::size_t> reg;
  double omega_eval = 1.0;
  double u_eval = 1.0;
  bool dru_blocked = false;
  double dru_p_eval = 0.0;  // DRU power at u_eval
  double dru_slope = 0.0;   // dP/dW at u_eval
};

/// Loss-minimizing dispatch program with the second-order cone relaxation of
/// the bus-voltage products. The DRU bus is the angle reference and has no
/// reactive balance row; its active power follows the DRU characteristic,
/// linearized in W_dd around options.u_eval.
std::pair<ConicProgram, OpfFormulation> build_opf(const FarmCase& farm, const DemandLine& demand_line,
                                                  std::span<const double> p_per_turbine,
                                                  const FrequencyBand& band, const OpfOptions& options = {});

struct VoltageRecovery {
  std::vector<std::complex<double>> v;
  double rank1_residual = 0.0;
};

/// |V_i| = sqrt(W_ii); angles propagate over a BFS spanning tree from the
/// dru-ac bus (angle 0) with theta_j = theta_i - arg(W_ij).
VoltageRecovery recover_voltages(const std::vector<double>& w_diag, const std::vector<double>& w_re,
                                 const std::vector<double>& w_im, const NetworkModel& net);

struct GapReport {
  std::vector<double> slack;  // (W_ii + W_jj) - ||(2 W_ij, W_ii - W_jj)|| per branch
  double max = 0.0;
  double mean = 0.0;
};

GapReport relaxation_gap(const std::vector<double>& w_diag, const std::vector<double>& w_re,
                         const std::vector<double>& w_im, const NetworkModel& net);

struct OuterStep {
  double omega_eval = 0.0;
  double u_eval = 0.0;
  double omega_star = 0.0;
  double u_star = 0.0;
  double objective = 0.0;
  SolverStatus status = SolverStatus::NumericalError;
  int solver_iterations = 0;
};

struct OpfSolution {
  SolverStatus status = SolverStatus::NumericalError;
  bool outer_converged = false;
  double omega_star = 0.0;
  std::vector<double> q_turbine;
  std::vector<double> w_diag, w_re, w_im;
  std::vector<std::complex<double>> s_from, s_to;
  double losses_total = 0.0;  // sum of Re(S_ij + S_ji) from the flow variables
  double objective = 0.0;     // solver objective, regularization included
  std::vector<double> cone_residuals;
  std::vector<std::complex<double>> recovered_v;
  double rank1_residual = 0.0;
  bool dru_blocked = false;
  std::vector<OuterStep> trace;
  int solver_iterations = 0;  // summed over outer steps
  double solve_time = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  std::string message;
  std::shared_ptr<const ConicProgram> program;  // last program solved
  std::vector<double> primal;                   // its primal point
};

struct OuterSettings {
  double tol = 1e-6;
  int max_iter = 10;
  /// Starting (omega, u); band nominal and the farm-power DRU voltage when unset.
  std::optional<std::pair<double, double>> initial;
  /// After the fixed point, also solve with omega pinned at the band edges
  /// and at parabolic-interpolation points, keeping the lowest objective.
  bool frequency_search = true;
  int search_max_evals = 4;  // interpolation points beyond the band edges
};

/// Outer fixed point on the evaluation frequency and DRU linearization
/// point. Stops when both move by at most tol; on max_iter the last iterate is
/// returned with outer_converged = false.
///
/// With admittances frozen at the evaluation frequency each inner program
/// only sees omega through the reactive-demand row, so the fixed point can
/// miss the loss sensitivity carried by the shunts. frequency_search closes
/// that gap with a one-dimensional search over pinned-omega programs, each
/// with its own DRU fixed point. The trace holds every inner solve.
OpfSolution frequency_iteration(const FarmCase& farm, const DemandLine& demand_line,
                                std::span<const double> p_per_turbine, const FrequencyBand& band,
                                const OpfOptions& options = {}, const OuterSettings& outer = {});

}  // namespace druopf
