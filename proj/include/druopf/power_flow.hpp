#pragma once

#include <complex>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "druopf/devices.hpp"
#include "druopf/farm_case.hpp"

namespace druopf {

struct LossBreakdown {
  double cables = 0.0;
  double transformers = 0.0;  // turbine step-up transformers
  double filters = 0.0;       // capacitive filters are lossless in this model
  double dru_ac = 0.0;        // branches incident to the dru-ac bus
  double dc_cable = 0.0;      // r_dc * i_d^2

  double total() const { return cables + transformers + filters + dru_ac + dc_cable; }
};

enum class PfMethod { Auto, Sweep, Newton };

struct PowerFlowResult {
  bool converged = false;
  bool dru_blocked = false;
  std::string method;  // "sweep" or "newton"
  std::vector<std::complex<double>> bus_v;
  std::vector<std::complex<double>> s_from, s_to;  // series flows leaving each end
  double losses_ac = 0.0;                          // sum Re(S_ij + S_ji)
  double losses_total = 0.0;                       // AC plus DC cable
  LossBreakdown breakdown;
  int iterations = 0;        // outer DRU iterations
  int inner_iterations = 0;  // sweeps or Newton steps, summed
  double max_mismatch = 0.0; // worst nodal mismatch incl. the DRU active power
  DruOperatingPoint dru;
  double p_injected = 0.0;   // sum of turbine P
  double p_dru = 0.0;        // active power arriving at the dru-ac bus
  double q_dru = 0.0;        // reactive power absorbed at the dru-ac bus (slack)
  double q_dru_model = 0.0;  // P tan(phi) of the rectifier model
  double p_delivered = 0.0;  // v_dc_onshore * i_d
  double p_slack = 0.0;      // active power supplied by the dru-ac bus while blocked
  std::string message;
};

/// AC power flow with the dru-ac bus as angle reference. Its voltage magnitude
/// is iterated until the rectifier draws exactly the arriving active power;
/// its reactive power is free. With no net power to rectify the DRU blocks and
/// the bus is held at the onshore DC voltage. Turbine filters are shunts at
/// the turbine buses. Radial networks use a backward-forward sweep unless
/// Newton is requested; meshed networks always use Newton.
PowerFlowResult ac_power_flow(const FarmCase& farm, std::span<const double> p, std::span<const double> q,
                              double omega, PfMethod method = PfMethod::Auto);

LossBreakdown loss_breakdown(const PowerFlowResult& pf, const FarmCase& farm);

/// Rows `section,name,a,b,c,d`: bus (|V|, angle rad), branch (P_ij, Q_ij,
/// P_ji, Q_ji), loss (value) and dru (i_d, v_d, mu, phi).
void write_power_flow_csv(std::ostream& out, const PowerFlowResult& pf, const FarmCase& farm);

struct BaselineResult {
  std::vector<double> q_uniform;
  double omega = 1.0;
  PowerFlowResult power_flow;
};

/// Uniform reactive sharing at nominal frequency: every turbine supplies
/// farm_demand(omega_0, sum P) / n_wt. Throws Error{Capability} if that
/// exceeds a turbine's rating.
BaselineResult baseline_uniform(const FarmCase& farm, std::span<const double> p, const FrequencyBand& band,
                                const FarmModels& models);

}  // namespace druopf
