#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace druopf {

/// Grid-forming turbine with its LC filter and step-up transformer (p.u.).
struct TurbineUnit {
  std::string bus_id;
  std::size_t bus = 0;
  double c_f = 0.0;   // filter capacitance
  double n_tf = 1.0;  // transformer ratio (off-nominal, p.u.)
  double l_tf = 0.0;  // leakage inductance, low-voltage side
  double p_max = 0.0;
  double s_rating = 0.0;

  void validate() const;
};

/// Series-connected six-pulse diode bridges feeding a stiff onshore DC bus.
///
/// DC quantities use a base where the no-load DC voltage equals the AC peak
/// voltage in p.u., so v_d0 = u and the commutation drop is omega * l_c * i_d.
struct DruStation {
  std::string bus_id;
  std::size_t bus = 0;
  int n_bridge = 1;
  double l_c = 0.05;
  double r_dc = 0.0;
  double v_dc_onshore = 1.0;

  void validate() const;
};

struct DruOperatingPoint {
  double mu = 0.0;   // commutation overlap angle
  double phi = 0.0;  // displacement angle at the AC terminals
  double i_d = 0.0;
  double v_d = 0.0;
  double p = 0.0;    // AC active power drawn, v_d * i_d
  double q_dr = 0.0;
  bool blocked = false;
};

/// DC-link operating point at AC peak voltage u_pcc against the stiff onshore
/// bus. Blocks (i_d = 0) when u_pcc <= v_dc_onshore. Throws Error{Infeasible}
/// when the overlap would reach 60 degrees.
DruOperatingPoint dru_dc_link(double u_pcc, const DruStation& dru, double omega);

/// Operating point that draws active power p at a held AC voltage u, with the
/// DC voltage left free (used for demand curves where u is fixed).
DruOperatingPoint dru_point_for_power(double p, double u, const DruStation& dru, double omega);

/// AC voltage at which dru_dc_link draws power p (v_dc_onshore for p <= 0).
double dru_voltage_for_power(double p, const DruStation& dru, double omega);

/// d(dru_dc_link(u).p)/du, zero while blocked.
double dru_power_slope(double u, const DruStation& dru, double omega);

/// Displacement angle phi(mu) = atan((2mu - sin 2mu) / (1 - cos 2mu)), with
/// phi(0) = 0. Valid for mu in [0, pi/3].
double dru_power_factor(double mu);

double dru_reactive(double p_farm, double phi);

/// PCC peak current for farm power p_farm at voltage u_pcc and angle phi.
double pcc_current(double p_farm, double u_pcc, double phi);

double network_reactive(double p_farm, double u_pcc, double phi, double omega, double l_net, double c_net);

/// Reactive consumption of all turbine transformers; the per-turbine current
/// i_pcc * n_tf / n_wt enters squared.
double transformer_reactive(double i_pcc, double n_tf, std::size_t n_wt, double omega, double l_tf);

/// Reactive consumption of all filter capacitors (negative: they generate).
double filter_reactive(double u_pcc, double n_tf, std::size_t n_wt, double omega, double c_f);

/// Lumped farm parameters for the reactive balance. Turbines are assumed
/// identical; per-turbine quantities are means over the farm.
struct FarmModels {
  std::size_t n_wt = 1;
  double c_f = 0.0;
  double n_tf = 1.0;
  double l_tf = 0.0;
  double l_net = 0.0;
  double c_net = 0.0;
  double p_farm_max = 1.0;
  DruStation dru;
  double u_pcc = 1.0;  // held voltage for demand curves
};

struct DemandTerms {
  double q_cf = 0.0;
  double q_tf = 0.0;
  double q_net = 0.0;
  double q_dr = 0.0;
  double total() const { return q_cf + q_tf + q_net + q_dr; }
};

DemandTerms farm_demand_terms(double omega, double p_farm, const FarmModels& models);

/// Total reactive power the farm must supply at frequency omega and farm
/// active power p_farm (filters + transformers + collection network + DRU).
double farm_demand(double omega, double p_farm, const FarmModels& models);

struct FrequencyBand {
  double omega_min_h = 0.995;
  double omega_max_h = 1.005;
  double omega_0 = 1.0;

  double width() const { return omega_max_h - omega_min_h; }
  void validate() const;
};

struct DroopParams {
  double k_h = 0.0;
  double q_0 = 0.0;
  double omega_0 = 1.0;

  /// Reactive output of one turbine at frequency omega.
  double output(double omega) const { return q_0 + k_h * (omega - omega_0); }
};

/// Reactive demand as a function of frequency at a fixed active power.
using DemandCurve = std::function<double(double omega)>;
/// Reactive demand as a function of frequency and farm active power.
using DemandSurface = std::function<double(double omega, double p_farm)>;

/// Droop slope and offset that put the equilibrium at omega_min_h with no
/// generation and at omega_max_h at full output.
DroopParams compute_droop_params(const FrequencyBand& band, std::size_t n_wt, double p_farm_max,
                                 const DemandSurface& demand);
DroopParams compute_droop_params(const FrequencyBand& band, const FarmModels& models);

/// Frequency where n_wt droop outputs meet the demand, by bisection on
/// [omega_lo, omega_hi]. Throws Error{Infeasible} without a sign change.
double static_operating_point(const DroopParams& droop, std::size_t n_wt, const DemandCurve& demand,
                              double omega_lo = 0.9, double omega_hi = 1.1);
double static_operating_point(const DroopParams& droop, double p_farm, const FarmModels& models,
                              double omega_lo = 0.9, double omega_hi = 1.1);

struct DemandLine {
  double d1 = 0.0;
  double d2 = 0.0;
  double p_anchor = 0.0;
  double max_abs_err = 0.0;
  double omega_lo = 0.9;
  double omega_hi = 1.1;
  double q_min = 0.0;  // extremes of the demand over the dense residual scan
  double q_max = 0.0;

  double eval(double omega) const { return d1 * omega + d2; }
};

inline constexpr std::size_t kDemandFitSamples = 101;
inline constexpr std::size_t kDemandScanSamples = 2001;

/// Least-squares affine fit of a demand curve on a uniform omega grid;
/// max_abs_err covers the fit samples and a dense residual scan.
DemandLine fit_demand_line(const DemandCurve& demand, double p_anchor, double omega_lo, double omega_hi,
                           std::size_t n_samples = kDemandFitSamples);
DemandLine fit_demand_line(double p_anchor, double omega_lo, double omega_hi, const FarmModels& models,
                           std::size_t n_samples = kDemandFitSamples);

/// q(omega, P) ~ k1 * P^2 * omega + k2 * omega + k3 * P.
struct QuadraticDemandFit {
  double k1 = 0.0;
  double k2 = 0.0;
  double k3 = 0.0;
  double max_abs_err = 0.0;

  double eval(double omega, double p_farm) const { return k1 * p_farm * p_farm * omega + k2 * omega + k3 * p_farm; }
};

QuadraticDemandFit fit_quadratic_surface(std::span<const double> p_grid, double omega_lo, double omega_hi,
                                         const DemandSurface& demand, std::size_t n_omega = 21);
QuadraticDemandFit fit_quadratic_surface(std::span<const double> p_grid, double omega_lo, double omega_hi,
                                         const FarmModels& models, std::size_t n_omega = 21);

/// Writes `omega,p_farm,q_farm` rows for every (p, omega) pair.
void write_demand_curves_csv(std::ostream& out, std::span<const double> p_levels,
                             std::span<const double> omegas, const FarmModels& models);

}  // namespace druopf
