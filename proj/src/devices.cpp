#include "druopf/devices.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <set>

#include <Eigen/Dense>

#include "druopf/error.hpp"
#include "druopf/units.hpp"

namespace druopf {

namespace {

constexpr double kMaxOverlap = kPi / 3.0;

void finish_commutation(DruOperatingPoint& op, double u, const DruStation& dru, double omega) {
  const double cos_mu = 1.0 - 2.0 * omega * dru.l_c * op.i_d / u;
  if (cos_mu <= 0.5) {
    throw Error(ErrorKind::Infeasible, "DRU commutation overlap reaches 60 degrees; no valid operating point");
  }
  op.mu = std::acos(std::min(1.0, cos_mu));
  op.phi = dru_power_factor(op.mu);
  op.p = op.v_d * op.i_d;
  op.q_dr = dru_reactive(op.p, op.phi);
}

}  // namespace

void TurbineUnit::validate() const {
  if (!(c_f >= 0.0) || !(l_tf >= 0.0) || !(n_tf > 0.0)) {
    throw Error(ErrorKind::Schema, "turbine at '" + bus_id + "' needs c_f >= 0, l_tf >= 0, n_tf > 0");
  }
  if (!(p_max > 0.0) || !(p_max <= s_rating)) {
    throw Error(ErrorKind::Schema, "turbine at '" + bus_id + "' needs 0 < p_max <= s_rating");
  }
}

void DruStation::validate() const {
  if (n_bridge < 1 || !(l_c > 0.0) || !(r_dc >= 0.0) || !(v_dc_onshore > 0.0)) {
    throw Error(ErrorKind::Schema, "dru needs n_bridge >= 1, l_c > 0, r_dc >= 0, v_dc_onshore > 0");
  }
}

DruOperatingPoint dru_dc_link(double u_pcc, const DruStation& dru, double omega) {
  if (!(u_pcc > 0.0)) throw Error(ErrorKind::Domain, "dru_dc_link needs u_pcc > 0");
  if (!(omega > 0.0)) throw Error(ErrorKind::Domain, "dru_dc_link needs omega > 0");
  DruOperatingPoint op;
  if (u_pcc <= dru.v_dc_onshore) {
    op.blocked = true;
    op.v_d = u_pcc;
    return op;
  }
  // v_d = u - omega l_c i_d (commutation drop) and v_d = v_on + r_dc i_d.
  op.i_d = (u_pcc - dru.v_dc_onshore) / (omega * dru.l_c + dru.r_dc);
  op.v_d = dru.v_dc_onshore + dru.r_dc * op.i_d;
  finish_commutation(op, u_pcc, dru, omega);
  return op;
}

DruOperatingPoint dru_point_for_power(double p, double u, const DruStation& dru, double omega) {
  if (!(u > 0.0)) throw Error(ErrorKind::Domain, "dru_point_for_power needs u > 0");
  if (p < 0.0) throw Error(ErrorKind::Domain, "dru_point_for_power needs p >= 0");
  DruOperatingPoint op;
  if (p == 0.0) {
    op.v_d = u;
    return op;
  }
  // omega l_c i^2 - u i + p = 0, smaller root.
  const double a = omega * dru.l_c;
  const double disc = u * u - 4.0 * a * p;
  if (disc < 0.0) throw Error(ErrorKind::Infeasible, "DRU cannot draw the requested power at this voltage");
  op.i_d = 2.0 * p / (u + std::sqrt(disc));
  op.v_d = u - a * op.i_d;
  finish_commutation(op, u, dru, omega);
  return op;
}

double dru_voltage_for_power(double p, const DruStation& dru, double omega) {
  if (p <= 0.0) return dru.v_dc_onshore;
  const double v_on = dru.v_dc_onshore;
  const double i_d = 2.0 * p / (v_on + std::sqrt(v_on * v_on + 4.0 * dru.r_dc * p));
  return v_on + i_d * (omega * dru.l_c + dru.r_dc);
}

double dru_power_slope(double u, const DruStation& dru, double omega) {
  if (u <= dru.v_dc_onshore) return 0.0;
  const double z = omega * dru.l_c + dru.r_dc;
  const double i_d = (u - dru.v_dc_onshore) / z;
  return (dru.v_dc_onshore + 2.0 * dru.r_dc * i_d) / z;
}

double dru_power_factor(double mu) {
  if (!(mu >= 0.0) || mu > kMaxOverlap) throw Error(ErrorKind::Domain, "mu out of range [0, pi/3]");
  if (mu == 0.0) return 0.0;
  const double x = 2.0 * mu;
  double num;
  if (x < 0.1) {
    // x - sin x without cancellation
    const double x2 = x * x;
    num = x * x2 / 6.0 * (1.0 - x2 / 20.0 * (1.0 - x2 / 42.0 * (1.0 - x2 / 72.0 * (1.0 - x2 / 110.0))));
  } else {
    num = x - std::sin(x);
  }
  const double s = std::sin(mu);
  const double den = 2.0 * s * s;  // 1 - cos 2mu
  return std::atan(num / den);
}

double dru_reactive(double p_farm, double phi) { return p_farm * std::tan(phi); }

double pcc_current(double p_farm, double u_pcc, double phi) {
  if (!(u_pcc > 0.0)) throw Error(ErrorKind::Domain, "u_pcc must be positive");
  if (!(phi < kPi / 2.0)) throw Error(ErrorKind::Domain, "phi must be below pi/2");
  return p_farm / (kPowerScale * u_pcc * std::cos(phi));
}

double network_reactive(double p_farm, double u_pcc, double phi, double omega, double l_net, double c_net) {
  const double i_pcc = pcc_current(p_farm, u_pcc, phi);
  return kPowerScale * i_pcc * i_pcc * omega * l_net - kPowerScale * u_pcc * u_pcc * omega * c_net;
}

double transformer_reactive(double i_pcc, double n_tf, std::size_t n_wt, double omega, double l_tf) {
  if (n_wt < 1) throw Error(ErrorKind::Domain, "transformer_reactive needs n_wt >= 1");
  const double n = static_cast<double>(n_wt);
  const double i_wt = i_pcc * n_tf / n;
  return kPowerScale * n * i_wt * i_wt * omega * l_tf;
}

double filter_reactive(double u_pcc, double n_tf, std::size_t n_wt, double omega, double c_f) {
  if (!(u_pcc > 0.0)) throw Error(ErrorKind::Domain, "filter_reactive needs u_pcc > 0");
  const double u_lv = u_pcc / n_tf;
  return -kPowerScale * u_lv * u_lv * static_cast<double>(n_wt) * omega * c_f;
}

DemandTerms farm_demand_terms(double omega, double p_farm, const FarmModels& m) {
  if (!(omega >= kOmegaLowerLimit && omega <= kOmegaUpperLimit)) {
    throw Error(ErrorKind::Domain, "farm_demand needs omega in [0.9, 1.1]");
  }
  if (p_farm < 0.0) throw Error(ErrorKind::Domain, "farm_demand needs p_farm >= 0");
  const DruOperatingPoint op = dru_point_for_power(p_farm, m.u_pcc, m.dru, omega);
  const double i_pcc = pcc_current(p_farm, m.u_pcc, op.phi);
  DemandTerms t;
  t.q_cf = filter_reactive(m.u_pcc, m.n_tf, m.n_wt, omega, m.c_f);
  t.q_tf = transformer_reactive(i_pcc, m.n_tf, m.n_wt, omega, m.l_tf);
  t.q_net = network_reactive(p_farm, m.u_pcc, op.phi, omega, m.l_net, m.c_net);
  t.q_dr = op.q_dr;
  return t;
}

double farm_demand(double omega, double p_farm, const FarmModels& models) {
  return farm_demand_terms(omega, p_farm, models).total();
}

void FrequencyBand::validate() const {
  if (!(omega_min_h <= omega_0 && omega_0 <= omega_max_h)) {
    throw Error(ErrorKind::Domain, "frequency band needs omega_min_h <= omega_0 <= omega_max_h");
  }
  if (!(omega_min_h >= kOmegaLowerLimit && omega_max_h <= kOmegaUpperLimit)) {
    throw Error(ErrorKind::Domain, "frequency band must lie within [0.9, 1.1]");
  }
}

DroopParams compute_droop_params(const FrequencyBand& band, std::size_t n_wt, double p_farm_max,
                                 const DemandSurface& demand) {
  band.validate();
  if (!(p_farm_max > 0.0)) throw Error(ErrorKind::Domain, "p_farm_max must be positive");
  if (n_wt < 1) throw Error(ErrorKind::Domain, "droop needs at least one turbine");
  const double d_omega = band.width();
  if (d_omega == 0.0) throw Error(ErrorKind::Degenerate, "frequency band has zero width");
  const double q_max_h = demand(band.omega_max_h, p_farm_max);
  const double q_min_h = demand(band.omega_min_h, 0.0);
  const double n = static_cast<double>(n_wt);
  DroopParams d;
  d.omega_0 = band.omega_0;
  d.k_h = (q_max_h - q_min_h) / (n * d_omega);
  if (d.k_h == 0.0 || !std::isfinite(d.k_h)) {
    throw Error(ErrorKind::Degenerate, "flat demand between band anchors gives zero droop slope");
  }
  d.q_0 = q_max_h / n - d.k_h * (band.omega_max_h - band.omega_0);
  return d;
}

DroopParams compute_droop_params(const FrequencyBand& band, const FarmModels& models) {
  return compute_droop_params(band, models.n_wt, models.p_farm_max,
                              [&](double w, double p) { return farm_demand(w, p, models); });
}

double static_operating_point(const DroopParams& droop, std::size_t n_wt, const DemandCurve& demand,
                              double omega_lo, double omega_hi) {
  const double n = static_cast<double>(n_wt);
  auto residual = [&](double w) { return n * droop.output(w) - demand(w); };
  double lo = omega_lo;
  double hi = omega_hi;
  double r_lo = residual(lo);
  double r_hi = residual(hi);
  if (r_lo == 0.0) return lo;
  if (r_hi == 0.0) return hi;
  if ((r_lo > 0.0) == (r_hi > 0.0)) {
    throw Error(ErrorKind::Infeasible, "droop supply and demand do not cross on the band; no equilibrium");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double r = residual(mid);
    if (r == 0.0) return mid;
    if ((r > 0.0) == (r_lo > 0.0)) {
      lo = mid;
      r_lo = r;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double static_operating_point(const DroopParams& droop, double p_farm, const FarmModels& models,
                              double omega_lo, double omega_hi) {
  return static_operating_point(
      droop, models.n_wt, [&](double w) { return farm_demand(w, p_farm, models); }, omega_lo, omega_hi);
}

DemandLine fit_demand_line(const DemandCurve& demand, double p_anchor, double omega_lo, double omega_hi,
                           std::size_t n_samples) {
  if (n_samples < 2) throw Error(ErrorKind::Domain, "fit_demand_line needs at least two samples");
  if (!(omega_lo < omega_hi)) throw Error(ErrorKind::Domain, "fit_demand_line needs omega_lo < omega_hi");
  std::vector<double> w(n_samples);
  std::vector<double> q(n_samples);
  double w_mean = 0.0;
  double q_mean = 0.0;
  for (std::size_t i = 0; i < n_samples; ++i) {
    w[i] = omega_lo + (omega_hi - omega_lo) * static_cast<double>(i) / static_cast<double>(n_samples - 1);
    q[i] = demand(w[i]);
    w_mean += w[i];
    q_mean += q[i];
  }
  w_mean /= static_cast<double>(n_samples);
  q_mean /= static_cast<double>(n_samples);
  double sww = 0.0;
  double swq = 0.0;
  for (std::size_t i = 0; i < n_samples; ++i) {
    sww += (w[i] - w_mean) * (w[i] - w_mean);
    swq += (w[i] - w_mean) * (q[i] - q_mean);
  }
  DemandLine line;
  line.p_anchor = p_anchor;
  line.omega_lo = omega_lo;
  line.omega_hi = omega_hi;
  line.d1 = swq / sww;
  line.d2 = q_mean - line.d1 * w_mean;
  double err = 0.0;
  for (std::size_t i = 0; i < n_samples; ++i) err = std::max(err, std::abs(q[i] - line.eval(w[i])));
  line.q_min = q[0];
  line.q_max = q[0];
  for (std::size_t i = 0; i < kDemandScanSamples; ++i) {
    const double wi =
        omega_lo + (omega_hi - omega_lo) * static_cast<double>(i) / static_cast<double>(kDemandScanSamples - 1);
    const double qi = demand(wi);
    line.q_min = std::min(line.q_min, qi);
    line.q_max = std::max(line.q_max, qi);
    err = std::max(err, std::abs(qi - line.eval(wi)));
  }
  line.max_abs_err = err;
  return line;
}

DemandLine fit_demand_line(double p_anchor, double omega_lo, double omega_hi, const FarmModels& models,
                           std::size_t n_samples) {
  return fit_demand_line([&](double w) { return farm_demand(w, p_anchor, models); }, p_anchor, omega_lo,
                         omega_hi, n_samples);
}

QuadraticDemandFit fit_quadratic_surface(std::span<const double> p_grid, double omega_lo, double omega_hi,
                                         const DemandSurface& demand, std::size_t n_omega) {
  const std::set<double> levels(p_grid.begin(), p_grid.end());
  if (levels.size() < 3) throw Error(ErrorKind::Degenerate, "rank-deficient sample set: need 3 distinct P levels");
  if (n_omega < 2 || !(omega_lo < omega_hi)) throw Error(ErrorKind::Domain, "quadratic fit needs an omega range");
  const Eigen::Index rows = static_cast<Eigen::Index>(levels.size() * n_omega);
  Eigen::MatrixXd a(rows, 3);
  Eigen::VectorXd q(rows);
  Eigen::Index r = 0;
  for (double p : levels) {
    for (std::size_t i = 0; i < n_omega; ++i) {
      const double w = omega_lo + (omega_hi - omega_lo) * static_cast<double>(i) / static_cast<double>(n_omega - 1);
      a(r, 0) = p * p * w;
      a(r, 1) = w;
      a(r, 2) = p;
      q(r) = demand(w, p);
      ++r;
    }
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  qr.setThreshold(1e-12);
  if (qr.rank() < 3) throw Error(ErrorKind::Degenerate, "rank-deficient sample set");
  const Eigen::Vector3d k = qr.solve(q);
  QuadraticDemandFit fit{k(0), k(1), k(2), 0.0};
  fit.max_abs_err = (a * k - q).cwiseAbs().maxCoeff();
  return fit;
}

QuadraticDemandFit fit_quadratic_surface(std::span<const double> p_grid, double omega_lo, double omega_hi,
                                         const FarmModels& models, std::size_t n_omega) {
  return fit_quadratic_surface(
      p_grid, omega_lo, omega_hi, [&](double w, double p) { return farm_demand(w, p, models); }, n_omega);
}

void write_demand_curves_csv(std::ostream& out, std::span<const double> p_levels, std::span<const double> omegas,
                             const FarmModels& models) {
  out << "omega,p_farm,q_farm\n";
  char buf[96];
  for (double p : p_levels) {
    for (double w : omegas) {
      std::snprintf(buf, sizeof buf, "%.6f,%.6f,%.9f\n", w, p, farm_demand(w, p, models));
      out << buf;
    }
  }
}

}  // namespace druopf
