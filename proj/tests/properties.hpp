#pragma once

// Conservation and round-trip checks on one random farm, shared by the
// property suite and the acceptance binary.

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "druopf/opf.hpp"
#include "druopf/power_flow.hpp"
#include "support.hpp"

namespace testing {

struct CaseMetrics {
  bool pf_converged = false;
  double pf_mismatch = 0.0;    // worst nodal mismatch
  double loss_identity = 0.0;  // |sum P_inj - losses - P_dru|
  double dc_identity = 0.0;    // |P_dru - P_delivered - r_dc i_d^2|
  double sweep_newton = 0.0;   // max |V_sweep - V_newton|
  double rank1_roundtrip = 0.0;
  bool opf_optimal = false;
  double opf_violation = std::numeric_limits<double>::quiet_NaN();
};

inline CaseMetrics check_random_case(std::uint64_t seed) {
  using namespace druopf;
  std::mt19937_64 rng(seed);
  const FarmCase farm = random_farm(rng, 4, seed % 2 == 0);
  CaseMetrics m;

  std::vector<double> p, q;
  for (const auto& t : farm.turbines) {
    p.push_back(uniform(rng, 0.05, 1.0) * t.p_max);
    const double room = std::sqrt(t.s_rating * t.s_rating - p.back() * p.back());
    q.push_back(uniform(rng, -0.5, 0.5) * room);
  }
  const double omega = uniform(rng, 0.97, 1.03);
  const auto pf = ac_power_flow(farm, p, q, omega, PfMethod::Sweep);
  const auto nr = ac_power_flow(farm, p, q, omega, PfMethod::Newton);
  m.pf_converged = pf.converged && nr.converged;
  if (!m.pf_converged) return m;
  m.pf_mismatch = std::max(pf.max_mismatch, nr.max_mismatch);
  m.loss_identity = std::abs(pf.p_injected - pf.losses_ac - pf.p_dru);
  m.dc_identity = std::abs(pf.p_dru - pf.p_delivered - pf.breakdown.dc_cable);
  for (std::size_t i = 0; i < pf.bus_v.size(); ++i) {
    m.sweep_newton = std::max(m.sweep_newton, std::abs(pf.bus_v[i] - nr.bus_v[i]));
  }

  // W built from the power-flow voltages must recover them exactly
  std::vector<double> wd, wr, wi;
  for (const auto& v : pf.bus_v) wd.push_back(std::norm(v));
  for (const auto& br : farm.net.branches()) {
    const auto w = pf.bus_v[br.from] * std::conj(pf.bus_v[br.to]);
    wr.push_back(w.real());
    wi.push_back(w.imag());
  }
  const auto rec = recover_voltages(wd, wr, wi, farm.net);
  m.rank1_roundtrip = rec.rank1_residual;
  const auto ref = std::conj(pf.bus_v[farm.net.dru_bus()]) / std::abs(pf.bus_v[farm.net.dru_bus()]);
  for (std::size_t i = 0; i < pf.bus_v.size(); ++i) {
    m.rank1_roundtrip = std::max(m.rank1_roundtrip, std::abs(rec.v[i] - pf.bus_v[i] * ref));
  }

  double total = 0.0;
  for (double x : p) total += x;
  const auto line = fit_demand_line(total, 0.9, 1.1, farm.models());
  const auto [prog, form] = build_opf(farm, line, p, FrequencyBand{});
  const auto res = solve(prog);
  m.opf_optimal = res.status == SolverStatus::Optimal;
  if (m.opf_optimal) m.opf_violation = max_violation(prog, res.primal);
  return m;
}

}  // namespace testing
