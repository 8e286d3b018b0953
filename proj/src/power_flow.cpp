#include "druopf/power_flow.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <queue>

#include <Eigen/Dense>

#include "druopf/error.hpp"
#include "druopf/units.hpp"

namespace druopf {

namespace {

using cd = std::complex<double>;
constexpr double kMismatchTol = 1e-10;
constexpr int kMaxOuter = 50;

struct Grid {
  const NetworkModel& net;
  AdmittanceTable adm;
  std::size_t root;
  std::vector<cd> s_spec;  // injections at non-root buses
  Eigen::MatrixXcd ybus;
  // spanning tree from the root, BFS order
  std::vector<std::size_t> order, parent, parent_branch;

  Grid(const FarmCase& farm, std::span<const double> p, std::span<const double> q, double omega)
      : net(farm.net), adm(build_admittance(farm.net, omega, farm.filter_shunts())), root(farm.net.dru_bus()) {
    const std::size_t nb = net.n_buses();
    s_spec.assign(nb, 0.0);
    for (std::size_t t = 0; t < farm.turbines.size(); ++t) s_spec[farm.turbines[t].bus] += cd(p[t], q[t]);
    ybus = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(nb), static_cast<Eigen::Index>(nb));
    for (std::size_t k = 0; k < net.n_branches(); ++k) {
      const auto i = static_cast<Eigen::Index>(net.branches()[k].from);
      const auto j = static_cast<Eigen::Index>(net.branches()[k].to);
      const cd y = adm.branches[k].series;
      ybus(i, i) += y;
      ybus(j, j) += y;
      ybus(i, j) -= y;
      ybus(j, i) -= y;
    }
    for (std::size_t i = 0; i < nb; ++i) {
      ybus(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) += cd(0.0, adm.bus_shunt[i]);
    }
    parent.assign(nb, nb);
    parent_branch.assign(nb, 0);
    std::vector<bool> seen(nb, false);
    std::queue<std::size_t> bfs;
    bfs.push(root);
    seen[root] = true;
    while (!bfs.empty()) {
      const std::size_t i = bfs.front();
      bfs.pop();
      order.push_back(i);
      for (std::size_t k : net.incidence()[i]) {
        const Branch& br = net.branches()[k];
        const std::size_t j = br.from == i ? br.to : br.from;
        if (seen[j]) continue;
        seen[j] = true;
        parent[j] = i;
        parent_branch[j] = k;
        bfs.push(j);
      }
    }
  }

  std::vector<cd> s_calc(const std::vector<cd>& v) const {
    Eigen::VectorXcd vv(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) vv(static_cast<Eigen::Index>(i)) = v[i];
    const Eigen::VectorXcd ib = ybus * vv;
    std::vector<cd> s(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) s[i] = kPowerScale * v[i] * std::conj(ib(static_cast<Eigen::Index>(i)));
    return s;
  }

  double mismatch(const std::vector<cd>& v) const {
    const auto s = s_calc(v);
    double worst = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (i == root) continue;
      worst = std::max({worst, std::abs(s[i].real() - s_spec[i].real()), std::abs(s[i].imag() - s_spec[i].imag())});
    }
    return worst;
  }

  // Backward-forward sweep with the root held at v[root].
  bool sweep(std::vector<cd>& v, int& iters) const {
    const std::size_t nb = v.size();
    std::vector<cd> j(nb);
    for (int it = 0; it < 1000; ++it) {
      ++iters;
      for (std::size_t i = 0; i < nb; ++i) {
        j[i] = std::conj(s_spec[i] / (kPowerScale * v[i])) - cd(0.0, adm.bus_shunt[i]) * v[i];
      }
      for (auto it_b = order.rbegin(); it_b != order.rend(); ++it_b) {
        if (*it_b != root) j[parent[*it_b]] += j[*it_b];
      }
      double dv = 0.0;
      for (std::size_t i : order) {
        if (i == root) continue;
        const Branch& br = net.branches()[parent_branch[i]];
        const cd z(br.r, adm.omega * br.l);
        const cd vn = v[parent[i]] + z * j[i];
        dv = std::max(dv, std::abs(vn - v[i]));
        v[i] = vn;
      }
      if (!std::isfinite(dv)) return false;
      if (dv < 1e-14) break;
    }
    return mismatch(v) <= kMismatchTol;
  }

  // Polar Newton with every non-root bus a PQ bus.
  bool newton(std::vector<cd>& v, int& iters) const {
    const auto nb = static_cast<Eigen::Index>(v.size());
    std::vector<Eigen::Index> pq;
    for (Eigen::Index i = 0; i < nb; ++i) {
      if (static_cast<std::size_t>(i) != root) pq.push_back(i);
    }
    const auto m = static_cast<Eigen::Index>(pq.size());
    for (int it = 0; it < 50; ++it) {
      const auto s = s_calc(v);
      Eigen::VectorXd f(2 * m);
      for (Eigen::Index a = 0; a < m; ++a) {
        const auto i = static_cast<std::size_t>(pq[a]);
        f(a) = s[i].real() - s_spec[i].real();
        f(m + a) = s[i].imag() - s_spec[i].imag();
      }
      if (f.size() == 0 || f.lpNorm<Eigen::Infinity>() <= 1e-12) return true;
      ++iters;
      Eigen::VectorXcd vv(nb), vn(nb);
      for (Eigen::Index i = 0; i < nb; ++i) {
        vv(i) = v[static_cast<std::size_t>(i)];
        vn(i) = vv(i) / std::abs(vv(i));
      }
      const Eigen::VectorXcd ib = ybus * vv;
      const Eigen::MatrixXcd dvm =
          kPowerScale * (vv.asDiagonal() * (ybus * vn.asDiagonal()).conjugate() +
                         Eigen::MatrixXcd(ib.conjugate().asDiagonal()) * vn.asDiagonal());
      const Eigen::MatrixXcd dva =
          kPowerScale * cd(0.0, 1.0) * vv.asDiagonal() *
          (Eigen::MatrixXcd(ib.asDiagonal()) - ybus * vv.asDiagonal()).conjugate();
      Eigen::MatrixXd jac(2 * m, 2 * m);
      for (Eigen::Index a = 0; a < m; ++a) {
        for (Eigen::Index b = 0; b < m; ++b) {
          jac(a, b) = dva(pq[a], pq[b]).real();
          jac(a, m + b) = dvm(pq[a], pq[b]).real();
          jac(m + a, b) = dva(pq[a], pq[b]).imag();
          jac(m + a, m + b) = dvm(pq[a], pq[b]).imag();
        }
      }
      const Eigen::VectorXd dx = jac.partialPivLu().solve(-f);
      if (!dx.allFinite()) return false;
      for (Eigen::Index a = 0; a < m; ++a) {
        auto& vi = v[static_cast<std::size_t>(pq[a])];
        vi = std::polar(std::abs(vi) + dx(m + a), std::arg(vi) + dx(a));
      }
    }
    return mismatch(v) <= kMismatchTol;
  }
};

void finish_flows(const Grid& g, const FarmCase& farm, PowerFlowResult& r) {
  const NetworkModel& net = farm.net;
  r.s_from.clear();
  r.s_to.clear();
  r.losses_ac = 0.0;
  for (std::size_t k = 0; k < net.n_branches(); ++k) {
    const Branch& br = net.branches()[k];
    const cd y = g.adm.branches[k].series;
    const cd vi = r.bus_v[br.from], vj = r.bus_v[br.to];
    r.s_from.push_back(kPowerScale * vi * std::conj(y * (vi - vj)));
    r.s_to.push_back(kPowerScale * vj * std::conj(y * (vj - vi)));
    r.losses_ac += (r.s_from.back() + r.s_to.back()).real();
  }
  const cd s_root = g.s_calc(r.bus_v)[g.root];
  r.p_dru = -s_root.real();
  r.q_dru = -s_root.imag();
  r.breakdown = loss_breakdown(r, farm);
  r.losses_total = r.breakdown.total();
}

}  // namespace

PowerFlowResult ac_power_flow(const FarmCase& farm, std::span<const double> p, std::span<const double> q,
                              double omega, PfMethod method) {
  if (p.size() != farm.turbines.size() || q.size() != farm.turbines.size()) {
    throw Error(ErrorKind::Domain, "setpoints do not match the turbine count");
  }
  if (!(omega > 0.0)) throw Error(ErrorKind::Domain, "omega must be positive");
  for (std::size_t t = 0; t < p.size(); ++t) {
    const double s = farm.turbines[t].s_rating;
    if (!std::isfinite(p[t]) || !std::isfinite(q[t])) throw Error(ErrorKind::Domain, "non-finite setpoint");
    if (p[t] * p[t] + q[t] * q[t] > s * s * (1.0 + 1e-9)) {
      throw Error(ErrorKind::Capability, "setpoint of turbine '" + farm.turbines[t].bus_id + "' exceeds its rating");
    }
  }
  const Grid g(farm, p, q, omega);
  const DruStation& dru = farm.dru;
  PowerFlowResult r;
  const bool use_newton = method == PfMethod::Newton || farm.net.topology() == Topology::Meshed;
  if (method == PfMethod::Sweep && farm.net.topology() == Topology::Meshed) {
    throw Error(ErrorKind::Topology, "the sweep needs a radial network");
  }
  r.method = use_newton ? "newton" : "sweep";
  r.p_injected = std::accumulate(p.begin(), p.end(), 0.0);

  auto inner = [&](double u) {
    r.bus_v.assign(farm.net.n_buses(), cd(u, 0.0));
    return use_newton ? g.newton(r.bus_v, r.inner_iterations) : g.sweep(r.bus_v, r.inner_iterations);
  };
  auto arriving = [&]() { return -g.s_calc(r.bus_v)[g.root].real(); };

  auto blocked = [&]() {
    r.dru_blocked = true;
    r.dru = dru_dc_link(dru.v_dc_onshore, dru, omega);
    const bool ok = inner(dru.v_dc_onshore);
    finish_flows(g, farm, r);
    r.p_slack = -r.p_dru;
    r.p_delivered = 0.0;
    r.q_dru_model = 0.0;
    r.max_mismatch = g.mismatch(r.bus_v);
    r.converged = ok;
    if (!ok) r.message = "inner iteration did not converge";
    return r;
  };

  try {
    if (r.p_injected <= 0.0) return blocked();
    double u = dru_voltage_for_power(r.p_injected, dru, omega);
    for (int it = 0; it < kMaxOuter; ++it) {
      r.iterations = it + 1;
      if (!inner(u)) {
        r.message = "inner iteration did not converge";
        finish_flows(g, farm, r);
        return r;
      }
      const double p_arr = arriving();
      if (p_arr <= 0.0) return blocked();
      const double p_model = dru_dc_link(u, dru, omega).p;
      const double root_mismatch = std::abs(p_model - p_arr);
      if (root_mismatch <= kMismatchTol) {
        r.dru = dru_dc_link(u, dru, omega);
        finish_flows(g, farm, r);
        r.q_dru_model = r.dru.q_dr;
        r.p_delivered = dru.v_dc_onshore * r.dru.i_d;
        r.max_mismatch = std::max(g.mismatch(r.bus_v), root_mismatch);
        r.converged = true;
        return r;
      }
      u = dru_voltage_for_power(p_arr, dru, omega);
    }
    r.message = "DRU voltage iteration did not converge";
  } catch (const Error& e) {
    r.message = e.what();
  }
  if (!r.bus_v.empty()) finish_flows(g, farm, r);
  r.converged = false;
  return r;
}

LossBreakdown loss_breakdown(const PowerFlowResult& pf, const FarmCase& farm) {
  LossBreakdown b;
  const NetworkModel& net = farm.net;
  for (std::size_t k = 0; k < pf.s_from.size(); ++k) {
    const double loss = (pf.s_from[k] + pf.s_to[k]).real();
    const Branch& br = net.branches()[k];
    if (net.is_turbine_transformer(k)) {
      b.transformers += loss;
    } else if (br.from == net.dru_bus() || br.to == net.dru_bus()) {
      b.dru_ac += loss;
    } else {
      b.cables += loss;
    }
  }
  b.dc_cable = farm.dru.r_dc * pf.dru.i_d * pf.dru.i_d;
  return b;
}

void write_power_flow_csv(std::ostream& out, const PowerFlowResult& pf, const FarmCase& farm) {
  char buf[256];
  out << "section,name,a,b,c,d\n";
  const NetworkModel& net = farm.net;
  for (std::size_t i = 0; i < pf.bus_v.size(); ++i) {
    std::snprintf(buf, sizeof buf, "bus,%s,%.12g,%.12g,,\n", net.buses()[i].id.c_str(), std::abs(pf.bus_v[i]),
                  std::arg(pf.bus_v[i]));
    out << buf;
  }
  for (std::size_t k = 0; k < pf.s_from.size(); ++k) {
    const Branch& br = net.branches()[k];
    std::snprintf(buf, sizeof buf, "branch,%s-%s,%.12g,%.12g,%.12g,%.12g\n", net.buses()[br.from].id.c_str(),
                  net.buses()[br.to].id.c_str(), pf.s_from[k].real(), pf.s_from[k].imag(), pf.s_to[k].real(),
                  pf.s_to[k].imag());
    out << buf;
  }
  const LossBreakdown& b = pf.breakdown;
  const std::pair<const char*, double> rows[] = {{"cables", b.cables},       {"transformers", b.transformers},
                                                 {"filters", b.filters},     {"dru_ac", b.dru_ac},
                                                 {"dc_cable", b.dc_cable},   {"total", pf.losses_total}};
  for (const auto& [name, v] : rows) {
    std::snprintf(buf, sizeof buf, "loss,%s,%.12g,,,\n", name, v);
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "dru,%s,%.12g,%.12g,%.12g,%.12g\n", pf.dru_blocked ? "blocked" : "conducting",
                pf.dru.i_d, pf.dru.v_d, pf.dru.mu, pf.dru.phi);
  out << buf;
}

BaselineResult baseline_uniform(const FarmCase& farm, std::span<const double> p, const FrequencyBand& band,
                                const FarmModels& models) {
  band.validate();
  if (p.size() != farm.turbines.size()) throw Error(ErrorKind::Domain, "setpoints do not match the turbine count");
  BaselineResult out;
  out.omega = band.omega_0;
  const double p_total = std::accumulate(p.begin(), p.end(), 0.0);
  const double q_each = farm_demand(band.omega_0, p_total, models) / static_cast<double>(farm.turbines.size());
  for (std::size_t t = 0; t < p.size(); ++t) {
    const double s = farm.turbines[t].s_rating;
    if (p[t] * p[t] + q_each * q_each > s * s) {
      throw Error(ErrorKind::Capability,
                  "uniform reactive share exceeds the rating of turbine '" + farm.turbines[t].bus_id + "'");
    }
  }
  out.q_uniform.assign(p.size(), q_each);
  out.power_flow = ac_power_flow(farm, p, out.q_uniform, band.omega_0);
  return out;
}

}  // namespace druopf
