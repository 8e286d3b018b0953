#include "druopf/opf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>

#include "druopf/error.hpp"
#include "druopf/units.hpp"

namespace druopf {

std::pair<ConicProgram, OpfFormulation> build_opf(const FarmCase& farm, const DemandLine& demand_line,
                                                  std::span<const double> p_per_turbine,
                                                  const FrequencyBand& band, const OpfOptions& options) {
  band.validate();
  const NetworkModel& net = farm.net;
  if (p_per_turbine.size() != farm.turbines.size()) {
    throw Error(ErrorKind::Domain, "p_per_turbine does not match the turbine count");
  }
  double p_total = 0.0;
  for (double p : p_per_turbine) {
    if (!std::isfinite(p) || p < 0.0) throw Error(ErrorKind::Domain, "turbine active power must be finite and >= 0");
    p_total += p;
  }
  if (std::abs(demand_line.p_anchor - p_total) > 1e-6 * std::max(1.0, p_total)) {
    throw Error(ErrorKind::Domain, "demand line anchored at a different farm power");
  }
  for (const Bus& b : net.buses()) {
    if (b.v_min > b.v_max) throw Error(ErrorKind::Infeasible, "bus '" + b.id + "' has v_min > v_max");
  }
  for (std::size_t t = 0; t < farm.turbines.size(); ++t) {
    if (p_per_turbine[t] > farm.turbines[t].s_rating) {
      throw Error(ErrorKind::Infeasible, "turbine '" + farm.turbines[t].bus_id + "' active power exceeds its rating");
    }
  }
  if (options.regularize && !(options.reg_weight > 0.0)) throw Error(ErrorKind::Domain, "reg_weight must be positive");
  if (options.omega_fixed &&
      !(*options.omega_fixed >= band.omega_min_h - 1e-12 && *options.omega_fixed <= band.omega_max_h + 1e-12)) {
    throw Error(ErrorKind::Domain, "fixed frequency lies outside the band");
  }

  OpfFormulation f;
  f.omega_eval = options.omega_eval.value_or(band.omega_0);
  if (!(f.omega_eval > 0.0)) throw Error(ErrorKind::Domain, "evaluation frequency must be positive");
  const DruStation& dru = farm.dru;
  f.dru_blocked = p_total <= 0.0;
  if (!f.dru_blocked) {
    f.u_eval = options.u_eval ? *options.u_eval : dru_voltage_for_power(p_total, dru, f.omega_eval);
    if (!(f.u_eval > dru.v_dc_onshore)) f.dru_blocked = true;
  }
  if (f.dru_blocked) {
    f.u_eval = dru.v_dc_onshore;
  } else {
    f.dru_p_eval = dru_dc_link(f.u_eval, dru, f.omega_eval).p;
    f.dru_slope = dru_power_slope(f.u_eval, dru, f.omega_eval) / (2.0 * f.u_eval);
  }

  const AdmittanceTable adm = build_admittance(net, f.omega_eval, farm.filter_shunts());
  const std::size_t nb = net.n_buses(), nl = net.n_branches(), nt = farm.turbines.size();

  ConicProgram prog;
  for (std::size_t i = 0; i < nb; ++i) f.w_diag.push_back(prog.add_variable("W_" + net.buses()[i].id));
  for (std::size_t k = 0; k < nl; ++k) {
    const std::string s = std::to_string(k);
    f.w_re.push_back(prog.add_variable("ReW_" + s));
    f.w_im.push_back(prog.add_variable("ImW_" + s));
    f.p_from.push_back(prog.add_variable("Pf_" + s));
    f.q_from.push_back(prog.add_variable("Qf_" + s));
    f.p_to.push_back(prog.add_variable("Pt_" + s));
    f.q_to.push_back(prog.add_variable("Qt_" + s));
  }
  for (const auto& t : farm.turbines) f.q_turbine.push_back(prog.add_variable("Q_" + t.bus_id));
  f.omega = prog.add_variable("omega");

  using E = AffineExpr;
  namespace tag = opf_tag;

  for (std::size_t i = 0; i < nb; ++i) {
    const Bus& b = net.buses()[i];
    prog.add_row(E::var(f.w_diag[i]), Relation::LessEqual, b.v_max * b.v_max, tag::kVoltageBounds, "vmax_" + b.id);
    prog.add_row(E::var(f.w_diag[i], -1.0), Relation::LessEqual, -b.v_min * b.v_min, tag::kVoltageBounds,
                 "vmin_" + b.id);
  }

  for (std::size_t k = 0; k < nl; ++k) {
    const Branch& br = net.branches()[k];
    const double g = adm.branches[k].series.real(), bb = adm.branches[k].series.imag();
    const double s = kPowerScale;
    const std::size_t wi = f.w_diag[br.from], wj = f.w_diag[br.to], a = f.w_re[k], c = f.w_im[k];
    const std::string id = std::to_string(k);
    // P_ij = 1.5 (g (W_ii - a) - b c), Q_ij = 1.5 (-b (W_ii - a) - g c)
    prog.add_row(E::var(f.p_from[k]).add(wi, -s * g).add(a, s * g).add(c, s * bb), Relation::Equal, 0.0,
                 tag::kBranchFlow, "pf_" + id);
    prog.add_row(E::var(f.q_from[k]).add(wi, s * bb).add(a, -s * bb).add(c, s * g), Relation::Equal, 0.0,
                 tag::kBranchFlow, "qf_" + id);
    // P_ji = 1.5 (g (W_jj - a) + b c), Q_ji = 1.5 (-b (W_jj - a) + g c)
    prog.add_row(E::var(f.p_to[k]).add(wj, -s * g).add(a, s * g).add(c, -s * bb), Relation::Equal, 0.0,
                 tag::kBranchFlow, "pt_" + id);
    prog.add_row(E::var(f.q_to[k]).add(wj, s * bb).add(a, -s * bb).add(c, -s * g), Relation::Equal, 0.0,
                 tag::kBranchFlow, "qt_" + id);

    prog.add_cone({E::var(f.p_from[k]), E::var(f.q_from[k])}, E(br.s_max), tag::kFlowLimits, "sf_" + id);
    prog.add_cone({E::var(f.p_to[k]), E::var(f.q_to[k])}, E(br.s_max), tag::kFlowLimits, "st_" + id);
    prog.add_cone({E::var(a, 2.0), E::var(c, 2.0), E::var(wi).add(wj, -1.0)}, E::var(wi).add(wj, 1.0),
                  tag::kSocRelaxation, "soc_" + id);
  }

  std::vector<double> p_inj(nb, 0.0);
  std::vector<std::vector<std::size_t>> q_at(nb);
  for (std::size_t t = 0; t < nt; ++t) {
    p_inj[farm.turbines[t].bus] += p_per_turbine[t];
    q_at[farm.turbines[t].bus].push_back(f.q_turbine[t]);
  }
  const std::size_t root = net.dru_bus();
  for (std::size_t i = 0; i < nb; ++i) {
    E p_out, q_out;
    for (std::size_t k : net.incidence()[i]) {
      const bool from = net.branches()[k].from == i;
      p_out.add(from ? f.p_from[k] : f.p_to[k], 1.0);
      q_out.add(from ? f.q_from[k] : f.q_to[k], 1.0);
    }
    const std::string& id = net.buses()[i].id;
    if (i == root) {
      if (f.dru_blocked) {
        prog.add_row(E::var(f.w_diag[i]), Relation::Equal, dru.v_dc_onshore * dru.v_dc_onshore, tag::kNodalBalance,
                     "dru_blocked");
      } else {
        // sum P_out = -P_dru, P_dru ~ P_k + slope (W_dd - W_k)
        prog.add_row(p_out.add(f.w_diag[i], f.dru_slope), Relation::Equal,
                     f.dru_slope * f.u_eval * f.u_eval - f.dru_p_eval, tag::kNodalBalance, "p_" + id);
      }
      continue;
    }
    prog.add_row(p_out, Relation::Equal, p_inj[i], tag::kNodalBalance, "p_" + id);
    q_out.add(f.w_diag[i], -kPowerScale * adm.bus_shunt[i]);
    for (std::size_t q : q_at[i]) q_out.add(q, -1.0);
    prog.add_row(q_out, Relation::Equal, 0.0, tag::kNodalBalance, "q_" + id);
  }

  for (std::size_t t = 0; t < nt; ++t) {
    const double s = farm.turbines[t].s_rating, p = p_per_turbine[t];
    prog.add_cone({E::var(f.q_turbine[t])}, E(std::sqrt(std::max(0.0, s * s - p * p))), tag::kGenerationLimits,
                  "cap_" + farm.turbines[t].bus_id);
  }

  if (options.omega_fixed || band.width() <= 0.0) {
    prog.add_row(E::var(f.omega), Relation::Equal, options.omega_fixed.value_or(band.omega_0), tag::kFrequencyBand,
                 "omega_fixed");
  } else {
    prog.add_row(E::var(f.omega), Relation::LessEqual, band.omega_max_h, tag::kFrequencyBand, "omega_max");
    prog.add_row(E::var(f.omega, -1.0), Relation::LessEqual, -band.omega_min_h, tag::kFrequencyBand, "omega_min");
  }

  E demand = E::var(f.omega, -demand_line.d1);
  for (std::size_t q : f.q_turbine) demand.add(q, 1.0);
  prog.add_row(demand, Relation::Equal, demand_line.d2, tag::kReactiveDemand, "sum_q");

  E obj;
  for (std::size_t k = 0; k < nl; ++k) obj.add(f.p_from[k], 1.0).add(f.p_to[k], 1.0);
  if (options.regularize) {
    // sum Q^2 <= t  as  ||(2Q, t - 1)|| <= t + 1
    f.reg = prog.add_variable("reg_t");
    std::vector<E> vec;
    for (std::size_t q : f.q_turbine) vec.push_back(E::var(q, 2.0));
    vec.push_back(E::var(*f.reg).add(E(-1.0)));
    prog.add_cone(std::move(vec), E::var(*f.reg).add(E(1.0)), tag::kRegularization, "reg");
    obj.add(*f.reg, options.reg_weight);
  }
  prog.objective = std::move(obj);
  prog.objective_tag = tag::kObjective;
  return {std::move(prog), std::move(f)};
}

VoltageRecovery recover_voltages(const std::vector<double>& w_diag, const std::vector<double>& w_re,
                                 const std::vector<double>& w_im, const NetworkModel& net) {
  const std::size_t nb = net.n_buses(), nl = net.n_branches();
  if (w_diag.size() != nb || w_re.size() != nl || w_im.size() != nl) {
    throw Error(ErrorKind::Domain, "W entries do not match the network");
  }
  for (double w : w_diag) {
    if (!(w > 0.0)) throw Error(ErrorKind::Domain, "nonpositive W_ii");
  }
  VoltageRecovery out;
  out.v.assign(nb, {0.0, 0.0});
  std::vector<double> theta(nb, 0.0);
  std::vector<bool> seen(nb, false);
  std::queue<std::size_t> bfs;
  bfs.push(net.dru_bus());
  seen[net.dru_bus()] = true;
  while (!bfs.empty()) {
    const std::size_t i = bfs.front();
    bfs.pop();
    for (std::size_t k : net.incidence()[i]) {
      const Branch& br = net.branches()[k];
      const bool from = br.from == i;
      const std::size_t j = from ? br.to : br.from;
      if (seen[j]) continue;
      // W_ij = V_i conj(V_j) for the branch orientation
      const std::complex<double> wij(w_re[k], from ? w_im[k] : -w_im[k]);
      if (std::abs(wij) == 0.0) throw Error(ErrorKind::Degenerate, "degenerate coupling on branch " + std::to_string(k));
      theta[j] = theta[i] - std::arg(wij);
      seen[j] = true;
      bfs.push(j);
    }
  }
  for (std::size_t i = 0; i < nb; ++i) out.v[i] = std::polar(std::sqrt(w_diag[i]), theta[i]);
  for (std::size_t k = 0; k < nl; ++k) {
    const Branch& br = net.branches()[k];
    const double prod = w_diag[br.from] * w_diag[br.to];
    const double mag2 = w_re[k] * w_re[k] + w_im[k] * w_im[k];
    out.rank1_residual = std::max(out.rank1_residual, std::abs(mag2 - prod) / prod);
  }
  return out;
}

GapReport relaxation_gap(const std::vector<double>& w_diag, const std::vector<double>& w_re,
                         const std::vector<double>& w_im, const NetworkModel& net) {
  GapReport rep;
  for (std::size_t k = 0; k < net.n_branches(); ++k) {
    const Branch& br = net.branches()[k];
    const double wi = w_diag[br.from], wj = w_diag[br.to];
    const double norm = std::sqrt(4.0 * w_re[k] * w_re[k] + 4.0 * w_im[k] * w_im[k] + (wi - wj) * (wi - wj));
    rep.slack.push_back(wi + wj - norm);
  }
  if (!rep.slack.empty()) {
    rep.max = *std::max_element(rep.slack.begin(), rep.slack.end());
    rep.mean = std::accumulate(rep.slack.begin(), rep.slack.end(), 0.0) / static_cast<double>(rep.slack.size());
  }
  return rep;
}

namespace {

void extract(const OpfFormulation& f, const SolverResult& res, const NetworkModel& net, OpfSolution& sol) {
  const auto& x = res.primal;
  auto pick = [&x](const std::vector<std::size_t>& idx) {
    std::vector<double> v;
    v.reserve(idx.size());
    for (std::size_t i : idx) v.push_back(x[i]);
    return v;
  };
  sol.omega_star = x[f.omega];
  sol.q_turbine = pick(f.q_turbine);
  sol.w_diag = pick(f.w_diag);
  sol.w_re = pick(f.w_re);
  sol.w_im = pick(f.w_im);
  sol.s_from.clear();
  sol.s_to.clear();
  sol.losses_total = 0.0;
  for (std::size_t k = 0; k < f.p_from.size(); ++k) {
    sol.s_from.emplace_back(x[f.p_from[k]], x[f.q_from[k]]);
    sol.s_to.emplace_back(x[f.p_to[k]], x[f.q_to[k]]);
    sol.losses_total += x[f.p_from[k]] + x[f.p_to[k]];
  }
  sol.objective = res.objective;
  sol.cone_residuals = relaxation_gap(sol.w_diag, sol.w_re, sol.w_im, net).slack;
  sol.dru_blocked = f.dru_blocked;
  try {
    VoltageRecovery rec = recover_voltages(sol.w_diag, sol.w_re, sol.w_im, net);
    sol.recovered_v = std::move(rec.v);
    sol.rank1_residual = rec.rank1_residual;
  } catch (const Error& e) {
    sol.recovered_v.clear();
    sol.rank1_residual = std::numeric_limits<double>::infinity();
    sol.message = e.what();
  }
}

}  // namespace

namespace {

OpfSolution fixed_point(const FarmCase& farm, const DemandLine& demand_line, std::span<const double> p_per_turbine,
                        const FrequencyBand& band, const OpfOptions& options, const OuterSettings& outer,
                        double omega_k, double u_k) {
  OpfSolution sol;
  for (int it = 0; it < outer.max_iter; ++it) {
    OpfOptions opts = options;
    opts.omega_eval = omega_k;
    opts.u_eval = u_k;
    auto [prog, form] = build_opf(farm, demand_line, p_per_turbine, band, opts);
    const SolverResult res = solve(prog, options.solver);
    OuterStep step;
    step.omega_eval = omega_k;
    step.u_eval = form.u_eval;
    step.status = res.status;
    step.solver_iterations = res.iterations;
    step.objective = res.objective;
    sol.status = res.status;
    sol.solver_iterations += res.iterations;
    sol.solve_time += res.solve_time;
    sol.primal_residual = res.primal_residual;
    sol.dual_residual = res.dual_residual;
    sol.program = std::make_shared<const ConicProgram>(std::move(prog));
    sol.primal = res.primal;
    if (res.status != SolverStatus::Optimal) {
      sol.message = res.message;
      sol.dru_blocked = form.dru_blocked;
      sol.trace.push_back(step);
      return sol;
    }
    extract(form, res, farm.net, sol);
    step.omega_star = sol.omega_star;
    step.u_star = std::sqrt(sol.w_diag[farm.net.dru_bus()]);
    sol.trace.push_back(step);
    const bool settled = std::abs(step.omega_star - omega_k) <= outer.tol &&
                         (form.dru_blocked || std::abs(step.u_star - form.u_eval) <= outer.tol);
    if (settled) {
      sol.outer_converged = true;
      return sol;
    }
    omega_k = step.omega_star;
    u_k = step.u_star;
  }
  sol.message = "outer iteration did not settle";
  return sol;
}

bool usable(const OpfSolution& s) { return s.status == SolverStatus::Optimal && s.outer_converged; }

}  // namespace

OpfSolution frequency_iteration(const FarmCase& farm, const DemandLine& demand_line,
                                std::span<const double> p_per_turbine, const FrequencyBand& band,
                                const OpfOptions& options, const OuterSettings& outer) {
  if (!(outer.tol > 0.0)) throw Error(ErrorKind::Domain, "outer tolerance must be positive");
  if (outer.max_iter < 1) throw Error(ErrorKind::Domain, "outer max_iter must be >= 1");
  band.validate();
  const double p_total = std::accumulate(p_per_turbine.begin(), p_per_turbine.end(), 0.0);
  double omega_k = options.omega_fixed.value_or(band.omega_0);
  double u_k = farm.dru.v_dc_onshore;
  if (outer.initial) {
    omega_k = outer.initial->first;
    u_k = outer.initial->second;
  } else if (p_total > 0.0) {
    u_k = dru_voltage_for_power(p_total, farm.dru, omega_k);
  }

  OpfSolution first = fixed_point(farm, demand_line, p_per_turbine, band, options, outer, omega_k, u_k);
  if (!outer.frequency_search || options.omega_fixed || !usable(first) || band.width() <= outer.tol) return first;

  // One-dimensional search on omega over pinned programs.
  struct Sample {
    double omega;
    OpfSolution sol;
  };
  std::vector<Sample> samples;
  std::vector<OuterStep> trace = first.trace;
  int solver_iterations = first.solver_iterations;
  double solve_time = first.solve_time;
  const double u_first = std::sqrt(first.w_diag[farm.net.dru_bus()]);
  samples.push_back({first.omega_star, std::move(first)});

  auto known = [&](double w) {
    for (const auto& s : samples) {
      if (std::abs(s.omega - w) <= outer.tol) return true;
    }
    return false;
  };
  auto evaluate = [&](double w) {
    OpfOptions pinned = options;
    pinned.omega_fixed = w;
    OpfSolution s = fixed_point(farm, demand_line, p_per_turbine, band, pinned, outer, w, u_first);
    trace.insert(trace.end(), s.trace.begin(), s.trace.end());
    solver_iterations += s.solver_iterations;
    solve_time += s.solve_time;
    if (usable(s)) samples.push_back({w, std::move(s)});
  };
  for (double w : {band.omega_min_h, band.omega_max_h}) {
    if (!known(w)) evaluate(w);
  }
  const double mid = 0.5 * (band.omega_min_h + band.omega_max_h);
  if (samples.size() < 3 && !known(mid)) evaluate(mid);

  // Successive parabolic interpolation through the best sample and its
  // neighbours in omega.
  for (int k = 0; k < outer.search_max_evals && samples.size() >= 3; ++k) {
    std::sort(samples.begin(), samples.end(), [](const Sample& a, const Sample& b) { return a.omega < b.omega; });
    std::size_t ib = 0;
    for (std::size_t i = 1; i < samples.size(); ++i) {
      if (samples[i].sol.objective < samples[ib].sol.objective) ib = i;
    }
    const std::size_t i0 = std::min(ib == 0 ? 0 : ib - 1, samples.size() - 3);
    const double x0 = samples[i0].omega, x1 = samples[i0 + 1].omega, x2 = samples[i0 + 2].omega;
    const double f0 = samples[i0].sol.objective, f1 = samples[i0 + 1].sol.objective, f2 = samples[i0 + 2].sol.objective;
    const double d01 = (f1 - f0) / (x1 - x0), d12 = (f2 - f1) / (x2 - x1);
    const double curv = (d12 - d01) / (x2 - x0);
    if (!(curv > 0.0)) break;
    const double vertex = 0.5 * (x0 + x1) - d01 / (2.0 * curv);
    if (!(vertex > band.omega_min_h && vertex < band.omega_max_h) || known(vertex)) break;
    evaluate(vertex);
  }

  std::size_t ib = 0;
  for (std::size_t i = 1; i < samples.size(); ++i) {
    if (samples[i].sol.objective < samples[ib].sol.objective) ib = i;
  }
  OpfSolution best = std::move(samples[ib].sol);
  best.trace = std::move(trace);
  best.solver_iterations = solver_iterations;
  best.solve_time = solve_time;
  return best;
}

}  // namespace druopf
