#include "druopf/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "druopf/error.hpp"
#include "druopf/power_flow.hpp"
#include "parallel.hpp"

namespace druopf {

namespace {

constexpr std::size_t kRefinePoints = 21;

struct Axis {
  double lo = 0.0;
  double hi = 0.0;
};

struct Eval {
  bool feasible = false;
  double losses = std::numeric_limits<double>::infinity();
  std::vector<double> q;
};

Eval evaluate(const FarmCase& farm, const DemandLine& line, std::span<const double> p, const std::vector<double>& pt) {
  Eval ev;
  const std::size_t nt = farm.turbines.size();
  const double omega = pt[0];
  ev.q.assign(pt.begin() + 1, pt.end());
  const double rest = std::accumulate(ev.q.begin(), ev.q.end(), 0.0);
  ev.q.push_back(line.eval(omega) - rest);
  for (std::size_t t = 0; t < nt; ++t) {
    const double s = farm.turbines[t].s_rating;
    if (p[t] * p[t] + ev.q[t] * ev.q[t] > s * s) return ev;
  }
  PowerFlowResult pf;
  try {
    pf = ac_power_flow(farm, p, ev.q, omega);
  } catch (const Error&) {
    return ev;
  }
  if (!pf.converged) return ev;
  constexpr double tol = 1e-9;
  const NetworkModel& net = farm.net;
  for (std::size_t i = 0; i < net.n_buses(); ++i) {
    const double v = std::abs(pf.bus_v[i]);
    if (v < net.buses()[i].v_min - tol || v > net.buses()[i].v_max + tol) return ev;
  }
  for (std::size_t k = 0; k < net.n_branches(); ++k) {
    const double s_max = net.branches()[k].s_max;
    if (std::abs(pf.s_from[k]) > s_max + tol || std::abs(pf.s_to[k]) > s_max + tol) return ev;
  }
  ev.feasible = true;
  ev.losses = pf.losses_ac;
  return ev;
}

// Lexicographic grid over the axes with `points` per axis (1 on a collapsed axis).
std::vector<std::vector<double>> grid(const std::vector<Axis>& axes, std::size_t points) {
  std::vector<std::vector<double>> ticks;
  for (const Axis& a : axes) {
    std::vector<double> t;
    if (a.hi - a.lo <= 0.0 || points < 2) {
      t.push_back(0.5 * (a.lo + a.hi));
    } else {
      for (std::size_t k = 0; k < points; ++k) {
        t.push_back(a.lo + (a.hi - a.lo) * static_cast<double>(k) / static_cast<double>(points - 1));
      }
    }
    ticks.push_back(std::move(t));
  }
  std::vector<std::vector<double>> out{{}};
  for (const auto& t : ticks) {
    std::vector<std::vector<double>> next;
    for (const auto& prefix : out) {
      for (double v : t) {
        auto c = prefix;
        c.push_back(v);
        next.push_back(std::move(c));
      }
    }
    out = std::move(next);
  }
  return out;
}

}  // namespace

OracleResult grid_search_oracle(const FarmCase& farm, const DemandLine& line, std::span<const double> p,
                                const FrequencyBand& band, const OracleOptions& options) {
  band.validate();
  const std::size_t nt = farm.turbines.size();
  if (nt == 0 || nt > 3) throw Error(ErrorKind::Usage, "dimensionality too high for the grid-search oracle");
  if (options.resolution < 11) throw Error(ErrorKind::Usage, "oracle resolution must be at least 11");
  if (options.refine_rounds < 0) throw Error(ErrorKind::Usage, "refine_rounds must be >= 0");
  if (p.size() != nt) throw Error(ErrorKind::Domain, "p does not match the turbine count");

  std::vector<Axis> full{{band.omega_min_h, band.omega_max_h}};
  for (std::size_t t = 0; t + 1 < nt; ++t) {
    const double s = farm.turbines[t].s_rating;
    const double cap = std::sqrt(std::max(0.0, s * s - p[t] * p[t]));
    full.push_back({-cap, cap});
  }

  OracleResult best;
  best.seed = options.seed;
  best.losses = std::numeric_limits<double>::infinity();
  bool found = false;

  auto scan = [&](const std::vector<std::vector<double>>& cands) {
    std::vector<Eval> evals(cands.size());
    detail::parallel_for(cands.size(), options.jobs,
                         [&](std::size_t i) { evals[i] = evaluate(farm, line, p, cands[i]); });
    best.evaluations += cands.size();
    for (std::size_t i = 0; i < cands.size(); ++i) {
      if (!evals[i].feasible) continue;
      ++best.feasible;
      if (evals[i].losses < best.losses) {
        best.losses = evals[i].losses;
        best.omega = cands[i][0];
        best.q = evals[i].q;
        found = true;
      }
    }
  };

  std::vector<double> cell;
  for (const Axis& a : full) {
    cell.push_back((a.hi - a.lo) / static_cast<double>(options.resolution - 1));
  }
  scan(grid(full, options.resolution));
  if (!found) throw Error(ErrorKind::Infeasible, "no feasible candidate at this resolution");
  best.round_losses.push_back(best.losses);

  for (int round = 0; round < options.refine_rounds; ++round) {
    std::vector<double> centre{best.omega};
    centre.insert(centre.end(), best.q.begin(), best.q.end() - 1);
    std::vector<std::vector<double>> cands;
    std::vector<std::vector<double>> ticks;
    for (std::size_t d = 0; d < full.size(); ++d) {
      std::vector<double> t;
      if (cell[d] <= 0.0) {
        t.push_back(centre[d]);
      } else {
        const double step = cell[d] / 10.0;
        for (std::size_t k = 0; k < kRefinePoints; ++k) {
          const double v = centre[d] + (static_cast<double>(k) - 10.0) * step;
          if (v >= full[d].lo - 1e-15 && v <= full[d].hi + 1e-15) t.push_back(std::clamp(v, full[d].lo, full[d].hi));
        }
      }
      ticks.push_back(std::move(t));
      cell[d] /= 10.0;
    }
    cands.push_back({});
    for (const auto& t : ticks) {
      std::vector<std::vector<double>> next;
      for (const auto& prefix : cands) {
        for (double v : t) {
          auto c = prefix;
          c.push_back(v);
          next.push_back(std::move(c));
        }
      }
      cands = std::move(next);
    }
    scan(cands);
    best.round_losses.push_back(best.losses);
  }
  best.final_cell = *std::max_element(cell.begin(), cell.end());
  return best;
}

}  // namespace druopf
