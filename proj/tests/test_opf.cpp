#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "druopf/error.hpp"
#include "druopf/opf.hpp"
#include "support.hpp"

using namespace druopf;

namespace {

// One turbine bus tied directly to the dru-ac bus.
FarmCase two_bus_farm() {
  PerUnitBase base;
  base.s_mva = 10.0;
  base.v_kv = {{"mv", 33.0}};
  Bus wt{"wt1", BusKind::TurbineLv, "mv"};
  Bus dru{"dru", BusKind::DruAc, "mv"};
  for (Bus* b : {&wt, &dru}) {
    b->v_min = 0.8;
    b->v_max = 1.2;
  }
  Branch br;
  br.from = 0;
  br.to = 1;
  br.r = 0.005;
  br.l = 0.03;
  br.c_half = 0.005;
  br.s_max = 2.0;
  br.level = "mv";
  TurbineUnit t;
  t.bus_id = "wt1";
  t.bus = 0;
  t.c_f = 0.01;
  t.p_max = 0.8;
  t.s_rating = 1.0;
  DruStation st;
  st.bus_id = "dru";
  st.bus = 1;
  st.l_c = 0.05;
  st.r_dc = 0.005;
  st.v_dc_onshore = 0.9;
  return FarmCase{NetworkModel(base, {wt, dru}, {br}), {t}, st, "two-bus"};
}

DemandLine line_for(const FarmCase& farm, std::span<const double> p) {
  double total = 0.0;
  for (double x : p) total += x;
  return fit_demand_line(total, 0.9, 1.1, farm.models());
}

}  // namespace

TEST_SUITE("opf") {

TEST_CASE("two-bus program layout") {
  const FarmCase farm = two_bus_farm();
  const std::vector<double> p{0.5};
  const auto [prog, form] = build_opf(farm, line_for(farm, p), p, FrequencyBand{});
  // 2 W_ii, 6 per branch, 1 Q, omega
  CHECK(prog.n_variables() == 10);
  // two flow limits, one relaxation cone, one capability cone
  CHECK(prog.cones.size() == 4);
  CHECK(prog.rows.size() == 14);
  CHECK(form.w_diag.size() == 2);
  CHECK(form.q_turbine.size() == 1);
  CHECK_FALSE(form.reg.has_value());
  CHECK_NOTHROW(prog.validate());
}

TEST_CASE("every constraint carries a known tag") {
  const auto& farm = testing::farm12();
  const auto p = testing::uniform_p(farm, 0.5);
  OpfOptions opts;
  opts.regularize = true;
  const auto [prog, form] = build_opf(farm, line_for(farm, p), p, FrequencyBand{}, opts);
  const std::set<std::string> known{opf_tag::kVoltageBounds, opf_tag::kGenerationLimits, opf_tag::kFlowLimits,
                                    opf_tag::kNodalBalance,  opf_tag::kBranchFlow,        opf_tag::kFrequencyBand,
                                    opf_tag::kReactiveDemand, opf_tag::kSocRelaxation,    opf_tag::kRegularization};
  std::set<std::string> seen;
  for (const auto& r : prog.rows) seen.insert(r.tag);
  for (const auto& c : prog.cones) seen.insert(c.tag);
  CHECK(seen == known);
  CHECK(prog.objective_tag == opf_tag::kObjective);
  CHECK(form.reg.has_value());
  std::size_t soc = 0;
  for (const auto& c : prog.cones) soc += c.tag == opf_tag::kSocRelaxation;
  CHECK(soc == farm.net.n_branches());
}

TEST_CASE("input checks") {
  const FarmCase farm = two_bus_farm();
  const std::vector<double> p{0.5};
  const auto line = line_for(farm, p);
  CHECK_THROWS_AS(build_opf(farm, line, std::vector<double>{0.5, 0.1}, FrequencyBand{}), Error);
  CHECK_THROWS_AS(build_opf(farm, line, std::vector<double>{0.4}, FrequencyBand{}), Error);
  OpfOptions outside;
  outside.omega_fixed = 1.02;
  CHECK_THROWS_AS(build_opf(farm, line, p, FrequencyBand{}, outside), Error);
  const std::vector<double> over{1.1};
  CHECK_THROWS_AS(build_opf(farm, line_for(farm, over), over, FrequencyBand{}), Error);
}

TEST_CASE("voltage recovery round trip") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const FarmCase farm = testing::random_farm(rng, 3);
    const auto& net = farm.net;
    auto v = testing::random_voltages(rng, net.n_buses());
    const auto ref = std::polar(1.0, -std::arg(v[net.dru_bus()]));
    for (auto& x : v) x *= ref;
    std::vector<double> wd, wr, wi;
    for (const auto& x : v) wd.push_back(std::norm(x));
    for (const auto& br : net.branches()) {
      const auto w = v[br.from] * std::conj(v[br.to]);
      wr.push_back(w.real());
      wi.push_back(w.imag());
    }
    const auto rec = recover_voltages(wd, wr, wi, net);
    CHECK(rec.rank1_residual <= 1e-10);
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(std::abs(rec.v[i] - v[i]) <= 1e-10);
    const auto gap = relaxation_gap(wd, wr, wi, net);
    CHECK(std::abs(gap.max) <= 1e-10);
  }
}

TEST_CASE("voltage recovery failures") {
  const FarmCase farm = two_bus_farm();
  CHECK_THROWS_AS(recover_voltages({1.0, 0.0}, {0.5}, {0.0}, farm.net), Error);
  CHECK_THROWS_AS(recover_voltages({1.0, 1.0}, {0.0}, {0.0}, farm.net), Error);
  CHECK_THROWS_AS(recover_voltages({1.0}, {0.0}, {0.0}, farm.net), Error);
}

TEST_CASE("relaxation gap of decoupled unit voltages") {
  const FarmCase farm = two_bus_farm();
  const auto gap = relaxation_gap({1.0, 1.0}, {0.0}, {0.0}, farm.net);
  CHECK(gap.max == doctest::Approx(2.0));
  CHECK(gap.mean == doctest::Approx(2.0));
}

TEST_CASE("objective is the sum of branch flows") {
  const auto& farm = testing::farm12();
  const auto p = testing::uniform_p(farm, 0.5);
  const auto sol = frequency_iteration(farm, line_for(farm, p), p, FrequencyBand{});
  REQUIRE(sol.status == SolverStatus::Optimal);
  CHECK(sol.outer_converged);
  double flows = 0.0;
  for (std::size_t k = 0; k < sol.s_from.size(); ++k) flows += sol.s_from[k].real() + sol.s_to[k].real();
  CHECK(std::abs(sol.losses_total - flows) <= 1e-12);
  CHECK(std::abs(sol.objective - flows) <= 1e-7 * std::max(1.0, std::abs(flows)));
  CHECK(sol.rank1_residual <= 1e-6);
  CHECK(sol.losses_total >= 0.0);
  for (double r : sol.cone_residuals) CHECK(r >= -1e-8);
  CHECK(sol.omega_star >= FrequencyBand{}.omega_min_h - 1e-7);
  CHECK(sol.omega_star <= FrequencyBand{}.omega_max_h + 1e-7);
  double q_sum = 0.0;
  for (double q : sol.q_turbine) q_sum += q;
  const auto line = line_for(farm, p);
  CHECK(std::abs(q_sum - line.eval(sol.omega_star)) <= 1e-7);
}

TEST_CASE("idle farm has only shunt-driven losses") {
  const auto& farm = testing::farm12();
  const std::vector<double> p(farm.n_wt(), 0.0);
  const auto sol = frequency_iteration(farm, line_for(farm, p), p, FrequencyBand{});
  REQUIRE(sol.status == SolverStatus::Optimal);
  CHECK(sol.dru_blocked);
  CHECK(sol.losses_total >= -1e-9);
  CHECK(sol.losses_total < 1e-3);
}

TEST_CASE("collapsed band pins the frequency") {
  const auto& farm = testing::farm12();
  const auto p = testing::uniform_p(farm, 0.4);
  const FrequencyBand band{1.0, 1.0, 1.0};
  const auto [prog, form] = build_opf(farm, line_for(farm, p), p, band);
  const auto pinned = std::count_if(prog.rows.begin(), prog.rows.end(),
                                    [](const AffineRow& r) { return r.name == "omega_fixed"; });
  CHECK(pinned == 1);
  const auto sol = frequency_iteration(farm, line_for(farm, p), p, band);
  REQUIRE(sol.status == SolverStatus::Optimal);
  CHECK(sol.omega_star == doctest::Approx(1.0).epsilon(1e-9));
  for (const auto& s : sol.trace) CHECK(s.omega_eval == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("outer iteration started at its fixed point stops after one solve") {
  const auto& farm = testing::farm12();
  const auto p = testing::uniform_p(farm, 0.6);
  const auto line = line_for(farm, p);
  OuterSettings plain;
  plain.frequency_search = false;
  const auto a = frequency_iteration(farm, line, p, FrequencyBand{}, {}, plain);
  REQUIRE(a.outer_converged);
  OuterSettings warm = plain;
  warm.initial = std::make_pair(a.trace.back().omega_eval, a.trace.back().u_eval);
  const auto b = frequency_iteration(farm, line, p, FrequencyBand{}, {}, warm);
  CHECK(b.outer_converged);
  CHECK(b.trace.size() == 1);
  CHECK(b.omega_star == doctest::Approx(a.omega_star).epsilon(1e-6));
}

TEST_CASE("outer iteration contracts on the fixture") {
  const auto& farm = testing::farm12();
  for (double loading : {0.2, 0.5, 0.8}) {
    const auto p = testing::uniform_p(farm, loading);
    OuterSettings plain;
    plain.frequency_search = false;
    const auto sol = frequency_iteration(farm, line_for(farm, p), p, FrequencyBand{}, {}, plain);
    REQUIRE(sol.outer_converged);
    CHECK(sol.trace.size() <= 6);
    std::vector<double> step;
    for (const auto& s : sol.trace) step.push_back(std::abs(s.u_star - s.u_eval) + std::abs(s.omega_star - s.omega_eval));
    for (std::size_t k = 1; k < step.size(); ++k) CHECK(step[k] <= step[k - 1] + 1e-9);
  }
}

TEST_CASE("frequency search never does worse than the fixed point") {
  const auto& farm = testing::farm12();
  for (double loading : {0.3, 0.7}) {
    const auto p = testing::uniform_p(farm, loading);
    const auto line = line_for(farm, p);
    OuterSettings plain;
    plain.frequency_search = false;
    const auto a = frequency_iteration(farm, line, p, FrequencyBand{}, {}, plain);
    const auto b = frequency_iteration(farm, line, p, FrequencyBand{});
    REQUIRE(a.outer_converged);
    REQUIRE(b.outer_converged);
    CHECK(b.objective <= a.objective + 1e-12);
    CHECK(b.trace.size() > a.trace.size());
  }
}

TEST_CASE("outer settings are checked") {
  const FarmCase farm = two_bus_farm();
  const std::vector<double> p{0.5};
  OuterSettings bad;
  bad.tol = 0.0;
  CHECK_THROWS_AS(frequency_iteration(farm, line_for(farm, p), p, FrequencyBand{}, {}, bad), Error);
  bad.tol = 1e-6;
  bad.max_iter = 0;
  CHECK_THROWS_AS(frequency_iteration(farm, line_for(farm, p), p, FrequencyBand{}, {}, bad), Error);
}

}  // TEST_SUITE
