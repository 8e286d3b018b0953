#include <doctest.h>

#include <cmath>

#include "druopf/error.hpp"
#include "druopf/opf.hpp"
#include "druopf/oracle.hpp"
#include "support.hpp"

using namespace druopf;

namespace {

DemandLine line_for(const FarmCase& farm, const std::vector<double>& p) {
  double total = 0.0;
  for (double x : p) total += x;
  return fit_demand_line(total, 0.9, 1.1, farm.models());
}

ErrorKind kind_of(const FarmCase& farm, const std::vector<double>& p, const OracleOptions& o) {
  try {
    grid_search_oracle(farm, line_for(farm, p), p, FrequencyBand{}, o);
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error thrown");
  return ErrorKind::Usage;
}

}  // namespace

TEST_SUITE("oracle") {

TEST_CASE("finer grids never do worse") {
  const auto& farm = testing::farm2();
  const auto p = testing::uniform_p(farm, 0.6);
  const auto line = line_for(farm, p);
  OracleOptions coarse;
  coarse.resolution = 11;
  coarse.refine_rounds = 0;
  OracleOptions fine = coarse;
  fine.resolution = 21;  // contains every coarse node
  const auto a = grid_search_oracle(farm, line, p, FrequencyBand{}, coarse);
  const auto b = grid_search_oracle(farm, line, p, FrequencyBand{}, fine);
  CHECK(b.losses <= a.losses);
  CHECK(a.evaluations == 11 * 11);
  CHECK(b.evaluations == 21 * 21);
  OracleOptions refined = coarse;
  refined.refine_rounds = 2;
  const auto c = grid_search_oracle(farm, line, p, FrequencyBand{}, refined);
  REQUIRE(c.round_losses.size() == 3);
  for (std::size_t k = 1; k < c.round_losses.size(); ++k) CHECK(c.round_losses[k] <= c.round_losses[k - 1]);
  CHECK(c.final_cell < a.final_cell);
}

TEST_CASE("reactive line holds exactly at the best point") {
  const auto& farm = testing::farm2();
  const auto p = testing::uniform_p(farm, 0.4);
  const auto line = line_for(farm, p);
  const auto r = grid_search_oracle(farm, line, p, FrequencyBand{});
  double q = 0.0;
  for (double x : r.q) q += x;
  CHECK(std::abs(q - line.eval(r.omega)) <= 1e-12);
  CHECK(r.omega >= FrequencyBand{}.omega_min_h);
  CHECK(r.omega <= FrequencyBand{}.omega_max_h);
  CHECK(r.feasible > 0);
  CHECK(r.feasible <= r.evaluations);
}

TEST_CASE("oracle brackets the conic optimum") {
  for (const FarmCase* farm : {&testing::farm1(), &testing::farm2()}) {
    const auto p = testing::uniform_p(*farm, 0.6);
    const auto line = line_for(*farm, p);
    const auto sol = frequency_iteration(*farm, line, p, FrequencyBand{});
    REQUIRE(sol.status == SolverStatus::Optimal);
    const auto r = grid_search_oracle(*farm, line, p, FrequencyBand{});
    // the relaxation can only undercut the grid, and not by much
    CHECK(sol.objective <= r.losses + 1e-7);
    CHECK((r.losses - sol.objective) / r.losses <= 0.005);
  }
}

TEST_CASE("argument errors") {
  const auto& farm1 = testing::farm1();
  const auto p1 = testing::uniform_p(farm1, 0.5);
  OracleOptions low;
  low.resolution = 5;
  CHECK(kind_of(farm1, p1, low) == ErrorKind::Usage);
  OracleOptions neg;
  neg.refine_rounds = -1;
  CHECK(kind_of(farm1, p1, neg) == ErrorKind::Usage);
  const auto& farm12 = testing::farm12();
  CHECK(kind_of(farm12, testing::uniform_p(farm12, 0.5), {}) == ErrorKind::Usage);
}

TEST_CASE("nothing feasible") {
  const FarmCase& src = testing::farm2();
  std::vector<Bus> buses = src.net.buses();
  for (auto& b : buses) {
    b.v_min = 1.19;
    b.v_max = 1.2;
  }
  const FarmCase farm{NetworkModel(src.net.base(), buses, src.net.branches()), src.turbines, src.dru, "tight"};
  const auto p = testing::uniform_p(farm, 0.5);
  OracleOptions o;
  o.refine_rounds = 0;
  CHECK(kind_of(farm, p, o) == ErrorKind::Infeasible);
}

}  // TEST_SUITE
