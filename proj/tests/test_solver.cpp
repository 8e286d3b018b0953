#include <doctest.h>

#include <cmath>
#include <cstdlib>

#include "druopf/error.hpp"
#include "druopf/solver.hpp"

using namespace druopf;

TEST_SUITE("solver") {

TEST_CASE("one-variable LP at its bound") {
  ConicProgram p;
  const auto x = p.add_variable("x");
  p.objective = AffineExpr::var(x);
  p.add_row(AffineExpr::var(x, -1.0), Relation::LessEqual, -3.0, "lb");
  const auto r = solve(p);
  REQUIRE(r.status == SolverStatus::Optimal);
  CHECK(r.primal[0] == doctest::Approx(3.0).epsilon(1e-7));
  CHECK(r.objective == doctest::Approx(3.0).epsilon(1e-7));
  CHECK(r.primal_residual <= 1e-8);
}

TEST_CASE("LP with an equality row") {
  ConicProgram p;
  const auto x = p.add_variable("x");
  const auto y = p.add_variable("y");
  p.objective = AffineExpr::var(x, 1.0).add(y, 2.0);
  p.add_row(AffineExpr::var(x).add(y, 1.0), Relation::Equal, 2.0, "sum");
  p.add_row(AffineExpr::var(x, -1.0), Relation::LessEqual, 0.0, "nonneg");
  p.add_row(AffineExpr::var(y, -1.0), Relation::LessEqual, 0.0, "nonneg");
  p.add_row(AffineExpr::var(x), Relation::LessEqual, 1.5, "ub");
  const auto r = solve(p);
  REQUIRE(r.status == SolverStatus::Optimal);
  CHECK(r.primal[0] == doctest::Approx(1.5).epsilon(1e-7));
  CHECK(r.primal[1] == doctest::Approx(0.5).epsilon(1e-7));
  CHECK(r.objective == doctest::Approx(2.5).epsilon(1e-7));
}

TEST_CASE("euclidean projection onto a half-plane") {
  // min ||z - (3, 4)|| s.t. z1 + z2 <= 1 -> z = (0, 1), distance 6/sqrt(2)
  ConicProgram p;
  const auto z1 = p.add_variable("z1");
  const auto z2 = p.add_variable("z2");
  const auto t = p.add_variable("t");
  p.objective = AffineExpr::var(t);
  p.add_row(AffineExpr::var(z1).add(z2, 1.0), Relation::LessEqual, 1.0, "half");
  AffineExpr d1 = AffineExpr::var(z1), d2 = AffineExpr::var(z2);
  d1.constant = -3.0;
  d2.constant = -4.0;
  p.add_cone({d1, d2}, AffineExpr::var(t), "dist");
  const auto r = solve(p);
  REQUIRE(r.status == SolverStatus::Optimal);
  CHECK(r.primal[0] == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(std::abs(r.primal[0]) <= 1e-6);
  CHECK(r.primal[1] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(r.objective == doctest::Approx(6.0 / std::sqrt(2.0)).epsilon(1e-7));
  CHECK(max_violation(p, r.primal) <= 1e-7);
}

TEST_CASE("linear objective over the unit ball") {
  ConicProgram p;
  const auto a = p.add_variable("a");
  const auto b = p.add_variable("b");
  const auto c = p.add_variable("c");
  p.objective = AffineExpr::var(a, 1.0).add(b, -2.0).add(c, 2.0);
  p.add_cone({AffineExpr::var(a), AffineExpr::var(b), AffineExpr::var(c)}, AffineExpr(1.0), "ball");
  for (Scaling s : {Scaling::None, Scaling::Ruiz}) {
    SolverSettings st;
    st.scaling = s;
    const auto r = solve(p, st);
    REQUIRE(r.status == SolverStatus::Optimal);
    CHECK(r.objective == doctest::Approx(-3.0).epsilon(1e-7));
    CHECK(r.primal[0] == doctest::Approx(-1.0 / 3.0).epsilon(1e-5));
    CHECK(r.primal[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-5));
    CHECK(r.primal[2] == doctest::Approx(-2.0 / 3.0).epsilon(1e-5));
  }
}

TEST_CASE("infeasible and unbounded programs") {
  ConicProgram inf;
  const auto x = inf.add_variable("x");
  inf.objective = AffineExpr::var(x);
  inf.add_row(AffineExpr::var(x), Relation::LessEqual, -1.0, "ub");
  inf.add_row(AffineExpr::var(x, -1.0), Relation::LessEqual, -1.0, "lb");
  CHECK(solve(inf).status == SolverStatus::Infeasible);

  ConicProgram unb;
  const auto y = unb.add_variable("y");
  unb.objective = AffineExpr::var(y);
  unb.add_row(AffineExpr::var(y), Relation::LessEqual, 0.0, "ub");
  CHECK(solve(unb).status == SolverStatus::Unbounded);
}

TEST_CASE("repeated solves are bitwise identical") {
  ConicProgram p;
  const auto u = p.add_variable("u");
  const auto v = p.add_variable("v");
  const auto t = p.add_variable("t");
  p.objective = AffineExpr::var(t).add(u, 0.3);
  p.add_row(AffineExpr::var(u).add(v, 1.0), Relation::Equal, 1.0, "sum");
  p.add_cone({AffineExpr::var(u), AffineExpr::var(v, 2.0)}, AffineExpr::var(t), "norm");
  const auto a = solve(p);
  const auto b = solve(p);
  REQUIRE(a.status == SolverStatus::Optimal);
  CHECK(a.primal == b.primal);
  CHECK(a.iterations == b.iterations);
  CHECK(a.objective == b.objective);
}

TEST_CASE("malformed program is rejected") {
  ConicProgram p;
  p.add_variable("x");
  p.objective = AffineExpr::var(3);
  CHECK_THROWS_AS(solve(p), Error);
}

TEST_CASE("settings from the environment") {
  ::setenv("DRUOPF_SOLVER_FEAS_TOL", "1e-6", 1);
  ::setenv("DRUOPF_SOLVER_SCALING", "none", 1);
  const auto s = SolverSettings::from_env();
  CHECK(s.feas_tol == 1e-6);
  CHECK(s.gap_tol == 1e-8);
  CHECK(s.scaling == Scaling::None);
  ::setenv("DRUOPF_SOLVER_FEAS_TOL", "tiny", 1);
  CHECK_THROWS_AS(SolverSettings::from_env(), Error);
  ::unsetenv("DRUOPF_SOLVER_FEAS_TOL");
  ::unsetenv("DRUOPF_SOLVER_SCALING");
  SolverSettings bad;
  bad.max_iter = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

}  // TEST_SUITE
