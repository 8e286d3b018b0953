#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "druopf/conic.hpp"

namespace druopf {

enum class SolverStatus { Optimal, Infeasible, Unbounded, MaxIter, NumericalError };

std::string_view to_string(SolverStatus status);

enum class Scaling { None, Ruiz };

struct SolverSettings {
  double feas_tol = 1e-8;
  double gap_tol = 1e-8;
  int max_iter = 200;
  Scaling scaling = Scaling::Ruiz;

  void validate() const;
  /// Defaults overridden by DRUOPF_SOLVER_FEAS_TOL, _GAP_TOL, _MAX_ITER and
  /// _SCALING (none|ruiz) when set.
  static SolverSettings from_env();
};

struct SolverResult {
  SolverStatus status = SolverStatus::NumericalError;
  std::vector<double> primal;
  std::vector<double> row_duals;                 // one per affine row
  std::vector<std::vector<double>> cone_duals;   // (scalar, vec...) per cone
  double objective = 0.0;
  int iterations = 0;
  double solve_time = 0.0;  // seconds
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;
  std::string message;
};

/// Homogeneous self-dual interior-point method with Nesterov-Todd scaling and
/// Mehrotra correction. Never throws for numerical trouble; reports it in the
/// status instead. Throws Error{Schema} for a malformed program.
SolverResult solve(const ConicProgram& program, const SolverSettings& settings = {});

}  // namespace druopf
