#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "druopf/devices.hpp"
#include "druopf/farm_case.hpp"

namespace druopf {

struct OracleOptions {
  std::size_t resolution = 11;  // points per axis on the coarse grid
  int refine_rounds = 3;        // each round: 21 points per axis over +-1 cell
  std::size_t jobs = 0;         // worker threads, 0 = hardware concurrency
  std::uint64_t seed = 0;       // recorded only; the scan has no randomness
};

struct OracleResult {
  double omega = 0.0;
  std::vector<double> q;   // per turbine; the last one closes the reactive line
  double losses = 0.0;     // AC network losses at the best point
  std::size_t evaluations = 0;
  std::size_t feasible = 0;
  std::vector<double> round_losses;  // best after the coarse scan and each round
  double final_cell = 0.0;           // largest axis spacing of the last grid
  std::uint64_t seed = 0;
};

/// Exhaustive scan over omega and all but one turbine Q; the remaining Q
/// follows from the linear reactive line so it holds exactly. Candidates are
/// kept if the AC power flow converges inside voltage, branch and turbine
/// limits. Ties go to the lexicographically first candidate. Throws
/// Error{Usage} for more than three turbines or resolution < 11 and
/// Error{Infeasible} when nothing on the grid is feasible.
OracleResult grid_search_oracle(const FarmCase& farm, const DemandLine& line, std::span<const double> p,
                                const FrequencyBand& band, const OracleOptions& options = {});

}  // namespace druopf
