#pragma once

#include <stdexcept>
#include <string>

namespace druopf {

enum class ErrorKind {
  Schema,       // malformed input document
  Topology,     // disconnected graph, meshed where radial is required
  Domain,       // argument outside the model's valid range
  Degenerate,   // rank deficiency, zero coupling, flat demand
  Infeasible,   // no equilibrium, no feasible candidate
  Convergence,  // iterative method failed to converge
  Capability,   // device rating exceeded
  Usage         // bad command-line or call arguments
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace druopf
