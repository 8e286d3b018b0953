#pragma once

#include <numbers>

namespace druopf {

// Per-unit convention: voltages and currents are peak phase phasors, so
// three-phase complex power is S = 3/2 * V * conj(I) in every p.u. formula.
// Impedance base follows as Z_b = V_b^2 / S_b with V_b the peak phase voltage.
inline constexpr double kPowerScale = 1.5;

inline constexpr double kPi = std::numbers::pi;

// Normalized frequency window the lumped farm models are valid in.
inline constexpr double kOmegaLowerLimit = 0.9;
inline constexpr double kOmegaUpperLimit = 1.1;

}  // namespace druopf
