#pragma once

#include <numbers>

namespace ccoh {

// CODATA 2018 values, SI units.
inline constexpr double kHbar = 1.054571817e-34;    // J s
inline constexpr double kBoltzmann = 1.380649e-23;  // J / K
inline constexpr double kBohrGHzPerTesla = 13.996244936;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Ordinary frequency in GHz to angular frequency in rad/s.
constexpr double ghz_to_angular(double ghz) { return kTwoPi * ghz * 1e9; }
constexpr double angular_to_ghz(double omega) { return omega / (kTwoPi * 1e9); }

/// Ordinary frequency per unit strain in PHz to rad/s per unit strain.
constexpr double phz_to_angular(double phz) { return kTwoPi * phz * 1e15; }

}  // namespace ccoh
