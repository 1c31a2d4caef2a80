#pragma once

#include <cmath>
#include <random>

#include "ccoh/ccoh.hpp"

namespace testing_support {

inline ccoh::DefectParameters siv() { return {"SiV", 50.0, 0.1, 2.0023, 1.3, -1.7}; }
inline ccoh::DefectParameters snv() { return {"SnV", 830.0, 0.15, 2.0023, 0.787, -0.562}; }

inline double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

// Random bias: strain up to 300 GHz at any azimuth, field up to 1 T in any direction.
inline ccoh::BiasConditions random_bias(std::mt19937_64& rng, double temperature_k = 4.0) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return ccoh::BiasConditions::from_polar(temperature_k, 0.01 + u(rng), 180.0 * u(rng),
                                          360.0 * u(rng), 300.0 * u(rng), 360.0 * u(rng));
}

}  // namespace testing_support
