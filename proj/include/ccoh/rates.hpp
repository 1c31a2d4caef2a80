#pragma once

// Closed-form phonon transition rates and coherence times.

#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "ccoh/acoustics.hpp"
#include "ccoh/constants.hpp"
#include "ccoh/error.hpp"
#include "ccoh/model.hpp"

namespace ccoh {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Bose occupation with the spontaneous-emission shift for negative
/// frequencies: n(w) for w > 0, n(|w|) + 1 for w < 0.
inline double thermal_occupation(double omega, double temperature_k) {
  if (omega < 0.0) return thermal_occupation(-omega, temperature_k) + 1.0;
  if (temperature_k == 0.0) return 0.0;
  if (omega == 0.0) return kInfinity;
  return 1.0 / std::expm1(kHbar * omega / (kBoltzmann * temperature_k));
}

/// 2 n(w) + 1 = coth(hbar w / 2 kT), finite at T = 0.
inline double thermal_factor(double omega, double temperature_k) {
  if (temperature_k == 0.0) return 1.0;
  return 1.0 / std::tanh(kHbar * std::abs(omega) / (2.0 * kBoltzmann * temperature_k));
}

/// Equilibrium branch polarization -tanh(hbar w_B / 2 kT).
inline double branch_polarization(double omega_b, double temperature_k) {
  if (temperature_k == 0.0) return -1.0;
  return -std::tanh(kHbar * omega_b / (2.0 * kBoltzmann * temperature_k));
}

/// gamma = 2 pi h2 chi |dw|^3 n~(dw); zero at dw = 0 (w^3 n -> w^2 kT / hbar).
/// delta_omega = w_final - w_initial, positive for absorption.
inline double transition_rate(double h2, double delta_omega, double chi, double temperature_k) {
  if (delta_omega == 0.0) return 0.0;
  const double w = std::abs(delta_omega);
  return kTwoPi * h2 * chi * w * w * w * thermal_occupation(delta_omega, temperature_k);
}

struct ClassCrossSections {
  double chi_b = 0.0;        // branch flipping
  double chi_q_prime = 0.0;  // qubit flipping
  double chi_b_prime = 0.0;  // qubit + branch flipping
};

inline ClassCrossSections class_cross_sections(const LevelStructure& levels, double chi) {
  const TransitionWeights w = transition_elements(levels);
  return {0.25 * chi * w.branch, 0.25 * chi * w.qubit, 0.25 * chi * w.branch_qubit};
}

namespace detail {

inline double inverse_or_infinity(double rate) { return rate > 0.0 ? 1.0 / rate : kInfinity; }
inline double rate_of(double time) { return std::isinf(time) ? 0.0 : 1.0 / time; }

// u - sin(u) without cancellation at small u.
inline double u_minus_sin(double u) {
  if (std::abs(u) < 1e-2) {
    const double u2 = u * u;
    return u * u2 / 6.0 * (1.0 - u2 / 20.0 * (1.0 - u2 / 42.0 * (1.0 - u2 / 72.0)));
  }
  return u - std::sin(u);
}

}  // namespace detail

/// Closed-form effective coherence time (Laplace approximation of the
/// oscillating-decay integral). Limits: lambda -> 0 gives 2 T1, lambda -> inf
/// gives 2 / (1/T1 + 1/T_S).
inline double effective_t2_analytic(double t1_q, double t_s_b, double lambda_eff) {
  const double r1 = detail::rate_of(t1_q);
  const double rs = detail::rate_of(t_s_b);
  const double lambda = std::abs(lambda_eff);
  if (lambda == 0.0) return detail::inverse_or_infinity(0.5 * r1);
  if (r1 == 0.0 && rs == 0.0) return kInfinity;
  const double x1 = kTwoPi * r1 / lambda;
  const double xs = kTwoPi * (r1 + rs) / lambda;
  const double first = r1 == 0.0 ? kTwoPi / lambda : -std::expm1(-x1) / r1;
  return 2.0 * first / -std::expm1(-xs);
}

/// Effective coherence time as the integral of the exact envelope
///   exp(-t/2T1 - (t - sin(lambda t)/lambda) / 2T_S),
/// computed over one precession period and summed as a geometric series.
inline double effective_t2_numeric(double t1_q, double t_s_b, double lambda_eff,
                                   double rel_tol = 1e-10) {
  const double r1 = detail::rate_of(t1_q);
  const double rs = detail::rate_of(t_s_b);
  const double lambda = std::abs(lambda_eff);
  if (lambda == 0.0) return detail::inverse_or_infinity(0.5 * r1);
  if (r1 == 0.0 && rs == 0.0) return kInfinity;

  // Dimensionless phase u = lambda t.
  const double a = r1 / (2.0 * lambda);
  const double b = rs / (2.0 * lambda);
  auto exponent = [&](double u) { return a * u + b * detail::u_minus_sin(u); };
  constexpr double period = kTwoPi;

  // The exponent is non-decreasing; past e^-60 the integrand is negligible.
  double upper = period;
  if (exponent(period) > 60.0) {
    double lo = 0.0;
    double hi = period;
    for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
      const double mid = 0.5 * (lo + hi);
      (exponent(mid) > 60.0 ? hi : lo) = mid;
    }
    upper = hi;
  }
  auto integrand = [&](double u) { return std::exp(-exponent(u)); };
  using Quadrature = boost::math::quadrature::gauss_kronrod<double, 61>;
  const double numerator = Quadrature::integrate(integrand, 0.0, upper, 15, rel_tol);
  return numerator / (lambda * -std::expm1(-period * (a + b)));
}

/// Mean occupancy factor for phonon scattering out of a thermal branch:
/// n(w_B) plus the upper-branch population, so that the rate is the
/// thermally weighted sum of up (n) and down (n + 1) branch flips.
inline double branch_scattering_occupancy(double omega_b, double temperature_k) {
  return thermal_occupation(omega_b, temperature_k) +
         0.5 * (1.0 + branch_polarization(omega_b, temperature_k));
}

struct CoherenceReport {
  double omega_q = 0.0;
  double omega_b = 0.0;
  double lambda_eff = 0.0;
  double temperature_k = 0.0;
  ClassCrossSections chi;
  double t1_b = kInfinity;
  double t1_q = kInfinity;
  double t1_q_prime = kInfinity;  // direct qubit flips
  double t_s_b_prime = kInfinity;  // Orbach
  double t_s_b = kInfinity;
  double t2_q = kInfinity;
  double t2_eff = kInfinity;  // exact-envelope integral
  double t2_eff_analytic = kInfinity;
  double sigma_z_b_thermal = -1.0;
};

inline CoherenceReport coherence_times(const LevelStructure& levels,
                                       const ClassCrossSections& chi, double temperature_k) {
  if (!(levels.omega_b > 0.0)) {
    throw Error(ErrorKind::degenerate_branch, "branch splitting is zero; the model does not apply");
  }
  if (!(temperature_k >= 0.0)) {
    throw Error(ErrorKind::invalid_parameter, "temperature must be non-negative");
  }
  using detail::inverse_or_infinity;
  CoherenceReport out;
  out.omega_q = levels.omega_q;
  out.omega_b = levels.omega_b;
  out.lambda_eff = levels.lambda_eff;
  out.temperature_k = temperature_k;
  out.chi = chi;

  const double wb = levels.omega_b;
  const double wb3 = wb * wb * wb;
  const double wq = levels.omega_q;
  const double wq3 = wq * wq * wq;
  const double scatter = branch_scattering_occupancy(wb, temperature_k);

  out.sigma_z_b_thermal = branch_polarization(wb, temperature_k);
  const double r1b = kTwoPi * chi.chi_b * wb3 * thermal_factor(wb, temperature_k);
  const double r1qp = wq > 0.0 ? kTwoPi * chi.chi_q_prime * wq3 * thermal_factor(wq, temperature_k)
                               : 0.0;
  const double rsbp = 2.0 * kTwoPi * chi.chi_b_prime * wb3 * scatter;
  const double rsb = 2.0 * kTwoPi * chi.chi_b * wb3 * scatter;
  const double r1q = r1qp + rsbp;

  out.t1_b = inverse_or_infinity(r1b);
  out.t1_q_prime = inverse_or_infinity(r1qp);
  out.t_s_b_prime = inverse_or_infinity(rsbp);
  out.t1_q = inverse_or_infinity(r1q);
  out.t_s_b = inverse_or_infinity(rsb);
  out.t2_q = inverse_or_infinity(0.5 * r1q + 0.5 * rsb);
  out.t2_eff = effective_t2_numeric(out.t1_q, out.t_s_b, levels.lambda_eff);
  out.t2_eff_analytic = effective_t2_analytic(out.t1_q, out.t_s_b, levels.lambda_eff);
  return out;
}

}  // namespace ccoh
