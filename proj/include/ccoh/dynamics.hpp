#pragma once

// Four-level Lindblad dynamics in the frame rotating with the qubit and
// branch splittings, plus the Ramsey protocol used to check the closed-form
// coherence times.

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ccoh/acoustics.hpp"
#include "ccoh/error.hpp"
#include "ccoh/model.hpp"
#include "ccoh/rates.hpp"

namespace ccoh {

using DensityMatrix = Matrix4c;
using Superoperator = Eigen::Matrix<Complex, 16, 16>;
using VecDensity = Eigen::Matrix<Complex, 16, 1>;

enum class DegeneracyPolicy {
  independent,  // one channel per ordered level pair
  combined,     // lambda_eff-split pairs merged into shared jump operators
};

struct JumpChannel {
  Matrix4c op = Matrix4c::Zero();
  double rate = 0.0;  // s^-1
  std::string label;
};

struct LindbladGenerator {
  Matrix4c hamiltonian = Matrix4c::Zero();  // residual lambda_eff term, rad/s
  std::vector<JumpChannel> channels;
  DegeneracyPolicy policy = DegeneracyPolicy::combined;
  double omega_q = 0.0;
  double omega_b = 0.0;
  double lambda_eff = 0.0;
  double temperature_k = 0.0;
  // Qubit-frame phase per branch such that branch flips carry the qubit
  // equator point of one branch onto the other's.
  std::array<double, 2> qubit_phase{0.0, 0.0};

  double max_rate() const {
    double m = 0.0;
    for (const auto& c : channels) m = std::max(m, c.rate * c.op.cwiseAbs2().sum());
    return m;
  }

  /// Largest stable RK4 step under the resolution rule dt <= 1/(20 max(rate, |lambda|/2pi)).
  double max_step() const {
    const double scale = std::max(max_rate(), std::abs(lambda_eff) / kTwoPi);
    return scale > 0.0 ? 1.0 / (20.0 * scale) : kInfinity;
  }

  DensityMatrix apply(const DensityMatrix& rho) const {
    const Complex minus_i(0.0, -1.0);
    DensityMatrix out = minus_i * (hamiltonian * rho - rho * hamiltonian);
    for (const auto& c : channels) {
      const Matrix4c ldag = c.op.adjoint();
      const Matrix4c ll = ldag * c.op;
      out += c.rate * (c.op * rho * ldag - 0.5 * (ll * rho + rho * ll));
    }
    return out;
  }

  Superoperator superoperator() const {
    Superoperator s;
    for (int k = 0; k < 16; ++k) {
      DensityMatrix basis = DensityMatrix::Zero();
      basis(k / 4, k % 4) = 1.0;
      const DensityMatrix col = apply(basis);
      for (int m = 0; m < 16; ++m) s(m, k) = col(m / 4, m % 4);
    }
    return s;
  }
};

inline VecDensity vectorize(const DensityMatrix& rho) {
  VecDensity v;
  for (int m = 0; m < 16; ++m) v(m) = rho(m / 4, m % 4);
  return v;
}

inline DensityMatrix unvectorize(const VecDensity& v) {
  DensityMatrix rho;
  for (int m = 0; m < 16; ++m) rho(m / 4, m % 4) = v(m);
  return rho;
}

namespace detail {

inline Matrix4c ket_bra(int i, int j) {
  Matrix4c m = Matrix4c::Zero();
  m(i, j) = 1.0;
  return m;
}

}  // namespace detail

/// Build the generator from labeled levels and per-R cross-sections.
///
/// Independent: every ordered pair (i <- j) gets |i><j| with rate gamma_ij at
/// its own transition frequency. Combined: the qubit-flip pairs (0,1)/(2,3)
/// and branch-flip pairs (0,2)/(1,3) share one operator per R and direction,
/// sum of h_Rij |i><j| over the pair, at the class-mean frequency (w_Q, w_B).
inline LindbladGenerator lindblad_generator(const LevelStructure& levels,
                                            const CrossSections& chi, double temperature_k,
                                            DegeneracyPolicy policy) {
  LindbladGenerator gen;
  gen.policy = policy;
  gen.omega_q = levels.omega_q;
  gen.omega_b = levels.omega_b;
  gen.lambda_eff = levels.lambda_eff;
  gen.temperature_k = temperature_k;
  const std::array<double, 2> chi_r{chi.chi_x, chi.chi_y};

  for (int n = 0; n < 4; ++n) {
    const LevelLabel l = level_label(n);
    const double sq = l.qubit ? 1.0 : -1.0;
    const double sb = l.branch ? 1.0 : -1.0;
    gen.hamiltonian(n, n) = 0.25 * levels.lambda_eff * sq * sb;
  }

  auto add_independent = [&](int i, int j) {
    double rate = 0.0;
    for (int r = 0; r < 2; ++r) {
      rate += transition_rate(std::norm(levels.h_elements[r](i, j)),
                              levels.energies[i] - levels.energies[j], chi_r[r], temperature_k);
    }
    if (rate > 0.0) {
      gen.channels.push_back(
          {detail::ket_bra(i, j), rate, "|" + std::to_string(i) + "><" + std::to_string(j) + "|"});
    }
  };

  if (policy == DegeneracyPolicy::independent) {
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        if (i != j) add_independent(i, j);
  } else {
    struct Pair {
      int i0, j0, i1, j1;
      double omega;  // signed w_final - w_initial
      const char* name;
    };
    const Pair pairs[] = {
        {1, 0, 3, 2, levels.omega_q, "Q up"},   {0, 1, 2, 3, -levels.omega_q, "Q down"},
        {2, 0, 3, 1, levels.omega_b, "B up"},   {0, 2, 1, 3, -levels.omega_b, "B down"},
    };
    for (const auto& p : pairs) {
      for (int r = 0; r < 2; ++r) {
        const Matrix4c& h = levels.h_elements[r];
        Matrix4c op = h(p.i0, p.j0) * detail::ket_bra(p.i0, p.j0) +
                      h(p.i1, p.j1) * detail::ket_bra(p.i1, p.j1);
        const double rate = transition_rate(1.0, p.omega, chi_r[r], temperature_k);
        if (rate > 0.0 && op.cwiseAbs2().sum() > 0.0) {
          gen.channels.push_back({op, rate, std::string(p.name) + (r == 0 ? " Egx" : " Egy")});
        }
      }
    }
    for (auto [i, j] : {std::pair{0, 3}, std::pair{3, 0}, std::pair{1, 2}, std::pair{2, 1}}) {
      add_independent(i, j);
    }
  }

  // Align the branch-1 qubit frame with branch 0 through the branch-flip
  // coherence transfer sum_R chi_R h_R02 conj(h_R13).
  Complex transfer = 0.0;
  for (int r = 0; r < 2; ++r) {
    transfer += chi_r[r] * levels.h_elements[r](0, 2) * std::conj(levels.h_elements[r](1, 3));
  }
  gen.qubit_phase = {0.0, std::abs(transfer) > 0.0 ? std::arg(transfer) : 0.0};
  return gen;
}

struct DensityDiagnostics {
  double trace_error = 0.0;
  double hermiticity_error = 0.0;
  double min_eigenvalue = 0.0;
};

inline DensityDiagnostics diagnose(const DensityMatrix& rho) {
  DensityDiagnostics d;
  d.trace_error = std::abs(rho.trace() - 1.0);
  d.hermiticity_error = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
  const Eigen::SelfAdjointEigenSolver<Matrix4c> es(0.5 * (rho + rho.adjoint()),
                                                   Eigen::EigenvaluesOnly);
  d.min_eigenvalue = es.eigenvalues()(0);
  return d;
}

struct Trajectory {
  std::vector<double> times;
  std::vector<DensityMatrix> states;
  double max_trace_error = 0.0;
  double min_eigenvalue = 1.0;
};

namespace detail {

inline void check_step(const LindbladGenerator& gen, double dt) {
  const double limit = gen.max_step();
  if (!(dt > 0.0) || dt > limit * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg.precision(6);
    msg << "time step " << dt << " s does not resolve the generator; use dt <= " << limit << " s";
    throw Error(ErrorKind::step_size, msg.str());
  }
}

// One classical RK4 step of a linear ODE as a matrix polynomial in h L.
inline Superoperator rk4_step(const Superoperator& l, double h) {
  const Superoperator a = h * l;
  const Superoperator a2 = a * a;
  const Superoperator a3 = a2 * a;
  const Superoperator a4 = a3 * a;
  return Superoperator::Identity() + a + a2 / 2.0 + a3 / 6.0 + a4 / 24.0;
}

inline Superoperator matrix_power(Superoperator base, long long steps) {
  Superoperator out = Superoperator::Identity();
  while (steps > 0) {
    if (steps & 1) out = out * base;
    base = base * base;
    steps >>= 1;
  }
  return out;
}

inline void record(Trajectory& traj, double t, const DensityMatrix& rho) {
  const auto d = diagnose(rho);
  traj.max_trace_error = std::max(traj.max_trace_error, d.trace_error);
  traj.min_eigenvalue = std::min(traj.min_eigenvalue, d.min_eigenvalue);
  traj.times.push_back(t);
  traj.states.push_back(rho);
}

}  // namespace detail

/// Fixed-step RK4 integration from t = 0 to t_max, recording every
/// `record_every` steps (and the final state).
inline Trajectory evolve(const LindbladGenerator& gen, const DensityMatrix& rho0, double t_max,
                         double dt, int record_every = 1) {
  detail::check_step(gen, dt);
  const auto steps = static_cast<long long>(std::ceil(t_max / dt - 1e-9));
  const Superoperator step = detail::rk4_step(gen.superoperator(), dt);
  Trajectory traj;
  VecDensity v = vectorize(rho0);
  detail::record(traj, 0.0, rho0);
  for (long long n = 1; n <= steps; ++n) {
    v = step * v;
    if (n % record_every == 0 || n == steps) detail::record(traj, n * dt, unvectorize(v));
  }
  return traj;
}

/// Same integrator sampled at arbitrary increasing times. Each interval is
/// split into equal steps no larger than dt and advanced by repeated squaring
/// of the one-step RK4 propagator, which equals stepping one at a time.
inline Trajectory evolve_at(const LindbladGenerator& gen, const DensityMatrix& rho0,
                            const std::vector<double>& times, double dt) {
  detail::check_step(gen, dt);
  const Superoperator l = gen.superoperator();
  std::map<std::pair<long long, double>, Superoperator> cache;
  Trajectory traj;
  VecDensity v = vectorize(rho0);
  double t = 0.0;
  for (double target : times) {
    const double span = target - t;
    if (span < 0.0) throw Error(ErrorKind::invalid_parameter, "sample times must increase");
    if (span > 0.0) {
      const auto steps = static_cast<long long>(std::ceil(span / dt - 1e-9));
      const double h = span / steps;
      auto key = std::pair{steps, h};
      auto it = cache.find(key);
      if (it == cache.end()) {
        it = cache.emplace(key, detail::matrix_power(detail::rk4_step(l, h), steps)).first;
      }
      v = it->second * v;
    }
    t = target;
    detail::record(traj, t, unvectorize(v));
  }
  return traj;
}

/// Steady state of the generator (trace one).
inline DensityMatrix steady_state(const LindbladGenerator& gen) {
  Eigen::Matrix<Complex, 17, 16> a;
  a.topRows<16>() = gen.superoperator();
  a.row(16).setZero();
  for (int n = 0; n < 4; ++n) a(16, 5 * n) = 1.0;
  Eigen::Matrix<Complex, 17, 1> b = Eigen::Matrix<Complex, 17, 1>::Zero();
  b(16) = 1.0;
  const VecDensity v = a.completeOrthogonalDecomposition().solve(b);
  const DensityMatrix rho = unvectorize(v);
  return 0.5 * (rho + rho.adjoint());
}

/// Branch populations in thermal equilibrium, qubit in |0_Q>.
inline DensityMatrix thermal_branch_state(const LindbladGenerator& gen) {
  const double sz = branch_polarization(gen.omega_b, gen.temperature_k);
  DensityMatrix rho = DensityMatrix::Zero();
  rho(level_index(0, 0), level_index(0, 0)) = 0.5 * (1.0 - sz);
  rho(level_index(1, 0), level_index(1, 0)) = 0.5 * (1.0 + sz);
  return rho;
}

/// Instantaneous pi/2 rotation about the qubit y axis, identical in both
/// branches up to the branch frame phase.
inline Matrix4c qubit_half_pi_pulse(const LindbladGenerator& gen) {
  Matrix4c u = Matrix4c::Zero();
  const double s = 1.0 / std::sqrt(2.0);
  for (int b = 0; b < 2; ++b) {
    const Complex ph = std::polar(1.0, gen.qubit_phase[b]);
    const int i0 = level_index(b, 0);
    const int i1 = level_index(b, 1);
    u(i0, i0) = s;
    u(i1, i0) = s * ph;
    u(i0, i1) = -s * std::conj(ph);
    u(i1, i1) = s;
  }
  return u;
}

/// <sigma_x^Q> read in each branch's co-rotating qubit frame.
inline double qubit_sigma_x(const LindbladGenerator& gen, const DensityMatrix& rho, double t) {
  double out = 0.0;
  for (int b = 0; b < 2; ++b) {
    const double sign = b == 0 ? 1.0 : -1.0;
    const Complex frame = std::polar(1.0, gen.qubit_phase[b] + sign * 0.5 * gen.lambda_eff * t);
    out += 2.0 * std::real(frame * rho(level_index(b, 0), level_index(b, 1)));
  }
  return out;
}

inline double qubit_sigma_z(const DensityMatrix& rho) {
  return std::real(rho(1, 1) + rho(3, 3) - rho(0, 0) - rho(2, 2));
}

inline double branch_sigma_z(const DensityMatrix& rho) {
  return std::real(rho(2, 2) + rho(3, 3) - rho(0, 0) - rho(1, 1));
}

struct RamseySamples {
  std::vector<double> tau;
  std::vector<double> sigma_x;
  double max_trace_error = 0.0;
  double min_eigenvalue = 1.0;
};

/// Thermal branch, qubit |0_Q>, pi/2 pulse, free evolution for each tau.
/// dt defaults to the generator's resolution limit.
inline RamseySamples ramsey_experiment(const LindbladGenerator& gen,
                                       const std::vector<double>& tau_grid, double dt = 0.0) {
  const Matrix4c pulse = qubit_half_pi_pulse(gen);
  const DensityMatrix rho0 = pulse * thermal_branch_state(gen) * pulse.adjoint();
  if (dt <= 0.0) dt = gen.max_step();
  if (std::isinf(dt)) dt = tau_grid.empty() ? 1.0 : std::max(tau_grid.back(), 1e-300);
  const Trajectory traj = evolve_at(gen, rho0, tau_grid, dt);
  RamseySamples out;
  out.tau = tau_grid;
  out.max_trace_error = traj.max_trace_error;
  out.min_eigenvalue = traj.min_eigenvalue;
  for (std::size_t k = 0; k < tau_grid.size(); ++k) {
    out.sigma_x.push_back(qubit_sigma_x(gen, traj.states[k], tau_grid[k]));
  }
  return out;
}

struct DecayFit {
  double time = 0.0;      // integral estimator, normalized by the first sample
  double tail = 0.0;      // extrapolated contribution beyond the last sample
  double fit_time = 0.0;  // log-linear fit over the positive samples
};

/// Decay time as integral(signal) / signal(0): trapezoid over the samples
/// plus an exponential tail fitted to the last quarter.
inline DecayFit extract_decay_time(const std::vector<double>& t, const std::vector<double>& y) {
  if (t.size() != y.size() || t.size() < 20) {
    throw Error(ErrorKind::invalid_parameter, "need at least 20 samples");
  }
  const double y0 = y.front();
  if (!(y0 != 0.0)) throw Error(ErrorKind::no_decay, "signal starts at zero");
  const std::size_t n = y.size();
  const std::size_t last_tenth = n - std::max<std::size_t>(1, n / 10);
  double late = 0.0;
  for (std::size_t k = last_tenth; k < n; ++k) late = std::max(late, std::abs(y[k] / y0));
  if (late > std::exp(-2.0)) {
    throw Error(ErrorKind::no_decay, "signal has not decayed by two time constants");
  }

  CompensatedSum area;
  for (std::size_t k = 1; k < n; ++k) area += 0.5 * (t[k] - t[k - 1]) * (y[k] + y[k - 1]) / y0;

  auto log_slope = [&](std::size_t from) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (std::size_t k = from; k < n; ++k) {
      const double v = y[k] / y0;
      if (v <= 0.0) continue;
      const double ly = std::log(v);
      sx += t[k];
      sy += ly;
      sxx += t[k] * t[k];
      sxy += t[k] * ly;
      ++m;
    }
    if (m < 3) return 0.0;
    const double den = m * sxx - sx * sx;
    return den == 0.0 ? 0.0 : (m * sxy - sx * sy) / den;
  };

  DecayFit fit;
  const double tail_slope = log_slope(n - std::max<std::size_t>(3, n / 4));
  const double y_last = y.back() / y0;
  if (tail_slope < 0.0 && y_last > 0.0) fit.tail = y_last / -tail_slope;
  fit.time = area.value() + fit.tail;
  const double slope = log_slope(0);
  fit.fit_time = slope < 0.0 ? -1.0 / slope : kInfinity;
  return fit;
}

}  // namespace ccoh
