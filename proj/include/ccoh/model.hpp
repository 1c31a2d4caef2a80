#pragma once

// Four-level spin-orbit ground-state model of a group-IV color center.
//
// Basis convention: |orbit> (x) |spin> with index 2*o + s, where o = 0 is
// e_g+ (sigma_z^L = +1) and s = 0 is spin up (sigma_z^S = +1). All energies
// are angular frequencies in rad/s.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numeric>
#include <string>

#include <Eigen/Dense>

#include "ccoh/constants.hpp"
#include "ccoh/error.hpp"

namespace ccoh {

using Complex = std::complex<double>;
using Matrix2c = Eigen::Matrix2cd;
using Matrix4c = Eigen::Matrix4cd;
using Vector3 = Eigen::Vector3d;

struct DefectParameters {
  std::string name;
  double lambda_soc_ghz = 0.0;  // spin-orbit splitting
  double q = 0.0;               // orbital quenching factor
  double g = 2.0023;            // electron g-factor
  double d_phz = 0.0;           // strain susceptibilities, PHz per unit strain
  double f_phz = 0.0;

  void validate() const {
    auto finite = [](double v) { return std::isfinite(v); };
    if (!finite(lambda_soc_ghz) || !finite(q) || !finite(g) || !finite(d_phz) ||
        !finite(f_phz)) {
      throw Error(ErrorKind::invalid_parameter, "defect parameters must be finite");
    }
    if (lambda_soc_ghz <= 0.0) {
      throw Error(ErrorKind::invalid_parameter, "lambda_soc must be positive");
    }
    if (g < 1.5 || g > 2.5) {
      throw Error(ErrorKind::invalid_parameter, "g-factor outside [1.5, 2.5]");
    }
  }
};

struct BiasConditions {
  double temperature_k = 0.0;
  Vector3 b_tesla = Vector3::Zero();  // defect frame, z along the D3d axis
  double strain_x_ghz = 0.0;          // alpha_Egx
  double strain_y_ghz = 0.0;          // alpha_Egy

  /// Field given as magnitude plus polar/azimuthal angles from the D3d axis,
  /// strain as magnitude plus azimuth in the (Egx, Egy) plane.
  static BiasConditions from_polar(double temperature_k, double b_tesla, double theta_deg,
                                   double phi_deg, double strain_ghz,
                                   double strain_azimuth_deg = 0.0) {
    constexpr double deg = std::numbers::pi / 180.0;
    BiasConditions bias;
    bias.temperature_k = temperature_k;
    const double th = theta_deg * deg;
    const double ph = phi_deg * deg;
    bias.b_tesla = b_tesla * Vector3(std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph),
                                     std::cos(th));
    bias.strain_x_ghz = strain_ghz * std::cos(strain_azimuth_deg * deg);
    bias.strain_y_ghz = strain_ghz * std::sin(strain_azimuth_deg * deg);
    return bias;
  }

  void validate() const {
    if (!std::isfinite(temperature_k) || !b_tesla.allFinite() || !std::isfinite(strain_x_ghz) ||
        !std::isfinite(strain_y_ghz)) {
      throw Error(ErrorKind::invalid_parameter, "bias conditions must be finite");
    }
    if (temperature_k < 0.0) {
      throw Error(ErrorKind::invalid_parameter, "temperature must be non-negative");
    }
  }
};

namespace pauli {

inline Matrix2c identity() { return Matrix2c::Identity(); }
inline Matrix2c x() {
  Matrix2c m;
  m << 0.0, 1.0, 1.0, 0.0;
  return m;
}
inline Matrix2c y() {
  Matrix2c m;
  m << 0.0, Complex(0.0, -1.0), Complex(0.0, 1.0), 0.0;
  return m;
}
inline Matrix2c z() {
  Matrix2c m;
  m << 1.0, 0.0, 0.0, -1.0;
  return m;
}

/// orbit (x) spin
inline Matrix4c kron(const Matrix2c& orbit, const Matrix2c& spin) {
  Matrix4c out;
  for (int a = 0; a < 2; ++a)
    for (int c = 0; c < 2; ++c)
      for (int b = 0; b < 2; ++b)
        for (int d = 0; d < 2; ++d) out(2 * a + b, 2 * c + d) = orbit(a, c) * spin(b, d);
  return out;
}

}  // namespace pauli

/// Phonon coupling operators h_Egx = -sigma_x^L, h_Egy = -sigma_y^L.
inline std::array<Matrix4c, 2> strain_coupling_operators() {
  return {-pauli::kron(pauli::x(), pauli::identity()),
          -pauli::kron(pauli::y(), pauli::identity())};
}

/// Spin-orbit plus strain terms only; the branch reference for labeling.
inline Matrix4c zero_field_hamiltonian(const DefectParameters& defect,
                                       const BiasConditions& bias) {
  using namespace pauli;
  const double lambda = ghz_to_angular(defect.lambda_soc_ghz);
  const double ax = ghz_to_angular(bias.strain_x_ghz);
  const double ay = ghz_to_angular(bias.strain_y_ghz);
  Matrix4c h = 0.5 * lambda * kron(z(), z());
  h -= ax * kron(x(), identity());
  h -= ay * kron(y(), identity());
  return h;
}

/// Full ground-state Hamiltonian (SOC + strain + spin Zeeman + orbital Zeeman).
inline Matrix4c build_hamiltonian(const DefectParameters& defect, const BiasConditions& bias) {
  defect.validate();
  bias.validate();
  using namespace pauli;
  const double mu_b = ghz_to_angular(kBohrGHzPerTesla);  // rad/s per tesla
  const Vector3& b = bias.b_tesla;
  Matrix4c h = zero_field_hamiltonian(defect, bias);
  const double spin = 0.5 * defect.g * mu_b;
  h += spin * (b.x() * kron(identity(), x()) + b.y() * kron(identity(), y()) +
               b.z() * kron(identity(), z()));
  h += defect.q * mu_b * b.z() * kron(z(), identity());
  // Exact Hermitian symmetrization; every term above is Hermitian already.
  return 0.5 * (h + h.adjoint());
}

struct LevelLabel {
  int branch = 0;
  int qubit = 0;
};

/// Label index n = 2*branch + qubit, i.e. |0_B 0_Q> = |0>, |0_B 1_Q> = |1>,
/// |1_B 0_Q> = |2>, |1_B 1_Q> = |3>.
constexpr int level_index(int branch, int qubit) { return 2 * branch + qubit; }
constexpr LevelLabel level_label(int index) { return {index / 2, index % 2}; }

struct LevelStructure {
  std::array<double, 4> energies{};  // rad/s, trace removed, ordered by label index
  Matrix4c states = Matrix4c::Identity();  // column n is |n>
  std::array<LevelLabel, 4> labels{};
  double omega_q = 0.0;
  double omega_b = 0.0;
  double lambda_eff = 0.0;  // signed
  std::array<Matrix4c, 2> h_elements{};  // <i|h_R|j>, R = Egx, Egy
};

struct EffectiveParameters {
  double omega_q = 0.0;
  double omega_b = 0.0;
  double lambda_eff = 0.0;
};

/// Exact inversion of the two-qubit parameterization
///   H = omega_q/2 sz^Q + omega_b/2 sz^B + lambda_eff/4 sz^Q sz^B.
inline EffectiveParameters effective_parameters(const std::array<double, 4>& e) {
  return {((e[1] - e[0]) + (e[3] - e[2])) / 2.0, ((e[2] + e[3]) - (e[0] + e[1])) / 2.0,
          (e[3] - e[2]) - (e[1] - e[0])};
}

inline EffectiveParameters effective_parameters(const LevelStructure& levels) {
  return effective_parameters(levels.energies);
}

/// Energies rebuilt from the parameterization (sz = +1 for bit 1).
inline std::array<double, 4> energies_from_parameters(const EffectiveParameters& p) {
  std::array<double, 4> e{};
  for (int n = 0; n < 4; ++n) {
    const double sq = level_label(n).qubit ? 1.0 : -1.0;
    const double sb = level_label(n).branch ? 1.0 : -1.0;
    e[n] = 0.5 * p.omega_q * sq + 0.5 * p.omega_b * sb + 0.25 * p.lambda_eff * sq * sb;
  }
  return e;
}

namespace detail {

// Make the largest component of a state real and positive.
inline void fix_phase(Eigen::Ref<Eigen::Vector4cd> v) {
  Eigen::Index k = 0;
  v.cwiseAbs().maxCoeff(&k);
  const double mag = std::abs(v(k));
  if (mag > 0.0) v *= std::conj(v(k)) / mag;
}

}  // namespace detail

inline constexpr double kBranchAmbiguityTolerance = 1e-6;

/// Eigen-decompose H and label eigenstates with (branch, qubit) bits.
///
/// The branch bit comes from the weight of each eigenstate in the lower
/// doublet of the zero-field Hamiltonian; within a branch the lower-energy
/// state is qubit 0. Exactly degenerate doublets (B = 0) are resolved in the
/// basis diagonalizing S_z, with spin-down as qubit 0, matching the B -> 0+
/// limit along the D3d axis.
inline LevelStructure diagonalize_and_label(const Matrix4c& hamiltonian,
                                            const DefectParameters& defect,
                                            const BiasConditions& bias) {
  const Eigen::SelfAdjointEigenSolver<Matrix4c> solver(hamiltonian);
  const Eigen::SelfAdjointEigenSolver<Matrix4c> zero_field(zero_field_hamiltonian(defect, bias));
  const Eigen::Matrix<Complex, 4, 2> lower = zero_field.eigenvectors().leftCols<2>();

  const Eigen::Vector4d evals = solver.eigenvalues();
  const Matrix4c evecs = solver.eigenvectors();

  std::array<double, 4> overlap{};
  for (int k = 0; k < 4; ++k) overlap[k] = (lower.adjoint() * evecs.col(k)).squaredNorm();

  std::array<int, 4> order{0, 1, 2, 3};
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return overlap[a] > overlap[b]; });
  if (std::abs(overlap[order[1]] - 0.5) < kBranchAmbiguityTolerance &&
      std::abs(overlap[order[2]] - 0.5) < kBranchAmbiguityTolerance) {
    throw Error(ErrorKind::degenerate_labeling,
                "eigenstates split evenly between zero-field branches; perturb the bias");
  }

  const double scale = std::max(evals.cwiseAbs().maxCoeff(), 1.0);
  const Matrix4c spin_z = 0.5 * pauli::kron(pauli::identity(), pauli::z());

  LevelStructure out;
  for (int branch = 0; branch < 2; ++branch) {
    int lo = order[2 * branch];
    int hi = order[2 * branch + 1];
    if (evals(hi) < evals(lo)) std::swap(lo, hi);
    Eigen::Matrix<Complex, 4, 2> pair;
    pair.col(0) = evecs.col(lo);
    pair.col(1) = evecs.col(hi);
    double e_lo = evals(lo);
    double e_hi = evals(hi);
    if (e_hi - e_lo <= 1e-11 * scale) {
      const Eigen::Matrix2cd sz = pair.adjoint() * spin_z * pair;
      const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> rot(0.5 * (sz + sz.adjoint()));
      pair = pair * rot.eigenvectors();
      const double mean = 0.5 * (e_lo + e_hi);
      e_lo = e_hi = mean;
    }
    for (int qubit = 0; qubit < 2; ++qubit) {
      const int n = level_index(branch, qubit);
      out.states.col(n) = pair.col(qubit);
      detail::fix_phase(out.states.col(n));
      out.energies[n] = qubit ? e_hi : e_lo;
      out.labels[n] = {branch, qubit};
    }
  }

  const double mean = std::accumulate(out.energies.begin(), out.energies.end(), 0.0) / 4.0;
  for (double& e : out.energies) e -= mean;

  const auto params = effective_parameters(out.energies);
  out.omega_q = params.omega_q;
  out.omega_b = params.omega_b;
  out.lambda_eff = params.lambda_eff;

  const auto h = strain_coupling_operators();
  for (int r = 0; r < 2; ++r) out.h_elements[r] = out.states.adjoint() * h[r] * out.states;
  return out;
}

inline LevelStructure solve_levels(const DefectParameters& defect, const BiasConditions& bias) {
  return diagonalize_and_label(build_hamiltonian(defect, bias), defect, bias);
}

enum class TransitionClass {
  none,          // diagonal
  qubit,         // Q': (0,1), (2,3)
  branch,        // B: (0,2), (1,3)
  branch_qubit,  // B': (0,3), (1,2)
};

/// Classification by which label bits differ, independent of energy order.
constexpr TransitionClass classify_transition(int i, int j) {
  const bool branch = level_label(i).branch != level_label(j).branch;
  const bool qubit = level_label(i).qubit != level_label(j).qubit;
  if (branch && qubit) return TransitionClass::branch_qubit;
  if (branch) return TransitionClass::branch;
  if (qubit) return TransitionClass::qubit;
  return TransitionClass::none;
}

struct TransitionWeights {
  std::array<Eigen::Matrix4d, 2> per_r{};  // |h_Rij|^2
  Eigen::Matrix4d total = Eigen::Matrix4d::Zero();  // summed over R

  // Summed over R and over both orientations (i,j), (j,i) of the class's two
  // transitions, so that classes + diagonal add up to 4 per R.
  double qubit = 0.0;
  double branch = 0.0;
  double branch_qubit = 0.0;
  double diagonal = 0.0;  // summed over R and the four levels

  double weight(TransitionClass c) const {
    switch (c) {
      case TransitionClass::qubit: return qubit;
      case TransitionClass::branch: return branch;
      case TransitionClass::branch_qubit: return branch_qubit;
      case TransitionClass::none: return diagonal;
    }
    return 0.0;
  }
};

inline TransitionWeights transition_elements(const LevelStructure& levels) {
  TransitionWeights w;
  for (int r = 0; r < 2; ++r) {
    w.per_r[r] = levels.h_elements[r].cwiseAbs2();
    w.total += w.per_r[r];
  }
  for (int i = 0; i < 4; ++i) {
    w.diagonal += w.total(i, i);
    for (int j = 0; j < 4; ++j) {
      if (i == j) continue;
      switch (classify_transition(i, j)) {
        case TransitionClass::qubit: w.qubit += w.total(i, j); break;
        case TransitionClass::branch: w.branch += w.total(i, j); break;
        case TransitionClass::branch_qubit: w.branch_qubit += w.total(i, j); break;
        case TransitionClass::none: break;
      }
    }
  }
  return w;
}

}  // namespace ccoh
