#include <gtest/gtest.h>

#include <random>

#include "support.hpp"

using namespace ccoh;
using testing_support::rel;

namespace {

constexpr double kMuB = kBohrGHzPerTesla;

BiasConditions field_along_z(double b) {
  BiasConditions bias;
  bias.b_tesla = Vector3(0, 0, b);
  return bias;
}

}  // namespace

TEST(Hamiltonian, ZeroFieldSivHasTwoDoubletsSplitByLambda) {
  const Eigen::SelfAdjointEigenSolver<Matrix4c> es(
      build_hamiltonian(testing_support::siv(), BiasConditions{}));
  const double half = ghz_to_angular(25.0);
  EXPECT_NEAR(es.eigenvalues()(0), -half, 1e-6);
  EXPECT_NEAR(es.eigenvalues()(1), -half, 1e-6);
  EXPECT_NEAR(es.eigenvalues()(2), half, 1e-6);
  EXPECT_NEAR(es.eigenvalues()(3), half, 1e-6);
}

TEST(Hamiltonian, StrainSplittingMatchesClosedForm) {
  BiasConditions bias;
  bias.strain_x_ghz = 100.0;
  const auto levels = solve_levels(testing_support::siv(), bias);
  // Each spin block is [[lambda/2, -alpha], [-alpha, -lambda/2]] up to sign.
  const double expected = ghz_to_angular(std::sqrt(50.0 * 50.0 + 4.0 * 100.0 * 100.0));
  EXPECT_LT(rel(levels.omega_b, expected), 1e-12);
  EXPECT_NEAR(angular_to_ghz(levels.omega_b), 206.155, 1e-3);
}

TEST(Hamiltonian, HermitianForRandomInputs) {
  std::mt19937_64 rng(7);
  for (int n = 0; n < 200; ++n) {
    const Matrix4c h = build_hamiltonian(testing_support::siv(), testing_support::random_bias(rng));
    EXPECT_LE((h - h.adjoint()).norm(), 1e-14 * h.norm());
  }
}

TEST(Hamiltonian, RejectsNonFiniteInput) {
  auto d = testing_support::siv();
  d.q = std::nan("");
  EXPECT_THROW(build_hamiltonian(d, BiasConditions{}), Error);
  BiasConditions bias;
  bias.temperature_k = -1.0;
  EXPECT_THROW(build_hamiltonian(testing_support::siv(), bias), Error);
  auto bad_g = testing_support::siv();
  bad_g.g = 3.0;
  EXPECT_THROW(bad_g.validate(), Error);
}

TEST(Levels, AxialFieldAnalyticSplittings) {
  const auto d = testing_support::siv();
  for (double b : {0.01, 0.1, 0.5, 2.0}) {
    const auto levels = solve_levels(d, field_along_z(b));
    // Commuting terms: lower branch s_L s_S = -1 gives (g - 2q) muB B.
    EXPECT_LT(rel(levels.lambda_eff, ghz_to_angular(4.0 * d.q * kMuB * b)), 1e-9) << b;
    EXPECT_LT(rel(levels.energies[1] - levels.energies[0],
                  ghz_to_angular((d.g - 2.0 * d.q) * kMuB * b)),
              1e-9);
    EXPECT_LT(rel(levels.omega_q, ghz_to_angular(d.g * kMuB * b)), 1e-9);
  }
  const auto l = solve_levels(d, field_along_z(0.1));
  EXPECT_NEAR(angular_to_ghz(l.lambda_eff), 0.5598, 1e-4);
  EXPECT_NEAR(angular_to_ghz(l.energies[1] - l.energies[0]), 2.5225, 1e-4);
}

TEST(Levels, AxialFieldLowerBranchIsAntiAligned) {
  const auto levels = solve_levels(testing_support::siv(), field_along_z(0.1));
  // Basis 2*orbit + spin: |e+ down> = 1 and |e- up> = 2 have s_L s_S = -1.
  for (int n = 0; n < 2; ++n) {
    const auto v = levels.states.col(level_index(0, n));
    EXPECT_NEAR(std::norm(v(1)) + std::norm(v(2)), 1.0, 1e-12);
  }
}

TEST(Levels, InvariantsOverRandomBias) {
  std::mt19937_64 rng(11);
  for (const auto& d : {testing_support::siv(), testing_support::snv()}) {
    for (int n = 0; n < 300; ++n) {
      const auto bias = testing_support::random_bias(rng);
      const auto l = solve_levels(d, bias);
      const double spread = l.energies[3] - l.energies[0];
      double sum = 0.0;
      for (double e : l.energies) sum += e;
      EXPECT_LE(std::abs(sum), 1e-12 * std::abs(spread));
      EXPECT_LE((l.states.adjoint() * l.states - Matrix4c::Identity()).norm(), 1e-12);
      for (int r = 0; r < 2; ++r) EXPECT_NEAR(l.h_elements[r].cwiseAbs2().sum(), 4.0, 1e-12);
      const auto rebuilt = energies_from_parameters(effective_parameters(l));
      for (int k = 0; k < 4; ++k) EXPECT_NEAR(rebuilt[k], l.energies[k], 1e-12 * spread);
      EXPECT_GE(l.omega_b, 0.0);
      EXPECT_GE(l.omega_q, 0.0);
    }
  }
}

TEST(Levels, ZeroFieldLimits) {
  const auto l = solve_levels(testing_support::siv(), BiasConditions{});
  EXPECT_NEAR(l.omega_q, 0.0, 1e-3);
  EXPECT_NEAR(l.lambda_eff, 0.0, 1e-3);
  EXPECT_LT(rel(l.omega_b, ghz_to_angular(50.0)), 1e-12);
}

TEST(Levels, EffectiveParametersOfZeroFieldEnergies) {
  const double a = ghz_to_angular(25.0);
  const auto p = effective_parameters(std::array<double, 4>{-a, -a, a, a});
  EXPECT_EQ(p.omega_q, 0.0);
  EXPECT_EQ(p.lambda_eff, 0.0);
  EXPECT_DOUBLE_EQ(p.omega_b, ghz_to_angular(50.0));
}

TEST(Levels, LargeStrainQuenchesLambdaEff) {
  const auto d = testing_support::siv();
  double prev = kInfinity;
  for (double s : {10.0, 100.0, 1000.0, 10000.0}) {
    auto bias = field_along_z(0.2);
    bias.strain_x_ghz = s;
    const double lam = std::abs(solve_levels(d, bias).lambda_eff);
    EXPECT_LT(lam, prev);
    prev = lam;
  }
  EXPECT_LT(prev, 1e-2 * ghz_to_angular(4.0 * d.q * kMuB * 0.2));
}

TEST(Levels, StrainAzimuthInvariance) {
  const auto d = testing_support::siv();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int n = 0; n < 20; ++n) {
    const double b = 0.05 + u(rng);
    const double th = 180.0 * u(rng);
    const double ph = 360.0 * u(rng);
    const double s = 1.0 + 300.0 * u(rng);
    const auto ref = solve_levels(d, BiasConditions::from_polar(4, b, th, ph, s, 0.0));
    const auto wref = transition_elements(ref);
    // Orbital rotation commutes with sigma_z^L and the spin terms; invariance
    // therefore holds exactly for any field.
    for (double psi : {37.0, 120.0, 211.0, 300.0}) {
      const auto l = solve_levels(d, BiasConditions::from_polar(4, b, th, ph, s, psi));
      const auto w = transition_elements(l);
      EXPECT_LT(rel(l.omega_q, ref.omega_q), 1e-9);
      EXPECT_LT(rel(l.omega_b, ref.omega_b), 1e-9);
      EXPECT_LT(std::abs(std::abs(l.lambda_eff) - std::abs(ref.lambda_eff)),
                1e-9 * std::max(std::abs(ref.lambda_eff), ref.omega_q));
      EXPECT_NEAR(w.qubit, wref.qubit, 1e-9 * 8);
      EXPECT_NEAR(w.branch, wref.branch, 1e-9 * 8);
      EXPECT_NEAR(w.branch_qubit, wref.branch_qubit, 1e-9 * 8);
    }
  }
}

TEST(Transitions, AxialFieldZeroStrainIsPureBranchFlip) {
  const auto w = transition_elements(solve_levels(testing_support::siv(), field_along_z(0.1)));
  EXPECT_NEAR(w.qubit, 0.0, 1e-20);
  EXPECT_NEAR(w.branch_qubit, 0.0, 1e-20);
  // Both orientations of the two green transitions, both R.
  EXPECT_NEAR(w.branch, 8.0, 1e-12);
  EXPECT_NEAR(w.diagonal, 0.0, 1e-20);
}

TEST(Transitions, TiltedFieldActivatesAllClasses) {
  const auto w = transition_elements(
      solve_levels(testing_support::siv(), BiasConditions::from_polar(4, 0.3, 54.7, 0, 50.0)));
  EXPECT_GT(w.qubit, 0.0);
  EXPECT_GT(w.branch, 0.0);
  EXPECT_GT(w.branch_qubit, 0.0);
  EXPECT_NEAR(w.qubit + w.branch + w.branch_qubit + w.diagonal, 8.0, 1e-12);
}

TEST(Transitions, ClassificationUsesLabelBits) {
  EXPECT_EQ(classify_transition(0, 1), TransitionClass::qubit);
  EXPECT_EQ(classify_transition(2, 3), TransitionClass::qubit);
  EXPECT_EQ(classify_transition(0, 2), TransitionClass::branch);
  EXPECT_EQ(classify_transition(3, 1), TransitionClass::branch);
  EXPECT_EQ(classify_transition(0, 3), TransitionClass::branch_qubit);
  EXPECT_EQ(classify_transition(1, 2), TransitionClass::branch_qubit);
  EXPECT_EQ(classify_transition(2, 2), TransitionClass::none);
}

TEST(Transitions, ZeroFieldKramersDoubletsHaveNoSpinFlips) {
  BiasConditions bias;
  bias.strain_x_ghz = 40.0;
  bias.strain_y_ghz = -25.0;
  const auto l = solve_levels(testing_support::siv(), bias);
  EXPECT_NEAR(l.omega_q, 0.0, 1e-3);
  const auto w = transition_elements(l);
  EXPECT_NEAR(w.qubit, 0.0, 1e-20);
  EXPECT_NEAR(w.branch_qubit, 0.0, 1e-20);
}

TEST(Transitions, WeightsInvariantUnderEigenvectorGauge) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> phase(0.0, kTwoPi);
  const auto l = solve_levels(testing_support::siv(), testing_support::random_bias(rng));
  const auto ref = transition_elements(l);
  const auto h = strain_coupling_operators();
  for (int trial = 0; trial < 50; ++trial) {
    LevelStructure g = l;
    for (int n = 0; n < 4; ++n) g.states.col(n) *= std::polar(1.0, phase(rng));
    for (int r = 0; r < 2; ++r) g.h_elements[r] = g.states.adjoint() * h[r] * g.states;
    const auto w = transition_elements(g);
    EXPECT_NEAR(w.qubit, ref.qubit, 1e-12);
    EXPECT_NEAR(w.branch, ref.branch, 1e-12);
    EXPECT_NEAR(w.branch_qubit, ref.branch_qubit, 1e-12);
  }
}

TEST(Levels, DegenerateDoubletMixturesDoNotChangeClassWeights) {
  // At zero field the doublets are degenerate; any unitary mixing inside a
  // doublet leaves the class sums unchanged.
  BiasConditions bias;
  bias.strain_x_ghz = 30.0;
  const auto l = solve_levels(testing_support::siv(), bias);
  const auto ref = transition_elements(l);
  const auto h = strain_coupling_operators();
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, kTwoPi);
  for (int trial = 0; trial < 20; ++trial) {
    LevelStructure g = l;
    for (int b = 0; b < 2; ++b) {
      const double t = u(rng);
      const Complex e1 = std::polar(1.0, u(rng));
      const Complex e2 = std::polar(1.0, u(rng));
      const Eigen::Vector4cd a = l.states.col(level_index(b, 0));
      const Eigen::Vector4cd c = l.states.col(level_index(b, 1));
      g.states.col(level_index(b, 0)) = std::cos(t) * a + e1 * std::sin(t) * c;
      g.states.col(level_index(b, 1)) = -std::conj(e1) * std::sin(t) * a * e2 + std::cos(t) * c * e2;
    }
    for (int r = 0; r < 2; ++r) g.h_elements[r] = g.states.adjoint() * h[r] * g.states;
    const auto w = transition_elements(g);
    EXPECT_NEAR(w.branch + w.branch_qubit, ref.branch + ref.branch_qubit, 1e-12);
    EXPECT_NEAR(w.qubit + w.diagonal, ref.qubit + ref.diagonal, 1e-12);
  }
}
