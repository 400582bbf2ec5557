#include <gtest/gtest.h>

#include <random>

#include "bosonize/fluctuation.hpp"
#include "bosonize/standard_models.hpp"

using namespace bosonize;

TEST(ModeSet, QubitAmplitudes) {
  const auto m = build_fluctuation_model(models::qubit(0.25));
  ASSERT_EQ(m.size(), 2u);
  EXPECT_EQ(m.modes[0], (Mode{0, 1}));
  EXPECT_EQ(m.modes[1], (Mode{1, 0}));
  EXPECT_NEAR(m.frequencies[0], 1.0, 1e-15);
  EXPECT_NEAR(m.frequencies[1], -1.0, 1e-15);
  // Down level (p = 0.25) excites through a^dagger, up level lowers through a.
  EXPECT_NEAR(std::abs(m.z[0][0]), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(m.w[0][0]), 0.5, 1e-15);
  EXPECT_NEAR(std::abs(m.z[0][1]), std::sqrt(0.75), 1e-15);
  EXPECT_NEAR(std::abs(m.w[0][1]), 0.0, 1e-15);
}

TEST(ModeSet, PureQubitHasOneMode) {
  EXPECT_EQ(build_fluctuation_model(models::qubit(0.0)).size(), 1u);
  EXPECT_EQ(build_fluctuation_model(models::qubit(1.0)).size(), 1u);
}

TEST(ModeSet, ZeroCouplingIsEmpty) {
  ModelSpec spec = models::qubit();
  spec.component.couplings[0].setZero();
  EXPECT_EQ(build_fluctuation_model(spec).size(), 0u);
}

TEST(ModeSet, GroundStateMultilevel) {
  const auto m = build_fluctuation_model(models::multimode());
  ASSERT_EQ(m.size(), 2u);
  EXPECT_EQ(m.modes[0], (Mode{0, 1}));
  EXPECT_EQ(m.modes[1], (Mode{0, 2}));
  EXPECT_NEAR(m.frequencies[0], 1.0, 1e-14);
  EXPECT_NEAR(m.frequencies[1], 1.7, 1e-14);
  // Coupling q raises mode q only.
  for (std::size_t q = 0; q < 2; ++q)
    for (std::size_t j = 0; j < 2; ++j) {
      EXPECT_NEAR(std::abs(m.z[q][j]), 0.0, 1e-15);
      EXPECT_NEAR(std::abs(m.w[q][j]), q == j ? 1.0 : 0.0, 1e-15);
    }
}

TEST(ModeSet, ThermalHermitianPair) {
  ModelSpec spec = models::qubit();
  spec.component.state = models::mat2(0.3, 0, 0, 0.7);
  spec.component.couplings[0] = models::sigma_x();
  const auto m = build_fluctuation_model(spec);
  ASSERT_EQ(m.size(), 2u);
  // Spectral level 0 is the down state with p = 0.7.
  EXPECT_NEAR(std::abs(m.w[0][0]), std::sqrt(0.7), 1e-15);
  EXPECT_NEAR(std::abs(m.z[0][0]), std::sqrt(0.7), 1e-15);
  EXPECT_NEAR(std::abs(m.w[0][1]), std::sqrt(0.3), 1e-15);
}

TEST(FockHamiltonian, SingleModeCutoffOneOracle) {
  const ModelSpec spec = models::qubit(0.0, 1.3, 0.4);
  const auto model = build_fluctuation_model(spec);
  ASSERT_EQ(model.size(), 1u);
  const OperatorMatrix h = build_fock_hamiltonian(spec, model, {1}).materialize();
  const OperatorMatrix a = models::mat2(0, 1, 0, 0);
  const OperatorMatrix i2 = models::identity(2);
  const OperatorMatrix& g = spec.system.couplings[0];
  const OperatorMatrix expected = kron(spec.system.hamiltonian, i2) - 1.3 * kron(i2, OperatorMatrix(a.adjoint() * a)) +
                                  kron(g, a) + kron(OperatorMatrix(g.adjoint()), OperatorMatrix(a.adjoint()));
  EXPECT_LT(max_abs(h - expected), 1e-14);
  EXPECT_TRUE(is_hermitian(h));
}

TEST(FockHamiltonian, BraunOracle) {
  const double lambda = 0.35;
  const ModelSpec spec = models::braun(lambda);
  const auto model = build_fluctuation_model(spec);
  ASSERT_EQ(model.size(), 1u);
  const int n = 3;
  const OperatorMatrix h = build_fock_hamiltonian(spec, model, {n}).materialize();
  const OperatorMatrix a = annihilation(n), ib = models::identity(n + 1), is = models::identity(4);
  const OperatorMatrix expected = kron(spec.system.hamiltonian, ib) + kron(is, OperatorMatrix(a.adjoint() * a)) +
                                  kron(spec.system.couplings[0], OperatorMatrix(a + a.adjoint()));
  EXPECT_LT(max_abs(h - expected), 1e-14);
}

TEST(FockHamiltonian, RejectsBadCutoffs) {
  const ModelSpec spec = models::qubit();
  const auto model = build_fluctuation_model(spec);
  EXPECT_THROW(build_fock_hamiltonian(spec, model, {2}), Error);
  EXPECT_THROW(build_fock_hamiltonian(spec, model, {0, 2}), Error);
  try {
    build_fock_hamiltonian(spec, model, {40, 40}, 1000);
    FAIL() << "expected overflow";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DimensionOverflow);
  }
}

TEST(Bosonic, EmptyModeSetIsFreeEvolution) {
  ModelSpec spec = models::qubit();
  spec.component.couplings[0].setZero();
  const auto r = reduce_dynamics_bosonic(spec, {}, {0.0, 0.9});
  const OperatorMatrix u = propagator(spec.system.hamiltonian, 0.9);
  EXPECT_LT(max_abs(r.trajectory.states[1] - u * spec.system.state * u.adjoint()), 1e-13);
}

TEST(Bosonic, AdaptiveCutoffsConverge) {
  const ModelSpec spec = models::qubit(0.25, 1.0, 0.5);
  FockConfig fock;
  fock.cutoff = 2;
  fock.adapt_tol = 1e-7;
  const auto times = uniform_grid(1.5, 6);
  const auto r = reduce_dynamics_bosonic(spec, fock, times);
  EXPECT_LE(r.residual, 1e-7);
  EXPECT_GT(r.refinements, 0);
  EXPECT_LT(max_abs(r.trajectory.states[0] - spec.system.state), 1e-13);
  EXPECT_TRUE(density_violations(r.trajectory).empty());
  EXPECT_EQ(r.trajectory.provenance.at("cutoffs"), detail::join(r.cutoffs));

  // A fixed run at doubled cutoffs agrees to the same accuracy.
  FockConfig fixed;
  fixed.adaptive = false;
  for (int c : r.cutoffs) fixed.cutoffs.push_back(2 * c);
  const auto check = reduce_dynamics_bosonic(spec, fixed, times);
  EXPECT_LE(max_trace_distance(check.trajectory, r.trajectory), 1e-7);
}

TEST(Bosonic, AdaptiveOverflowIsReported) {
  FockConfig fock;
  fock.cutoff = 2;
  fock.adapt_tol = 1e-14;
  fock.dim_cap = 64;
  EXPECT_THROW(reduce_dynamics_bosonic(models::qubit(), fock, uniform_grid(3.0, 3)), Error);
}

TEST(Thermal, TwoLevelSigmaX) {
  const ComponentSpec comp{models::mat2(0, 0, 0, 1), models::mat2(0.8, 0, 0, 0.2), {models::sigma_x()}};
  const auto spectrum = spectral_decompose(comp);
  const auto result = thermal_representation(spectrum, models::sigma_x());
  ASSERT_TRUE(std::holds_alternative<ThermalModes>(result));
  const auto& tm = std::get<ThermalModes>(result);
  ASSERT_EQ(tm.modes.size(), 1u);
  const auto& m = tm.modes[0];
  EXPECT_NEAR(m.frequency, 1.0, 1e-15);
  EXPECT_NEAR(m.beta_omega, std::log(4.0), 1e-14);
  EXPECT_NEAR(m.covariance, 1.0 / 0.6, 1e-14);
  EXPECT_NEAR(m.coupling * m.coupling, 0.6, 1e-14);
  for (double tau : {0.0, 0.3, 1.7}) {
    const Complex expected = 0.8 * std::exp(-kI * tau) + 0.2 * std::exp(kI * tau);
    EXPECT_LT(std::abs(thermal_two_point(tm, tau, 0.0) - expected), 1e-14);
  }
}

TEST(Thermal, RandomHermitianMatchesReservoir) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 3; ++trial) {
    ModelSpec spec = models::random_model(rng, {2, 4, 1, models::CouplingShape::zero_diagonal});
    OperatorMatrix v = spec.component.couplings[0];
    v = hermitian_part(v);
    v.diagonal().setZero();
    const auto spectrum = spectral_decompose(spec.component);
    const auto result = thermal_representation(spectrum, v);
    ASSERT_TRUE(std::holds_alternative<ThermalModes>(result));
    const OperatorMatrix ve = spectrum.to_eigenbasis(v);
    for (double tau : {0.0, 0.4, 2.5}) {
      Complex direct = 0.0;
      for (Index k = 0; k < 4; ++k)
        for (Index l = 0; l < 4; ++l)
          direct += spectrum.populations(k) * ve(k, l) * ve(l, k) *
                    std::exp(kI * (tau * (spectrum.energies(k) - spectrum.energies(l))));
      EXPECT_LT(std::abs(thermal_two_point(std::get<ThermalModes>(result), tau, 0.0) - direct), 1e-12);
    }
  }
}

TEST(Thermal, Refusals) {
  const ComponentSpec comp{models::mat2(0, 0, 0, 1), models::mat2(0.8, 0, 0, 0.2), {}};
  const auto spectrum = spectral_decompose(comp);
  auto reason = [&](const OperatorMatrix& v) {
    const auto r = thermal_representation(spectrum, v);
    EXPECT_TRUE(std::holds_alternative<NotRepresentable>(r));
    return std::holds_alternative<NotRepresentable>(r) ? std::get<NotRepresentable>(r).reason
                                                       : NotRepresentableReason::NotHermitian;
  };
  EXPECT_EQ(reason(models::sigma_z()), NotRepresentableReason::NonzeroDiagonal);
  EXPECT_EQ(reason(models::mat2(0, 1, kI, 0)), NotRepresentableReason::PhasesNotOpposite);
  EXPECT_EQ(reason(models::mat2(0, 1, 2, 0)), NotRepresentableReason::NotHermitian);

  const ComponentSpec flat{models::mat2(0, 0, 0, 1), models::mat2(0.5, 0, 0, 0.5), {}};
  const auto r = thermal_representation(spectral_decompose(flat), models::sigma_x());
  ASSERT_TRUE(std::holds_alternative<NotRepresentable>(r));
  EXPECT_EQ(std::get<NotRepresentable>(r).reason, NotRepresentableReason::EqualPopulations);
  EXPECT_EQ(to_string(std::get<NotRepresentable>(r).reason), "equal_populations");
}
