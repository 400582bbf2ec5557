#include <gtest/gtest.h>

#include <random>

#include "bosonize/analytics.hpp"
#include "bosonize/finite_m.hpp"
#include "bosonize/fluctuation.hpp"
#include "bosonize/standard_models.hpp"

using namespace bosonize;

namespace {

// d levels at energies 0, 1, ..., maximally mixed, v with every off-diagonal
// entry equal to u.
NonDemolitionSpec homogeneous(Index d, double u, double dg) {
  NonDemolitionSpec nd;
  nd.levels = RealVector::LinSpaced(2, 0.0, 1.0);
  nd.weights = {0.0, dg};
  OperatorMatrix h = OperatorMatrix::Zero(d, d);
  for (Index k = 0; k < d; ++k) h(k, k) = static_cast<double>(k);
  OperatorMatrix v = OperatorMatrix::Constant(d, d, u);
  v.diagonal().setZero();
  nd.component = {h, models::identity(d) / static_cast<double>(d), {v}};
  return nd;
}

}  // namespace

TEST(Decoherence, BasicProperties) {
  const auto nd = models::nondemolition();
  EXPECT_EQ(decoherence_modulus(nd, 0, 1, 0.0), 1.0);
  EXPECT_EQ(decoherence_modulus(nd, 1, 1, 2.0), 1.0);
  for (double t : {0.3, 1.0, 3.0}) {
    const double d = decoherence_modulus(nd, 0, 1, t);
    EXPECT_GT(d, 0.0);
    EXPECT_LT(d, 1.0);
    EXPECT_EQ(d, decoherence_modulus(nd, 1, 0, t));
  }
  EXPECT_THROW(decoherence_modulus(nd, 0, 2, 1.0), Error);
}

TEST(Decoherence, RealHermitianReduction) {
  // Real weights and Hermitian v: exponent 8 dg^2 sum p_k |v_kl|^2 sin^2(w t/2)/w^2.
  const auto nd = models::nondemolition();
  const double dg = -0.6;
  for (double t : {0.5, 2.0}) {
    const double s = std::sin(0.5 * t);
    const double exponent = 8.0 * dg * dg * (0.5 + 0.5) * s * s;
    EXPECT_NEAR(decoherence_modulus(nd, 0, 1, t), std::exp(-exponent), 1e-14);
  }
}

TEST(Decoherence, QuasiPeriodic) {
  const auto nd = homogeneous(3, 0.4, 0.5);
  const double period = 2.0 * std::acos(-1.0);
  for (double t : {0.3, 1.9})
    EXPECT_NEAR(decoherence_modulus(nd, 0, 1, t), decoherence_modulus(nd, 0, 1, t + period), 1e-12);
}

TEST(Decoherence, ZeroFrequencyModeIsGaussian) {
  // v proportional to a centred diagonal: only zero-frequency modes.
  NonDemolitionSpec nd = models::nondemolition();
  nd.component.couplings[0] = models::sigma_z();
  const double t = 1.7, dg = -0.6;
  // Each populated level contributes p_k |2 dg v_kk|^2 t^2 / 4.
  EXPECT_NEAR(decoherence_modulus(nd, 0, 1, t), std::exp(-2.0 * (4.0 * dg * dg) * t * t / 4.0), 1e-14);
}

TEST(Decoherence, MatchesBosonicSimulation) {
  const auto nd = models::nondemolition();
  FockConfig fock;
  fock.adapt_tol = 1e-10;
  const auto times = uniform_grid(2.0, 8);
  const auto r = reduce_dynamics_bosonic(nd.model(models::plus_state()), fock, times);
  const auto ratio = coherence_ratio(r.trajectory, models::identity(2), 0, 1);
  for (std::size_t i = 0; i < times.size(); ++i)
    EXPECT_NEAR(ratio[i], decoherence_modulus(nd, 0, 1, times[i]), 1e-8) << times[i];
  EXPECT_LE(population_drift(r.trajectory, models::identity(2)), 1e-8);
}

TEST(ShortTime, GaussianLimit) {
  const auto nd = homogeneous(3, 0.5, 1.0);
  const double tau = min_inverse_frequency(nd.component);
  EXPECT_NEAR(tau, 0.5, 1e-14);
  EXPECT_EQ(short_time_gaussian(nd, 0, 1, 0.0), 1.0);
  const double t = 0.01 * tau;
  EXPECT_NEAR(short_time_gaussian(nd, 0, 1, t) / decoherence_modulus(nd, 0, 1, t), 1.0, 1e-4);
  // Out at the validity horizon the two differ visibly.
  const double far = 3.0 * tau;
  EXPECT_GT(std::abs(short_time_gaussian(nd, 0, 1, far) / decoherence_modulus(nd, 0, 1, far) - 1.0), 1e-2);
}

TEST(ShortTime, HomogeneousCoefficient) {
  for (Index d : {2, 3, 5}) {
    const double u = 0.3, dg = 0.7;
    const auto nd = homogeneous(d, u, dg);
    const double t = 0.2;
    const double coefficient = -std::log(short_time_gaussian(nd, 0, 1, t)) / (t * t);
    EXPECT_NEAR(coefficient, 2.0 * (d - 1) * dg * dg * u * u, 1e-12) << d;
  }
}

TEST(Drift, GenericCouplingMovesPopulations) {
  const ModelSpec spec = models::qubit(0.25, 1.0, 1.0);
  FockConfig fock;
  const auto r = reduce_dynamics_bosonic(spec, fock, uniform_grid(2.0, 10));
  EXPECT_GT(population_drift(r.trajectory, models::identity(2)), 1e-2);

  ModelSpec free = spec;
  free.component.couplings[0].setZero();
  const auto f = reduce_dynamics_bosonic(free, fock, uniform_grid(2.0, 10));
  EXPECT_LE(population_drift(f.trajectory, models::identity(2)), 1e-12);
}

TEST(Entanglement, ProductStartAndGrowth) {
  const ModelSpec spec = models::braun();
  const auto times = uniform_grid(5.0, 10);
  FockConfig fock;
  const auto r = reduce_dynamics_bosonic(spec, fock, times);
  const auto neg = entanglement_trajectory(r.trajectory, 2, 2);
  EXPECT_NEAR(neg.front().second, 0.0, 1e-14);
  double peak = 0.0;
  for (const auto& [t, n] : neg) peak = std::max(peak, n);
  EXPECT_GT(peak, 1e-3);
  EXPECT_THROW(entanglement_trajectory(r.trajectory, 2, 3), Error);
}

TEST(Entanglement, MeanFieldSuppression) {
  const ModelSpec spec = models::braun();
  const auto times = uniform_grid(5.0, 10);
  FiniteMConfig cfg;
  cfg.scaling = Scaling::meanfield;
  cfg.M = 2;
  const auto small = entanglement_trajectory(reduce_dynamics_finite(spec, cfg, times), 2, 2);
  cfg.M = 8;
  const auto large = entanglement_trajectory(reduce_dynamics_finite(spec, cfg, times), 2, 2);
  double peak_small = 0.0, peak_large = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    EXPECT_LE(large[i].second, small[i].second + 1e-12) << times[i];
    peak_small = std::max(peak_small, small[i].second);
    peak_large = std::max(peak_large, large[i].second);
  }
  EXPECT_LT(peak_large, peak_small);
}
