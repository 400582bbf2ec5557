#include <gtest/gtest.h>

#include <random>
#include <set>

#include "bosonize/correlations.hpp"
#include "bosonize/standard_models.hpp"

using namespace bosonize;

namespace {

using Ops = std::vector<DressedOperator>;

ReservoirCorrelations reservoir(const ModelSpec& spec) {
  return {spectral_decompose(spec.component), spec.component.couplings};
}

// <V_1 ... V_n> with V = M^{-1/2} sum_m v^[m](t), built in the full M-fold
// tensor product.
Complex brute_force_moment(const ComponentSpec& comp, const Ops& ops, int m) {
  const Index d = comp.dim();
  Index dim = 1;
  for (int i = 0; i < m; ++i) dim *= d;
  OperatorMatrix rho = OperatorMatrix::Identity(1, 1);
  for (int i = 0; i < m; ++i) rho = kron(rho, comp.state);
  OperatorMatrix prod = OperatorMatrix::Identity(dim, dim);
  for (const auto& op : ops) {
    const OperatorMatrix u = propagator(comp.hamiltonian, op.t);
    const OperatorMatrix base = op.dag ? OperatorMatrix(comp.couplings[op.q].adjoint()) : comp.couplings[op.q];
    const OperatorMatrix local = u.adjoint() * base * u;
    OperatorMatrix v = OperatorMatrix::Zero(dim, dim);
    for (int site = 0; site < m; ++site) {
      OperatorMatrix term = OperatorMatrix::Identity(1, 1);
      for (int i = 0; i < m; ++i) term = kron(term, i == site ? local : models::identity(d));
      v += term;
    }
    prod = prod * v / std::sqrt(static_cast<double>(m));
  }
  return (rho * prod).trace();
}

Ops random_ops(std::mt19937_64& rng, int n, std::size_t q) {
  std::uniform_real_distribution<double> t(0.0, 2.0);
  std::bernoulli_distribution dag(0.5);
  std::uniform_int_distribution<std::size_t> pick(0, q - 1);
  Ops ops;
  for (int i = 0; i < n; ++i) ops.push_back({pick(rng), dag(rng), t(rng)});
  return ops;
}

}  // namespace

TEST(Pairings, SmallCases) {
  const auto p4 = enumerate_pairings(4);
  ASSERT_EQ(p4.size(), 3u);
  EXPECT_EQ(p4[0], (Pairing{{0, 1}, {2, 3}}));
  EXPECT_EQ(p4[1], (Pairing{{0, 2}, {1, 3}}));
  EXPECT_EQ(p4[2], (Pairing{{0, 3}, {1, 2}}));
  EXPECT_TRUE(enumerate_pairings(3).empty());
  for (int n = 0; n <= 12; n += 2) {
    const auto ps = enumerate_pairings(n);
    EXPECT_EQ(ps.size(), double_factorial_odd(n)) << n;
    std::set<Pairing> unique(ps.begin(), ps.end());
    EXPECT_EQ(unique.size(), ps.size());
    for (const auto& p : ps)
      for (std::size_t i = 0; i < p.size(); ++i) {
        EXPECT_LT(p[i].first, p[i].second);
        if (i) EXPECT_LT(p[i - 1].first, p[i].first);
      }
  }
}

TEST(Wick, ConstantKernelAndOddLength) {
  const std::vector<int> six(6, 0), five(5, 0);
  EXPECT_NEAR(std::abs(wick_sum(six, [](int, int) { return Complex(2.0); }) - 15.0 * 8.0), 0.0, 1e-12);
  EXPECT_EQ(wick_sum(five, [](int, int) { return Complex(1.0); }), Complex(0.0));
}

TEST(Partitions, CountsWithoutSingletons) {
  // Number of set partitions of n elements with no singleton blocks.
  const std::vector<std::size_t> expected{1, 0, 1, 1, 4, 11, 41, 162};
  for (int n = 0; n < 8; ++n) EXPECT_EQ(partitions_without_singletons(n).size(), expected[n]) << n;
}

TEST(TwoPoint, QubitClosedForm) {
  const auto corr = reservoir(models::qubit(0.25, 1.0));
  const double pi = std::acos(-1.0);
  const Complex c = corr.two_point({0, true, pi}, {0, false, 0.0});
  EXPECT_NEAR(c.real(), -0.25, 1e-15);
  EXPECT_NEAR(c.imag(), 0.0, 1e-15);
  EXPECT_EQ(corr.two_point({0, false, 0.3}, {0, false, 0.1}), Complex(0.0));
  const Complex d = corr.two_point({0, false, 0.7}, {0, true, 0.2});
  EXPECT_LT(std::abs(d - 0.75 * std::exp(kI * 0.5)), 1e-15);
}

TEST(TwoPoint, TraceOracle) {
  std::mt19937_64 rng(31);
  const ModelSpec spec = models::random_model(rng, {2, 3, 2});
  const auto corr = reservoir(spec);
  const auto& comp = spec.component;
  for (int trial = 0; trial < 5; ++trial) {
    const Ops ops = random_ops(rng, 2, 2);
    EXPECT_LT(std::abs(corr.two_point(ops[0], ops[1]) - brute_force_moment(comp, ops, 1)), 1e-12);
  }
}

TEST(TwoPoint, BosonicMatchesReservoir) {
  std::mt19937_64 rng(17);
  for (auto shape : {models::CouplingShape::generic, models::CouplingShape::zero_diagonal,
                     models::CouplingShape::dense}) {
    const ModelSpec spec = models::random_model(rng, {2, 4, 2, shape, 3});
    const auto corr = reservoir(spec);
    const auto model = build_fluctuation_model(spec);
    for (int trial = 0; trial < 10; ++trial) {
      const Ops ops = random_ops(rng, 2, 2);
      EXPECT_LT(std::abs(corr.two_point(ops[0], ops[1]) - two_point_bosonic(model, ops[0], ops[1])), 1e-12);
    }
  }
}

TEST(TwoPoint, BosonicQubitAndEmpty) {
  const auto model = build_fluctuation_model(models::qubit(0.25, 1.0));
  const Complex c = two_point_bosonic(model, {0, false, 0.7}, {0, true, 0.2});
  EXPECT_LT(std::abs(c - 0.75 * std::exp(kI * 0.5)), 1e-15);
  ModelSpec empty = models::qubit();
  empty.component.couplings[0].setZero();
  EXPECT_EQ(two_point_bosonic(build_fluctuation_model(empty), {0, false, 0.0}, {0, true, 0.0}), Complex(0.0));
}

TEST(Multitime, MatchesTensorProduct) {
  std::mt19937_64 rng(5);
  const ModelSpec spec = models::random_model(rng, {2, 3, 2});
  const auto corr = reservoir(spec);
  for (int m : {1, 2, 3})
    for (int n : {2, 3, 4}) {
      const Ops ops = random_ops(rng, n, 2);
      const Complex a = corr.multitime_finite(ops, m);
      const Complex b = brute_force_moment(spec.component, ops, m);
      EXPECT_LT(std::abs(a - b), 1e-12) << "M=" << m << " n=" << n;
    }
}

TEST(Multitime, SingleAndPairIdentities) {
  std::mt19937_64 rng(6);
  const ModelSpec spec = models::random_model(rng, {2, 3, 1});
  const auto corr = reservoir(spec);
  const Ops one{{0, false, 0.4}};
  EXPECT_LT(std::abs(corr.multitime_finite(one, 5)), 1e-14);
  const Ops two{{0, true, 0.4}, {0, false, 1.1}};
  for (double m : {1.0, 7.0, 100.0})
    EXPECT_LT(std::abs(corr.multitime_finite(two, m) - corr.two_point(two[0], two[1])), 1e-14);
}

TEST(Gaussian, TruncatedVacuumMatchesWick) {
  std::mt19937_64 rng(8);
  for (int modes_d : {2, 3, 4}) {
    const ModelSpec spec = models::random_model(rng, {2, modes_d, 2, models::CouplingShape::generic, 1});
    const auto model = build_fluctuation_model(spec);
    ASSERT_GE(model.size(), 1u);
    ASSERT_LE(model.size(), 3u);
    for (int n : {2, 4, 6}) {
      const Ops ops = random_ops(rng, n, 2);
      const Complex direct = truncated_vacuum_moment(model, ops, n / 2);
      const Complex wick = wick_sum(ops, [&](const DressedOperator& a, const DressedOperator& b) {
        return two_point_bosonic(model, a, b);
      });
      EXPECT_LT(std::abs(direct - wick), 1e-10 * std::max(1.0, std::abs(wick))) << "n=" << n;
    }
  }
}

TEST(Multitime, HermitianConjugation) {
  std::mt19937_64 rng(12);
  const ModelSpec spec = models::random_model(rng, {2, 3, 2});
  const auto corr = reservoir(spec);
  const Ops ops = random_ops(rng, 5, 2);
  Ops reversed(ops.rbegin(), ops.rend());
  for (auto& op : reversed) op.dag = !op.dag;
  EXPECT_LT(std::abs(std::conj(corr.multitime_finite(ops, 4)) - corr.multitime_finite(reversed, 4)), 1e-13);
}

TEST(Multitime, NormBound) {
  std::mt19937_64 rng(14);
  const ModelSpec spec = models::random_model(rng, {2, 3, 2});
  const auto corr = reservoir(spec);
  double vmax = 0.0;
  for (const auto& v : spec.component.couplings)
    vmax = std::max(vmax, Eigen::JacobiSVD<OperatorMatrix>(v).singularValues()(0));
  for (int n : {2, 4, 6})
    for (double m : {1.0, 3.0, 20.0}) {
      const Complex c = corr.multitime_finite(random_ops(rng, n, 2), m);
      EXPECT_LE(std::abs(c), std::pow(std::exp(1.0) * vmax, n) * std::pow(n, 0.5 * n));
    }
}

TEST(Clt, QubitFourPointRate) {
  const auto corr = reservoir(models::qubit(0.25, 1.0));
  const Ops ops{{0, false, 0.9}, {0, true, 0.4}, {0, true, 0.3}, {0, false, 0.1}};
  const auto rows = clt_convergence(corr, ops, {16, 32, 64, 128});
  for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
    const double ratio = rows[i].error / rows[i + 1].error;
    EXPECT_NEAR(ratio, 2.0, 0.2) << rows[i].M;
  }
}

TEST(Clt, OddMomentDecay) {
  std::mt19937_64 rng(22);
  const ModelSpec spec = models::random_model(rng, {2, 3, 1});
  const auto corr = reservoir(spec);
  const Ops ops{{0, false, 0.5}, {0, true, 0.2}, {0, false, 0.0}};
  const auto rows = clt_convergence(corr, ops, {16, 64, 256});
  ASSERT_GT(rows[0].error, 1e-6);
  for (std::size_t i = 0; i + 1 < rows.size(); ++i) EXPECT_NEAR(rows[i].error / rows[i + 1].error, 2.0, 1e-9);
}
