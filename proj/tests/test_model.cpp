#include <gtest/gtest.h>

#include <random>

#include "bosonize/model.hpp"
#include "bosonize/standard_models.hpp"

using namespace bosonize;

TEST(Validate, ReferenceModelsPass) {
  EXPECT_TRUE(validate(models::qubit()).passed());
  EXPECT_TRUE(validate(models::multimode()).passed());
  EXPECT_TRUE(validate(models::braun()).passed());
  std::mt19937_64 rng(1);
  for (int i = 0; i < 5; ++i) EXPECT_TRUE(validate(models::random_model(rng, {2, 3, 2})).passed());
}

TEST(Validate, ReportsEachFailure) {
  ModelSpec spec = models::qubit();
  spec.component.state = models::plus_state();  // not stationary, and v is not centred
  spec.system.state(0, 0) = 0.8;                // trace 1.1
  const auto report = validate(spec);
  EXPECT_FALSE(report.passed());
  EXPECT_FALSE(report.find("component.stationarity")->passed);
  EXPECT_FALSE(report.find("component.centralization.0")->passed);
  EXPECT_FALSE(report.find("system.state.trace")->passed);
  EXPECT_NEAR(report.find("system.state.trace")->violation, 0.1, 1e-12);
  EXPECT_TRUE(report.find("system.state.hermitian")->passed);
  EXPECT_THROW(require_valid(spec), Error);
}

TEST(Validate, ShapeMismatch) {
  ModelSpec spec = models::qubit();
  spec.component.couplings.push_back(models::sigma_x());
  EXPECT_FALSE(validate(spec).passed());
  EXPECT_THROW(spec.coupling_count(), Error);
}

TEST(Centralize, ShiftsAndWarns) {
  ModelSpec spec = models::qubit();
  spec.component.couplings[0] = models::sigma_x() + 0.3 * models::identity(2);
  const auto report = validate(spec);
  EXPECT_FALSE(report.passed());
  EXPECT_TRUE(report.passed_except_centralization());
  const auto c = centralize(spec);
  ASSERT_EQ(c.warnings.size(), 1u);
  EXPECT_TRUE(validate(c.spec).passed());
  EXPECT_LT(max_abs(c.spec.component.couplings[0] - models::sigma_x()), 1e-14);
}

TEST(Spectrum, QubitOrdering) {
  const auto s = spectral_decompose(models::qubit_component(0.25, 1.0));
  EXPECT_NEAR(s.energies(0), 0.0, 1e-15);
  EXPECT_NEAR(s.energies(1), 1.0, 1e-15);
  EXPECT_NEAR(s.populations(0), 0.25, 1e-15);
  EXPECT_NEAR(s.populations(1), 0.75, 1e-15);
  // v = |up><down| maps spectral level 0 to level 1.
  const OperatorMatrix v = s.to_eigenbasis(models::sigma_plus());
  EXPECT_NEAR(std::abs(v(1, 0)), 1.0, 1e-15);
  EXPECT_NEAR(std::abs(v(0, 1)), 0.0, 1e-15);
}

TEST(Spectrum, DegenerateBlockUsesState) {
  // h_R degenerate on the first two levels; rho_R mixes them.
  OperatorMatrix h = OperatorMatrix::Zero(3, 3);
  h(2, 2) = 2.0;
  OperatorMatrix rho = OperatorMatrix::Zero(3, 3);
  rho.topLeftCorner(2, 2) = 0.8 * models::plus_state() + 0.1 * models::identity(2);
  rho(2, 2) = 0.0;
  const ComponentSpec comp{h, rho, {}};
  const auto s = spectral_decompose(comp);
  EXPECT_NEAR(s.populations(0), 0.9, 1e-12);
  EXPECT_NEAR(s.populations(1), 0.1, 1e-12);
  EXPECT_NEAR(s.energies(2), 2.0, 1e-12);
  const OperatorMatrix hd = s.to_eigenbasis(h), rd = s.to_eigenbasis(rho);
  EXPECT_LT(max_abs(hd - OperatorMatrix(hd.diagonal().asDiagonal())), 1e-12);
  EXPECT_LT(max_abs(rd - OperatorMatrix(rd.diagonal().asDiagonal())), 1e-12);
  EXPECT_EQ(s.rank(), 2);
}

TEST(Spectrum, RejectsNonStationary) {
  const ComponentSpec comp{models::sigma_z(), models::plus_state(), {}};
  try {
    spectral_decompose(comp);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotSimultaneouslyDiagonalizable);
    EXPECT_NEAR(e.measured(), 1.0, 1e-12);
  }
}
