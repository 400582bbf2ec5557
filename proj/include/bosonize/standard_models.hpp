#pragma once

// Reference models used by the bundled configs, the tests and the acceptance
// run, plus a generator of random valid models.
//
// Qubit component convention: basis (|up>, |down>), h_R = diag(omega_R, 0),
// rho_R = diag(1 - w, w), v = |up><down|. The down level (energy 0) carries
// population w.

#include <cmath>
#include <random>

#include "bosonize/analytics.hpp"
#include "bosonize/model.hpp"

namespace bosonize::models {

inline OperatorMatrix mat2(Complex a, Complex b, Complex c, Complex d) {
  OperatorMatrix m(2, 2);
  m << a, b, c, d;
  return m;
}

inline OperatorMatrix sigma_x() { return mat2(0, 1, 1, 0); }
inline OperatorMatrix sigma_y() { return mat2(0, -kI, kI, 0); }
inline OperatorMatrix sigma_z() { return mat2(1, 0, 0, -1); }
inline OperatorMatrix sigma_minus() { return mat2(0, 0, 1, 0); }
inline OperatorMatrix sigma_plus() { return mat2(0, 1, 0, 0); }
inline OperatorMatrix identity(Index d) { return OperatorMatrix::Identity(d, d); }

inline OperatorMatrix projector(const StateVector& psi) { return psi * psi.adjoint(); }

inline ComponentSpec qubit_component(double w, double omega_r) {
  return {mat2(omega_r, 0, 0, 0), mat2(1.0 - w, 0, 0, w), {sigma_plus()}};
}

/// H_S = 0.5 sigma_z, G = sigma_minus scaled by `coupling`.
inline ModelSpec qubit(double w = 0.25, double omega_r = 1.0, double coupling = 1.0) {
  return {{0.5 * sigma_z(), mat2(0.7, 0.2, 0.2, 0.3), {coupling * sigma_minus()}}, qubit_component(w, omega_r)};
}

/// Three-level component in its ground state with v_q = |q><1| (q = 2, 3),
/// energies (0, 1, 1.7), coupled to a qubit through sigma_minus and 0.5 sigma_x.
inline ModelSpec multimode() {
  const Index d = 3;
  OperatorMatrix h = OperatorMatrix::Zero(d, d);
  h(1, 1) = 1.0;
  h(2, 2) = 1.7;
  OperatorMatrix rho = OperatorMatrix::Zero(d, d);
  rho(0, 0) = 1.0;
  std::vector<OperatorMatrix> v;
  for (Index q = 1; q < d; ++q) {
    OperatorMatrix x = OperatorMatrix::Zero(d, d);
    x(q, 0) = 1.0;
    v.push_back(x);
  }
  return {{0.5 * sigma_z(), mat2(0.7, 0.2, 0.2, 0.3), {sigma_minus(), 0.5 * sigma_x()}}, {h, rho, v}};
}

/// Two qubits sharing a two-level component in its ground state:
/// H_S = 0.5 (sigma_z (x) 1 + 1 (x) sigma_z), G = lambda (sigma_x (x) 1 + 1 (x) sigma_x),
/// h_R = diag(0, 1), rho_R = |1><1|, v = |1><2|. Initial state |down, down>.
inline ModelSpec braun(double lambda = 0.2) {
  const OperatorMatrix i2 = identity(2);
  OperatorMatrix h = 0.5 * (kron(sigma_z(), i2) + kron(i2, sigma_z()));
  OperatorMatrix g = lambda * (kron(sigma_x(), i2) + kron(i2, sigma_x()));
  StateVector down_down = StateVector::Zero(4);
  down_down(3) = 1.0;
  return {{h, projector(down_down), {g}}, {mat2(0, 0, 0, 1), mat2(1, 0, 0, 0), {sigma_plus()}}};
}

/// Levels e = (0, 1), weights g = (0.3, -0.3), qubit component with w = 0.5,
/// omega_R = 1 and v = sigma_x.
inline NonDemolitionSpec nondemolition() {
  NonDemolitionSpec nd;
  nd.levels = RealVector::LinSpaced(2, 0.0, 1.0);
  nd.weights = {0.3, -0.3};
  nd.component = {mat2(1.0, 0, 0, 0), mat2(0.5, 0, 0, 0.5), {sigma_x()}};
  return nd;
}

/// |+><+| for the non-demolition fixture.
inline OperatorMatrix plus_state() { return mat2(0.5, 0.5, 0.5, 0.5); }

// ---------------------------------------------------------------------------
// Random models

enum class CouplingShape { generic, zero_diagonal, dense };

struct RandomModelOptions {
  Index d_s = 2;
  Index d_r = 2;
  int q = 1;
  CouplingShape shape = CouplingShape::generic;
  int rank = 0;       // rank of rho_R; 0 = full
  double scale = 1.0; // overall coupling size
};

inline OperatorMatrix random_matrix(std::mt19937_64& rng, Index d) {
  std::normal_distribution<double> n(0.0, 1.0);
  OperatorMatrix m(d, d);
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j) m(i, j) = Complex(n(rng), n(rng));
  return m;
}

inline OperatorMatrix random_hermitian(std::mt19937_64& rng, Index d) { return hermitian_part(random_matrix(rng, d)); }

inline OperatorMatrix random_density(std::mt19937_64& rng, Index d) {
  const OperatorMatrix a = random_matrix(rng, d);
  OperatorMatrix rho = a * a.adjoint();
  return rho / rho.trace().real();
}

/// Diagonal h_R with well-separated random levels, diagonal rho_R with
/// distinct random populations, couplings v_q centred in rho_R.
inline ModelSpec random_model(std::mt19937_64& rng, const RandomModelOptions& opt) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Index d = opt.d_r;
  OperatorMatrix h = OperatorMatrix::Zero(d, d);
  double e = 0.0;
  for (Index k = 0; k < d; ++k) {
    h(k, k) = e;
    e += 0.5 + u(rng);
  }
  const int rank = opt.rank > 0 ? opt.rank : static_cast<int>(d);
  std::vector<double> p(d, 0.0);
  double total = 0.0;
  for (int k = 0; k < rank; ++k) total += (p[k] = 0.2 + u(rng) + 0.01 * k);
  OperatorMatrix rho = OperatorMatrix::Zero(d, d);
  for (Index k = 0; k < d; ++k) rho(k, k) = p[k] / total;

  std::vector<OperatorMatrix> g, v;
  for (int q = 0; q < opt.q; ++q) {
    g.push_back(opt.scale * random_matrix(rng, opt.d_s) / std::sqrt(static_cast<double>(opt.d_s)));
    OperatorMatrix x = random_matrix(rng, d) / std::sqrt(static_cast<double>(d));
    if (opt.shape == CouplingShape::zero_diagonal) {
      x.diagonal().setZero();
    } else {
      x -= (rho * x).trace() * identity(d);
      if (opt.shape == CouplingShape::dense) {
        // Centring can leave a small diagonal entry; push it away from zero
        // while keeping tr(rho v) = 0.
        for (Index k = 0; k < d; ++k)
          if (std::abs(x(k, k)) < 1e-3) x(k, k) += 0.1;
        x -= (rho * x).trace() * identity(d);
      }
    }
    v.push_back(x);
  }
  return {{random_hermitian(rng, opt.d_s), random_density(rng, opt.d_s), g}, {h, rho, v}};
}

}  // namespace bosonize::models
