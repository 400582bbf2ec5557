#pragma once

// Closed forms for non-demolition models (H_S and G diagonal in one basis)
// and observables derived from trajectories.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "bosonize/model.hpp"
#include "bosonize/trajectory.hpp"

namespace bosonize {

struct NonDemolitionSpec {
  RealVector levels;               // e_j
  std::vector<Complex> weights;    // g_j, G = diag(g)
  ComponentSpec component;         // single coupling v

  Index dim() const { return levels.size(); }

  /// The full model with the given initial system state.
  ModelSpec model(const OperatorMatrix& rho_s) const {
    if (static_cast<Index>(weights.size()) != levels.size())
      throw Error(ErrorKind::DimensionMismatch, "levels and weights differ in length");
    if (component.couplings.size() != 1)
      throw Error(ErrorKind::InvalidArgument, "non-demolition models take exactly one coupling");
    OperatorMatrix g = OperatorMatrix::Zero(dim(), dim());
    for (Index j = 0; j < dim(); ++j) g(j, j) = weights[j];
    return {{levels.cast<Complex>().asDiagonal(), rho_s, {g}}, component};
  }
};

namespace detail {

/// sum over modes (k,l), p_k > tol_pop, of p_k |(conj(g_n)-conj(g_m)) conj(v_kl) + (g_n-g_m) v_lk|^2 f(omega_kl),
/// where f receives the frequency.
template <class F>
double mode_sum(const NonDemolitionSpec& nd, Index m, Index n, const Tolerances& tol, F&& f) {
  if (m < 0 || n < 0 || m >= nd.dim() || n >= nd.dim()) throw Error(ErrorKind::InvalidArgument, "level out of range");
  const ComponentSpectrum s = spectral_decompose(nd.component, tol);
  const OperatorMatrix v = s.to_eigenbasis(nd.component.couplings.at(0));
  const Complex dg = nd.weights[n] - nd.weights[m];
  double sum = 0.0;
  for (Index k = 0; k < s.dim(); ++k) {
    if (!(s.populations(k) > tol.pop)) continue;
    for (Index l = 0; l < s.dim(); ++l) {
      const double amp = std::norm(std::conj(dg) * std::conj(v(k, l)) + dg * v(l, k));
      if (amp == 0.0) continue;
      sum += s.populations(k) * amp * f(s.energies(l) - s.energies(k));
    }
  }
  return sum;
}

}  // namespace detail

/// |D_mn(t)| = prod_modes exp[-2 p_k sin^2(t w/2)/w^2 |...|^2], with
/// sin^2(t w/2)/w^2 -> t^2/4 at w = 0. Zero-frequency modes (v_kk != 0) are
/// part of the product.
inline double decoherence_modulus(const NonDemolitionSpec& nd, Index m, Index n, double t,
                                  const Tolerances& tol = {}) {
  const double exponent = detail::mode_sum(nd, m, n, tol, [t](double w) {
    if (std::abs(w) < 1e-300) return 0.25 * t * t;
    const double s = std::sin(0.5 * t * w);
    return s * s / (w * w);
  });
  return std::exp(-2.0 * exponent);
}

/// Leading small-t behaviour exp[-(t^2/2) sum_modes p_k |...|^2]. For real g
/// and Hermitian v this is exp[-2 (g_m-g_n)^2 t^2 sum p_k |v_kl|^2].
inline double short_time_gaussian(const NonDemolitionSpec& nd, Index m, Index n, double t,
                                  const Tolerances& tol = {}) {
  const double rate = detail::mode_sum(nd, m, n, tol, [](double) { return 1.0; });
  return std::exp(-0.5 * t * t * rate);
}

/// min over modes of 1/|omega_kl|, ignoring zero-frequency modes (infinity
/// when there are none).
inline double min_inverse_frequency(const ComponentSpec& comp, const Tolerances& tol = {}) {
  const ComponentSpectrum s = spectral_decompose(comp, tol);
  double w_max = 0.0;
  for (const auto& vq : comp.couplings) {
    const OperatorMatrix v = s.to_eigenbasis(vq);
    for (Index k = 0; k < s.dim(); ++k) {
      if (!(s.populations(k) > tol.pop)) continue;
      for (Index l = 0; l < s.dim(); ++l)
        if (std::abs(v(k, l)) > tol.mat || std::abs(v(l, k)) > tol.mat)
          w_max = std::max(w_max, std::abs(s.energies(l) - s.energies(k)));
    }
  }
  return w_max > 0.0 ? 1.0 / w_max : std::numeric_limits<double>::infinity();
}

/// |<psi_m| rho(t) |psi_n>| / |<psi_m| rho(0) |psi_n>| along a trajectory.
inline std::vector<double> coherence_ratio(const Trajectory& traj, const OperatorMatrix& basis, Index m, Index n) {
  const Complex c0 = basis.col(m).dot(traj.states.at(0) * basis.col(n));
  if (std::abs(c0) == 0.0) throw Error(ErrorKind::InvalidArgument, "initial coherence is zero");
  std::vector<double> out;
  for (const auto& rho : traj.states) out.push_back(std::abs(basis.col(m).dot(rho * basis.col(n))) / std::abs(c0));
  return out;
}

/// max over times and levels of |<psi_j|rho(t)|psi_j> - <psi_j|rho(0)|psi_j>|.
inline double population_drift(const Trajectory& traj, const OperatorMatrix& basis) {
  if (traj.states.empty()) return 0.0;
  const OperatorMatrix p0 = basis.adjoint() * traj.states.front() * basis;
  double drift = 0.0;
  for (const auto& rho : traj.states) {
    const OperatorMatrix p = basis.adjoint() * rho * basis;
    for (Index j = 0; j < p.rows(); ++j) drift = std::max(drift, std::abs(p(j, j) - p0(j, j)));
  }
  return drift;
}

/// (t, negativity) for a bipartite system of dimensions dA x dB.
inline std::vector<std::pair<double, double>> entanglement_trajectory(const Trajectory& traj, Index da, Index db) {
  std::vector<std::pair<double, double>> out;
  for (std::size_t i = 0; i < traj.states.size(); ++i) {
    if (traj.states[i].rows() != da * db)
      throw Error(ErrorKind::DimensionMismatch, "state dimension " + std::to_string(traj.states[i].rows()) +
                                                    " is not " + std::to_string(da) + " x " + std::to_string(db));
    out.emplace_back(traj.times[i], negativity(traj.states[i], da, db));
  }
  return out;
}

}  // namespace bosonize
