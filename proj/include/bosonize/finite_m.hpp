#pragma once

// Exact dynamics of the system coupled to M identical reservoir components,
// on H_S (x) H_R^(x)M, reduced to the system.
//
// The reservoir initial state rho_R^(x)M is a mixture of product eigenstates
// chi_{j_1} (x) ... (x) chi_{j_M} with weight prod p_{j_m}. The Hamiltonian and
// the partial trace are invariant under permutations of the components, so
// every configuration with the same multiset of labels gives the same reduced
// dynamics: the sum runs over multisets with multinomial weights.

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "bosonize/model.hpp"
#include "bosonize/trajectory.hpp"

namespace bosonize {

enum class Scaling { mesoscopic, meanfield, none };

inline std::string to_string(Scaling s) {
  switch (s) {
    case Scaling::mesoscopic: return "mesoscopic";
    case Scaling::meanfield: return "meanfield";
    case Scaling::none: return "none";
  }
  return "?";
}

inline double coupling_scale(Scaling s, int m) {
  switch (s) {
    case Scaling::mesoscopic: return 1.0 / std::sqrt(static_cast<double>(m));
    case Scaling::meanfield: return 1.0 / static_cast<double>(m);
    case Scaling::none: return 1.0;
  }
  return 1.0;
}

struct MonteCarloPolicy {
  std::uint64_t seed = 0;
  std::size_t samples = 1000;
};

struct FiniteMConfig {
  int M = 1;
  Scaling scaling = Scaling::mesoscopic;
  Propagation propagation = Propagation::automatic;
  std::optional<MonteCarloPolicy> monte_carlo;  // empty: exact multiset sum
  Index dim_cap = Index{1} << 20;
  KrylovOptions krylov;
  Tolerances tol;
};

inline double finite_m_dimension(const ModelSpec& spec, int m) {
  return static_cast<double>(spec.system.dim()) * std::pow(static_cast<double>(spec.component.dim()), m);
}

/// H = H_S + sum_m h_R^[m] + sum_q G_q (x) s sum_m v_q^[m] + h.c. on the
/// layout [d_S, d_R, ..., d_R].
inline KronGenerator build_hamiltonian_terms(const ModelSpec& spec, const FiniteMConfig& cfg) {
  if (cfg.M < 1) throw Error(ErrorKind::InvalidArgument, "M must be >= 1");
  const std::size_t q_count = spec.coupling_count();
  const double dim = finite_m_dimension(spec, cfg.M);
  if (dim > static_cast<double>(cfg.dim_cap))
    throw Error(ErrorKind::DimensionOverflow,
                "d_S * d_R^M = " + std::to_string(dim) + " exceeds the cap " + std::to_string(cfg.dim_cap) +
                    "; reduce M",
                dim);

  TensorLayout layout{{spec.system.dim()}};
  for (int m = 0; m < cfg.M; ++m) layout.dims.push_back(spec.component.dim());
  KronGenerator gen(layout);
  gen.add({{{0, spec.system.hamiltonian}}});
  for (int m = 1; m <= cfg.M; ++m) gen.add({{{static_cast<std::size_t>(m), spec.component.hamiltonian}}});

  const double s = coupling_scale(cfg.scaling, cfg.M);
  for (std::size_t q = 0; q < q_count; ++q) {
    const auto& g = spec.system.couplings[q];
    const auto& v = spec.component.couplings[q];
    if (max_abs(v) == 0.0 || max_abs(g) == 0.0) continue;
    const OperatorMatrix g_dag = g.adjoint();
    const OperatorMatrix v_dag = v.adjoint();
    for (int m = 1; m <= cfg.M; ++m) {
      const auto site = static_cast<std::size_t>(m);
      gen.add({{{0, g}, {site, v}}, s});
      gen.add({{{0, g_dag}, {site, v_dag}}, s});
    }
  }
  return gen;
}

/// Occupation counts (n_0, ..., n_{d-1}) summing to M, lexicographic order.
inline std::vector<std::vector<int>> multisets(int d, int m) {
  std::vector<std::vector<int>> out;
  std::vector<int> counts(d, 0);
  std::function<void(int, int)> rec = [&](int pos, int left) {
    if (pos == d - 1) {
      counts[pos] = left;
      out.push_back(counts);
      return;
    }
    for (int c = left; c >= 0; --c) {
      counts[pos] = c;
      rec(pos + 1, left - c);
    }
  };
  rec(0, m);
  return out;
}

/// M! / prod n_j! * prod p_j^{n_j}.
inline double multinomial_weight(const std::vector<int>& counts, const RealVector& p) {
  double log_w = 0.0;
  int m = 0;
  for (std::size_t j = 0; j < counts.size(); ++j) {
    if (counts[j] == 0) continue;
    if (p(static_cast<Index>(j)) <= 0.0) return 0.0;
    log_w += counts[j] * std::log(p(static_cast<Index>(j))) - std::lgamma(counts[j] + 1.0);
    m += counts[j];
  }
  return std::exp(log_w + std::lgamma(m + 1.0));
}

namespace detail {

/// phi (x) chi_{j_1} (x) ... with labels filled in multiset order.
inline StateVector product_state(const StateVector& phi, const ComponentSpectrum& spec, const std::vector<int>& counts) {
  StateVector psi = phi;
  for (std::size_t j = 0; j < counts.size(); ++j)
    for (int c = 0; c < counts[j]; ++c) psi = kron(psi, StateVector(spec.basis.col(static_cast<Index>(j))));
  return psi;
}

}  // namespace detail

inline Trajectory reduce_dynamics_finite(const ModelSpec& spec, const FiniteMConfig& cfg,
                                         const std::vector<double>& times) {
  require_valid(spec, cfg.tol);
  require_grid(times);
  const KronGenerator gen = build_hamiltonian_terms(spec, cfg);
  const ComponentSpectrum spectrum = spectral_decompose(spec.component, cfg.tol);
  const auto branches = pure_branches(spec.system.state);
  const Index d_s = spec.system.dim();

  // Multisets to evaluate, with either exact weights or sample counts.
  std::vector<std::vector<int>> sets;
  std::vector<double> weights;
  std::size_t samples = 0;
  if (!cfg.monte_carlo) {
    for (auto& counts : multisets(static_cast<int>(spectrum.dim()), cfg.M)) {
      const double w = multinomial_weight(counts, spectrum.populations);
      if (w <= 0.0) continue;
      sets.push_back(std::move(counts));
      weights.push_back(w);
    }
  } else {
    samples = cfg.monte_carlo->samples;
    if (samples < 1) throw Error(ErrorKind::InvalidArgument, "monte_carlo needs samples >= 1");
    std::mt19937_64 rng(cfg.monte_carlo->seed);
    std::vector<double> p(spectrum.populations.data(), spectrum.populations.data() + spectrum.dim());
    for (auto& x : p) x = std::max(0.0, x);
    std::discrete_distribution<int> pick(p.begin(), p.end());
    std::map<std::vector<int>, std::size_t> tally;
    for (std::size_t s = 0; s < samples; ++s) {
      std::vector<int> counts(spectrum.dim(), 0);
      for (int m = 0; m < cfg.M; ++m) ++counts[pick(rng)];
      ++tally[counts];
    }
    for (auto& [counts, n] : tally) {
      sets.push_back(counts);
      weights.push_back(static_cast<double>(n) / static_cast<double>(samples));
    }
  }

  std::vector<StateVector> initial;
  for (const auto& counts : sets)
    for (const auto& br : branches) initial.push_back(detail::product_state(br.state, spectrum, counts));

  const auto evolved = evolve_reduced(gen, initial, times, d_s, cfg.propagation, cfg.krylov, cfg.tol.herm);

  // Per-multiset reduced trajectories (system branches folded in), then the
  // weighted sum in multiset order.
  const std::size_t nt = times.size();
  std::vector<std::vector<OperatorMatrix>> per_set(sets.size(),
                                                   std::vector<OperatorMatrix>(nt, OperatorMatrix::Zero(d_s, d_s)));
  for (std::size_t s = 0; s < sets.size(); ++s)
    for (std::size_t b = 0; b < branches.size(); ++b)
      for (std::size_t i = 0; i < nt; ++i) per_set[s][i] += branches[b].weight * evolved[s * branches.size() + b][i];

  Trajectory traj;
  traj.times = times;
  traj.states.assign(nt, OperatorMatrix::Zero(d_s, d_s));
  for (std::size_t s = 0; s < sets.size(); ++s)
    for (std::size_t i = 0; i < nt; ++i) traj.states[i] += weights[s] * per_set[s][i];

  if (cfg.monte_carlo) {
    traj.uncertainty.assign(nt, OperatorMatrix::Zero(d_s, d_s));
    const double n = static_cast<double>(samples);
    for (std::size_t i = 0; i < nt; ++i) {
      Eigen::MatrixXd var_re = Eigen::MatrixXd::Zero(d_s, d_s), var_im = Eigen::MatrixXd::Zero(d_s, d_s);
      for (std::size_t s = 0; s < sets.size(); ++s) {
        const OperatorMatrix diff = per_set[s][i] - traj.states[i];
        var_re += (weights[s] * n) * diff.real().cwiseAbs2();
        var_im += (weights[s] * n) * diff.imag().cwiseAbs2();
      }
      const double denom = std::max(1.0, n - 1.0) * n;
      traj.uncertainty[i].real() = (var_re / denom).cwiseSqrt();
      traj.uncertainty[i].imag() = (var_im / denom).cwiseSqrt();
    }
  }

  traj.provenance["simulator"] = "finite_m";
  traj.provenance["M"] = std::to_string(cfg.M);
  traj.provenance["scaling"] = to_string(cfg.scaling);
  traj.provenance["propagation"] = use_dense(cfg.propagation, gen.dim()) ? "dense" : "krylov";
  traj.provenance["branch_policy"] = cfg.monte_carlo ? "monte_carlo" : "exact_multiset";
  traj.provenance["multisets"] = std::to_string(sets.size());
  if (cfg.monte_carlo) {
    traj.provenance["mc_seed"] = std::to_string(cfg.monte_carlo->seed);
    traj.provenance["mc_samples"] = std::to_string(samples);
  }
  return traj;
}

struct ErrorRow {
  int M;
  double distance;       // max over time of the trace distance to the reference
  double ratio_doubled;  // d(M) / d(2M) when the next row has 2M, else NaN
};

struct ErrorTable {
  std::vector<ErrorRow> rows;
};

/// Finite-M runs against a reference trajectory on the same grid.
inline ErrorTable convergence_scan(const ModelSpec& spec, const std::vector<int>& ms, const std::vector<double>& times,
                                   const Trajectory& reference, FiniteMConfig cfg = {}) {
  if (reference.times != times) throw Error(ErrorKind::GridMismatch, "reference trajectory uses a different grid");
  ErrorTable table;
  for (int m : ms) {
    cfg.M = m;
    const Trajectory traj = reduce_dynamics_finite(spec, cfg, times);
    table.rows.push_back({m, max_trace_distance(traj, reference), std::nan("")});
  }
  for (std::size_t i = 0; i + 1 < table.rows.size(); ++i)
    if (table.rows[i + 1].M == 2 * table.rows[i].M && table.rows[i + 1].distance > 0.0)
      table.rows[i].ratio_doubled = table.rows[i].distance / table.rows[i + 1].distance;
  return table;
}

}  // namespace bosonize
