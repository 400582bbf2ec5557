#pragma once

// Reduced-system trajectories and the propagation engine shared by the
// finite-M and bosonic simulators.

#include <atomic>
#include <cstdlib>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "bosonize/numerics.hpp"

namespace bosonize {

struct Trajectory {
  std::vector<double> times;
  std::vector<OperatorMatrix> states;
  std::map<std::string, std::string> provenance;
  /// Extra per-time series (truncation bound, flags, ...), in insertion order.
  std::vector<std::pair<std::string, std::vector<double>>> columns;
  /// Entrywise standard errors (real part, imaginary part) for sampled runs.
  std::vector<OperatorMatrix> uncertainty;

  const std::vector<double>* column(const std::string& name) const {
    for (const auto& [n, c] : columns)
      if (n == name) return &c;
    return nullptr;
  }
};

/// steps+1 equally spaced times on [0, t_max].
inline std::vector<double> uniform_grid(double t_max, int steps) {
  if (steps < 1 || !(t_max > 0.0)) throw Error(ErrorKind::InvalidArgument, "time grid needs steps >= 1 and t_max > 0");
  std::vector<double> g(steps + 1);
  for (int i = 0; i <= steps; ++i) g[i] = t_max * static_cast<double>(i) / steps;
  return g;
}

inline void require_grid(const std::vector<double>& times) {
  if (times.empty() || times.front() != 0.0)
    throw Error(ErrorKind::InvalidArgument, "time grid must start at 0");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1])) throw Error(ErrorKind::InvalidArgument, "time grid must be strictly ascending");
}

struct DensityTolerances {
  double hermitian = 1e-8;
  double trace = 1e-8;
  double eigenvalue = 1e-7;
};

/// Human-readable list of density-matrix invariant violations; empty when the
/// trajectory is physical at every time.
inline std::vector<std::string> density_violations(const Trajectory& traj, const DensityTolerances& tol = {}) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < traj.states.size(); ++i) {
    const auto& rho = traj.states[i];
    const double t = i < traj.times.size() ? traj.times[i] : 0.0;
    const double herm = hermiticity_defect(rho);
    if (herm > tol.hermitian) out.push_back("t=" + std::to_string(t) + " hermiticity " + std::to_string(herm));
    const double tr = std::abs(rho.trace() - Complex(1.0));
    if (tr > tol.trace) out.push_back("t=" + std::to_string(t) + " trace " + std::to_string(tr));
    Eigen::SelfAdjointEigenSolver<OperatorMatrix> s(hermitian_part(rho), Eigen::EigenvaluesOnly);
    if (s.eigenvalues()(0) < -tol.eigenvalue)
      out.push_back("t=" + std::to_string(t) + " eigenvalue " + std::to_string(s.eigenvalues()(0)));
  }
  return out;
}

/// max over the common grid of the trace distance between two trajectories.
inline double max_trace_distance(const Trajectory& a, const Trajectory& b) {
  if (a.times != b.times || a.states.size() != b.states.size())
    throw Error(ErrorKind::GridMismatch, "trajectories are on different time grids");
  double d = 0.0;
  for (std::size_t i = 0; i < a.states.size(); ++i) d = std::max(d, trace_distance(a.states[i], b.states[i]));
  return d;
}

// ---------------------------------------------------------------------------
// Pure-state branches

struct PureBranch {
  double weight;
  StateVector state;
};

/// Spectral decomposition rho = sum_i lambda_i |phi_i><phi_i| keeping lambda_i > cutoff.
inline std::vector<PureBranch> pure_branches(const OperatorMatrix& rho, double cutoff = 1e-14) {
  Eigen::SelfAdjointEigenSolver<OperatorMatrix> s(hermitian_part(rho));
  std::vector<PureBranch> out;
  for (Index i = s.eigenvalues().size(); i-- > 0;)
    if (s.eigenvalues()(i) > cutoff) out.push_back({s.eigenvalues()(i), s.eigenvectors().col(i)});
  return out;
}

// ---------------------------------------------------------------------------
// Threading

/// Worker count from BOSONIZE_THREADS, else the hardware concurrency.
inline unsigned thread_count() {
  if (const char* env = std::getenv("BOSONIZE_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return static_cast<unsigned>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs body(i) for i in [0, n). Results must be written to per-index slots;
/// callers reduce them in index order so output does not depend on the
/// worker count.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(thread_count(), n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::jthread> pool;
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

// ---------------------------------------------------------------------------
// Propagation

enum class Propagation { dense, krylov, automatic };

inline constexpr Index kDenseLimit = 1024;

inline bool use_dense(Propagation mode, Index dim) {
  return mode == Propagation::dense || (mode == Propagation::automatic && dim <= kDenseLimit);
}

/// Evolves each initial vector under the generator and returns, per branch,
/// the reduced state of the first `d_keep` factor at every grid time.
/// Branches are independent work units.
inline std::vector<std::vector<OperatorMatrix>> evolve_reduced(const KronGenerator& generator,
                                                               const std::vector<StateVector>& initial,
                                                               const std::vector<double>& times, Index d_keep,
                                                               Propagation mode, const KrylovOptions& krylov,
                                                               double tol_herm = 1e-10) {
  std::vector<std::vector<OperatorMatrix>> out(initial.size());
  const Index dim = generator.dim();
  if (use_dense(mode, dim)) {
    const HermitianEvolution evolution(generator.materialize(), tol_herm);
    parallel_for(initial.size(), [&](std::size_t b) {
      const StateVector c = evolution.coefficients(initial[b]);
      auto& states = out[b];
      states.reserve(times.size());
      for (double t : times) states.push_back(reduce_pure_to_first(evolution.evolve_coefficients(c, t), d_keep));
    });
    return out;
  }
  parallel_for(initial.size(), [&](std::size_t b) {
    StateVector psi = initial[b];
    auto& states = out[b];
    states.reserve(times.size());
    double now = 0.0;
    for (double t : times) {
      psi = krylov_step(generator, psi, t - now, krylov);
      now = t;
      states.push_back(reduce_pure_to_first(psi, d_keep));
    }
  });
  return out;
}

}  // namespace bosonize
