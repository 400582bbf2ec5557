#pragma once

// The equivalent bosonic reservoir: one oscillator per allowed transition
// (k,l) of the component, started in the vacuum, with frequency E_l - E_k.
// Also the thermal single-mode representation where it exists.

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "bosonize/model.hpp"
#include "bosonize/trajectory.hpp"

namespace bosonize {

struct Mode {
  Index k = 0;
  Index l = 0;
  bool operator==(const Mode&) const = default;
};

/// X_q = sum_j conj(z_qj) a_j + w_qj a_j^dagger.
struct FluctuationModel {
  std::vector<Mode> modes;
  std::vector<double> frequencies;            // E_l - E_k
  std::vector<std::vector<Complex>> z;        // [q][mode]
  std::vector<std::vector<Complex>> w;        // [q][mode]

  std::size_t size() const { return modes.size(); }
  std::size_t coupling_count() const { return z.size(); }
};

/// Pairs (k,l) with p_k > tol_pop and |v_kl| or |v_lk| > tol_mat for some q,
/// in lexicographic order. Diagonal pairs are kept when v_kk != 0.
inline std::vector<Mode> build_mode_set(const ComponentSpectrum& spectrum, const std::vector<OperatorMatrix>& couplings,
                                        const Tolerances& tol = {}) {
  std::vector<OperatorMatrix> eig;
  for (const auto& v : couplings) eig.push_back(spectrum.to_eigenbasis(v));
  std::vector<Mode> out;
  const Index d = spectrum.dim();
  for (Index k = 0; k < d; ++k) {
    if (!(spectrum.populations(k) > tol.pop)) continue;
    for (Index l = 0; l < d; ++l)
      for (const auto& v : eig)
        if (std::abs(v(k, l)) > tol.mat || std::abs(v(l, k)) > tol.mat) {
          out.push_back({k, l});
          break;
        }
  }
  return out;
}

inline FluctuationModel build_fluctuation_model(const ModelSpec& spec, const Tolerances& tol = {}) {
  const ComponentSpectrum spectrum = spectral_decompose(spec.component, tol);
  const std::size_t q_count = spec.coupling_count();
  FluctuationModel m;
  m.modes = build_mode_set(spectrum, spec.component.couplings, tol);
  for (const auto& md : m.modes) m.frequencies.push_back(spectrum.energies(md.l) - spectrum.energies(md.k));
  m.z.assign(q_count, {});
  m.w.assign(q_count, {});
  for (std::size_t q = 0; q < q_count; ++q) {
    const OperatorMatrix v = spectrum.to_eigenbasis(spec.component.couplings[q]);
    for (const auto& md : m.modes) {
      const double amp = std::sqrt(spectrum.populations(md.k));
      m.z[q].push_back(amp * std::conj(v(md.k, md.l)));
      m.w[q].push_back(amp * v(md.l, md.k));
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// Truncated Fock space

struct FockConfig {
  int cutoff = 4;                 // initial n_max for every mode
  std::vector<int> cutoffs;       // per-mode override; empty: use `cutoff`
  bool adaptive = true;
  double adapt_tol = 1e-6;
  Index dim_cap = Index{1} << 20;
  Propagation propagation = Propagation::automatic;
  KrylovOptions krylov;
  Tolerances tol;
};

/// a on span{|0>, ..., |n_max>}.
inline OperatorMatrix annihilation(int n_max) {
  OperatorMatrix a = OperatorMatrix::Zero(n_max + 1, n_max + 1);
  for (int n = 1; n <= n_max; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  return a;
}

inline double fock_dimension(Index d_s, const std::vector<int>& cutoffs) {
  double dim = static_cast<double>(d_s);
  for (int c : cutoffs) dim *= static_cast<double>(c + 1);
  return dim;
}

/// H_SF = H_S + sum_j omega_j N_j + sum_q (G_q (x) X_q + G_q^dagger (x) X_q^dagger)
/// on the layout [d_S, n_1+1, n_2+1, ...].
inline KronGenerator build_fock_hamiltonian(const ModelSpec& spec, const FluctuationModel& model,
                                            const std::vector<int>& cutoffs, Index dim_cap = Index{1} << 20) {
  if (cutoffs.size() != model.size())
    throw Error(ErrorKind::DimensionMismatch, "expected " + std::to_string(model.size()) + " cutoffs, got " +
                                                  std::to_string(cutoffs.size()));
  for (int c : cutoffs)
    if (c < 1) throw Error(ErrorKind::InvalidArgument, "Fock cutoffs must be >= 1");
  const double dim = fock_dimension(spec.system.dim(), cutoffs);
  if (dim > static_cast<double>(dim_cap))
    throw Error(ErrorKind::DimensionOverflow,
                "truncated Fock dimension " + std::to_string(dim) + " exceeds the cap " + std::to_string(dim_cap), dim);

  TensorLayout layout{{spec.system.dim()}};
  for (int c : cutoffs) layout.dims.push_back(c + 1);
  KronGenerator gen(layout);
  gen.add({{{0, spec.system.hamiltonian}}});
  for (std::size_t j = 0; j < model.size(); ++j) {
    if (model.frequencies[j] == 0.0) continue;
    const OperatorMatrix a = annihilation(cutoffs[j]);
    gen.add({{{j + 1, a.adjoint() * a}}, model.frequencies[j]});
  }
  for (std::size_t q = 0; q < model.coupling_count(); ++q) {
    const OperatorMatrix& g = spec.system.couplings[q];
    const OperatorMatrix g_dag = g.adjoint();
    for (std::size_t j = 0; j < model.size(); ++j) {
      const Complex zc = std::conj(model.z[q][j]);
      const Complex wq = model.w[q][j];
      if (zc == 0.0 && wq == 0.0) continue;
      const OperatorMatrix a = annihilation(cutoffs[j]);
      const OperatorMatrix x = zc * a + wq * a.adjoint();
      gen.add({{{0, g}, {j + 1, x}}});
      gen.add({{{0, g_dag}, {j + 1, x.adjoint()}}});
    }
  }
  return gen;
}

struct BosonicResult {
  Trajectory trajectory;
  std::vector<int> cutoffs;
  double residual = std::numeric_limits<double>::quiet_NaN();  // NaN when not adaptive
  int refinements = 0;
};

namespace detail {

inline Trajectory bosonic_at(const ModelSpec& spec, const FluctuationModel& model, const std::vector<int>& cutoffs,
                             const FockConfig& fock, const std::vector<double>& times) {
  const KronGenerator gen = build_fock_hamiltonian(spec, model, cutoffs, fock.dim_cap);
  const auto branches = pure_branches(spec.system.state);
  const Index rest = gen.dim() / spec.system.dim();
  std::vector<StateVector> initial;
  for (const auto& br : branches) {
    StateVector vac = StateVector::Zero(rest);
    vac(0) = 1.0;
    initial.push_back(kron(br.state, vac));
  }
  const auto evolved = evolve_reduced(gen, initial, times, spec.system.dim(), fock.propagation, fock.krylov,
                                      fock.tol.herm);
  Trajectory traj;
  traj.times = times;
  traj.states.assign(times.size(), OperatorMatrix::Zero(spec.system.dim(), spec.system.dim()));
  for (std::size_t b = 0; b < branches.size(); ++b)
    for (std::size_t i = 0; i < times.size(); ++i) traj.states[i] += branches[b].weight * evolved[b][i];
  traj.provenance["propagation"] = use_dense(fock.propagation, gen.dim()) ? "dense" : "krylov";
  return traj;
}

inline std::string join(const std::vector<int>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + std::to_string(xs[i]);
  return s;
}

}  // namespace detail

/// Reduced dynamics from the system coupled to the vacuum oscillators.
///
/// Adaptive refinement: each round doubles every cutoff separately and
/// measures the max-over-time trace distance to the current trajectory. When
/// all of them are <= adapt_tol the current trajectory is returned and the
/// largest one is the recorded residual; otherwise the offending modes are
/// doubled together and the round repeats.
inline BosonicResult reduce_dynamics_bosonic(const ModelSpec& spec, const FockConfig& fock,
                                             const std::vector<double>& times) {
  require_valid(spec, fock.tol);
  require_grid(times);
  const FluctuationModel model = build_fluctuation_model(spec, fock.tol);

  BosonicResult r;
  r.cutoffs = fock.cutoffs.empty() ? std::vector<int>(model.size(), fock.cutoff) : fock.cutoffs;
  Trajectory current = detail::bosonic_at(spec, model, r.cutoffs, fock, times);

  if (fock.adaptive && model.size() > 0) {
    for (;;) {
      std::vector<double> delta(model.size(), 0.0);
      for (std::size_t j = 0; j < model.size(); ++j) {
        std::vector<int> trial = r.cutoffs;
        trial[j] *= 2;
        if (fock_dimension(spec.system.dim(), trial) > static_cast<double>(fock.dim_cap))
          throw Error(ErrorKind::DimensionOverflow,
                      "adaptive Fock refinement reached the dimension cap at cutoffs [" + detail::join(r.cutoffs) +
                          "] with residual " + (std::isnan(r.residual) ? std::string("unknown") : std::to_string(r.residual)),
                      r.residual);
        delta[j] = max_trace_distance(current, detail::bosonic_at(spec, model, trial, fock, times));
      }
      r.residual = *std::max_element(delta.begin(), delta.end());
      if (r.residual <= fock.adapt_tol) break;
      for (std::size_t j = 0; j < model.size(); ++j)
        if (delta[j] > fock.adapt_tol) r.cutoffs[j] *= 2;
      ++r.refinements;
      current = detail::bosonic_at(spec, model, r.cutoffs, fock, times);
    }
  }

  r.trajectory = std::move(current);
  auto& p = r.trajectory.provenance;
  p["simulator"] = "bosonic";
  p["modes"] = std::to_string(model.size());
  p["cutoffs"] = detail::join(r.cutoffs);
  p["adaptive"] = fock.adaptive ? "true" : "false";
  if (fock.adaptive) {
    std::ostringstream os;
    os.precision(17);
    os << r.residual;
    p["residual"] = os.str();
    p["refinements"] = std::to_string(r.refinements);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Thermal representation (single coupling)

struct ThermalMode {
  Index lo = 0;            // less populated level
  Index hi = 0;            // more populated level
  double frequency = 0.0;  // E_lo - E_hi
  double beta_omega = 0.0; // ln(p_hi / p_lo), +inf when p_lo = 0
  double covariance = 1.0; // (p_hi + p_lo) / (p_hi - p_lo) = 2 nbar + 1
  double coupling = 0.0;   // |g|, X = g a + conj(g) a^dagger
};

struct ThermalModes {
  std::vector<ThermalMode> modes;
};

enum class NotRepresentableReason { NonzeroDiagonal, PhasesNotOpposite, NotHermitian, EqualPopulations };

inline std::string to_string(NotRepresentableReason r) {
  switch (r) {
    case NotRepresentableReason::NonzeroDiagonal: return "nonzero_diagonal";
    case NotRepresentableReason::PhasesNotOpposite: return "phases_not_opposite";
    case NotRepresentableReason::NotHermitian: return "not_hermitian";
    case NotRepresentableReason::EqualPopulations: return "equal_populations";
  }
  return "?";
}

struct NotRepresentable {
  NotRepresentableReason reason;
  Index k = 0;
  Index l = 0;
  std::string detail;
};

using ThermalResult = std::variant<ThermalModes, NotRepresentable>;

/// Pairs k<l with v_kl != 0 and at least one populated level become one
/// thermal mode each. Needs zero diagonal, v_kl v_lk real (opposite phases),
/// v Hermitian, and p_k != p_l on every used pair.
inline ThermalResult thermal_representation(const ComponentSpectrum& spectrum, const OperatorMatrix& v,
                                            const Tolerances& tol = {}) {
  const OperatorMatrix ve = spectrum.to_eigenbasis(v);
  const Index d = spectrum.dim();
  const double scale = std::max(1.0, max_abs(ve));
  for (Index k = 0; k < d; ++k)
    if (std::abs(ve(k, k)) > tol.mat)
      return NotRepresentable{NotRepresentableReason::NonzeroDiagonal, k, k, "v has a nonzero diagonal element"};

  ThermalModes out;
  for (Index k = 0; k < d; ++k)
    for (Index l = k + 1; l < d; ++l) {
      const Complex a = ve(k, l), b = ve(l, k);
      if (std::abs(a) <= tol.mat && std::abs(b) <= tol.mat) continue;
      const double pk = spectrum.populations(k), pl = spectrum.populations(l);
      if (!(pk > tol.pop) && !(pl > tol.pop)) continue;
      if (std::abs((a * b).imag()) > tol.herm * scale * scale)
        return NotRepresentable{NotRepresentableReason::PhasesNotOpposite, k, l, "v_kl v_lk is not real"};
      if (std::abs(a - std::conj(b)) > tol.herm * scale)
        return NotRepresentable{NotRepresentableReason::NotHermitian, k, l, "v_kl != conj(v_lk)"};
      if (std::abs(pk - pl) <= tol.pop)
        return NotRepresentable{NotRepresentableReason::EqualPopulations, k, l,
                                "equal populations give a divergent covariance"};
      ThermalMode m;
      m.lo = pk < pl ? k : l;
      m.hi = pk < pl ? l : k;
      const double p_lo = std::max(0.0, spectrum.populations(m.lo)), p_hi = spectrum.populations(m.hi);
      m.frequency = spectrum.energies(m.lo) - spectrum.energies(m.hi);
      m.beta_omega = p_lo > 0.0 ? std::log(p_hi / p_lo) : std::numeric_limits<double>::infinity();
      m.covariance = (p_hi + p_lo) / (p_hi - p_lo);
      m.coupling = std::sqrt(p_hi - p_lo) * std::abs(a);
      out.modes.push_back(m);
    }
  return out;
}

/// <X(t) X(t')> in the product thermal state; X is Hermitian, so every
/// dagger pattern gives the same value.
inline Complex thermal_two_point(const ThermalModes& tm, double t, double t_prime) {
  Complex sum = 0.0;
  const double tau = t - t_prime;
  for (const auto& m : tm.modes) {
    const double g2 = m.coupling * m.coupling;
    const double nbar = 0.5 * (m.covariance - 1.0);
    sum += g2 * ((nbar + 1.0) * std::exp(-kI * (m.frequency * tau)) + nbar * std::exp(kI * (m.frequency * tau)));
  }
  return sum;
}

}  // namespace bosonize
