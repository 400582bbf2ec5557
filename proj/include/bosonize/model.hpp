#pragma once

// System + reservoir-component model data, validation of the standing
// assumptions (stationary component state, centred couplings) and the joint
// eigendecomposition of (h_R, rho_R).

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "bosonize/numerics.hpp"
#include "bosonize/tolerances.hpp"

namespace bosonize {

struct SystemSpec {
  OperatorMatrix hamiltonian;               // H_S
  OperatorMatrix state;                     // rho_S
  std::vector<OperatorMatrix> couplings;    // G_q, not necessarily Hermitian

  Index dim() const { return hamiltonian.rows(); }
};

struct ComponentSpec {
  OperatorMatrix hamiltonian;               // h_R
  OperatorMatrix state;                     // rho_R
  std::vector<OperatorMatrix> couplings;    // v_q

  Index dim() const { return hamiltonian.rows(); }
};

struct ModelSpec {
  SystemSpec system;
  ComponentSpec component;

  /// Q, inferred from the coupling lists. Throws when they disagree.
  std::size_t coupling_count() const {
    if (system.couplings.size() != component.couplings.size())
      throw Error(ErrorKind::DimensionMismatch, "system lists " + std::to_string(system.couplings.size()) +
                                                    " couplings G_q but component lists " +
                                                    std::to_string(component.couplings.size()) + " couplings v_q");
    if (system.couplings.empty()) throw Error(ErrorKind::InvalidArgument, "at least one coupling pair is required");
    return system.couplings.size();
  }

  /// Shape checks only (square, consistent dimensions, Q >= 1).
  void require_shapes() const {
    require_square(system.hamiltonian, "system hamiltonian");
    require_square(component.hamiltonian, "component hamiltonian");
    const std::size_t q = coupling_count();
    auto same = [](const OperatorMatrix& m, Index d, const std::string& what) {
      if (m.rows() != d || m.cols() != d)
        throw Error(ErrorKind::DimensionMismatch,
                    what + " has dimension " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                        ", expected " + std::to_string(d));
    };
    same(system.state, system.dim(), "system state");
    same(component.state, component.dim(), "component state");
    for (std::size_t i = 0; i < q; ++i) {
      same(system.couplings[i], system.dim(), "system coupling " + std::to_string(i));
      same(component.couplings[i], component.dim(), "component coupling " + std::to_string(i));
    }
  }
};

// ---------------------------------------------------------------------------
// Validation

struct CheckResult {
  std::string name;
  bool passed = false;
  double violation = 0.0;
  double tolerance = 0.0;
};

struct ValidationReport {
  std::vector<CheckResult> checks;

  bool passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
  }

  const CheckResult* find(const std::string& name) const {
    for (const auto& c : checks)
      if (c.name == name) return &c;
    return nullptr;
  }

  /// True when every check except the centralisation ones passes.
  bool passed_except_centralization() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) {
      return c.passed || c.name.rfind("component.centralization", 0) == 0;
    });
  }
};

namespace detail {

inline double min_eigenvalue(const OperatorMatrix& m) {
  Eigen::SelfAdjointEigenSolver<OperatorMatrix> s(hermitian_part(m), Eigen::EigenvaluesOnly);
  return s.eigenvalues()(0);
}

inline void density_checks(ValidationReport& r, const std::string& prefix, const OperatorMatrix& rho,
                           const Tolerances& tol) {
  const double herm = hermiticity_defect(rho);
  r.checks.push_back({prefix + ".hermitian", herm <= tol.herm * std::max(1.0, max_abs(rho)), herm, tol.herm});
  const double lowest = min_eigenvalue(rho);
  const double neg = std::max(0.0, -lowest);
  r.checks.push_back({prefix + ".positive", neg <= tol.psd, neg, tol.psd});
  const double tr = std::abs(rho.trace() - Complex(1.0));
  r.checks.push_back({prefix + ".trace", tr <= tol.trace, tr, tol.trace});
}

}  // namespace detail

/// Runs every standing-assumption check; failures are report entries.
inline ValidationReport validate(const ModelSpec& spec, const Tolerances& tol = {}) {
  ValidationReport r;
  try {
    spec.require_shapes();
    r.checks.push_back({"shapes", true, 0.0, 0.0});
  } catch (const Error& e) {
    r.checks.push_back({"shapes", false, 1.0, 0.0});
    return r;
  }
  const auto& s = spec.system;
  const auto& c = spec.component;

  const double hs = hermiticity_defect(s.hamiltonian);
  r.checks.push_back({"system.hamiltonian.hermitian", hs <= tol.herm * std::max(1.0, max_abs(s.hamiltonian)), hs,
                      tol.herm});
  detail::density_checks(r, "system.state", s.state, tol);

  const double hr = hermiticity_defect(c.hamiltonian);
  r.checks.push_back({"component.hamiltonian.hermitian", hr <= tol.herm * std::max(1.0, max_abs(c.hamiltonian)),
                      hr, tol.herm});
  detail::density_checks(r, "component.state", c.state, tol);

  const double stat = max_abs(commutator(c.hamiltonian, c.state));
  r.checks.push_back({"component.stationarity", stat <= tol.stat, stat, tol.stat});

  for (std::size_t q = 0; q < c.couplings.size(); ++q) {
    const double mean = std::abs((c.state * c.couplings[q]).trace());
    r.checks.push_back({"component.centralization." + std::to_string(q), mean <= tol.cent, mean, tol.cent});
  }
  return r;
}

/// Throws ValidationFailed listing the failed checks.
inline void require_valid(const ModelSpec& spec, const Tolerances& tol = {}) {
  const auto report = validate(spec, tol);
  if (report.passed()) return;
  std::string msg = "model validation failed:";
  double worst = 0.0;
  for (const auto& c : report.checks)
    if (!c.passed) {
      msg += " " + c.name + " (violation " + std::to_string(c.violation) + ")";
      worst = std::max(worst, c.violation);
    }
  throw Error(ErrorKind::ValidationFailed, msg, worst);
}

struct Centralized {
  ModelSpec spec;
  std::vector<std::string> warnings;
};

/// Replaces every v_q by v_q - tr(rho_R v_q) 1. This changes the model: the
/// discarded term sum_q tr(rho_R v_q) sqrt(M) G_q grows with M, so each
/// nonzero shift is reported as a warning.
inline Centralized centralize(const ModelSpec& spec, const Tolerances& tol = {}) {
  Centralized out{spec, {}};
  auto& comp = out.spec.component;
  const Index d = comp.dim();
  for (std::size_t q = 0; q < comp.couplings.size(); ++q) {
    const Complex mean = (comp.state * comp.couplings[q]).trace();
    if (std::abs(mean) <= tol.cent) continue;
    comp.couplings[q] -= mean * OperatorMatrix::Identity(d, d);
    out.warnings.push_back("coupling " + std::to_string(q) + " shifted by tr(rho_R v) = (" +
                           std::to_string(mean.real()) + ", " + std::to_string(mean.imag()) +
                           "); the dropped term scales as sqrt(M) and the model has changed");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Joint spectrum of (h_R, rho_R)

struct ComponentSpectrum {
  RealVector populations;  // p_j
  RealVector energies;     // E_j, ascending
  OperatorMatrix basis;    // columns chi_j

  Index dim() const { return energies.size(); }

  /// rank(rho_R) with the given population threshold.
  Index rank(double tol_pop = 1e-12) const {
    Index r = 0;
    for (Index j = 0; j < populations.size(); ++j)
      if (populations(j) > tol_pop) ++r;
    return r;
  }

  /// Matrix elements <chi_k| a |chi_l>.
  OperatorMatrix to_eigenbasis(const OperatorMatrix& a) const { return basis.adjoint() * a * basis; }
};

/// Simultaneous eigenbasis: h_R first, then rho_R inside each degenerate
/// energy block (|E_i - E_j| <= 1e-9 max|E|). Ordering: E ascending, ties by
/// p descending, then by position in the h_R eigensolver output.
inline ComponentSpectrum spectral_decompose(const ComponentSpec& comp, const Tolerances& tol = {}) {
  require_square(comp.hamiltonian, "component hamiltonian");
  const double stat = max_abs(commutator(comp.hamiltonian, comp.state));
  if (stat > tol.stat)
    throw Error(ErrorKind::NotSimultaneouslyDiagonalizable,
                "component state is not stationary (commutator " + std::to_string(stat) + ")", stat);
  const Index d = comp.dim();
  Eigen::SelfAdjointEigenSolver<OperatorMatrix> hsolve(hermitian_part(comp.hamiltonian));
  const RealVector& e = hsolve.eigenvalues();
  const OperatorMatrix& u = hsolve.eigenvectors();
  const double scale = e.cwiseAbs().maxCoeff();
  const double degenerate = std::max(1e-9 * scale, 1e-14);

  struct Entry {
    double energy, population;
    Index block, order;
    StateVector vec;
  };
  std::vector<Entry> entries;
  Index start = 0;
  while (start < d) {
    Index stop = start + 1;
    while (stop < d && std::abs(e(stop) - e(start)) <= degenerate) ++stop;
    const Index n = stop - start;
    const OperatorMatrix block = u.middleCols(start, n);
    const OperatorMatrix rho_block = hermitian_part(block.adjoint() * comp.state * block);
    Eigen::SelfAdjointEigenSolver<OperatorMatrix> psolve(rho_block);
    for (Index i = 0; i < n; ++i) {
      StateVector v = block * psolve.eigenvectors().col(i);
      entries.push_back({0.0, psolve.eigenvalues()(i), start, start + i, v});
    }
    start = stop;
  }

  for (auto& en : entries) {
    // Fix the phase: the largest component (first on ties) is real positive.
    Index arg = 0;
    for (Index i = 1; i < en.vec.size(); ++i)
      if (std::abs(en.vec(i)) > std::abs(en.vec(arg)) * (1.0 + 1e-12)) arg = i;
    en.vec *= std::conj(en.vec(arg)) / std::abs(en.vec(arg));
    en.vec.normalize();
    en.energy = en.vec.dot(comp.hamiltonian * en.vec).real();
    en.population = en.vec.dot(comp.state * en.vec).real();
  }
  // Blocks come in ascending energy; order within each block.
  std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    if (a.block != b.block) return a.block < b.block;
    if (a.population != b.population) return a.population > b.population;
    return a.order < b.order;
  });

  ComponentSpectrum out;
  out.populations.resize(d);
  out.energies.resize(d);
  out.basis.resize(d, d);
  for (Index j = 0; j < d; ++j) {
    out.basis.col(j) = entries[j].vec;
    out.energies(j) = entries[j].energy;
    double p = entries[j].population;
    if (p < 0.0 && p >= -tol.psd) p = 0.0;
    out.populations(j) = p;
  }

  const OperatorMatrix hd = out.basis.adjoint() * comp.hamiltonian * out.basis;
  const OperatorMatrix rd = out.basis.adjoint() * comp.state * out.basis;
  double off = 0.0;
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j)
      if (i != j) off = std::max({off, std::abs(hd(i, j)), std::abs(rd(i, j))});
  if (off > 1e-8)
    throw Error(ErrorKind::NotSimultaneouslyDiagonalizable,
                "residual off-diagonal " + std::to_string(off) + " after block diagonalisation", off);
  return out;
}

}  // namespace bosonize
