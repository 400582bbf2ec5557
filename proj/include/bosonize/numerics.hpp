#pragma once

// Dense complex linear algebra shared by all simulators.
//
// Tensor-index convention: for a layout with factor dimensions d_0, ..., d_{n-1}
// the basis state |i_0, ..., i_{n-1}> has linear index
//   i_0 * (d_1 ... d_{n-1}) + i_1 * (d_2 ... d_{n-1}) + ... + i_{n-1},
// i.e. the first factor varies slowest. kron(), KronGenerator and
// partial_trace() all follow it.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "bosonize/error.hpp"

namespace bosonize {

using Complex = std::complex<double>;
using OperatorMatrix = Eigen::MatrixXcd;
using StateVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using Index = Eigen::Index;

inline constexpr Complex kI{0.0, 1.0};

inline double max_abs(const OperatorMatrix& a) { return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff(); }

inline void require_square(const OperatorMatrix& a, const std::string& what) {
  if (a.rows() < 1 || a.rows() != a.cols())
    throw Error(ErrorKind::DimensionMismatch,
                what + " must be a non-empty square matrix (got " + std::to_string(a.rows()) + "x" +
                    std::to_string(a.cols()) + ")");
}

/// max |A - A^dagger|, the absolute hermiticity defect.
inline double hermiticity_defect(const OperatorMatrix& a) { return max_abs(a - a.adjoint()); }

/// Relative check: defect <= tol * max(1, max|A|).
inline bool is_hermitian(const OperatorMatrix& a, double tol = 1e-10) {
  return a.rows() == a.cols() && hermiticity_defect(a) <= tol * std::max(1.0, max_abs(a));
}

inline OperatorMatrix hermitian_part(const OperatorMatrix& a) { return 0.5 * (a + a.adjoint()); }

inline OperatorMatrix commutator(const OperatorMatrix& a, const OperatorMatrix& b) { return a * b - b * a; }

// ---------------------------------------------------------------------------
// Kronecker products

inline OperatorMatrix kron(const OperatorMatrix& a, const OperatorMatrix& b) {
  OperatorMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline StateVector kron(const StateVector& a, const StateVector& b) {
  StateVector out(a.size() * b.size());
  for (Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a(i) * b;
  return out;
}

struct TensorLayout {
  std::vector<Index> dims;

  std::size_t sites() const { return dims.size(); }

  /// Product of all factor dimensions; saturates instead of overflowing.
  Index total() const {
    Index t = 1;
    for (Index d : dims) {
      if (d != 0 && t > std::numeric_limits<Index>::max() / d) return std::numeric_limits<Index>::max();
      t *= d;
    }
    return t;
  }

  Index left_of(std::size_t site) const {
    Index t = 1;
    for (std::size_t i = 0; i < site; ++i) t *= dims[i];
    return t;
  }

  Index right_of(std::size_t site) const {
    Index t = 1;
    for (std::size_t i = site + 1; i < dims.size(); ++i) t *= dims[i];
    return t;
  }
};

/// out = (1 x ... x op_[site] x ... x 1) in. out must not alias in.
inline void apply_site(const OperatorMatrix& op, std::size_t site, const TensorLayout& layout, const Complex* in,
                       Complex* out) {
  const Index d = layout.dims[site];
  const Index left = layout.left_of(site);
  const Index right = layout.right_of(site);
  using ConstMap = Eigen::Map<const OperatorMatrix>;
  using Map = Eigen::Map<OperatorMatrix>;
  if (right == 1) {
    // Column-major (d x left) view: element (a, l) sits at l*d + a.
    Map(out, d, left).noalias() = op * ConstMap(in, d, left);
    return;
  }
  const OperatorMatrix op_t = op.transpose();
  for (Index l = 0; l < left; ++l) {
    // Column-major (right x d) view of one left-slice: element (r, a) at a*right + r.
    Map(out + l * d * right, right, d).noalias() = ConstMap(in + l * d * right, right, d) * op_t;
  }
}

struct SiteFactor {
  std::size_t site;
  OperatorMatrix op;
};

/// scalar * (tensor product of the listed factors), identity on unlisted sites.
struct KronTerm {
  std::vector<SiteFactor> factors;
  Complex scalar{1.0, 0.0};
};

/// A generator given as a sum of Kronecker terms over a fixed layout. It is
/// applied to vectors without ever forming the full matrix.
class KronGenerator {
 public:
  KronGenerator() = default;
  explicit KronGenerator(TensorLayout layout) : layout_(std::move(layout)) {}

  const TensorLayout& layout() const { return layout_; }
  const std::vector<KronTerm>& terms() const { return terms_; }
  Index dim() const { return layout_.total(); }

  void add(KronTerm term) {
    std::vector<std::size_t> seen;
    for (const auto& f : term.factors) {
      if (f.site >= layout_.sites())
        throw Error(ErrorKind::DimensionMismatch, "term factor on site " + std::to_string(f.site) +
                                                      " outside a layout of " + std::to_string(layout_.sites()));
      if (std::find(seen.begin(), seen.end(), f.site) != seen.end())
        throw Error(ErrorKind::InvalidArgument, "term lists site " + std::to_string(f.site) + " twice");
      if (f.op.rows() != layout_.dims[f.site] || f.op.cols() != layout_.dims[f.site])
        throw Error(ErrorKind::DimensionMismatch, "factor on site " + std::to_string(f.site) + " has dimension " +
                                                      std::to_string(f.op.rows()) + ", layout expects " +
                                                      std::to_string(layout_.dims[f.site]));
      seen.push_back(f.site);
    }
    terms_.push_back(std::move(term));
  }

  /// out = H psi.
  void apply(const StateVector& psi, StateVector& out) const {
    if (psi.size() != dim())
      throw Error(ErrorKind::DimensionMismatch,
                  "state of length " + std::to_string(psi.size()) + " for generator of dimension " +
                      std::to_string(dim()));
    out.setZero(psi.size());
    StateVector a(psi.size()), b(psi.size());
    for (const auto& term : terms_) {
      if (term.factors.empty()) {
        out += term.scalar * psi;
        continue;
      }
      const Complex* src = psi.data();
      Complex* dst = a.data();
      for (const auto& f : term.factors) {
        apply_site(f.op, f.site, layout_, src, dst);
        src = dst;
        dst = (dst == a.data()) ? b.data() : a.data();
      }
      out.noalias() += term.scalar * Eigen::Map<const StateVector>(src, psi.size());
    }
  }

  StateVector apply(const StateVector& psi) const {
    StateVector out;
    apply(psi, out);
    return out;
  }

  /// Dense matrix of the generator (column by column through apply()).
  OperatorMatrix materialize() const {
    const Index n = dim();
    OperatorMatrix m(n, n);
    StateVector e = StateVector::Zero(n), col;
    for (Index j = 0; j < n; ++j) {
      e(j) = 1.0;
      apply(e, col);
      m.col(j) = col;
      e(j) = 0.0;
    }
    return m;
  }

 private:
  TensorLayout layout_;
  std::vector<KronTerm> terms_;
};

inline StateVector apply_generator(const KronGenerator& generator, const StateVector& psi) {
  return generator.apply(psi);
}

// ---------------------------------------------------------------------------
// Hermitian propagation

/// Eigendecomposition of a Hermitian generator, reused for every time.
class HermitianEvolution {
 public:
  explicit HermitianEvolution(const OperatorMatrix& h, double tol_herm = 1e-10) {
    require_square(h, "generator");
    const double defect = hermiticity_defect(h);
    if (defect > tol_herm * std::max(1.0, max_abs(h)))
      throw Error(ErrorKind::NotHermitian, "generator hermiticity defect " + std::to_string(defect), defect);
    Eigen::SelfAdjointEigenSolver<OperatorMatrix> solver(hermitian_part(h));
    energies_ = solver.eigenvalues();
    vectors_ = solver.eigenvectors();
  }

  const RealVector& energies() const { return energies_; }
  const OperatorMatrix& eigenvectors() const { return vectors_; }

  /// exp(-i t H).
  OperatorMatrix propagator(double t) const {
    return vectors_ * phases(t).asDiagonal() * vectors_.adjoint();
  }

  /// exp(-i t H) psi, given the eigenbasis coefficients V^dagger psi.
  StateVector evolve_coefficients(const StateVector& coefficients, double t) const {
    return vectors_ * phases(t).cwiseProduct(coefficients);
  }

  StateVector coefficients(const StateVector& psi) const { return vectors_.adjoint() * psi; }

 private:
  StateVector phases(double t) const {
    StateVector p(energies_.size());
    for (Index i = 0; i < energies_.size(); ++i) p(i) = std::exp(-kI * (t * energies_(i)));
    return p;
  }

  RealVector energies_;
  OperatorMatrix vectors_;
};

/// U = exp(-i t H) via full Hermitian eigendecomposition.
inline OperatorMatrix propagator(const OperatorMatrix& h, double t, double tol_herm = 1e-10) {
  return HermitianEvolution(h, tol_herm).propagator(t);
}

struct KrylovOptions {
  int max_dim = 30;
  double tol = 1e-9;
  int max_restarts = 40;
};

/// Approximates exp(-i dt H) psi with a Lanczos basis. The step is split
/// (halved and retried) whenever the a-posteriori residual estimate
///   beta_{j+1} * |e_j^T exp(-i h T_j) e_1| * ||psi||
/// exceeds opts.tol at the maximal basis size.
template <class ApplyFn>
StateVector krylov_step(ApplyFn&& apply_h, const StateVector& psi, double dt, const KrylovOptions& opts = {}) {
  StateVector state = psi;
  if (dt == 0.0) return state;
  const Index n = psi.size();
  const int m_max = static_cast<int>(std::min<Index>(opts.max_dim, n));

  double remaining = dt;
  double h = dt;
  int restarts = 0;
  double last_residual = 0.0;

  std::vector<StateVector> basis;
  basis.reserve(m_max + 1);
  StateVector w(n);

  while (std::abs(remaining) > 0.0) {
    if (std::abs(h) > std::abs(remaining)) h = remaining;
    const double norm = state.norm();
    if (norm == 0.0) return state;

    basis.clear();
    basis.push_back(state / norm);
    std::vector<double> alpha, beta;
    bool accepted = false;
    StateVector small_coeffs;

    for (int j = 0; j < m_max; ++j) {
      apply_h(basis[j], w);
      const double a = basis[j].dot(w).real();
      alpha.push_back(a);
      // Full reorthogonalisation; cheap next to the generator application.
      for (int pass = 0; pass < 2; ++pass)
        for (const auto& v : basis) w -= v.dot(w) * v;
      const double b = w.norm();

      const int size = j + 1;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;
      RealVector diag = Eigen::Map<RealVector>(alpha.data(), size);
      RealVector off = size > 1 ? RealVector(Eigen::Map<RealVector>(beta.data(), size - 1)) : RealVector();
      tri.computeFromTridiagonal(diag, off, Eigen::ComputeEigenvectors);
      StateVector phases(size);
      for (int i = 0; i < size; ++i) phases(i) = std::exp(-kI * (h * tri.eigenvalues()(i)));
      const StateVector first_row = tri.eigenvectors().row(0).transpose().cast<Complex>();
      StateVector coeffs = tri.eigenvectors().cast<Complex>() * phases.cwiseProduct(first_row);

      const bool breakdown = b <= 1e-14 * std::max(1.0, std::abs(a));
      const double residual = b * std::abs(coeffs(size - 1)) * norm;
      last_residual = residual;
      if (breakdown || residual <= opts.tol) {
        small_coeffs = std::move(coeffs);
        accepted = true;
        break;
      }
      if (j + 1 < m_max) {
        beta.push_back(b);
        basis.push_back(w / b);
      }
    }

    if (!accepted) {
      if (++restarts > opts.max_restarts)
        throw Error(ErrorKind::NoConvergence,
                    "Lanczos step did not reach tolerance (residual " + std::to_string(last_residual) + ")",
                    last_residual);
      h *= 0.5;
      continue;
    }

    StateVector next = StateVector::Zero(n);
    for (Index i = 0; i < small_coeffs.size(); ++i) next += small_coeffs(i) * basis[i];
    state = norm * next;
    remaining -= h;
  }
  return state;
}

inline StateVector krylov_step(const KronGenerator& generator, const StateVector& psi, double dt,
                               const KrylovOptions& opts = {}) {
  return krylov_step([&](const StateVector& x, StateVector& y) { generator.apply(x, y); }, psi, dt, opts);
}

// ---------------------------------------------------------------------------
// Reductions and measures

inline Index product(std::span<const Index> dims) {
  return std::accumulate(dims.begin(), dims.end(), Index{1}, std::multiplies<>());
}

/// Partial trace keeping the factors listed in `keep` (any order; the result
/// follows the layout order of the kept factors).
inline OperatorMatrix partial_trace(const OperatorMatrix& rho, std::span<const Index> dims,
                                    std::span<const std::size_t> keep) {
  if (keep.empty()) throw Error(ErrorKind::EmptyKeepSet, "partial trace needs at least one kept factor");
  if (rho.rows() != rho.cols() || product(dims) != rho.rows())
    throw Error(ErrorKind::DimensionMismatch, "factor dimensions do not multiply to the matrix dimension");
  std::vector<bool> kept(dims.size(), false);
  for (std::size_t k : keep) {
    if (k >= dims.size()) throw Error(ErrorKind::DimensionMismatch, "kept factor index out of range");
    kept[k] = true;
  }
  std::vector<Index> stride(dims.size(), 1);
  for (std::size_t i = dims.size(); i-- > 1;) stride[i - 1] = stride[i] * dims[i];

  // Offsets of every kept (resp. traced) multi-index into the full index.
  auto offsets = [&](bool want_kept) {
    std::vector<Index> off{0};
    for (std::size_t i = 0; i < dims.size(); ++i) {
      if (kept[i] != want_kept) continue;
      std::vector<Index> next;
      next.reserve(off.size() * dims[i]);
      for (Index base : off)
        for (Index a = 0; a < dims[i]; ++a) next.push_back(base + a * stride[i]);
      off = std::move(next);
    }
    return off;
  };
  const auto keep_off = offsets(true);
  const auto trace_off = offsets(false);

  const Index dk = static_cast<Index>(keep_off.size());
  OperatorMatrix out = OperatorMatrix::Zero(dk, dk);
  for (Index i = 0; i < dk; ++i)
    for (Index j = 0; j < dk; ++j) {
      Complex s = 0.0;
      for (Index r : trace_off) s += rho(keep_off[i] + r, keep_off[j] + r);
      out(i, j) = s;
    }
  return out;
}

/// Reduced density matrix of the first factor (dimension d_first) of a pure
/// state: rho(s, s') = sum_r psi[s, r] conj(psi[s', r]).
inline OperatorMatrix reduce_pure_to_first(const StateVector& psi, Index d_first) {
  const Index rest = psi.size() / d_first;
  Eigen::Map<const OperatorMatrix> b(psi.data(), rest, d_first);
  return b.transpose() * b.conjugate();
}

inline double trace_distance(const OperatorMatrix& rho, const OperatorMatrix& sigma) {
  if (rho.rows() != sigma.rows() || rho.cols() != sigma.cols())
    throw Error(ErrorKind::DimensionMismatch, "trace distance of matrices with different dimensions");
  Eigen::SelfAdjointEigenSolver<OperatorMatrix> solver(hermitian_part(rho - sigma), Eigen::EigenvaluesOnly);
  return 0.5 * solver.eigenvalues().cwiseAbs().sum();
}

/// rho^{T_B} for rho on C^dA (x) C^dB.
inline OperatorMatrix partial_transpose_second(const OperatorMatrix& rho, Index da, Index db) {
  if (da * db != rho.rows() || rho.rows() != rho.cols())
    throw Error(ErrorKind::DimensionMismatch, "partial transpose: dA*dB does not match the matrix dimension");
  OperatorMatrix out(rho.rows(), rho.cols());
  for (Index a = 0; a < da; ++a)
    for (Index b = 0; b < db; ++b)
      for (Index a2 = 0; a2 < da; ++a2)
        for (Index b2 = 0; b2 < db; ++b2) out(a * db + b, a2 * db + b2) = rho(a * db + b2, a2 * db + b);
  return out;
}

/// Sum of |negative eigenvalues| of the partial transpose over the second factor.
inline double negativity(const OperatorMatrix& rho, Index da, Index db) {
  const OperatorMatrix pt = partial_transpose_second(rho, da, db);
  Eigen::SelfAdjointEigenSolver<OperatorMatrix> solver(hermitian_part(pt), Eigen::EigenvaluesOnly);
  double neg = 0.0;
  for (Index i = 0; i < solver.eigenvalues().size(); ++i)
    if (solver.eigenvalues()(i) < 0.0) neg -= solver.eigenvalues()(i);
  return neg;
}

}  // namespace bosonize
