#pragma once

// Reservoir correlation functions: two-point functions on both sides of the
// correspondence, the Wick pairing sum, finite-M multi-time moments by
// cluster expansion, and the central-limit convergence scan.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "bosonize/fluctuation.hpp"
#include "bosonize/model.hpp"

namespace bosonize {

/// v_q(t) or v_q^dagger(t), with v(t) = e^{ith} v e^{-ith}. On the bosonic
/// side the same label means X_q(t) or X_q^dagger(t).
struct DressedOperator {
  std::size_t q = 0;
  bool dag = false;
  double t = 0.0;
};

// ---------------------------------------------------------------------------
// Pairings

using Pairing = std::vector<std::pair<int, int>>;

/// All perfect matchings of {0..n-1}, built by pairing the smallest unpaired
/// index first: first elements increase and each pair is ordered.
inline std::vector<Pairing> enumerate_pairings(int n) {
  std::vector<Pairing> out;
  if (n < 0 || n % 2 != 0) return out;
  Pairing current;
  std::vector<bool> used(n, false);
  std::function<void()> rec = [&] {
    int first = 0;
    while (first < n && used[first]) ++first;
    if (first == n) {
      out.push_back(current);
      return;
    }
    used[first] = true;
    for (int second = first + 1; second < n; ++second) {
      if (used[second]) continue;
      used[second] = true;
      current.emplace_back(first, second);
      rec();
      current.pop_back();
      used[second] = false;
    }
    used[first] = false;
  };
  rec();
  return out;
}

/// (n-1)!! for even n, 0 for odd n.
inline std::uint64_t double_factorial_odd(int n) {
  if (n % 2 != 0) return 0;
  std::uint64_t r = 1;
  for (int k = n - 1; k > 1; k -= 2) r *= static_cast<std::uint64_t>(k);
  return r;
}

/// Sum over pairings of the product of kernel(op_first, op_second).
template <class Op, class Kernel>
Complex wick_sum(std::span<const Op> ops, Kernel&& kernel) {
  const int n = static_cast<int>(ops.size());
  if (n % 2 != 0) return 0.0;
  if (n == 0) return 1.0;
  Complex sum = 0.0;
  for (const auto& pairing : enumerate_pairings(n)) {
    Complex term = 1.0;
    for (const auto& [a, b] : pairing) term *= kernel(ops[a], ops[b]);
    sum += term;
  }
  return sum;
}

template <class Op, class Kernel>
Complex wick_sum(const std::vector<Op>& ops, Kernel&& kernel) {
  return wick_sum(std::span<const Op>(ops), std::forward<Kernel>(kernel));
}

// ---------------------------------------------------------------------------
// Set partitions

/// Restricted-growth strings of length n with no block of size 1. Each entry
/// maps position -> block index; blocks are numbered by first appearance.
inline std::vector<std::vector<int>> partitions_without_singletons(int n) {
  std::vector<std::vector<int>> out;
  if (n == 0) {
    out.push_back({});
    return out;
  }
  std::vector<int> rgs(n, 0), sizes;
  std::function<void(int, int)> rec = [&](int pos, int blocks) {
    if (pos == n) {
      for (int b = 0; b < blocks; ++b)
        if (sizes[b] < 2) return;
      out.push_back(rgs);
      return;
    }
    // Prune: remaining positions must be able to fill every singleton.
    int lonely = 0;
    for (int b = 0; b < blocks; ++b)
      if (sizes[b] < 2) ++lonely;
    if (lonely > n - pos) return;
    for (int b = 0; b <= blocks; ++b) {
      rgs[pos] = b;
      if (b == blocks) sizes.push_back(0);
      ++sizes[b];
      rec(pos + 1, b == blocks ? blocks + 1 : blocks);
      --sizes[b];
      if (b == blocks) sizes.pop_back();
    }
  };
  rec(0, 0);
  return out;
}

/// M (M-1) ... (M-k+1) as a double.
inline double falling_factorial(double m, int k) {
  double r = 1.0;
  for (int i = 0; i < k; ++i) r *= (m - i);
  return r;
}

// ---------------------------------------------------------------------------
// Reservoir side

class ReservoirCorrelations {
 public:
  ReservoirCorrelations(ComponentSpectrum spectrum, const std::vector<OperatorMatrix>& couplings)
      : spectrum_(std::move(spectrum)) {
    for (const auto& v : couplings) {
      const OperatorMatrix ve = spectrum_.to_eigenbasis(v);
      plain_.push_back(ve);
      dagger_.push_back(ve.adjoint());
    }
  }

  const ComponentSpectrum& spectrum() const { return spectrum_; }
  std::size_t coupling_count() const { return plain_.size(); }

  /// Eigenbasis matrix of v_q^sigma(t): entries scaled by e^{it(E_k - E_l)}.
  OperatorMatrix dressed(const DressedOperator& op) const {
    if (op.q >= plain_.size()) throw Error(ErrorKind::InvalidArgument, "coupling index out of range");
    OperatorMatrix m = op.dag ? dagger_[op.q] : plain_[op.q];
    const auto& e = spectrum_.energies;
    for (Index k = 0; k < m.rows(); ++k)
      for (Index l = 0; l < m.cols(); ++l)
        if (m(k, l) != 0.0) m(k, l) *= std::exp(kI * (op.t * (e(k) - e(l))));
    return m;
  }

  /// tr(rho_R A(t) B(t')) = sum_{k,l} p_k A_kl e^{it(E_k-E_l)} B_lk e^{it'(E_l-E_k)}.
  Complex two_point(const DressedOperator& a, const DressedOperator& b) const {
    const OperatorMatrix& am = a.dag ? dagger_.at(a.q) : plain_.at(a.q);
    const OperatorMatrix& bm = b.dag ? dagger_.at(b.q) : plain_.at(b.q);
    const auto& e = spectrum_.energies;
    const auto& p = spectrum_.populations;
    Complex sum = 0.0;
    for (Index k = 0; k < am.rows(); ++k) {
      if (p(k) == 0.0) continue;
      for (Index l = 0; l < am.cols(); ++l) {
        const Complex x = am(k, l) * bm(l, k);
        if (x == 0.0) continue;
        sum += p(k) * x * std::exp(kI * ((a.t - b.t) * (e(k) - e(l))));
      }
    }
    return sum;
  }

  /// Single-component ordered trace tr(rho_R op_1 op_2 ...).
  Complex ordered_trace(std::span<const DressedOperator> ops) const {
    const Index d = spectrum_.dim();
    OperatorMatrix prod = OperatorMatrix::Identity(d, d);
    for (const auto& op : ops) prod = prod * dressed(op);
    Complex sum = 0.0;
    for (Index k = 0; k < d; ++k) sum += spectrum_.populations(k) * prod(k, k);
    return sum;
  }

  /// <V_1 ... V_n> for collective operators V = M^{-1/2} sum_m v^[m] in
  /// rho_R^(x)M, by summing over set partitions of the positions into
  /// same-site clusters. Clusters of size one vanish (centred couplings).
  Complex multitime_finite(std::span<const DressedOperator> ops, double m) const {
    const int n = static_cast<int>(ops.size());
    if (n < 1 || n > 10) throw Error(ErrorKind::InvalidArgument, "multitime_finite supports 1 <= n <= 10");
    std::unordered_map<std::uint32_t, Complex> cache;
    auto block_trace = [&](std::uint32_t mask) {
      if (auto it = cache.find(mask); it != cache.end()) return it->second;
      std::vector<DressedOperator> sub;
      for (int i = 0; i < n; ++i)
        if (mask & (1u << i)) sub.push_back(ops[i]);
      const Complex v = ordered_trace(sub);
      cache.emplace(mask, v);
      return v;
    };
    const double norm = std::pow(m, -0.5 * n);
    Complex sum = 0.0;
    for (const auto& rgs : partitions_without_singletons(n)) {
      const int blocks = rgs.empty() ? 0 : *std::max_element(rgs.begin(), rgs.end()) + 1;
      if (blocks > m) continue;
      std::vector<std::uint32_t> masks(blocks, 0);
      for (int i = 0; i < n; ++i) masks[rgs[i]] |= (1u << i);
      Complex term = falling_factorial(m, blocks) * norm;
      for (auto mask : masks) term *= block_trace(mask);
      sum += term;
    }
    return sum;
  }

  Complex wick(std::span<const DressedOperator> ops) const {
    return wick_sum(ops, [this](const DressedOperator& a, const DressedOperator& b) { return two_point(a, b); });
  }

 private:
  ComponentSpectrum spectrum_;
  std::vector<OperatorMatrix> plain_;
  std::vector<OperatorMatrix> dagger_;
};

// ---------------------------------------------------------------------------
// Bosonic side

/// A linear field sum_j alpha_j a_j + beta_j a_j^dagger.
struct LinearField {
  std::vector<Complex> alpha;
  std::vector<Complex> beta;
};

/// X_q(t) or X_q^dagger(t) in the vacuum oscillators' Heisenberg picture.
inline LinearField field(const FluctuationModel& model, const DressedOperator& op) {
  if (op.q >= model.coupling_count()) throw Error(ErrorKind::InvalidArgument, "coupling index out of range");
  LinearField f;
  for (std::size_t j = 0; j < model.size(); ++j) {
    const Complex down = std::exp(-kI * (model.frequencies[j] * op.t));
    const Complex up = std::conj(down);
    if (!op.dag) {
      f.alpha.push_back(std::conj(model.z[op.q][j]) * down);
      f.beta.push_back(model.w[op.q][j] * up);
    } else {
      f.alpha.push_back(std::conj(model.w[op.q][j]) * down);
      f.beta.push_back(model.z[op.q][j] * up);
    }
  }
  return f;
}

/// Vacuum <A B> = sum_j alpha^A_j beta^B_j.
inline Complex two_point_bosonic(const FluctuationModel& model, const DressedOperator& a, const DressedOperator& b) {
  const LinearField fa = field(model, a), fb = field(model, b);
  Complex sum = 0.0;
  for (std::size_t j = 0; j < model.size(); ++j) sum += fa.alpha[j] * fb.beta[j];
  return sum;
}

/// <0| X_1 ... X_n |0> computed directly with every mode truncated at
/// `cutoff`. Exact whenever cutoff >= n/2.
inline Complex truncated_vacuum_moment(const FluctuationModel& model, std::span<const DressedOperator> ops,
                                       int cutoff) {
  const std::size_t modes = model.size();
  if (modes == 0) return ops.empty() ? 1.0 : 0.0;
  const OperatorMatrix a = annihilation(cutoff);
  const Index local = cutoff + 1;
  std::vector<OperatorMatrix> lowered;
  for (std::size_t j = 0; j < modes; ++j) {
    OperatorMatrix full = OperatorMatrix::Identity(1, 1);
    for (std::size_t i = 0; i < modes; ++i)
      full = kron(full, i == j ? a : OperatorMatrix::Identity(local, local));
    lowered.push_back(full);
  }
  const Index dim = lowered.front().rows();
  StateVector psi = StateVector::Zero(dim);
  psi(0) = 1.0;
  // Apply right to left onto the vacuum ket.
  for (std::size_t i = ops.size(); i-- > 0;) {
    const LinearField f = field(model, ops[i]);
    StateVector next = StateVector::Zero(dim);
    for (std::size_t j = 0; j < modes; ++j) {
      if (f.alpha[j] != 0.0) next += f.alpha[j] * (lowered[j] * psi);
      if (f.beta[j] != 0.0) next += f.beta[j] * (lowered[j].adjoint() * psi);
    }
    psi = std::move(next);
  }
  return psi(0);
}

// ---------------------------------------------------------------------------
// Central-limit scan

struct CltRow {
  double M;
  Complex value;    // C_M
  double error;     // |C_M - Wick| for even n, |C_M| for odd n
};

inline std::vector<CltRow> clt_convergence(const ReservoirCorrelations& corr, std::span<const DressedOperator> ops,
                                           const std::vector<double>& ms) {
  const bool even = ops.size() % 2 == 0;
  const Complex limit = even ? corr.wick(ops) : Complex(0.0);
  std::vector<CltRow> rows;
  for (double m : ms) {
    const Complex c = corr.multitime_finite(ops, m);
    rows.push_back({m, c, std::abs(c - limit)});
  }
  return rows;
}

}  // namespace bosonize
