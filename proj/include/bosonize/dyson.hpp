#pragma once

// Limiting reduced dynamics from the truncated Dyson series, with reservoir
// moments replaced by Wick pairing sums over the reservoir two-point function.
//
// Interaction picture, V(t) = sum_c G_c(t) (x) B_c(t) with c running over
// (q, plain) and (q, dagger). The n-th term is
//   (-i)^n int_{t >= t_1 >= ... >= t_n >= 0} tr_R [V(t_1), [V(t_2), ... [V(t_n), rho_S (x) rho_R]]].
// Expanding the commutators, every index j sits left (G_j ...) or right
// (... G_j, sign -1). The reservoir factor is then the moment of the sequence
// "right indices by decreasing j, then left indices by increasing j".

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "bosonize/correlations.hpp"
#include "bosonize/model.hpp"
#include "bosonize/trajectory.hpp"

namespace bosonize {

inline constexpr int kMaxDysonOrder = 6;

struct DysonConfig {
  int order = 4;
  int quadrature_points = 24;
  bool check_quadrature = true;     // compare P against 2P
  double quadrature_tol = 1e-6;     // QuadratureUnderResolved above this
  double validity_threshold = 0.1;  // flag times whose truncation bound exceeds it
  Tolerances tol;
};

/// Gauss-Legendre nodes and weights on [0, 1].
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n) {
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "quadrature needs at least one point");
  // P_n(z) and P_n'(z) by the three-term recurrence.
  auto legendre = [n](double z) {
    double p0 = 1.0, p1 = z;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    return std::pair{p1, n * (z * p1 - p0) / (z * z - 1.0)};
  };
  std::vector<double> x(n), w(n);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      const auto [p, dp] = legendre(z);
      const double step = p / dp;
      z -= step;
      if (std::abs(step) < 1e-16) break;
    }
    const double dp = legendre(z).second;
    x[n - 1 - i] = 0.5 * (z + 1.0);
    w[n - 1 - i] = 1.0 / ((1.0 - z * z) * dp * dp);
  }
  return {x, w};
}

/// Tail sum_{n > order} (2Q)^n (2e g v t)^n n^{n/2} / n! of the majorant
/// series, evaluated in log space.
inline double truncation_bound(double gmax, double vmax, int q, double t, int order) {
  if (gmax < 0.0 || vmax < 0.0 || q < 0 || t < 0.0 || order < 0)
    throw Error(ErrorKind::InvalidArgument, "truncation_bound arguments must be nonnegative");
  const double x = 2.0 * q * 2.0 * std::numbers::e * gmax * vmax * t;
  if (x == 0.0) return 0.0;
  const double log_x = std::log(x);
  double sum = 0.0, prev = -std::numeric_limits<double>::infinity();
  for (int n = order + 1; n < 1000000; ++n) {
    const double log_term = n * log_x + 0.5 * n * std::log(static_cast<double>(n)) - std::lgamma(n + 1.0);
    const double term = std::exp(log_term);
    sum += term;
    // Terms eventually decrease (n^{n/2}/n! ~ n^{-n/2} e^n); stop past the peak.
    if (log_term < prev && term < 1e-16 * sum) return sum;
    prev = log_term;
  }
  throw Error(ErrorKind::NoConvergence, "majorant tail did not converge");
}

namespace detail {

/// Entrywise Kahan accumulation of complex matrices.
struct KahanMatrix {
  OperatorMatrix sum, comp;
  explicit KahanMatrix(Index d) : sum(OperatorMatrix::Zero(d, d)), comp(OperatorMatrix::Zero(d, d)) {}
  void add(const OperatorMatrix& x) {
    const OperatorMatrix y = x - comp;
    const OperatorMatrix t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
};

struct DysonModel {
  ModelSpec spec;
  ReservoirCorrelations corr;
  HermitianEvolution free;
  std::vector<OperatorMatrix> g;     // label c = 2q + dag
  std::vector<DressedOperator> b;    // reservoir label (time filled per node)
};

inline DysonModel make_dyson_model(const ModelSpec& spec, const Tolerances& tol) {
  std::vector<OperatorMatrix> g;
  std::vector<DressedOperator> b;
  for (std::size_t q = 0; q < spec.system.couplings.size(); ++q) {
    g.push_back(spec.system.couplings[q]);
    b.push_back({q, false, 0.0});
    g.push_back(spec.system.couplings[q].adjoint());
    b.push_back({q, true, 0.0});
  }
  return {spec, ReservoirCorrelations(spectral_decompose(spec.component, tol), spec.component.couplings),
          HermitianEvolution(spec.system.hamiltonian, tol.herm), std::move(g), std::move(b)};
}

/// Sum over side/label choices of the signed system operator times the Wick
/// sum, at one set of ordered times t_1 >= ... >= t_n.
inline OperatorMatrix commutator_expansion(const DysonModel& m, const std::vector<double>& times,
                                           const std::vector<Pairing>& pairings) {
  const int n = static_cast<int>(times.size());
  const int labels = static_cast<int>(m.g.size());
  const Index d = m.spec.system.dim();

  // G_c(t_j) = e^{it H_S} G_c e^{-it H_S}.
  std::vector<std::vector<OperatorMatrix>> gt(n);
  for (int j = 0; j < n; ++j) {
    const OperatorMatrix u = m.free.propagator(times[j]);
    for (int c = 0; c < labels; ++c) gt[j].push_back(u.adjoint() * m.g[c] * u);
  }
  // kernel[(a*labels + ca) * n*labels + (b*labels + cb)] = c(B_ca(t_a), B_cb(t_b)).
  const int width = n * labels;
  std::vector<Complex> kernel(static_cast<std::size_t>(width) * width);
  for (int a = 0; a < n; ++a)
    for (int ca = 0; ca < labels; ++ca)
      for (int bb = 0; bb < n; ++bb)
        for (int cb = 0; cb < labels; ++cb) {
          DressedOperator x = m.b[ca], y = m.b[cb];
          x.t = times[a];
          y.t = times[bb];
          kernel[static_cast<std::size_t>(a * labels + ca) * width + bb * labels + cb] = m.corr.two_point(x, y);
        }

  std::vector<int> side(n), label(n);  // side 0 = left, 1 = right
  OperatorMatrix total = OperatorMatrix::Zero(d, d);
  std::vector<OperatorMatrix> stack(n + 1);
  stack[n] = m.spec.system.state;

  auto wick_weight = [&] {
    Complex sum = 0.0;
    for (const auto& pairing : pairings) {
      Complex term = 1.0;
      for (const auto& [a, bb] : pairing) {
        // a < b in j; the earlier one in the reservoir sequence comes first.
        const bool b_left = side[bb] == 0;
        const int first = b_left ? a : bb, second = b_left ? bb : a;
        term *= kernel[static_cast<std::size_t>(first * labels + label[first]) * width + second * labels +
                       label[second]];
        if (term == 0.0) break;
      }
      sum += term;
    }
    return sum;
  };

  std::function<void(int)> rec = [&](int j) {
    if (j < 0) {
      const Complex w = wick_weight();
      if (w != 0.0) total += w * stack[0];
      return;
    }
    for (int s = 0; s < 2; ++s)
      for (int c = 0; c < labels; ++c) {
        side[j] = s;
        label[j] = c;
        stack[j] = s == 0 ? OperatorMatrix(gt[j][c] * stack[j + 1]) : OperatorMatrix(-(stack[j + 1] * gt[j][c]));
        rec(j - 1);
      }
  };
  rec(n - 1);
  return total;
}

/// (-i)^n times the simplex integral of the n-th expansion term, P points per
/// dimension, mapped by t_1 = t u_1, t_k = t_{k-1} u_k.
inline OperatorMatrix dyson_term(const DysonModel& m, int n, double t, int points) {
  const Index d = m.spec.system.dim();
  if (n == 0) return m.spec.system.state;
  if (t == 0.0) return OperatorMatrix::Zero(d, d);
  const auto [nodes, weights] = gauss_legendre(points);
  const auto pairings = enumerate_pairings(n);
  KahanMatrix acc(d);
  std::vector<int> idx(n, 0);
  std::vector<double> times(n);
  for (;;) {
    double jac = std::pow(t, n), prev = t;
    for (int k = 0; k < n; ++k) {
      const double u = nodes[idx[k]];
      times[k] = prev * u;
      prev = times[k];
      jac *= weights[idx[k]] * std::pow(u, n - 1 - k);
    }
    acc.add(jac * commutator_expansion(m, times, pairings));
    int k = n - 1;
    while (k >= 0 && ++idx[k] == points) idx[k--] = 0;
    if (k < 0) break;
  }
  Complex phase = 1.0;
  for (int k = 0; k < n; ++k) phase *= -kI;
  return phase * acc.sum;
}

inline double operator_norm(const OperatorMatrix& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<OperatorMatrix> svd(a);
  return svd.singularValues()(0);
}

}  // namespace detail

/// Largest operator norms of G_q and v_q, used by the truncation bound.
inline std::pair<double, double> coupling_norms(const ModelSpec& spec) {
  double g = 0.0, v = 0.0;
  for (const auto& x : spec.system.couplings) g = std::max(g, detail::operator_norm(x));
  for (const auto& x : spec.component.couplings) v = std::max(v, detail::operator_norm(x));
  return {g, v};
}

/// Interaction-picture series summed to `order` at each time, rotated back to
/// the Schroedinger picture and symmetrised.
inline Trajectory dyson_propagate(const ModelSpec& spec, const DysonConfig& cfg, const std::vector<double>& times) {
  if (cfg.order < 0 || cfg.order > kMaxDysonOrder)
    throw Error(ErrorKind::OrderTooHigh,
                "Dyson order " + std::to_string(cfg.order) + " outside [0, " + std::to_string(kMaxDysonOrder) + "]",
                cfg.order);
  if (cfg.quadrature_points < 4) throw Error(ErrorKind::InvalidArgument, "quadrature_points must be >= 4");
  require_valid(spec, cfg.tol);
  require_grid(times);
  const detail::DysonModel model = detail::make_dyson_model(spec, cfg.tol);
  const auto [gmax, vmax] = coupling_norms(spec);
  const int q = static_cast<int>(spec.coupling_count());
  const Index d = spec.system.dim();

  const std::size_t nt = times.size();
  std::vector<OperatorMatrix> states(nt);
  std::vector<double> bound(nt), valid(nt), asym(nt), quad(nt, 0.0);
  parallel_for(nt, [&](std::size_t i) {
    const double t = times[i];
    auto sum_to_order = [&](int points) {
      detail::KahanMatrix acc(d);
      for (int n = 0; n <= cfg.order; ++n) acc.add(detail::dyson_term(model, n, t, points));
      return OperatorMatrix(acc.sum);
    };
    const OperatorMatrix rho_i = sum_to_order(cfg.quadrature_points);
    if (cfg.check_quadrature && cfg.order > 0 && t > 0.0)
      quad[i] = trace_distance(rho_i, sum_to_order(2 * cfg.quadrature_points));
    const OperatorMatrix u = model.free.propagator(t);
    const OperatorMatrix rho = u * rho_i * u.adjoint();
    asym[i] = hermiticity_defect(rho);
    states[i] = hermitian_part(rho);
    bound[i] = truncation_bound(gmax, vmax, q, t, cfg.order);
    valid[i] = bound[i] <= cfg.validity_threshold ? 1.0 : 0.0;
  });
  if (cfg.check_quadrature) {
    const double worst = *std::max_element(quad.begin(), quad.end());
    if (worst > cfg.quadrature_tol)
      throw Error(ErrorKind::QuadratureUnderResolved,
                  "quadrature error estimate " + std::to_string(worst) + " exceeds " +
                      std::to_string(cfg.quadrature_tol) + "; raise quadrature_points",
                  worst);
  }

  Trajectory traj;
  traj.times = times;
  traj.states = std::move(states);
  traj.columns = {{"truncation_bound", bound}, {"valid", valid}, {"asymmetry", asym}, {"quadrature_error", quad}};
  traj.provenance["simulator"] = "dyson";
  traj.provenance["order"] = std::to_string(cfg.order);
  traj.provenance["quadrature_points"] = std::to_string(cfg.quadrature_points);
  return traj;
}

}  // namespace bosonize
