#pragma once

// Subcommand dispatch for the command-line tool.

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "bosonize/analytics.hpp"
#include "bosonize/config.hpp"
#include "bosonize/correlations.hpp"
#include "bosonize/dyson.hpp"
#include "bosonize/finite_m.hpp"
#include "bosonize/fluctuation.hpp"
#include "bosonize/output.hpp"

namespace bosonize {

inline const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"validate",      "simulate-finite", "simulate-bosonic",
                                              "simulate-dyson", "compare",         "correlations",
                                              "decoherence",   "thermal-rep",     "entanglement"};
  return names;
}

inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ValidationFailed:
    case ErrorKind::SchemaError:
    case ErrorKind::ParseError:
    case ErrorKind::NotHermitian:
    case ErrorKind::NotSimultaneouslyDiagonalizable:
      return 2;
    case ErrorKind::DimensionOverflow:
      return 3;
    case ErrorKind::NoConvergence:
    case ErrorKind::QuadratureUnderResolved:
      return 4;
    default:
      return 1;
  }
}

inline nlohmann::ordered_json error_record(const Error& e) {
  nlohmann::ordered_json j;
  j["error"] = to_string(e.kind());
  j["message"] = e.what();
  j["measured"] = number_json(e.measured());
  j["exit_code"] = exit_code(e.kind());
  return j;
}

class App {
 public:
  App(const RunConfig& cfg, std::ostream& log, bool quiet) : cfg_(cfg), log_(log), quiet_(quiet) {}

  int run(const std::string& command) {
    if (command == "validate") return validate_cmd();
    if (command == "simulate-finite") return simulate_finite();
    if (command == "simulate-bosonic") return simulate_bosonic();
    if (command == "simulate-dyson") return simulate_dyson();
    if (command == "compare") return compare();
    if (command == "correlations") return correlations();
    if (command == "decoherence") return decoherence();
    if (command == "thermal-rep") return thermal_rep();
    if (command == "entanglement") return entanglement();
    throw Error(ErrorKind::InvalidArgument, "unknown subcommand " + command);
  }

 private:
  const RunConfig& cfg_;
  std::ostream& log_;
  bool quiet_;

  OutputMeta meta() const { return {cfg_.digest, cfg_.tol, {}}; }

  std::filesystem::path out(const std::string& stem) const {
    return std::filesystem::path(cfg_.output_path) / (stem + (cfg_.format == "json" ? ".json" : ".csv"));
  }

  void emit(const std::string& stem, const Table& table, const OutputMeta& m) {
    const auto path = out(stem);
    write_atomic(path, render(table, m, cfg_.format));
    if (!quiet_) log_ << "wrote " << path.string() << "\n";
  }

  void emit_json(const std::string& name, const nlohmann::ordered_json& body) {
    const auto path = std::filesystem::path(cfg_.output_path) / name;
    write_atomic(path, body.dump(1) + "\n");
    if (!quiet_) log_ << "wrote " << path.string() << "\n";
  }

  BosonicResult bosonic(const std::vector<double>& times) const {
    return reduce_dynamics_bosonic(cfg_.model, cfg_.fock, times);
  }

  static OutputMeta bosonic_meta(OutputMeta m, const BosonicResult& r) {
    return with_provenance(std::move(m), r.trajectory);
  }

  int validate_cmd() {
    const ValidationReport report = validate(cfg_.model, cfg_.tol);
    nlohmann::ordered_json j;
    j["meta"] = meta().to_json();
    j["passed"] = report.passed();
    auto checks = nlohmann::ordered_json::array();
    for (const auto& c : report.checks)
      checks.push_back({{"name", c.name},
                        {"passed", c.passed},
                        {"violation", number_json(c.violation)},
                        {"tolerance", number_json(c.tolerance)}});
    j["checks"] = checks;
    emit_json("validation.json", j);
    if (!quiet_)
      for (const auto& c : report.checks)
        if (!c.passed) log_ << "FAILED " << c.name << " violation " << format_number(c.violation) << "\n";
    return report.passed() ? 0 : 2;
  }

  int simulate_finite() {
    const auto times = cfg_.times.points();
    for (int m : cfg_.ms) {
      FiniteMConfig fc = cfg_.finite;
      fc.M = m;
      const Trajectory traj = reduce_dynamics_finite(cfg_.model, fc, times);
      emit("finite_M" + std::to_string(m), trajectory_table(traj), with_provenance(meta(), traj));
    }
    return 0;
  }

  int simulate_bosonic() {
    const BosonicResult r = bosonic(cfg_.times.points());
    emit("bosonic", trajectory_table(r.trajectory), bosonic_meta(meta(), r));
    return 0;
  }

  int simulate_dyson() {
    const Trajectory traj = dyson_propagate(cfg_.model, cfg_.dyson, cfg_.times.points());
    emit("dyson", trajectory_table(traj), with_provenance(meta(), traj));
    return 0;
  }

  /// Prefix of the grid on which the Dyson truncation bound stays within the
  /// validity threshold.
  std::vector<double> dyson_valid_grid(const std::vector<double>& times) const {
    const auto [g, v] = coupling_norms(cfg_.model);
    const int q = static_cast<int>(cfg_.model.coupling_count());
    std::vector<double> out;
    for (double t : times) {
      if (truncation_bound(g, v, q, t, cfg_.dyson.order) > cfg_.dyson.validity_threshold) break;
      out.push_back(t);
    }
    return out;
  }

  int compare() {
    const auto times = cfg_.times.points();
    const BosonicResult ref = bosonic(times);
    const ErrorTable table = convergence_scan(cfg_.model, cfg_.ms, times, ref.trajectory, cfg_.finite);

    double bd = std::nan("");
    const auto valid = dyson_valid_grid(times);
    if (!valid.empty()) {
      const Trajectory dy = dyson_propagate(cfg_.model, cfg_.dyson, valid);
      Trajectory sub;
      sub.times = valid;
      sub.states.assign(ref.trajectory.states.begin(), ref.trajectory.states.begin() + valid.size());
      bd = max_trace_distance(sub, dy);
    }

    Table t;
    t.header = {"M", "distance", "ratio_next", "bosonic_vs_dyson"};
    for (const auto& row : table.rows)
      t.rows.push_back({static_cast<double>(row.M), row.distance, row.ratio_doubled, bd});
    OutputMeta m = bosonic_meta(meta(), ref);
    m.extra.emplace_back("dyson_valid_t_max", format_number(valid.empty() ? 0.0 : valid.back()));
    m.extra.emplace_back("dyson_order", std::to_string(cfg_.dyson.order));
    emit("compare", t, m);
    if (!quiet_)
      for (const auto& row : table.rows) log_ << "M=" << row.M << " distance " << format_number(row.distance) << "\n";
    return 0;
  }

  int correlations() {
    const ComponentSpectrum spectrum = spectral_decompose(cfg_.model.component, cfg_.tol);
    const ReservoirCorrelations corr(spectrum, cfg_.model.component.couplings);
    const FluctuationModel fm = build_fluctuation_model(cfg_.model, cfg_.tol);
    const auto grid = cfg_.correlations.grid.points();
    const std::size_t q_count = cfg_.model.coupling_count();

    Table two;
    two.header = {"q", "dag", "q2", "dag2", "t", "t2", "reservoir_re", "reservoir_im", "bosonic_re", "bosonic_im",
                  "abs_diff"};
    double worst = 0.0;
    for (std::size_t q = 0; q < q_count; ++q)
      for (int s = 0; s < 2; ++s)
        for (std::size_t q2 = 0; q2 < q_count; ++q2)
          for (int s2 = 0; s2 < 2; ++s2)
            for (double t : grid)
              for (double t2 : grid) {
                const DressedOperator a{q, s == 1, t}, b{q2, s2 == 1, t2};
                const Complex r = corr.two_point(a, b), f = two_point_bosonic(fm, a, b);
                worst = std::max(worst, std::abs(r - f));
                two.rows.push_back({double(q + 1), double(s), double(q2 + 1), double(s2), t, t2, r.real(), r.imag(),
                                    f.real(), f.imag(), std::abs(r - f)});
              }
    OutputMeta m = meta();
    m.extra.emplace_back("max_abs_diff", format_number(worst));
    emit("two_point", two, m);

    for (std::size_t i = 0; i < cfg_.correlations.moments.size(); ++i) {
      const auto& spec = cfg_.correlations.moments[i];
      for (const auto& op : spec.ops)
        if (op.q >= q_count) throw Error(ErrorKind::InvalidArgument, "moment operator names a missing coupling");
      const auto rows = clt_convergence(corr, spec.ops, spec.ms);
      Table t;
      const bool even = spec.ops.size() % 2 == 0;
      t.header = {"M", "value_re", "value_im", even ? "abs_error_vs_wick" : "abs_value"};
      for (const auto& r : rows) t.rows.push_back({r.M, r.value.real(), r.value.imag(), r.error});
      OutputMeta mm = meta();
      mm.extra.emplace_back("n", std::to_string(spec.ops.size()));
      if (even) {
        const Complex w = corr.wick(spec.ops);
        mm.extra.emplace_back("wick", format_number(w.real()) + " " + format_number(w.imag()));
      }
      emit("clt_" + std::to_string(i + 1), t, mm);
    }
    return 0;
  }

  NonDemolitionSpec nondemolition_view() const {
    const auto& s = cfg_.model.system;
    if (s.couplings.size() != 1)
      throw Error(ErrorKind::ValidationFailed, "decoherence needs exactly one coupling");
    auto off_diagonal = [](const OperatorMatrix& a) {
      OperatorMatrix b = a;
      b.diagonal().setZero();
      return max_abs(b);
    };
    const double off = std::max(off_diagonal(s.hamiltonian), off_diagonal(s.couplings[0]));
    if (off > cfg_.tol.herm)
      throw Error(ErrorKind::ValidationFailed,
                  "decoherence needs H_S and G diagonal in the given basis (off-diagonal " + format_number(off) + ")",
                  off);
    NonDemolitionSpec nd;
    nd.levels = s.hamiltonian.diagonal().real();
    for (Index j = 0; j < s.hamiltonian.rows(); ++j) nd.weights.push_back(s.couplings[0](j, j));
    nd.component = cfg_.model.component;
    return nd;
  }

  int decoherence() {
    const NonDemolitionSpec nd = nondemolition_view();
    const Index m = cfg_.analysis.level_m, n = cfg_.analysis.level_n;
    if (m >= nd.dim() || n >= nd.dim()) throw Error(ErrorKind::InvalidArgument, "analysis levels out of range");
    const auto times = cfg_.times.points();
    const BosonicResult r = bosonic(times);
    const OperatorMatrix basis = OperatorMatrix::Identity(nd.dim(), nd.dim());
    const auto sim = coherence_ratio(r.trajectory, basis, m, n);
    Table t;
    t.header = {"t", "exact", "gaussian", "simulated"};
    for (std::size_t i = 0; i < times.size(); ++i)
      t.rows.push_back({times[i], decoherence_modulus(nd, m, n, times[i], cfg_.tol),
                        short_time_gaussian(nd, m, n, times[i], cfg_.tol), sim[i]});
    OutputMeta mm = bosonic_meta(meta(), r);
    mm.extra.emplace_back("levels", std::to_string(m + 1) + "," + std::to_string(n + 1));
    mm.extra.emplace_back("population_drift", format_number(population_drift(r.trajectory, basis)));
    emit("decoherence", t, mm);
    return 0;
  }

  int thermal_rep() {
    if (cfg_.model.coupling_count() != 1)
      throw Error(ErrorKind::InvalidArgument, "thermal-rep handles a single coupling");
    const ComponentSpectrum spectrum = spectral_decompose(cfg_.model.component, cfg_.tol);
    const ThermalResult res = thermal_representation(spectrum, cfg_.model.component.couplings[0], cfg_.tol);
    nlohmann::ordered_json j;
    j["meta"] = meta().to_json();
    if (const auto* tm = std::get_if<ThermalModes>(&res)) {
      j["representable"] = true;
      auto modes = nlohmann::ordered_json::array();
      for (const auto& m : tm->modes)
        modes.push_back({{"pair", {m.lo + 1, m.hi + 1}},
                         {"frequency", number_json(m.frequency)},
                         {"beta_omega", number_json(m.beta_omega)},
                         {"covariance", number_json(m.covariance)},
                         {"coupling", number_json(m.coupling)}});
      j["modes"] = modes;
      const ReservoirCorrelations corr(spectrum, cfg_.model.component.couplings);
      double worst = 0.0;
      const auto grid = cfg_.correlations.grid.points();
      for (double t : grid)
        for (double t2 : grid)
          for (int s = 0; s < 4; ++s)
            worst = std::max(worst, std::abs(corr.two_point({0, (s & 1) != 0, t}, {0, (s & 2) != 0, t2}) -
                                             thermal_two_point(*tm, t, t2)));
      j["max_two_point_deviation"] = number_json(worst);
    } else {
      const auto& nr = std::get<NotRepresentable>(res);
      j["representable"] = false;
      j["reason"] = to_string(nr.reason);
      j["pair"] = {nr.k + 1, nr.l + 1};
      j["detail"] = nr.detail;
    }
    emit_json("thermal.json", j);
    return 0;
  }

  int entanglement() {
    Index da = cfg_.analysis.dim_a, db = cfg_.analysis.dim_b;
    const Index d = cfg_.model.system.dim();
    if (da == 0 && db == 0) {
      da = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(d))));
      db = da;
    }
    if (da * db != d)
      throw Error(ErrorKind::DimensionMismatch, "analysis dims do not multiply to the system dimension");
    const BosonicResult r = bosonic(cfg_.times.points());
    Table t;
    t.header = {"t", "negativity"};
    for (const auto& [time, neg] : entanglement_trajectory(r.trajectory, da, db)) t.rows.push_back({time, neg});
    emit("entanglement", t, bosonic_meta(meta(), r));
    return 0;
  }
};

}  // namespace bosonize
