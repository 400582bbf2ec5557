#pragma once

// Run configuration: a JSON document describing the model, the time grid and
// the settings of every simulator. Complex scalars are [re, im] pairs and
// matrices are row-major nested arrays of them.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bosonize/correlations.hpp"
#include "bosonize/dyson.hpp"
#include "bosonize/finite_m.hpp"
#include "bosonize/fluctuation.hpp"
#include "bosonize/model.hpp"

namespace bosonize {

using json = nlohmann::json;

struct TimeGrid {
  double t_max = 1.0;
  int steps = 10;

  std::vector<double> points() const { return uniform_grid(t_max, steps); }
};

struct MomentSpec {
  std::vector<DressedOperator> ops;
  std::vector<double> ms;
};

struct CorrelationsConfig {
  TimeGrid grid{1.0, 9};  // (t, t') grid for two-point tables
  std::vector<MomentSpec> moments;
};

struct AnalysisConfig {
  Index level_m = 0;  // decoherence pair, 0-based internally
  Index level_n = 1;
  Index dim_a = 0;    // entanglement split; 0 means sqrt(d_S)
  Index dim_b = 0;
};

struct RunConfig {
  ModelSpec model;
  std::string model_source = "inline";
  TimeGrid times;
  std::vector<int> ms{2, 4, 8};
  FiniteMConfig finite;
  FockConfig fock;
  DysonConfig dyson;
  CorrelationsConfig correlations;
  AnalysisConfig analysis;
  std::string output_path = "out";
  std::string format = "csv";
  Tolerances tol;
  std::int64_t seed = 0;

  json effective;      // canonical effective configuration
  std::string digest;  // FNV-1a 64 of the effective configuration, hex
};

/// Command-line overrides applied before defaults and digest.
struct ConfigOverrides {
  std::optional<std::string> output;
  std::optional<std::string> format;
  std::map<std::string, double> tolerances;
  std::optional<std::int64_t> seed;
};

inline std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

// ---------------------------------------------------------------------------
// Matrix codec

inline json complex_to_json(Complex z) { return json::array({z.real(), z.imag()}); }

inline json matrix_to_json(const OperatorMatrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(complex_to_json(m(i, j)));
    rows.push_back(row);
  }
  return rows;
}

namespace detail {

/// Collects every schema violation before failing.
class SchemaReader {
 public:
  std::vector<std::string> errors;

  void fail(const std::string& path, const std::string& what) { errors.push_back(path + ": " + what); }

  void reject_unknown(const json& obj, const std::string& path, std::initializer_list<const char*> known) {
    if (!obj.is_object()) return;
    std::set<std::string> k(known.begin(), known.end());
    for (const auto& [key, _] : obj.items())
      if (!k.count(key)) fail(path + "/" + key, "unknown key");
  }

  const json* object(const json& parent, const char* key, const std::string& path, bool required) {
    if (!parent.contains(key)) {
      if (required) fail(path + "/" + key, "missing");
      return nullptr;
    }
    const json& v = parent.at(key);
    if (!v.is_object()) {
      fail(path + "/" + key, "expected an object");
      return nullptr;
    }
    return &v;
  }

  double number(const json* obj, const char* key, const std::string& path, double def) {
    if (!obj || !obj->contains(key)) return def;
    const json& v = obj->at(key);
    if (!v.is_number()) {
      fail(path + "/" + key, "expected a number");
      return def;
    }
    return v.get<double>();
  }

  std::int64_t integer(const json* obj, const char* key, const std::string& path, std::int64_t def) {
    if (!obj || !obj->contains(key)) return def;
    const json& v = obj->at(key);
    if (!v.is_number_integer()) {
      fail(path + "/" + key, "expected an integer");
      return def;
    }
    return v.get<std::int64_t>();
  }

  bool boolean(const json* obj, const char* key, const std::string& path, bool def) {
    if (!obj || !obj->contains(key)) return def;
    const json& v = obj->at(key);
    if (!v.is_boolean()) {
      fail(path + "/" + key, "expected true or false");
      return def;
    }
    return v.get<bool>();
  }

  std::string choice(const json* obj, const char* key, const std::string& path, const std::string& def,
                     std::initializer_list<const char*> allowed) {
    if (!obj || !obj->contains(key)) return def;
    const json& v = obj->at(key);
    std::string s = v.is_string() ? v.get<std::string>() : "";
    for (const char* a : allowed)
      if (s == a) return s;
    std::string list;
    for (const char* a : allowed) list += std::string(list.empty() ? "" : ", ") + a;
    fail(path + "/" + key, "expected one of " + list);
    return def;
  }

  std::optional<Complex> complex(const json& v, const std::string& path) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
      fail(path, "expected a complex number [re, im]");
      return std::nullopt;
    }
    return Complex(v[0].get<double>(), v[1].get<double>());
  }

  OperatorMatrix matrix(const json& v, const std::string& path) {
    if (!v.is_array() || v.empty()) {
      fail(path, "expected a non-empty array of rows");
      return {};
    }
    const std::size_t rows = v.size();
    std::size_t cols = 0;
    bool ok = true;
    for (std::size_t i = 0; i < rows; ++i) {
      if (!v[i].is_array()) {
        fail(path + "/" + std::to_string(i), "expected a row array");
        ok = false;
        continue;
      }
      if (i == 0) cols = v[i].size();
      if (v[i].size() != cols) {
        fail(path + "/" + std::to_string(i),
             "row has " + std::to_string(v[i].size()) + " entries, expected " + std::to_string(cols));
        ok = false;
      }
    }
    if (!ok || cols == 0) {
      if (ok) fail(path, "empty rows");
      return {};
    }
    OperatorMatrix m(static_cast<Index>(rows), static_cast<Index>(cols));
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) {
        auto z = complex(v[i][j], path + "/" + std::to_string(i) + "/" + std::to_string(j));
        if (!z) return {};
        m(static_cast<Index>(i), static_cast<Index>(j)) = *z;
      }
    if (rows != cols) fail(path, "matrix is not square");
    return m;
  }

  std::vector<OperatorMatrix> matrices(const json& v, const std::string& path) {
    std::vector<OperatorMatrix> out;
    if (!v.is_array()) {
      fail(path, "expected an array of matrices");
      return out;
    }
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(matrix(v[i], path + "/" + std::to_string(i)));
    return out;
  }

  TimeGrid grid(const json* obj, const std::string& path, TimeGrid def) {
    if (!obj) return def;
    reject_unknown(*obj, path, {"t_max", "steps"});
    TimeGrid g{number(obj, "t_max", path, def.t_max), static_cast<int>(integer(obj, "steps", path, def.steps))};
    if (!(g.t_max > 0.0)) fail(path + "/t_max", "must be > 0");
    if (g.steps < 1) fail(path + "/steps", "must be >= 1");
    return g;
  }
};

inline void read_part(SchemaReader& r, const json& obj, const std::string& path, OperatorMatrix& h, OperatorMatrix& rho,
                      std::vector<OperatorMatrix>& couplings) {
  r.reject_unknown(obj, path, {"hamiltonian", "state", "couplings"});
  for (const char* key : {"hamiltonian", "state", "couplings"})
    if (!obj.contains(key)) r.fail(path + "/" + key, "missing");
  if (obj.contains("hamiltonian")) h = r.matrix(obj["hamiltonian"], path + "/hamiltonian");
  if (obj.contains("state")) rho = r.matrix(obj["state"], path + "/state");
  if (obj.contains("couplings")) couplings = r.matrices(obj["couplings"], path + "/couplings");
}

inline ModelSpec read_model(SchemaReader& r, const json& m, const std::string& path) {
  ModelSpec spec;
  if (!m.is_object()) {
    r.fail(path, "expected an object with system and component");
    return spec;
  }
  r.reject_unknown(m, path, {"system", "component"});
  if (const json* s = r.object(m, "system", path, true))
    read_part(r, *s, path + "/system", spec.system.hamiltonian, spec.system.state, spec.system.couplings);
  if (const json* c = r.object(m, "component", path, true))
    read_part(r, *c, path + "/component", spec.component.hamiltonian, spec.component.state,
              spec.component.couplings);
  return spec;
}

/// Line and column of a byte offset, for parse error messages.
inline std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t offset) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < std::min(offset, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

inline json parse_json_text(const std::string& text, const std::string& where) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_column(text, e.byte > 0 ? e.byte - 1 : 0);
    throw Error(ErrorKind::ParseError,
                where + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + e.what());
  }
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::ParseError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline const char* to_name(Propagation p) {
  switch (p) {
    case Propagation::dense: return "dense";
    case Propagation::krylov: return "krylov";
    case Propagation::automatic: return "automatic";
  }
  return "?";
}

inline Propagation propagation_from(const std::string& s) {
  if (s == "dense") return Propagation::dense;
  if (s == "krylov") return Propagation::krylov;
  return Propagation::automatic;
}

inline Scaling scaling_from(const std::string& s) {
  if (s == "meanfield") return Scaling::meanfield;
  if (s == "none") return Scaling::none;
  return Scaling::mesoscopic;
}

}  // namespace detail

/// Canonical effective configuration (every default filled in).
inline json to_json(const RunConfig& c) {
  json j;
  j["model"] = {{"system",
                 {{"hamiltonian", matrix_to_json(c.model.system.hamiltonian)},
                  {"state", matrix_to_json(c.model.system.state)},
                  {"couplings", json::array()}}},
                {"component",
                 {{"hamiltonian", matrix_to_json(c.model.component.hamiltonian)},
                  {"state", matrix_to_json(c.model.component.state)},
                  {"couplings", json::array()}}}};
  for (const auto& g : c.model.system.couplings) j["model"]["system"]["couplings"].push_back(matrix_to_json(g));
  for (const auto& v : c.model.component.couplings) j["model"]["component"]["couplings"].push_back(matrix_to_json(v));
  j["times"] = {{"t_max", c.times.t_max}, {"steps", c.times.steps}};
  j["finite_m"] = {{"M", c.ms},
                   {"scaling", to_string(c.finite.scaling)},
                   {"propagation", detail::to_name(c.finite.propagation)},
                   {"dim_cap", c.finite.dim_cap}};
  if (c.finite.monte_carlo)
    j["finite_m"]["monte_carlo"] = {{"seed", c.finite.monte_carlo->seed}, {"samples", c.finite.monte_carlo->samples}};
  j["fock"] = {{"cutoff", c.fock.cutoff},
               {"adaptive", c.fock.adaptive},
               {"adapt_tol", c.fock.adapt_tol},
               {"dim_cap", c.fock.dim_cap},
               {"propagation", detail::to_name(c.fock.propagation)}};
  if (!c.fock.cutoffs.empty()) j["fock"]["cutoffs"] = c.fock.cutoffs;
  j["dyson"] = {{"order", c.dyson.order},
                {"quadrature_points", c.dyson.quadrature_points},
                {"check_quadrature", c.dyson.check_quadrature},
                {"quadrature_tol", c.dyson.quadrature_tol},
                {"validity_threshold", c.dyson.validity_threshold}};
  json moments = json::array();
  for (const auto& m : c.correlations.moments) {
    json ops = json::array();
    for (const auto& op : m.ops) ops.push_back({{"q", op.q + 1}, {"dag", op.dag}, {"t", op.t}});
    moments.push_back({{"ops", ops}, {"M", m.ms}});
  }
  j["correlations"] = {{"grid", {{"t_max", c.correlations.grid.t_max}, {"steps", c.correlations.grid.steps}}},
                       {"moments", moments}};
  j["analysis"] = {{"levels", {c.analysis.level_m + 1, c.analysis.level_n + 1}},
                   {"dims", {c.analysis.dim_a, c.analysis.dim_b}}};
  j["output"] = {{"path", c.output_path}, {"format", c.format}};
  j["tolerances"] = c.tol.as_map();
  j["seed"] = c.seed;
  return j;
}

/// Digest over the effective configuration minus the output directory, so
/// the same run written to two places carries the same digest.
inline std::string config_digest(const json& effective) {
  json copy = effective;
  if (copy.contains("output")) copy["output"].erase("path");
  return fnv1a_hex(copy.dump());
}

/// Builds a RunConfig from a parsed document. Relative model paths resolve
/// against `base_dir`.
inline RunConfig config_from_json(json doc, const std::filesystem::path& base_dir = ".",
                                  const ConfigOverrides& overrides = {}) {
  detail::SchemaReader r;
  RunConfig c;
  if (!doc.is_object()) throw Error(ErrorKind::SchemaError, "/: expected a JSON object");

  if (overrides.output) doc["output"]["path"] = *overrides.output;
  if (overrides.format) doc["output"]["format"] = *overrides.format;
  for (const auto& [k, v] : overrides.tolerances) doc["tolerances"][k] = v;
  if (overrides.seed) doc["seed"] = *overrides.seed;

  r.reject_unknown(doc, "", {"model", "times", "finite_m", "fock", "dyson", "correlations", "analysis", "output",
                             "tolerances", "seed"});

  if (!doc.contains("model")) {
    r.fail("/model", "missing");
  } else if (doc["model"].is_string()) {
    const std::filesystem::path p = base_dir / doc["model"].get<std::string>();
    c.model_source = doc["model"].get<std::string>();
    c.model = detail::read_model(r, detail::parse_json_text(detail::read_file(p), p.string()), "/model");
  } else {
    c.model = detail::read_model(r, doc["model"], "/model");
  }

  if (doc.contains("tolerances")) {
    const json& t = doc["tolerances"];
    if (!t.is_object()) {
      r.fail("/tolerances", "expected an object");
    } else {
      for (const auto& [k, v] : t.items()) {
        if (!v.is_number()) {
          r.fail("/tolerances/" + k, "expected a number");
          continue;
        }
        try {
          c.tol.set(k, v.get<double>());
        } catch (const Error&) {
          r.fail("/tolerances/" + k, "unknown tolerance key");
        }
        if (!(v.get<double>() > 0.0)) r.fail("/tolerances/" + k, "must be > 0");
      }
    }
  }
  c.seed = r.integer(&doc, "seed", "", 0);

  c.times = r.grid(r.object(doc, "times", "", false), "/times", TimeGrid{});

  if (const json* f = r.object(doc, "finite_m", "", false)) {
    r.reject_unknown(*f, "/finite_m", {"M", "scaling", "propagation", "monte_carlo", "dim_cap"});
    if (f->contains("M")) {
      const json& ms = f->at("M");
      c.ms.clear();
      if (ms.is_number_integer()) {
        c.ms.push_back(ms.get<int>());
      } else if (ms.is_array() && !ms.empty()) {
        for (std::size_t i = 0; i < ms.size(); ++i) {
          if (!ms[i].is_number_integer() || ms[i].get<int>() < 1)
            r.fail("/finite_m/M/" + std::to_string(i), "expected an integer >= 1");
          else
            c.ms.push_back(ms[i].get<int>());
        }
      } else {
        r.fail("/finite_m/M", "expected an integer or a non-empty list of integers");
      }
    }
    c.finite.scaling = detail::scaling_from(
        r.choice(f, "scaling", "/finite_m", "mesoscopic", {"mesoscopic", "meanfield", "none"}));
    c.finite.propagation = detail::propagation_from(
        r.choice(f, "propagation", "/finite_m", "automatic", {"dense", "krylov", "automatic"}));
    c.finite.dim_cap = r.integer(f, "dim_cap", "/finite_m", c.finite.dim_cap);
    if (const json* mc = r.object(*f, "monte_carlo", "/finite_m", false)) {
      r.reject_unknown(*mc, "/finite_m/monte_carlo", {"seed", "samples"});
      MonteCarloPolicy p;
      p.seed = static_cast<std::uint64_t>(r.integer(mc, "seed", "/finite_m/monte_carlo", c.seed));
      const auto samples = r.integer(mc, "samples", "/finite_m/monte_carlo", 1000);
      if (samples < 1) r.fail("/finite_m/monte_carlo/samples", "must be >= 1");
      p.samples = static_cast<std::size_t>(std::max<std::int64_t>(1, samples));
      c.finite.monte_carlo = p;
    }
  }

  if (const json* f = r.object(doc, "fock", "", false)) {
    r.reject_unknown(*f, "/fock", {"cutoff", "cutoffs", "adaptive", "adapt_tol", "dim_cap", "propagation"});
    c.fock.cutoff = static_cast<int>(r.integer(f, "cutoff", "/fock", 4));
    if (c.fock.cutoff < 1) r.fail("/fock/cutoff", "must be >= 1");
    if (f->contains("cutoffs")) {
      const json& cs = f->at("cutoffs");
      if (!cs.is_array()) r.fail("/fock/cutoffs", "expected a list of integers");
      else
        for (std::size_t i = 0; i < cs.size(); ++i) {
          if (!cs[i].is_number_integer() || cs[i].get<int>() < 1)
            r.fail("/fock/cutoffs/" + std::to_string(i), "expected an integer >= 1");
          else
            c.fock.cutoffs.push_back(cs[i].get<int>());
        }
    }
    c.fock.adaptive = r.boolean(f, "adaptive", "/fock", true);
    c.fock.adapt_tol = r.number(f, "adapt_tol", "/fock", 1e-6);
    if (!(c.fock.adapt_tol > 0.0)) r.fail("/fock/adapt_tol", "must be > 0");
    c.fock.dim_cap = r.integer(f, "dim_cap", "/fock", c.fock.dim_cap);
    c.fock.propagation = detail::propagation_from(
        r.choice(f, "propagation", "/fock", "automatic", {"dense", "krylov", "automatic"}));
  }

  if (const json* d = r.object(doc, "dyson", "", false)) {
    r.reject_unknown(*d, "/dyson",
                     {"order", "quadrature_points", "check_quadrature", "quadrature_tol", "validity_threshold"});
    c.dyson.order = static_cast<int>(r.integer(d, "order", "/dyson", 4));
    if (c.dyson.order < 0) r.fail("/dyson/order", "must be >= 0");
    c.dyson.quadrature_points = static_cast<int>(r.integer(d, "quadrature_points", "/dyson", 24));
    if (c.dyson.quadrature_points < 4) r.fail("/dyson/quadrature_points", "must be >= 4");
    c.dyson.check_quadrature = r.boolean(d, "check_quadrature", "/dyson", true);
    c.dyson.quadrature_tol = r.number(d, "quadrature_tol", "/dyson", 1e-6);
    c.dyson.validity_threshold = r.number(d, "validity_threshold", "/dyson", 0.1);
  }

  if (const json* cr = r.object(doc, "correlations", "", false)) {
    r.reject_unknown(*cr, "/correlations", {"grid", "moments"});
    c.correlations.grid =
        r.grid(r.object(*cr, "grid", "/correlations", false), "/correlations/grid", c.correlations.grid);
    if (cr->contains("moments")) {
      const json& ms = cr->at("moments");
      if (!ms.is_array()) r.fail("/correlations/moments", "expected a list");
      else
        for (std::size_t i = 0; i < ms.size(); ++i) {
          const std::string path = "/correlations/moments/" + std::to_string(i);
          MomentSpec spec;
          if (!ms[i].is_object() || !ms[i].contains("ops") || !ms[i]["ops"].is_array()) {
            r.fail(path, "expected {\"ops\": [...], \"M\": [...]}");
            continue;
          }
          r.reject_unknown(ms[i], path, {"ops", "M"});
          const json& ops = ms[i]["ops"];
          if (ops.empty() || ops.size() > 10) r.fail(path + "/ops", "expected 1 to 10 operators");
          for (std::size_t k = 0; k < ops.size(); ++k) {
            const std::string op_path = path + "/ops/" + std::to_string(k);
            if (!ops[k].is_object()) {
              r.fail(op_path, "expected {\"q\", \"dag\", \"t\"}");
              continue;
            }
            r.reject_unknown(ops[k], op_path, {"q", "dag", "t"});
            const auto q = r.integer(&ops[k], "q", op_path, 1);
            if (q < 1) r.fail(op_path + "/q", "must be >= 1");
            spec.ops.push_back({static_cast<std::size_t>(std::max<std::int64_t>(1, q) - 1),
                                r.boolean(&ops[k], "dag", op_path, false), r.number(&ops[k], "t", op_path, 0.0)});
          }
          if (ms[i].contains("M") && ms[i]["M"].is_array()) {
            for (const auto& m : ms[i]["M"]) {
              if (!m.is_number() || m.get<double>() < 1.0) r.fail(path + "/M", "entries must be numbers >= 1");
              else spec.ms.push_back(m.get<double>());
            }
          } else {
            r.fail(path + "/M", "expected a list of M values");
          }
          c.correlations.moments.push_back(spec);
        }
    }
  }

  if (const json* a = r.object(doc, "analysis", "", false)) {
    r.reject_unknown(*a, "/analysis", {"levels", "dims"});
    if (a->contains("levels")) {
      const json& l = a->at("levels");
      if (!l.is_array() || l.size() != 2 || !l[0].is_number_integer() || !l[1].is_number_integer() ||
          l[0].get<int>() < 1 || l[1].get<int>() < 1 || l[0] == l[1])
        r.fail("/analysis/levels", "expected two distinct 1-based level indices");
      else {
        c.analysis.level_m = l[0].get<int>() - 1;
        c.analysis.level_n = l[1].get<int>() - 1;
      }
    }
    if (a->contains("dims")) {
      const json& d = a->at("dims");
      if (!d.is_array() || d.size() != 2 || !d[0].is_number_integer() || !d[1].is_number_integer() ||
          d[0].get<int>() < 0 || d[1].get<int>() < 0)
        r.fail("/analysis/dims", "expected two nonnegative integers");
      else {
        c.analysis.dim_a = d[0].get<int>();
        c.analysis.dim_b = d[1].get<int>();
      }
    }
  }

  if (const json* o = r.object(doc, "output", "", false)) {
    r.reject_unknown(*o, "/output", {"path", "format"});
    if (o->contains("path")) {
      if (!o->at("path").is_string()) r.fail("/output/path", "expected a string");
      else c.output_path = o->at("path").get<std::string>();
    }
    c.format = r.choice(o, "format", "/output", "csv", {"csv", "json"});
  }

  // Shape checks belong to the schema: every violation is reported together.
  if (r.errors.empty()) {
    try {
      c.model.require_shapes();
    } catch (const Error& e) {
      r.fail("/model", e.what());
    }
  }
  if (!r.errors.empty()) {
    std::string msg = std::to_string(r.errors.size()) + " schema violation(s):";
    for (const auto& e : r.errors) msg += "\n  " + e;
    throw Error(ErrorKind::SchemaError, msg, static_cast<double>(r.errors.size()));
  }

  c.finite.tol = c.fock.tol = c.dyson.tol = c.tol;
  c.finite.krylov.tol = c.fock.krylov.tol = c.tol.krylov;
  c.effective = to_json(c);
  c.digest = config_digest(c.effective);
  return c;
}

inline RunConfig parse_config_text(const std::string& text, const std::filesystem::path& base_dir = ".",
                                   const ConfigOverrides& overrides = {}, const std::string& where = "<config>") {
  return config_from_json(detail::parse_json_text(text, where), base_dir, overrides);
}

inline RunConfig parse_config(const std::filesystem::path& path, const ConfigOverrides& overrides = {}) {
  return parse_config_text(detail::read_file(path), path.parent_path(), overrides, path.string());
}

}  // namespace bosonize
