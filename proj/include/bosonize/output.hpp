#pragma once

// CSV/JSON emission. Every file starts with the tool version, the config
// digest and the tolerance map; numbers use 17 significant digits. Files are
// written to a temporary name and renamed into place.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "bosonize/tolerances.hpp"
#include "bosonize/trajectory.hpp"

#ifndef BOSONIZE_VERSION
#define BOSONIZE_VERSION "0.0.0"
#endif

namespace bosonize {

inline std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::InvalidArgument, "cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw Error(ErrorKind::InvalidArgument, "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

/// Header metadata shared by all outputs. Ordered so files are reproducible.
struct OutputMeta {
  std::string digest;
  Tolerances tol;
  std::vector<std::pair<std::string, std::string>> extra;

  std::vector<std::pair<std::string, std::string>> lines() const {
    std::vector<std::pair<std::string, std::string>> out{{"version", BOSONIZE_VERSION}, {"config_digest", digest}};
    std::string t;
    for (const auto& [k, v] : tol.as_map()) t += (t.empty() ? "" : " ") + k + "=" + format_number(v);
    out.emplace_back("tolerances", t);
    out.insert(out.end(), extra.begin(), extra.end());
    return out;
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["version"] = BOSONIZE_VERSION;
    j["config_digest"] = digest;
    nlohmann::ordered_json t;
    for (const auto& [k, v] : tol.as_map()) t[k] = v;
    j["tolerances"] = t;
    for (const auto& [k, v] : extra) j[k] = v;
    return j;
  }
};

/// A plain table: named columns of doubles.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

inline std::string render_csv(const Table& table, const OutputMeta& meta) {
  std::string s;
  for (const auto& [k, v] : meta.lines()) s += "# " + k + ": " + v + "\n";
  for (std::size_t i = 0; i < table.header.size(); ++i) s += (i ? "," : "") + table.header[i];
  s += "\n";
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) s += (i ? "," : "") + format_number(row[i]);
    s += "\n";
  }
  return s;
}

/// Numbers as 17-significant-digit literals; non-finite values become null.
inline nlohmann::ordered_json number_json(double x) {
  if (!std::isfinite(x)) return nullptr;
  return nlohmann::ordered_json::parse(format_number(x));
}

inline std::string render_json(const Table& table, const OutputMeta& meta) {
  nlohmann::ordered_json j;
  j["meta"] = meta.to_json();
  j["columns"] = table.header;
  auto rows = nlohmann::ordered_json::array();
  for (const auto& row : table.rows) {
    auto r = nlohmann::ordered_json::array();
    for (double x : row) r.push_back(number_json(x));
    rows.push_back(r);
  }
  j["rows"] = rows;
  return j.dump(1) + "\n";
}

/// One row per time: t, rho_r_i_j / rho_i_i_j (1-based, row-major), then the
/// extra trajectory columns, then standard errors for sampled runs.
inline Table trajectory_table(const Trajectory& traj) {
  Table t;
  t.header.push_back("t");
  const Index d = traj.states.empty() ? 0 : traj.states.front().rows();
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j) {
      const std::string ij = std::to_string(i + 1) + "_" + std::to_string(j + 1);
      t.header.push_back("rho_r_" + ij);
      t.header.push_back("rho_i_" + ij);
    }
  for (const auto& [name, _] : traj.columns) t.header.push_back(name);
  const bool sampled = !traj.uncertainty.empty();
  if (sampled)
    for (Index i = 0; i < d; ++i)
      for (Index j = 0; j < d; ++j) {
        const std::string ij = std::to_string(i + 1) + "_" + std::to_string(j + 1);
        t.header.push_back("stderr_r_" + ij);
        t.header.push_back("stderr_i_" + ij);
      }
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    std::vector<double> row{traj.times[k]};
    for (Index i = 0; i < d; ++i)
      for (Index j = 0; j < d; ++j) {
        row.push_back(traj.states[k](i, j).real());
        row.push_back(traj.states[k](i, j).imag());
      }
    for (const auto& [_, col] : traj.columns) row.push_back(col[k]);
    if (sampled)
      for (Index i = 0; i < d; ++i)
        for (Index j = 0; j < d; ++j) {
          row.push_back(traj.uncertainty[k](i, j).real());
          row.push_back(traj.uncertainty[k](i, j).imag());
        }
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline OutputMeta with_provenance(OutputMeta meta, const Trajectory& traj) {
  for (const auto& [k, v] : traj.provenance) meta.extra.emplace_back(k, v);
  return meta;
}

inline std::string render(const Table& table, const OutputMeta& meta, const std::string& format) {
  return format == "json" ? render_json(table, meta) : render_csv(table, meta);
}

}  // namespace bosonize
