#pragma once

#include <map>
#include <string>
#include <vector>

#include "bosonize/error.hpp"

namespace bosonize {

/// Named numerical tolerances. Every threshold used by the simulators and
/// validators lives here so a run can be reproduced from its tolerance map.
struct Tolerances {
  double herm = 1e-10;     // relative hermiticity check
  double psd = 1e-10;      // smallest admissible eigenvalue is -psd
  double trace = 1e-10;    // |tr rho - 1|
  double stat = 1e-10;     // ||[h_R, rho_R]||_max
  double cent = 1e-10;     // |tr(rho_R v_q)|
  double pop = 1e-12;      // populations at or below are treated as empty
  double mat = 1e-12;      // matrix elements at or below are treated as zero
  double krylov = 1e-9;    // Lanczos residual estimate per step

  static const std::vector<std::string>& keys() {
    static const std::vector<std::string> k = {"tol_herm", "tol_psd",  "tol_trace", "tol_stat",
                                               "tol_cent", "tol_pop",  "tol_mat",   "tol_krylov"};
    return k;
  }

  void set(const std::string& key, double value) { *slot(key) = value; }
  double get(const std::string& key) const { return *const_cast<Tolerances*>(this)->slot(key); }

  std::map<std::string, double> as_map() const {
    std::map<std::string, double> out;
    for (const auto& k : keys()) out[k] = get(k);
    return out;
  }

 private:
  double* slot(const std::string& key) {
    if (key == "tol_herm") return &herm;
    if (key == "tol_psd") return &psd;
    if (key == "tol_trace") return &trace;
    if (key == "tol_stat") return &stat;
    if (key == "tol_cent") return &cent;
    if (key == "tol_pop") return &pop;
    if (key == "tol_mat") return &mat;
    if (key == "tol_krylov") return &krylov;
    throw Error(ErrorKind::InvalidArgument, "unknown tolerance key '" + key + "'");
  }
};

}  // namespace bosonize
