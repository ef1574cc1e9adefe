#pragma once

// Outcome of one numerical identity check. pass means
// abs_diff <= tolerance * (1 + |lhs|).

#include <cmath>
#include <string>

namespace mint {

struct CheckReport {
  std::string name;
  std::string type;
  double lhs = 0.0;
  double rhs = 0.0;
  double abs_diff = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::string detail;  // optional human-readable context

  static CheckReport make(std::string name, std::string type, double lhs,
                          double rhs, double tolerance,
                          std::string detail = "") {
    CheckReport r;
    r.name = std::move(name);
    r.type = std::move(type);
    r.lhs = lhs;
    r.rhs = rhs;
    r.abs_diff = std::abs(lhs - rhs);
    r.tolerance = tolerance;
    r.pass = r.abs_diff <= tolerance * (1.0 + std::abs(lhs));
    r.detail = std::move(detail);
    return r;
  }

  /// For families of comparisons: the reported lhs/rhs pair realizing the
  /// worst absolute difference, with the pass rule applied to that pair.
  static CheckReport worst(std::string name, std::string type, double lhs,
                           double rhs, double max_abs_diff, double tolerance,
                           std::string detail = "") {
    CheckReport r;
    r.name = std::move(name);
    r.type = std::move(type);
    r.lhs = lhs;
    r.rhs = rhs;
    r.abs_diff = max_abs_diff;
    r.tolerance = tolerance;
    r.pass = max_abs_diff <= tolerance * (1.0 + std::abs(lhs));
    r.detail = std::move(detail);
    return r;
  }
};

}  // namespace mint
