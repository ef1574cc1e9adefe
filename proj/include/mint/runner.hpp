#pragma once

// Executes the checks of a scene document and renders reports.
//
// Reports are byte-deterministic: fixed key order, floats with 12
// significant digits, check order = document order. Quadrature
// non-convergence is reported as a failed check, not a crash.

#include <cstdio>
#include <string>
#include <vector>

#include "chen.hpp"
#include "document.hpp"
#include "membranes.hpp"
#include "report.hpp"

namespace mint {

inline std::string format_double(double v) {
  if (!(v == v)) return "null";  // NaN
  if (v > 1e308 || v < -1e308) return "null";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline std::string json_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size() + 2);
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  return out;
}

/// Run a single scene check. Throws DocumentError for unresolvable inputs;
/// quadrature non-convergence yields pass = false with the message in detail.
inline CheckReport run_check(const SceneDocument& doc, const SceneCheck& c) {
  const QuadratureConfig& cfg =
      c.has_quadrature ? c.quadrature : doc.quadrature();
  auto words = [&](const std::vector<std::string>& names) {
    std::vector<DifferentialForm> out;
    out.reserve(names.size());
    for (const auto& n : names) out.push_back(doc.form(n));
    return out;
  };
  auto decoration = [&](const std::string& name) {
    return name.empty() ? DifferentialForm::unit(doc.ambient_dim())
                        : doc.form(name);
  };
  try {
    if (c.type == "path-shuffle") {
      return check_shuffle(doc.membrane(c.path), words(c.left_word),
                           words(c.right_word), cfg, c.tolerance, c.name);
    }
    if (c.type == "composition") {
      return check_composition(doc.membrane(c.first), doc.membrane(c.second),
                               words(c.letters), c.level, cfg, c.tolerance,
                               c.name);
    }
    if (c.type == "decorated-shuffle") {
      return check_decorated_shuffle(
          doc.membrane(c.path), decoration(c.left_start), words(c.left_word),
          decoration(c.left_end), decoration(c.right_start),
          words(c.right_word), decoration(c.right_end), cfg, c.tolerance,
          c.name);
    }
    if (c.type == "membrane-shuffle") {
      return check_membrane_shuffle(
          doc.membrane(c.membrane), doc.integrand(c.left_integrand),
          doc.integrand(c.right_integrand), c.barred, cfg, c.tolerance,
          c.name);
    }
    if (c.type == "glued-product") {
      return check_glued_product(doc.membrane(c.first), doc.membrane(c.second),
                                 doc.integrand(c.left_integrand),
                                 doc.integrand(c.right_integrand), cfg,
                                 c.tolerance, c.name);
    }
    if (c.type == "higher-transport") {
      HigherTransportResult r = higher_transport(
          doc.membrane(c.membrane), doc.integrand(c.w_integrand), c.w_slot,
          doc.integrand(c.t_integrand), c.t_slot, c.copies, cfg, c.tolerance,
          c.name);
      return r.report;
    }
    if (c.type == "holonomy") {
      MatrixConnection conn = doc.connection(c.entries);
      HolonomyReport hr = holonomy_curvature_check(
          conn, c.center, c.epsilons, c.level, cfg, c.tolerance);
      CheckReport r;
      r.name = c.name;
      r.type = "holonomy";
      r.lhs = hr.fitted.max_abs();
      r.rhs = hr.reference.max_abs();
      r.abs_diff = hr.max_diff;
      r.tolerance = c.tolerance;
      r.pass = hr.pass;
      char order[64];
      if (hr.order_converged)
        std::snprintf(order, sizeof order, "residuals at roundoff floor");
      else
        std::snprintf(order, sizeof order, "residual decay order %.3g",
                      hr.order);
      r.detail = order;
      return r;
    }
  } catch (const QuadratureError& e) {
    CheckReport r;
    r.name = c.name;
    r.type = c.type;
    r.tolerance = c.tolerance;
    r.pass = false;
    r.detail = std::string("quadrature did not converge: ") + e.what();
    return r;
  }
  throw DocumentError("check '" + c.name + "': unknown type '" + c.type +
                      "'");
}

/// Run every check of the given suite ("all" or one check type), in document
/// order.
inline std::vector<CheckReport> run_suite(const SceneDocument& doc,
                                          const std::string& suite) {
  if (suite != "all") {
    static const char* types[] = {
        "path-shuffle",     "composition",   "decorated-shuffle",
        "membrane-shuffle", "glued-product", "higher-transport",
        "holonomy"};
    bool known = false;
    for (const char* t : types) known = known || suite == t;
    if (!known) throw DocumentError("unknown suite '" + suite + "'");
  }
  std::vector<CheckReport> out;
  for (const SceneCheck& c : doc.checks())
    if (suite == "all" || c.type == suite) out.push_back(run_check(doc, c));
  return out;
}

inline std::string report_json(const std::string& document,
                               const std::string& suite,
                               const std::vector<CheckReport>& reports) {
  std::string out;
  out += "{\n";
  out += "  \"document\": \"" + json_escape(document) + "\",\n";
  out += "  \"suite\": \"" + json_escape(suite) + "\",\n";
  out += "  \"checks\": [";
  bool all_pass = true;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const CheckReport& r = reports[i];
    all_pass = all_pass && r.pass;
    out += i == 0 ? "\n" : ",\n";
    out += "    {\"name\": \"" + json_escape(r.name) + "\", \"type\": \"" +
           json_escape(r.type) + "\", \"lhs\": " + format_double(r.lhs) +
           ", \"rhs\": " + format_double(r.rhs) +
           ", \"abs_diff\": " + format_double(r.abs_diff) +
           ", \"tolerance\": " + format_double(r.tolerance) +
           ", \"pass\": " + (r.pass ? "true" : "false");
    if (!r.detail.empty())
      out += ", \"detail\": \"" + json_escape(r.detail) + "\"";
    out += "}";
  }
  out += reports.empty() ? "],\n" : "\n  ],\n";
  out += std::string("  \"pass\": ") + (all_pass ? "true" : "false") + "\n";
  out += "}\n";
  return out;
}

inline std::string report_table(const std::vector<CheckReport>& reports) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof line, "%-28s %-18s %14s %14s %10s %6s\n", "name",
                "type", "lhs", "rhs", "abs_diff", "pass");
  out += line;
  for (const CheckReport& r : reports) {
    std::snprintf(line, sizeof line, "%-28s %-18s %14.6g %14.6g %10.3g %6s\n",
                  r.name.c_str(), r.type.c_str(), r.lhs, r.rhs, r.abs_diff,
                  r.pass ? "pass" : "FAIL");
    out += line;
    if (!r.detail.empty()) {
      std::snprintf(line, sizeof line, "    %s\n", r.detail.c_str());
      out += line;
    }
  }
  return out;
}

}  // namespace mint
