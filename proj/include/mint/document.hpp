#pragma once

// Scene documents: JSON files that name forms, membranes, families,
// integrands, a quadrature configuration, and a list of checks. The CLI
// loads one document and runs computations or verification suites against
// it. Parsing reports positions as line:column; name resolution and
// dimension consistency are validated up front.

#include <cstddef>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "chen.hpp"
#include "forms.hpp"
#include "geometry.hpp"
#include "membranes.hpp"
#include "quadrature.hpp"

namespace mint {

class DocumentError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct SceneCheck {
  std::string type;
  std::string name;
  double tolerance = 1e-6;

  // path checks
  std::string path;
  std::vector<std::string> left_word, right_word;  // form names
  std::string left_start, left_end, right_start, right_end;  // decorations
  std::vector<std::string> letters;
  int level = 3;

  // membrane checks
  std::string membrane, first, second;
  std::string left_integrand, right_integrand;
  bool barred = true;

  // higher transport
  std::string w_integrand, t_integrand;
  std::vector<int> w_slot, t_slot;
  int copies = 1;

  // holonomy
  std::vector<std::vector<std::string>> entries;  // form names, "0" = zero
  std::vector<double> center, epsilons;

  bool has_quadrature = false;
  QuadratureConfig quadrature;
};

namespace detail {

inline std::pair<std::size_t, std::size_t> offset_to_line_col(
    const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

inline MultiIndex parse_multi_index(const std::string& key) {
  MultiIndex I;
  if (key.empty() || key == "0") return I;
  std::stringstream ss(key);
  std::string part;
  while (std::getline(ss, part, ',')) {
    try {
      I.push_back(std::stoi(part));
    } catch (const std::exception&) {
      throw DocumentError("bad coefficient index '" + key + "'");
    }
  }
  return I;
}

}  // namespace detail

class SceneDocument {
public:
  static SceneDocument load(const std::string& file) {
    std::ifstream in(file);
    if (!in)
      throw DocumentError("cannot open document '" + file + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), file);
  }

  static SceneDocument parse(const std::string& text,
                             const std::string& origin = "<input>") {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      auto [line, col] = detail::offset_to_line_col(text, e.byte);
      throw DocumentError(origin + ":" + std::to_string(line) + ":" +
                          std::to_string(col) + ": " + e.what());
    }
    try {
      return build(doc, origin);
    } catch (const DocumentError&) {
      throw;
    } catch (const std::exception& e) {
      throw DocumentError(origin + ": " + e.what());
    }
  }

  const std::string& name() const { return name_; }
  int ambient_dim() const { return ambient_dim_; }
  const QuadratureConfig& quadrature() const { return quadrature_; }
  const std::vector<SceneCheck>& checks() const { return checks_; }

  const DifferentialForm& form(const std::string& name) const {
    auto it = forms_.find(name);
    if (it == forms_.end())
      throw DocumentError("unknown form '" + name + "'");
    return it->second;
  }

  const Membrane& membrane(const std::string& name) const {
    auto it = membranes_.find(name);
    if (it == membranes_.end())
      throw DocumentError("unknown membrane '" + name + "'");
    return it->second;
  }

  const MembraneFamily& family(const std::string& name) const {
    auto it = families_.find(name);
    if (it == families_.end())
      throw DocumentError("unknown family '" + name + "'");
    return it->second;
  }

  const LabeledIntegrand& integrand(const std::string& name) const {
    auto it = integrands_.find(name);
    if (it == integrands_.end())
      throw DocumentError("unknown integrand '" + name + "'");
    return it->second;
  }

  const std::map<std::string, DifferentialForm>& forms() const {
    return forms_;
  }
  const std::map<std::string, Membrane>& membranes() const {
    return membranes_;
  }
  const std::map<std::string, MembraneFamily>& families() const {
    return families_;
  }
  const std::map<std::string, LabeledIntegrand>& integrands() const {
    return integrands_;
  }

  /// A connection matrix from a table of form names ("0" = the zero 1-form).
  MatrixConnection connection(
      const std::vector<std::vector<std::string>>& entries) const {
    MatrixConnection conn;
    conn.size = static_cast<int>(entries.size());
    for (const auto& row : entries) {
      if (row.size() != entries.size())
        throw DocumentError("connection entry table must be square");
      for (const auto& name : row)
        conn.entries.push_back(name == "0"
                                   ? DifferentialForm::zero(ambient_dim_, 1)
                                   : form(name));
    }
    conn.validate();
    return conn;
  }

private:
  static QuadratureConfig parse_quadrature(const nlohmann::json& q) {
    QuadratureConfig cfg;
    if (q.contains("points_per_axis"))
      cfg.points_per_axis = q.at("points_per_axis").get<int>();
    if (q.contains("rule"))
      cfg.rule = parse_rule(q.at("rule").get<std::string>());
    if (q.contains("refinement_levels"))
      cfg.refinement_levels = q.at("refinement_levels").get<int>();
    if (q.contains("rel_tol")) cfg.rel_tol = q.at("rel_tol").get<double>();
    if (q.contains("max_total_cuts"))
      cfg.max_total_cuts = q.at("max_total_cuts").get<int>();
    cfg.validate();
    return cfg;
  }

  static SceneDocument build(const nlohmann::json& doc,
                             const std::string& origin) {
    if (!doc.is_object())
      throw DocumentError(origin + ": document root must be an object");
    SceneDocument out;
    out.name_ = doc.value("name", std::string{});

    if (doc.contains("ambient_dim"))
      out.ambient_dim_ = doc.at("ambient_dim").get<int>();
    else if (doc.contains("dimension"))
      out.ambient_dim_ = doc.at("dimension").get<int>();
    else
      throw DocumentError("document must declare 'ambient_dim'");
    if (out.ambient_dim_ < 1)
      throw DocumentError("ambient_dim must be >= 1");

    if (doc.contains("quadrature"))
      out.quadrature_ = parse_quadrature(doc.at("quadrature"));

    // forms
    if (doc.contains("forms")) {
      for (const auto& [name, body] : doc.at("forms").items()) {
        int dim = body.value("dim", out.ambient_dim_);
        if (dim != out.ambient_dim_)
          throw DocumentError("form '" + name + "' declares dim " +
                              std::to_string(dim) +
                              " inconsistent with the document");
        int degree = body.at("degree").get<int>();
        std::map<MultiIndex, std::string> coeffs;
        if (body.contains("coeffs"))
          for (const auto& [key, val] : body.at("coeffs").items()) {
            MultiIndex I = detail::parse_multi_index(key);
            if (static_cast<int>(I.size()) != degree)
              throw DocumentError("form '" + name + "': coefficient '" + key +
                                  "' does not have " + std::to_string(degree) +
                                  " indices");
            coeffs[I] = val.get<std::string>();
          }
        try {
          out.forms_.emplace(name,
                             DifferentialForm::parse(dim, degree, coeffs));
        } catch (const std::exception& e) {
          throw DocumentError("form '" + name + "': " + e.what());
        }
      }
    }

    // membranes (plain first, then glue references, iterated for nesting)
    if (doc.contains("membranes")) {
      const auto& ms = doc.at("membranes");
      for (const auto& [name, body] : ms.items()) {
        if (body.contains("glue")) continue;
        int cube_dim = body.at("cube_dim").get<int>();
        std::vector<std::string> comps =
            body.at("components").get<std::vector<std::string>>();
        if (static_cast<int>(comps.size()) != out.ambient_dim_)
          throw DocumentError("membrane '" + name +
                              "' needs one component per ambient dimension");
        try {
          out.membranes_.emplace(
              name, Membrane::symbolic(cube_dim, out.ambient_dim_, comps));
        } catch (const std::exception& e) {
          throw DocumentError("membrane '" + name + "': " + e.what());
        }
      }
      bool progress = true;
      while (progress) {
        progress = false;
        for (const auto& [name, body] : ms.items()) {
          if (!body.contains("glue") || out.membranes_.count(name)) continue;
          auto parts = body.at("glue").get<std::vector<std::string>>();
          if (parts.size() != 2)
            throw DocumentError("membrane '" + name +
                                "': glue takes exactly two membranes");
          if (!out.membranes_.count(parts[0]) ||
              !out.membranes_.count(parts[1]))
            continue;
          double face_tol = body.value("face_tol", 1e-9);
          try {
            out.membranes_.emplace(
                name, glue_membranes(out.membranes_.at(parts[0]),
                                     out.membranes_.at(parts[1]), face_tol));
          } catch (const std::exception& e) {
            throw DocumentError("membrane '" + name + "': " + e.what());
          }
          progress = true;
        }
      }
      for (const auto& [name, body] : ms.items())
        if (!out.membranes_.count(name))
          throw DocumentError("membrane '" + name +
                              "': glue references cannot be resolved");
    }

    // families
    if (doc.contains("families")) {
      for (const auto& [name, body] : doc.at("families").items()) {
        int cube_dim = body.at("cube_dim").get<int>();
        std::vector<std::string> comps =
            body.at("components").get<std::vector<std::string>>();
        try {
          out.families_.emplace(name, MembraneFamily::parse(
                                          cube_dim, out.ambient_dim_, comps));
        } catch (const std::exception& e) {
          throw DocumentError("family '" + name + "': " + e.what());
        }
      }
    }

    // integrands
    if (doc.contains("integrands")) {
      for (const auto& [name, body] : doc.at("integrands").items()) {
        std::vector<int> cuts = body.at("cuts").get<std::vector<int>>();
        int cube_dim = body.value("cube_dim", static_cast<int>(cuts.size()));
        try {
          LabeledIntegrand I(cube_dim, cuts);
          for (const auto& slot : body.at("slots")) {
            std::vector<int> j = slot.at("j").get<std::vector<int>>();
            std::string fname = slot.at("form").get<std::string>();
            std::vector<int> J;
            if (slot.contains("J")) J = slot.at("J").get<std::vector<int>>();
            I.set_slot(j, out.form(fname), J);
          }
          out.integrands_.emplace(name, std::move(I));
        } catch (const DocumentError&) {
          throw;
        } catch (const std::exception& e) {
          throw DocumentError("integrand '" + name + "': " + e.what());
        }
      }
    }

    // checks
    if (doc.contains("checks")) {
      for (const auto& c : doc.at("checks")) {
        SceneCheck chk;
        chk.type = c.at("type").get<std::string>();
        chk.name = c.value("name", chk.type);
        chk.tolerance = c.value("tolerance", 1e-6);
        chk.path = c.value("path", std::string{});
        chk.membrane = c.value("membrane", std::string{});
        chk.first = c.value("first", std::string{});
        chk.second = c.value("second", std::string{});
        if (c.contains("left")) {
          if (c.at("left").is_array())
            chk.left_word = c.at("left").get<std::vector<std::string>>();
          else
            chk.left_integrand = c.at("left").get<std::string>();
        }
        if (c.contains("right")) {
          if (c.at("right").is_array())
            chk.right_word = c.at("right").get<std::vector<std::string>>();
          else
            chk.right_integrand = c.at("right").get<std::string>();
        }
        chk.left_start = c.value("left_start", std::string{});
        chk.left_end = c.value("left_end", std::string{});
        chk.right_start = c.value("right_start", std::string{});
        chk.right_end = c.value("right_end", std::string{});
        if (c.contains("letters"))
          chk.letters = c.at("letters").get<std::vector<std::string>>();
        chk.level = c.value("level", 3);
        chk.barred = c.value("barred", true);
        chk.w_integrand = c.value("w", std::string{});
        chk.t_integrand = c.value("t", std::string{});
        if (c.contains("w_slot"))
          chk.w_slot = c.at("w_slot").get<std::vector<int>>();
        if (c.contains("t_slot"))
          chk.t_slot = c.at("t_slot").get<std::vector<int>>();
        chk.copies = c.value("copies", 1);
        if (c.contains("entries"))
          chk.entries =
              c.at("entries").get<std::vector<std::vector<std::string>>>();
        if (c.contains("center"))
          chk.center = c.at("center").get<std::vector<double>>();
        if (c.contains("epsilons"))
          chk.epsilons = c.at("epsilons").get<std::vector<double>>();
        if (c.contains("quadrature")) {
          chk.has_quadrature = true;
          chk.quadrature = parse_quadrature(c.at("quadrature"));
        }
        out.checks_.push_back(std::move(chk));
      }
    }

    out.validate_references();
    return out;
  }

  void validate_references() const {
    static const std::vector<std::string> known_types{
        "path-shuffle",     "composition",  "decorated-shuffle",
        "membrane-shuffle", "glued-product", "higher-transport",
        "holonomy"};
    for (const SceneCheck& c : checks_) {
      bool known = false;
      for (const auto& t : known_types) known = known || t == c.type;
      if (!known)
        throw DocumentError("check '" + c.name + "': unknown type '" +
                            c.type + "'");
      if (c.type == "path-shuffle" || c.type == "decorated-shuffle") {
        membrane(c.path);
        for (const auto& f : c.left_word) form(f);
        for (const auto& f : c.right_word) form(f);
      }
      if (c.type == "decorated-shuffle") {
        for (const auto& f :
             {c.left_start, c.left_end, c.right_start, c.right_end})
          if (!f.empty()) form(f);
      }
      if (c.type == "composition") {
        membrane(c.first);
        membrane(c.second);
        for (const auto& f : c.letters) form(f);
      }
      if (c.type == "membrane-shuffle") {
        membrane(c.membrane);
        integrand(c.left_integrand);
        integrand(c.right_integrand);
      }
      if (c.type == "glued-product") {
        membrane(c.first);
        membrane(c.second);
        integrand(c.left_integrand);
        integrand(c.right_integrand);
      }
      if (c.type == "higher-transport") {
        membrane(c.membrane);
        integrand(c.w_integrand);
        integrand(c.t_integrand);
      }
      if (c.type == "holonomy") {
        if (c.entries.empty())
          throw DocumentError("check '" + c.name +
                              "': holonomy needs connection entries");
        for (const auto& row : c.entries)
          for (const auto& f : row)
            if (f != "0") form(f);
      }
    }
  }

  std::string name_;
  int ambient_dim_ = 0;
  QuadratureConfig quadrature_;
  std::map<std::string, DifferentialForm> forms_;
  std::map<std::string, Membrane> membranes_;
  std::map<std::string, MembraneFamily> families_;
  std::map<std::string, LabeledIntegrand> integrands_;
  std::vector<SceneCheck> checks_;
};

}  // namespace mint
