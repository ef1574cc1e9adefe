// mint: iterated-integral calculator and identity verifier.
//
// Commands:
//   integrate-path      word integral of 1-forms along a named path
//   integrate-membrane  labeled-integrand integral over a named membrane
//   signature           transport-series coefficients up to a level
//   transport           finite transport step (int_gamma w o theta^on) theta
//   verify <suite>      run a document's checks (one type or "all")
//   shuffles count|list shuffle family combinatorics
//
// Exit codes: 0 = pass, 1 = check or convergence failure, 2 = usage or
// parse/validation error.

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mint/chen.hpp"
#include "mint/document.hpp"
#include "mint/membranes.hpp"
#include "mint/runner.hpp"
#include "mint/shuffles.hpp"

namespace {

using namespace mint;

std::string word_key(const std::vector<int>& w) {
  std::string out;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(w[i]);
  }
  return out;
}

std::vector<int> parse_tuple(const std::string& s) {
  std::vector<int> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(std::stoi(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(std::stoi(cur));
  if (out.empty()) throw std::invalid_argument("empty tuple");
  return out;
}

std::string arrangement_str(const Arrangement& a) {
  std::string out = "(";
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (i) out += " ";
    out += std::to_string(a[i]);
  }
  return out + ")";
}

const Membrane& named_path(const SceneDocument& doc, const std::string& name) {
  const Membrane& m = doc.membrane(name);
  if (m.cube_dim() != 1)
    throw DocumentError("'" + name + "' is not a path (cube_dim 1)");
  return m;
}

int cmd_integrate_path(const std::string& file, const std::string& path,
                       const std::vector<std::string>& form_names) {
  SceneDocument doc = SceneDocument::load(file);
  const Membrane& gamma = named_path(doc, path);
  std::vector<DifferentialForm> forms;
  for (const auto& n : form_names) forms.push_back(doc.form(n));
  IntegrationResult r = iterated_path_integral(gamma, forms, doc.quadrature());
  std::string out = "{\n  \"command\": \"integrate-path\",\n";
  out += "  \"path\": \"" + json_escape(path) + "\",\n  \"forms\": [";
  for (std::size_t i = 0; i < form_names.size(); ++i)
    out += (i ? ", " : "") + ("\"" + json_escape(form_names[i]) + "\"");
  out += "],\n";
  out += "  \"value\": " + format_double(r.value) + ",\n";
  out += "  \"error_estimate\": " + format_double(r.error_estimate) + "\n}\n";
  std::fputs(out.c_str(), stdout);
  return 0;
}

int cmd_integrate_membrane(const std::string& file, const std::string& name,
                           const std::string& integrand) {
  SceneDocument doc = SceneDocument::load(file);
  IntegrationResult r = integrate_membrane(
      doc.membrane(name), doc.integrand(integrand), doc.quadrature());
  std::string out = "{\n  \"command\": \"integrate-membrane\",\n";
  out += "  \"membrane\": \"" + json_escape(name) + "\",\n";
  out += "  \"integrand\": \"" + json_escape(integrand) + "\",\n";
  out += "  \"value\": " + format_double(r.value) + ",\n";
  out += "  \"error_estimate\": " + format_double(r.error_estimate) + "\n}\n";
  std::fputs(out.c_str(), stdout);
  return 0;
}

int cmd_signature(const std::string& file, const std::string& path, int level,
                  const std::vector<std::string>& letter_names) {
  SceneDocument doc = SceneDocument::load(file);
  const Membrane& gamma = named_path(doc, path);
  std::vector<DifferentialForm> letters;
  std::vector<std::string> names = letter_names;
  if (names.empty()) {
    for (int i = 1; i <= doc.ambient_dim(); ++i) {
      letters.push_back(DifferentialForm::dx(doc.ambient_dim(), i));
      names.push_back("dx" + std::to_string(i));
    }
  } else {
    for (const auto& n : names) letters.push_back(doc.form(n));
  }
  TensorSeries s = transport_series(gamma, letters, level, doc.quadrature());
  std::string out = "{\n  \"command\": \"signature\",\n";
  out += "  \"path\": \"" + json_escape(path) + "\",\n";
  out += "  \"level\": " + std::to_string(level) + ",\n";
  out += "  \"letters\": [";
  for (std::size_t i = 0; i < names.size(); ++i)
    out += (i ? ", " : "") + ("\"" + json_escape(names[i]) + "\"");
  out += "],\n  \"coefficients\": {";
  bool first = true;
  for (const auto& [w, v] : s.coefficients()) {
    out += first ? "\n" : ",\n";
    out += "    \"" + word_key(w) + "\": " + format_double(v);
    first = false;
  }
  out += "\n  }\n}\n";
  std::fputs(out.c_str(), stdout);
  return 0;
}

int cmd_transport(const std::string& file, const std::string& path,
                  const std::string& w_name, const std::string& theta_name,
                  int steps) {
  SceneDocument doc = SceneDocument::load(file);
  const Membrane& gamma = named_path(doc, path);
  FormValue cov = transport_step(gamma, doc.form(w_name), doc.form(theta_name),
                                 steps, doc.quadrature());
  std::string out = "{\n  \"command\": \"transport\",\n";
  out += "  \"path\": \"" + json_escape(path) + "\",\n";
  out += "  \"w\": \"" + json_escape(w_name) + "\",\n";
  out += "  \"theta\": \"" + json_escape(theta_name) + "\",\n";
  out += "  \"steps\": " + std::to_string(steps) + ",\n";
  out += "  \"covector\": {";
  bool first = true;
  for (const auto& [I, v] : cov) {
    out += first ? "\n" : ",\n";
    out += "    \"" + word_key(I) + "\": " + format_double(v);
    first = false;
  }
  out += "\n  }\n}\n";
  std::fputs(out.c_str(), stdout);
  return 0;
}

int cmd_verify(const std::string& file, const std::string& suite, bool table) {
  SceneDocument doc = SceneDocument::load(file);
  std::vector<CheckReport> reports = run_suite(doc, suite);
  if (table)
    std::fputs(report_table(reports).c_str(), stdout);
  else
    std::fputs(report_json(file, suite, reports).c_str(), stdout);
  for (const CheckReport& r : reports)
    if (!r.pass) return 1;
  return 0;
}

int cmd_shuffles(const std::string& action, const std::string& t1,
                 const std::string& t2, const std::string& family,
                 int copies, bool barred) {
  std::vector<int> k1 = parse_tuple(t1);
  std::vector<int> k2 = parse_tuple(t2);
  const bool single = k1.size() == 1 && family == "product" && !barred;
  std::uint64_t count = 0;
  if (family == "product") {
    if (k1.size() != k2.size())
      throw std::invalid_argument("tuples must have equal length");
    count = count_product(k1, k2);
  } else if (family == "sh1") {
    count = count_sh1(k1, k2);
  } else if (family == "shn") {
    count = count_shn(k1, k2, copies);
  } else {
    throw std::invalid_argument("unknown family '" + family +
                                "' (product, sh1, shn)");
  }
  if (action == "count") {
    std::printf("%llu\n", static_cast<unsigned long long>(count));
    return 0;
  }
  // list
  std::vector<Shuffle> shuffles;
  if (family == "product")
    shuffles = enumerate_product(k1, k2, barred);
  else if (family == "sh1")
    shuffles = enumerate_sh1(k1, k2);
  else
    shuffles = enumerate_shn(k1, k2, copies);
  if (single) {
    for (const Shuffle& s : shuffles)
      std::printf("%s\n", arrangement_str(s.dirs[0]).c_str());
  } else {
    for (const Shuffle& s : shuffles) {
      std::string line;
      for (std::size_t i = 0; i < s.dirs.size(); ++i) {
        if (i) line += " x ";
        line += arrangement_str(s.dirs[i]);
      }
      std::printf("%s\n", line.c_str());
    }
  }
  if (shuffles.size() != count)
    throw std::logic_error("enumeration does not match the count formula");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"iterated integrals over paths and membranes"};
  app.require_subcommand(1);

  std::string file, path_name, membrane_name, integrand_name;
  std::vector<std::string> form_names, letter_names;
  std::string w_name, theta_name;
  int level = 3, steps = 0;
  bool table = false;
  std::string suite = "all";
  std::string action, tuple1, tuple2, family = "product";
  int copies = 1;
  bool barred = false;

  CLI::App* ip = app.add_subcommand("integrate-path",
                                    "iterated integral of a word of 1-forms");
  ip->add_option("document", file, "scene document")->required();
  ip->add_option("--path", path_name, "path name")->required();
  ip->add_option("--form", form_names, "form names, outermost first")
      ->required();

  CLI::App* im = app.add_subcommand("integrate-membrane",
                                    "labeled-integrand membrane integral");
  im->add_option("document", file, "scene document")->required();
  im->add_option("--membrane", membrane_name, "membrane name")->required();
  im->add_option("--integrand", integrand_name, "integrand name")->required();

  CLI::App* sig = app.add_subcommand("signature",
                                     "transport-series coefficients");
  sig->add_option("document", file, "scene document")->required();
  sig->add_option("--path", path_name, "path name")->required();
  sig->add_option("--level", level, "maximum word length")->required();
  sig->add_option("--letter", letter_names,
                  "letter forms (default: coordinate 1-forms)");

  CLI::App* tr = app.add_subcommand("transport", "finite transport step");
  tr->add_option("document", file, "scene document")->required();
  tr->add_option("--path", path_name, "path name")->required();
  tr->add_option("--w", w_name, "leading 1-form")->required();
  tr->add_option("--theta", theta_name, "iterated 1-form")->required();
  tr->add_option("--steps", steps, "iteration count")->required();

  CLI::App* ver = app.add_subcommand("verify", "run document checks");
  ver->add_option("document", file, "scene document")->required();
  ver->add_option("suite", suite,
                  "check type or 'all' (path-shuffle, composition, "
                  "decorated-shuffle, membrane-shuffle, glued-product, "
                  "higher-transport, holonomy)");
  ver->add_flag("--table", table, "human-readable table instead of JSON");

  CLI::App* sh = app.add_subcommand("shuffles", "shuffle combinatorics");
  sh->add_option("action", action, "count or list")->required();
  sh->add_option("k1", tuple1, "first cut tuple, e.g. 2 or 1,1")->required();
  sh->add_option("k2", tuple2, "second cut tuple")->required();
  sh->add_option("--family", family, "product (default), sh1, or shn");
  sh->add_option("--copies", copies, "copy count for shn");
  sh->add_flag("--barred", barred, "barred shuffles (boundaries fixed)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);   // prints help or the usage message
    return code == 0 ? 0 : 2; // usage problems exit 2
  }

  try {
    if (ip->parsed()) return cmd_integrate_path(file, path_name, form_names);
    if (im->parsed())
      return cmd_integrate_membrane(file, membrane_name, integrand_name);
    if (sig->parsed()) return cmd_signature(file, path_name, level,
                                            letter_names);
    if (tr->parsed())
      return cmd_transport(file, path_name, w_name, theta_name, steps);
    if (ver->parsed()) return cmd_verify(file, suite, table);
    if (sh->parsed()) {
      if (action != "count" && action != "list")
        throw std::invalid_argument("shuffles action must be count or list");
      return cmd_shuffles(action, tuple1, tuple2, family, copies, barred);
    }
  } catch (const mint::DocumentError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const mint::QuadratureError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}
