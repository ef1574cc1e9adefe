// Acceptance gate: ten numbered criteria, one pass/fail line each.
// Exit code is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "mint/chen.hpp"
#include "mint/document.hpp"
#include "mint/membranes.hpp"
#include "mint/runner.hpp"
#include "mint/shuffles.hpp"
#include "oracles.hpp"

using namespace mint;

namespace {

QuadratureConfig path_cfg() {
  QuadratureConfig cfg;
  cfg.points_per_axis = 128;
  cfg.rel_tol = 1e-3;
  return cfg;
}

QuadratureConfig membrane_cfg(int points = 32) {
  QuadratureConfig cfg;
  cfg.points_per_axis = points;
  cfg.rel_tol = 1e-3;
  return cfg;
}

std::vector<DifferentialForm> coordinate_letters(int d) {
  std::vector<DifferentialForm> out;
  for (int i = 1; i <= d; ++i) out.push_back(DifferentialForm::dx(d, i));
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

// --------------------------------------------------------------------------
// 1. Path shuffle identity on random polynomial data.

bool c1_path_shuffle(std::string& detail) {
  std::mt19937 rng(101);
  QuadratureConfig cfg = path_cfg();
  std::uniform_int_distribution<int> len(1, 3);
  double worst = 0.0;
  bool ok = true;
  for (int trial = 0; trial < 20; ++trial) {
    Membrane g = oracle::random_cubic_path(3, rng);
    std::vector<DifferentialForm> w1, w2;
    for (int i = len(rng); i > 0; --i) w1.push_back(oracle::random_1form(3, 2, rng));
    for (int i = len(rng); i > 0; --i) w2.push_back(oracle::random_1form(3, 2, rng));
    CheckReport r = check_shuffle(g, w1, w2, cfg, 1e-6);
    worst = std::max(worst, r.abs_diff / (1.0 + std::abs(r.lhs)));
    ok = ok && r.pass;
  }
  detail = "20 instances, worst relative diff " + fmt(worst);
  return ok;
}

// --------------------------------------------------------------------------
// 2. Composition: series of a concatenation = product of the series.

bool c2_composition(std::string& detail) {
  std::mt19937 rng(202);
  QuadratureConfig cfg = path_cfg();
  std::vector<DifferentialForm> letters = coordinate_letters(3);
  double worst = 0.0;
  bool ok = true;
  for (int trial = 0; trial < 10; ++trial) {
    Membrane a = oracle::random_cubic_path(3, rng);
    Membrane draft = oracle::random_cubic_path(3, rng);
    std::vector<double> a1 = a.evaluate(std::vector<double>{1.0});
    std::vector<double> b0 = draft.evaluate(std::vector<double>{0.0});
    VariableListPtr vars = cube_variables(1);
    std::vector<Expression> comps;
    for (std::size_t c = 0; c < a1.size(); ++c)
      comps.push_back(draft.pieces().front().components[c] +
                      Expression::constant(a1[c] - b0[c], vars));
    Membrane b = Membrane::symbolic(1, 3, std::move(comps));
    CheckReport r = check_composition(a, b, letters, 4, cfg, 1e-6);
    worst = std::max(worst, r.abs_diff);
    ok = ok && r.abs_diff <= 1e-6;
  }
  detail = "10 path pairs, level 4, worst coefficient diff " + fmt(worst);
  return ok;
}

// --------------------------------------------------------------------------
// 3. Decorated shuffle with 0-form and 1-form endpoint decorations.

bool c3_decorated(std::string& detail) {
  std::mt19937 rng(303);
  QuadratureConfig cfg = path_cfg();
  cfg.points_per_axis = 192;  // headroom under the absolute bound
  std::uniform_int_distribution<int> len(1, 2);
  double worst = 0.0;
  bool ok = true;
  for (int trial = 0; trial < 10; ++trial) {
    Membrane g = oracle::random_cubic_path(3, rng);
    std::vector<DifferentialForm> w1, w2;
    for (int i = len(rng); i > 0; --i) w1.push_back(oracle::random_1form(3, 1, rng));
    for (int i = len(rng); i > 0; --i) w2.push_back(oracle::random_1form(3, 1, rng));
    // one side decorates with 0-forms, the other with a 1-form at the end,
    // so both kinds of endpoint decoration are exercised in every instance
    DifferentialForm s1 = oracle::random_0form(3, 2, rng);
    DifferentialForm e1 = oracle::random_1form(3, 1, rng);
    DifferentialForm s2 = oracle::random_0form(3, 1, rng);
    DifferentialForm e2 = trial % 2 == 0 ? oracle::random_0form(3, 2, rng)
                                         : DifferentialForm::unit(3);
    CheckReport r =
        check_decorated_shuffle(g, s1, w1, e1, s2, w2, e2, cfg, 1e-6);
    worst = std::max(worst, r.abs_diff);
    ok = ok && r.pass && r.abs_diff <= 1e-6;
  }
  detail = "10 instances, worst component diff " + fmt(worst);
  return ok;
}

// --------------------------------------------------------------------------
// 4. Known closed forms: the parabola and straight-line signatures.

bool c4_closed_forms(std::string& detail) {
  QuadratureConfig cfg = path_cfg();
  Membrane parabola = Membrane::symbolic(1, 2, {"t1", "t1^2"});
  DifferentialForm dx1 = DifferentialForm::dx(2, 1);
  DifferentialForm dx2 = DifferentialForm::dx(2, 2);
  double v12 = iterated_path_integral(parabola, {dx1, dx2}, cfg).value;
  double v21 = iterated_path_integral(parabola, {dx2, dx1}, cfg).value;
  bool ok = std::abs(v12 - 2.0 / 3.0) <= 1e-8 && std::abs(v21 - 1.0 / 3.0) <= 1e-8;

  std::vector<double> v{0.7, -1.3, 0.4};
  Membrane line = line_path({0.0, 0.0, 0.0}, v);
  TensorSeries s = transport_series(line, coordinate_letters(3), 4, cfg);
  const double fact[] = {1.0, 1.0, 2.0, 6.0, 24.0};
  double worst = 0.0;
  for (const auto& [w, c] : s.coefficients()) {
    double expect = 1.0;
    for (int letter : w) expect *= v[static_cast<std::size_t>(letter - 1)];
    expect /= fact[w.size()];
    worst = std::max(worst, std::abs(c - expect));
  }
  ok = ok && worst <= 1e-9;
  detail = "parabola diffs " + fmt(std::abs(v12 - 2.0 / 3.0)) + ", " +
           fmt(std::abs(v21 - 1.0 / 3.0)) + "; line worst " + fmt(worst);
  return ok;
}

// --------------------------------------------------------------------------
// 5. Membrane shuffle on random sheets.

LabeledIntegrand single_slot_integrand(const DifferentialForm& w) {
  LabeledIntegrand I(2, {1, 1});
  I.set_slot({1, 1}, w, {1, 2});
  return I;
}

bool c5_membrane_shuffle(std::string& detail) {
  std::mt19937 rng(505);
  QuadratureConfig cfg = membrane_cfg(48);
  double worst = 0.0;
  bool ok = true;
  for (int trial = 0; trial < 10; ++trial) {
    Membrane g = oracle::random_sheet(3, rng);
    LabeledIntegrand A = single_slot_integrand(oracle::random_2form(3, 2, rng));
    LabeledIntegrand B = single_slot_integrand(oracle::random_2form(3, 2, rng));
    CheckReport r = check_membrane_shuffle(g, A, B, false, cfg, 1e-5);
    worst = std::max(worst, r.abs_diff / (1.0 + std::abs(r.lhs)));
    ok = ok && r.pass;
  }
  detail = "10 sheets, worst relative diff " + fmt(worst);
  return ok;
}

// --------------------------------------------------------------------------
// 6. Glued product: affine half-squares, random curved pairs, and the
//    one-dimensional degeneration against the path pipeline.

Membrane half_of(const Membrane& g, bool upper) {
  VariableListPtr vars = cube_variables(2);
  Expression t1 = Expression::variable(0, vars);
  Expression t2 = Expression::variable(1, vars);
  Expression half = Expression::constant(0.5, vars);
  Expression s = upper ? half + half * t1 : half * t1;
  std::vector<Expression> comps;
  for (const Expression& comp : g.pieces().front().components)
    comps.push_back(comp.substitute({s, t2}, vars));
  return Membrane::symbolic(g.cube_dim(), g.ambient_dim(), std::move(comps));
}

bool c6_glued_product(std::string& detail) {
  std::mt19937 rng(606);
  QuadratureConfig cfg = membrane_cfg(48);
  bool ok = true;
  double worst = 0.0;

  // two affine halves of the identity square
  Membrane square = Membrane::symbolic(2, 2, {"t1", "t2"});
  Membrane lo = half_of(square, false);
  Membrane hi = half_of(square, true);
  LabeledIntegrand A(2, {1, 1});
  A.set_slot({1, 1}, DifferentialForm::parse(2, 2, {{MultiIndex{1, 2}, "1"}}),
             {1, 2});
  LabeledIntegrand B(2, {1, 1});
  B.set_slot({1, 1}, DifferentialForm::parse(2, 2, {{MultiIndex{1, 2}, "x1"}}),
             {1, 2});
  CheckReport flat = check_glued_product(lo, hi, A, B, cfg, 1e-5);
  worst = std::max(worst, flat.abs_diff / (1.0 + std::abs(flat.lhs)));
  ok = ok && flat.pass;

  // five random curved pairs, halves of one smooth sheet so faces match
  for (int trial = 0; trial < 5; ++trial) {
    Membrane g = oracle::random_sheet(3, rng);
    Membrane glo = half_of(g, false);
    Membrane ghi = half_of(g, true);
    LabeledIntegrand RA = single_slot_integrand(oracle::random_2form(3, 2, rng));
    LabeledIntegrand RB = single_slot_integrand(oracle::random_2form(3, 2, rng));
    CheckReport r = check_glued_product(glo, ghi, RA, RB, cfg, 1e-5);
    worst = std::max(worst, r.abs_diff / (1.0 + std::abs(r.lhs)));
    ok = ok && r.pass;
  }

  // n = 1 degeneration: both pipelines give products of path integrals
  QuadratureConfig pcfg = path_cfg();
  Membrane plo = Membrane::symbolic(1, 2, {"t1/2", "t1^2/4"});
  Membrane phi = Membrane::symbolic(1, 2, {"(1+t1)/2", "(1+t1)^2/4"});
  DifferentialForm x2dx1 = DifferentialForm::parse(2, 1, {{MultiIndex{1}, "x2"}});
  DifferentialForm dx1 = DifferentialForm::dx(2, 1);
  DifferentialForm dx2 = DifferentialForm::dx(2, 2);
  LabeledIntegrand PA(1, {2});
  PA.set_slot({1}, x2dx1, {1});
  PA.set_slot({2}, dx2, {1});
  LabeledIntegrand PB(1, {1});
  PB.set_slot({1}, dx1, {1});
  CheckReport deg = check_glued_product(plo, phi, PA, PB, pcfg, 1e-9);
  double chen_lhs = iterated_path_integral(plo, {x2dx1, dx2}, pcfg).value *
                    iterated_path_integral(phi, {dx1}, pcfg).value;
  double path_diff = std::max(std::abs(deg.lhs - chen_lhs),
                              std::abs(deg.rhs - chen_lhs));
  ok = ok && deg.pass && path_diff <= 1e-9;

  detail = "worst relative diff " + fmt(worst) + "; degeneration diff " +
           fmt(path_diff);
  return ok;
}

// --------------------------------------------------------------------------
// 7. Higher transport, one and two copies, both pipelines.

bool c7_higher_transport(std::string& detail) {
  QuadratureConfig cfg = membrane_cfg(32);
  Membrane sheet = Membrane::symbolic(2, 3, {"t1", "t2", "t1*t2"});
  DifferentialForm w12 = DifferentialForm::parse(3, 2, {{MultiIndex{1, 2}, "1"}});
  DifferentialForm w13x3 =
      DifferentialForm::parse(3, 2, {{MultiIndex{1, 3}, "x3"}});
  LabeledIntegrand W(1, {1});
  W.set_slot({1}, w12, {1});
  LabeledIntegrand T(1, {1});
  T.set_slot({1}, w13x3, {1});
  bool ok = true;
  double worst = 0.0;
  const double expected[] = {1.0 / 9.0, 1.0 / 135.0};
  for (int copies = 1; copies <= 2; ++copies) {
    HigherTransportResult r =
        higher_transport(sheet, W, {1}, T, {1}, copies, cfg, 1e-4);
    double rel = std::abs(r.lhs - r.rhs) / (1.0 + std::abs(r.lhs));
    worst = std::max(worst, rel);
    ok = ok && r.report.pass;
    ok = ok && std::abs(r.lhs - expected[copies - 1]) <= 1e-7;
  }
  detail = "copies 1 and 2, worst pipeline diff " + fmt(worst);
  return ok;
}

// --------------------------------------------------------------------------
// 8. Holonomy of a nilpotent connection recovers the curvature.

bool c8_holonomy(std::string& detail) {
  const double A = 0.7;
  DifferentialForm theta01 =
      DifferentialForm::parse(2, 1, {{MultiIndex{2}, "7*x1/10"}});
  MatrixConnection conn;
  conn.size = 2;
  conn.entries = {DifferentialForm::zero(2, 1), theta01,
                  DifferentialForm::zero(2, 1), DifferentialForm::zero(2, 1)};
  QuadratureConfig cfg = membrane_cfg(64);
  HolonomyReport r = holonomy_curvature_check(
      conn, {0.3, 0.45}, {0.25, 0.125, 0.0625}, 3, cfg, 1e-4 * A);
  bool ok = r.max_diff <= 1e-4 * A && (r.order_converged || r.order >= 3.0);
  detail = "curvature diff " + fmt(r.max_diff) + ", residual order " +
           (r.order_converged ? std::string("at roundoff")
                              : fmt(r.order).substr(0, 8));
  return ok;
}

// --------------------------------------------------------------------------
// 9. Shuffle combinatorics against the counting formulas.

bool c9_combinatorics(std::string& detail) {
  bool ok = true;
  // single-direction counts
  for (int m1 = 0; m1 <= 8; ++m1)
    for (int m2 = 0; m1 + m2 <= 8; ++m2)
      ok = ok && enumerate_sh(m1, m2).size() ==
                     binomial(m1 + m2, m1);
  // multi-block arrangement counts
  for (int b1 = 0; b1 <= 8; ++b1)
    for (int b2 = 0; b1 + b2 <= 8; ++b2)
      for (int b3 = 0; b1 + b2 + b3 <= 8; ++b3)
        ok = ok && enumerate_arrangements({b1, b2, b3}).size() ==
                       multinomial({b1, b2, b3});
  // two-direction product families, barred and not
  for (int a1 = 0; a1 <= 4; ++a1)
    for (int a2 = 0; a2 <= 4; ++a2)
      for (int b1 = 0; b1 <= 4; ++b1)
        for (int b2 = 0; a1 + a2 + b1 + b2 <= 8 && b2 <= 4; ++b2) {
          std::size_t want = binomial(a1 + b1, a1) * binomial(a2 + b2, a2);
          ok = ok && enumerate_product({a1, a2}, {b1, b2}, false).size() == want;
          ok = ok && enumerate_product({a1, a2}, {b1, b2}, true).size() == want;
        }
  // transport-family counts
  for (int k1 = 0; k1 <= 4; ++k1)
    for (int k2 = 0; k2 <= 2; ++k2)
      for (int copies = 1; copies <= 2; ++copies) {
        if (k1 + (copies + 1) * k2 > 8) continue;
        std::vector<int> blocks{k1};
        for (int c = 0; c < copies; ++c) blocks.push_back(k2);
        ok = ok && enumerate_shn({k1}, {k2}, copies).size() ==
                       multinomial(blocks);
      }
  // gluing family is a subfamily of the barred product family
  auto contains = [](const std::vector<Shuffle>& fam, const Shuffle& s) {
    for (const Shuffle& f : fam)
      if (f.dirs == s.dirs && f.barred == s.barred) return true;
    return false;
  };
  for (int a1 = 0; a1 <= 3; ++a1)
    for (int a2 = 0; a2 <= 3; ++a2)
      for (int b1 = 0; b1 <= 3; ++b1)
        for (int b2 = 0; a1 + a2 + b1 + b2 <= 6 && b2 <= 3; ++b2) {
          std::vector<Shuffle> barred =
              enumerate_product({a1, a2}, {b1, b2}, true);
          for (const Shuffle& s : enumerate_sh1({a1, a2}, {b1, b2}))
            ok = ok && contains(barred, s);
        }
  detail = "counts and the gluing subfamily, exhaustive";
  return ok;
}

// --------------------------------------------------------------------------
// 10. Structural numerics and the bundled document corpus.

bool c10_structural(std::string& detail) {
  std::mt19937 rng(1010);
  std::uniform_real_distribution<double> u(0.1, 0.9);
  bool ok = true;
  double worst = 0.0;
  auto sample = [&]() {
    return std::vector<double>{u(rng), u(rng), u(rng)};
  };
  auto max_component = [](const FormValue& fv) {
    double m = 0.0;
    for (const auto& [I, v] : fv) m = std::max(m, std::abs(v));
    return m;
  };

  for (int trial = 0; trial < 5; ++trial) {
    DifferentialForm f = oracle::random_0form(3, 2, rng);
    DifferentialForm a = oracle::random_1form(3, 2, rng);
    DifferentialForm b = oracle::random_1form(3, 2, rng);

    // d after d vanishes
    DifferentialForm ddf = exterior_derivative(exterior_derivative(f));
    DifferentialForm dda = exterior_derivative(exterior_derivative(a));
    // Leibniz: d(a ^ b) = da ^ b - a ^ db for 1-forms
    DifferentialForm lhs = exterior_derivative(wedge(a, b));
    DifferentialForm rhs = wedge(exterior_derivative(a), b) -
                           wedge(a, exterior_derivative(b));
    // pullback commutes with wedge
    Membrane g = oracle::random_sheet(3, rng);
    DifferentialForm pw = pullback(g, wedge(a, b));
    DifferentialForm wp = wedge(pullback(g, a), pullback(g, b));

    for (int pt = 0; pt < 4; ++pt) {
      std::vector<double> x = sample();
      std::vector<double> t{u(rng), u(rng)};
      worst = std::max(worst, max_component(evaluate_form(ddf, x)));
      worst = std::max(worst, max_component(evaluate_form(dda, x)));
      FormValue l = evaluate_form(lhs, x), r = evaluate_form(rhs, x);
      for (const auto& [I, v] : l)
        worst = std::max(worst, std::abs(v - (r.count(I) ? r.at(I) : 0.0)));
      FormValue pl = evaluate_form(pw, t), pr = evaluate_form(wp, t);
      for (const auto& [I, v] : pl)
        worst = std::max(worst, std::abs(v - (pr.count(I) ? pr.at(I) : 0.0)));
    }
  }
  ok = ok && worst <= 1e-10;

  // reparametrization invariance of the iterated integral
  QuadratureConfig cfg = path_cfg();
  Membrane tw = Membrane::symbolic(
      1, 3, {"t1 - t1^3/3", "t1^2/2 + t1/4", "t1^3 - t1/2"});
  VariableListPtr vars = cube_variables(1);
  Expression t1 = Expression::variable(0, vars);
  std::vector<Expression> comps;
  for (const Expression& comp : tw.pieces().front().components)
    comps.push_back(comp.substitute({t1 * t1}, vars));
  Membrane rep = Membrane::symbolic(1, 3, std::move(comps));
  std::vector<DifferentialForm> letters = coordinate_letters(3);
  double rp = 0.0;
  for (const std::vector<int>& word :
       {std::vector<int>{1, 2}, std::vector<int>{2, 3, 1}}) {
    std::vector<DifferentialForm> forms;
    for (int i : word) forms.push_back(letters[static_cast<std::size_t>(i - 1)]);
    rp = std::max(rp, std::abs(iterated_path_integral(tw, forms, cfg).value -
                               iterated_path_integral(rep, forms, cfg).value));
  }
  ok = ok && rp <= 1e-7;

  // symbolic derivative against central differences
  VariableListPtr xv = chart_variables(2);
  Expression e = parse_expression("sin(x1*x2) + exp(x1) / (1 + x2^2)", xv);
  Expression dex = e.differentiate(0);
  double fd_worst = 0.0;
  for (int pt = 0; pt < 6; ++pt) {
    std::vector<double> x{u(rng), u(rng)};
    const double h = 1e-6;
    std::vector<double> xm{x[0] - h, x[1]}, xp{x[0] + h, x[1]};
    double fd = (e.evaluate(xp) - e.evaluate(xm)) / (2 * h);
    fd_worst = std::max(fd_worst, std::abs(fd - dex.evaluate(x)));
  }
  ok = ok && fd_worst <= 1e-6;

  // the bundled corpus verifies end to end
  int failures = 0;
  for (const char* scene :
       {"quickstart.json", "paths.json", "membranes.json", "transport.json"}) {
    std::string cmd = std::string(MINT_CLI_PATH) + " verify " +
                      MINT_SCENES_DIR + "/" + scene + " > /dev/null 2>&1";
    if (std::system(cmd.c_str()) != 0) ++failures;
  }
  ok = ok && failures == 0;

  detail = "identities worst " + fmt(std::max({worst, rp, fd_worst})) + "; " +
           std::to_string(4 - failures) + "/4 documents verified";
  return ok;
}

struct Criterion {
  int id;
  const char* label;
  double budget_seconds;
  std::function<bool(std::string&)> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "path shuffle identity", 30.0, c1_path_shuffle},
      {2, "composition under concatenation", 60.0, c2_composition},
      {3, "decorated shuffle", 60.0, c3_decorated},
      {4, "known closed forms", 30.0, c4_closed_forms},
      {5, "membrane shuffle", 60.0, c5_membrane_shuffle},
      {6, "glued product and degeneration", 120.0, c6_glued_product},
      {7, "higher transport", 120.0, c7_higher_transport},
      {8, "holonomy recovers curvature", 60.0, c8_holonomy},
      {9, "shuffle combinatorics", 30.0, c9_combinatorics},
      {10, "structural numerics and corpus", 300.0, c10_structural},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    auto start = std::chrono::steady_clock::now();
    std::string detail;
    bool ok = false;
    try {
      ok = c.run(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    double secs = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - start)
                      .count();
    if (secs > c.budget_seconds) {
      ok = false;
      detail += " [over budget]";
    }
    if (!ok) ++failed;
    std::printf("[%2d] %s  %-34s %s (%.1fs)\n", c.id, ok ? "PASS" : "FAIL",
                c.label, detail.c_str(), secs);
  }
  if (failed > 0) std::printf("%d criterion(s) failed\n", failed);
  return failed;
}
