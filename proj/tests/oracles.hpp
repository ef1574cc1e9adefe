#pragma once

// Slow reference integrators and generators used only by the tests.
// Deliberately independent of the library engine: recursive midpoint rules
// instead of prefix tables, finite differences instead of symbolic jacobians.

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "mint/forms.hpp"
#include "mint/geometry.hpp"

namespace oracle {

using Fn1 = std::function<double(double)>;

/// gamma'(t) by central differences (one-sided at the ends).
inline std::vector<double> fd_velocity(const mint::Membrane& path, double t,
                                       double h = 1e-6) {
  double lo = std::max(0.0, t - h), hi = std::min(1.0, t + h);
  std::vector<double> a = path.evaluate(std::vector<double>{lo});
  std::vector<double> b = path.evaluate(std::vector<double>{hi});
  std::vector<double> v(a.size());
  for (std::size_t c = 0; c < a.size(); ++c) v[c] = (b[c] - a[c]) / (hi - lo);
  return v;
}

/// dt-coefficient of the pullback of a 1-form along a path, FD velocity.
inline double fd_pullback_1form(const mint::Membrane& path,
                                const mint::DifferentialForm& w, double t) {
  std::vector<double> x = path.evaluate(std::vector<double>{t});
  std::vector<double> v = fd_velocity(path, t);
  mint::FormValue val = mint::evaluate_form(w, x);
  double acc = 0.0;
  for (const auto& [I, c] : val) acc += c * v[static_cast<std::size_t>(I[0] - 1)];
  return acc;
}

/// Columns dg/dt_a (a = 1..n) of the jacobian by central differences.
inline std::vector<std::vector<double>> fd_jacobian(
    const mint::Membrane& g, const std::vector<double>& t, double h = 1e-6) {
  const int n = g.cube_dim();
  std::vector<std::vector<double>> cols(static_cast<std::size_t>(n));
  for (int a = 0; a < n; ++a) {
    std::vector<double> tl = t, th = t;
    tl[static_cast<std::size_t>(a)] = std::max(0.0, t[static_cast<std::size_t>(a)] - h);
    th[static_cast<std::size_t>(a)] = std::min(1.0, t[static_cast<std::size_t>(a)] + h);
    std::vector<double> xl = g.evaluate(tl);
    std::vector<double> xh = g.evaluate(th);
    std::vector<double> col(xl.size());
    for (std::size_t c = 0; c < xl.size(); ++c)
      col[c] = (xh[c] - xl[c]) /
               (th[static_cast<std::size_t>(a)] - tl[static_cast<std::size_t>(a)]);
    cols[static_cast<std::size_t>(a)] = std::move(col);
  }
  return cols;
}

/// Coefficient of dt_{J1} ^ dt_{J2} in the FD pullback of a 2-form.
inline double fd_pullback_2form(const mint::Membrane& g,
                                const mint::DifferentialForm& w,
                                const std::vector<double>& t, int J1, int J2) {
  std::vector<double> x = g.evaluate(t);
  auto cols = fd_jacobian(g, t);
  const auto& u = cols[static_cast<std::size_t>(J1 - 1)];
  const auto& v = cols[static_cast<std::size_t>(J2 - 1)];
  mint::FormValue val = mint::evaluate_form(w, x);
  double acc = 0.0;
  for (const auto& [I, c] : val) {
    std::size_t i = static_cast<std::size_t>(I[0] - 1);
    std::size_t j = static_cast<std::size_t>(I[1] - 1);
    acc += c * (u[i] * v[j] - u[j] * v[i]);
  }
  return acc;
}

/// Midpoint value of int_{0 < t_1 < ... < t_k < u} prod_i f_i(t_i), O(m^k).
inline double ordered_midpoint(const std::vector<Fn1>& fs, double u, int m) {
  if (fs.empty()) return 1.0;
  std::vector<Fn1> head(fs.begin(), fs.end() - 1);
  const Fn1& last = fs.back();
  double h = u / m;
  double acc = 0.0;
  for (int i = 0; i < m; ++i) {
    double t = (i + 0.5) * h;
    acc += last(t) * ordered_midpoint(head, t, m) * h;
  }
  return acc;
}

/// Richardson-extrapolated midpoint (O(h^4) on smooth integrands).
inline double ordered_midpoint_rich(const std::vector<Fn1>& fs, int m) {
  double c = ordered_midpoint(fs, 1.0, m);
  double f = ordered_midpoint(fs, 1.0, 2 * m);
  return (4.0 * f - c) / 3.0;
}

/// Midpoint mesh over a product of ordered simplices: dims[i] cut counts,
/// callback receives the full coordinate tuple grouped per direction.
inline double product_simplex_midpoint(
    const std::vector<int>& dims,
    const std::function<double(const std::vector<std::vector<double>>&)>& f,
    int m) {
  std::vector<std::vector<double>> t(dims.size());
  for (std::size_t i = 0; i < dims.size(); ++i)
    t[i].assign(static_cast<std::size_t>(dims[i]), 0.0);
  double total = 0.0;
  std::function<void(std::size_t, int, double, double)> rec =
      [&](std::size_t dir, int idx, double lo, double w) {
        if (dir == dims.size()) {
          total += f(t) * w;
          return;
        }
        if (idx == dims[dir]) {
          rec(dir + 1, 0, 0.0, w);
          return;
        }
        // t[dir][idx] in (lo, 1), midpoints of m cells
        double h = (1.0 - lo) / m;
        for (int i = 0; i < m; ++i) {
          double v = lo + (i + 0.5) * h;
          t[dir][static_cast<std::size_t>(idx)] = v;
          rec(dir, idx + 1, v, w * h);
        }
      };
  rec(0, 0, 0.0, 1.0);
  return total;
}

// ---------------------------------------------------------------------------
// Random generators with fixed seeds (passed in by the tests).

/// Random polynomial of total degree <= deg in the given variables, with
/// halves of small integers as coefficients.
inline mint::Expression random_poly(const mint::VariableListPtr& vars, int deg,
                                    std::mt19937& rng) {
  std::uniform_int_distribution<int> coeff(-4, 4);
  std::uniform_int_distribution<int> pick(0, static_cast<int>(vars->size()) - 1);
  std::uniform_int_distribution<int> degree(0, deg);
  mint::Expression acc = mint::Expression::constant(0.0, vars);
  int terms = 2 + static_cast<int>(rng() % 2);
  for (int k = 0; k < terms; ++k) {
    mint::Expression term =
        mint::Expression::constant(coeff(rng) / 2.0, vars);
    int d = degree(rng);
    for (int e = 0; e < d; ++e)
      term = term * mint::Expression::variable(pick(rng), vars);
    acc = acc + term;
  }
  return acc;
}

inline mint::DifferentialForm random_1form(int ambient, int deg,
                                           std::mt19937& rng) {
  mint::VariableListPtr vars = mint::chart_variables(ambient);
  std::map<mint::MultiIndex, mint::Expression> coeffs;
  for (int i = 1; i <= ambient; ++i)
    coeffs.emplace(mint::MultiIndex{i}, random_poly(vars, deg, rng));
  return mint::DifferentialForm::make(ambient, 1, coeffs);
}

inline mint::DifferentialForm random_2form(int ambient, int deg,
                                           std::mt19937& rng) {
  mint::VariableListPtr vars = mint::chart_variables(ambient);
  std::map<mint::MultiIndex, mint::Expression> coeffs;
  for (int i = 1; i <= ambient; ++i)
    for (int j = i + 1; j <= ambient; ++j)
      coeffs.emplace(mint::MultiIndex{i, j}, random_poly(vars, deg, rng));
  return mint::DifferentialForm::make(ambient, 2, coeffs);
}

inline mint::DifferentialForm random_0form(int ambient, int deg,
                                           std::mt19937& rng) {
  mint::VariableListPtr vars = mint::chart_variables(ambient);
  return mint::DifferentialForm::function(ambient, random_poly(vars, deg, rng));
}

/// Random path with cubic polynomial components, coefficients in [-1, 1].
inline mint::Membrane random_cubic_path(int ambient, std::mt19937& rng) {
  mint::VariableListPtr vars = mint::cube_variables(1);
  std::uniform_real_distribution<double> c(-1.0, 1.0);
  mint::Expression t = mint::Expression::variable(0, vars);
  std::vector<mint::Expression> comps;
  for (int d = 0; d < ambient; ++d) {
    mint::Expression e = mint::Expression::constant(c(rng), vars) +
                         mint::Expression::constant(c(rng), vars) * t +
                         mint::Expression::constant(c(rng), vars) * t * t +
                         mint::Expression::constant(c(rng), vars) * t * t * t;
    comps.push_back(e);
  }
  return mint::Membrane::symbolic(1, ambient, std::move(comps));
}

/// Random 2-dimensional membrane with bilinear-plus-quadratic components.
inline mint::Membrane random_sheet(int ambient, std::mt19937& rng) {
  mint::VariableListPtr vars = mint::cube_variables(2);
  std::uniform_real_distribution<double> c(-1.0, 1.0);
  mint::Expression t1 = mint::Expression::variable(0, vars);
  mint::Expression t2 = mint::Expression::variable(1, vars);
  std::vector<mint::Expression> comps;
  for (int d = 0; d < ambient; ++d) {
    mint::Expression e = mint::Expression::constant(c(rng), vars) +
                         mint::Expression::constant(c(rng), vars) * t1 +
                         mint::Expression::constant(c(rng), vars) * t2 +
                         mint::Expression::constant(c(rng), vars) * t1 * t2 +
                         mint::Expression::constant(c(rng), vars) * t1 * t1 +
                         mint::Expression::constant(c(rng), vars) * t2 * t2;
    comps.push_back(e);
  }
  return mint::Membrane::symbolic(2, ambient, std::move(comps));
}

}  // namespace oracle
