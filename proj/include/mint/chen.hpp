#pragma once

// Iterated integrals along paths: word-indexed coefficient series, the
// parallel-transport series of a connection, shuffle and composition
// identities, finite transport steps, and the holonomy/curvature probe.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "forms.hpp"
#include "geometry.hpp"
#include "quadrature.hpp"
#include "report.hpp"
#include "shuffles.hpp"

namespace mint {

using Word = std::vector<int>;  // letters 1..alphabet

/// Truncated tensor series: coefficients for every word up to a level.
class TensorSeries {
public:
  TensorSeries(int alphabet, int level)
      : alphabet_(alphabet), level_(level) {
    if (alphabet < 1) throw std::invalid_argument("alphabet must be >= 1");
    if (level < 0) throw std::invalid_argument("level must be >= 0");
  }

  static TensorSeries identity(int alphabet, int level) {
    TensorSeries s(alphabet, level);
    s.coeffs_[Word{}] = 1.0;
    return s;
  }

  int alphabet() const { return alphabet_; }
  int level() const { return level_; }

  double coefficient(const Word& w) const {
    auto it = coeffs_.find(w);
    return it == coeffs_.end() ? 0.0 : it->second;
  }

  void set(const Word& w, double v) {
    if (static_cast<int>(w.size()) > level_)
      throw std::invalid_argument("word longer than the series level");
    for (int a : w)
      if (a < 1 || a > alphabet_)
        throw std::invalid_argument("letter outside the alphabet");
    coeffs_[w] = v;
  }

  const std::map<Word, double>& coefficients() const { return coeffs_; }

private:
  int alphabet_;
  int level_;
  std::map<Word, double> coeffs_;
};

/// Truncated concatenation product: coefficient of w in a*b is
/// sum over splittings w = u.v of a(u) * b(v).
inline TensorSeries series_multiply(const TensorSeries& a,
                                    const TensorSeries& b) {
  if (a.alphabet() != b.alphabet())
    throw std::invalid_argument("series alphabets differ");
  int level = std::min(a.level(), b.level());
  TensorSeries out(a.alphabet(), level);
  for (const auto& [u, cu] : a.coefficients()) {
    if (cu == 0.0) continue;
    for (const auto& [v, cv] : b.coefficients()) {
      if (cv == 0.0) continue;
      if (static_cast<int>(u.size() + v.size()) > level) continue;
      Word w = u;
      w.insert(w.end(), v.begin(), v.end());
      out.set(w, out.coefficient(w) + cu * cv);
    }
  }
  return out;
}

namespace detail {

struct PathTabulation {
  Grid1D grid;
  // factor_of_form[f][node] = dt-coefficient of the pullback of form f
  std::vector<std::vector<double>> factors;
};

inline PathTabulation tabulate_path(const Membrane& path,
                                    const std::vector<DifferentialForm>& forms,
                                    int cells, QuadratureRule rule) {
  if (path.cube_dim() != 1)
    throw std::invalid_argument("iterated path integrals need a 1-membrane");
  PathTabulation tab{Grid1D::piecewise(path.piece_cuts(), cells, rule), {}};
  const std::size_t N = tab.grid.size();
  tab.factors.reserve(forms.size());
  for (const auto& w : forms) {
    if (w.degree() != 1)
      throw std::invalid_argument("path integrands must be 1-forms");
    PullbackEvaluator pb(path, w);
    std::vector<double> f(N);
    for (std::size_t m = 0; m < N; ++m) {
      double t = tab.grid.coord(m);
      f[m] = pb.coefficient(MultiIndex{1}, std::span<const double>(&t, 1),
                            tab.grid.piece(m));
    }
    tab.factors.push_back(std::move(f));
  }
  return tab;
}

}  // namespace detail

/// \int_{0<t_1<...<t_k<1} prod_j (pullback of forms[j]) with Richardson
/// refinement and a convergence check, like integrate_ordered.
inline IntegrationResult iterated_path_integral(
    const Membrane& path, const std::vector<DifferentialForm>& forms,
    const QuadratureConfig& cfg) {
  cfg.validate();
  if (cfg.rule == QuadratureRule::gauss)
    throw std::invalid_argument(
        "iterated_path_integral uses grid rules (trapezoid or simpson)");
  if (static_cast<int>(forms.size()) > cfg.max_total_cuts)
    throw std::invalid_argument("word length exceeds max_total_cuts");
  IntegrationResult res;
  double prev = 0.0;
  for (int lvl = 0; lvl < cfg.refinement_levels; ++lvl) {
    detail::PathTabulation tab = detail::tabulate_path(
        path, forms, cfg.points_per_axis << lvl, cfg.rule);
    double v = iterated_chain(tab.grid, tab.factors);
    if (lvl > 0)
      res.error_estimate =
          std::abs(v - prev) / detail::richardson_denominator(cfg.rule);
    prev = v;
    res.value = v;
  }
  if (cfg.refinement_levels > 1 &&
      res.error_estimate > cfg.rel_tol * (1.0 + std::abs(res.value)))
    throw QuadratureError("iterated path integral did not converge");
  return res;
}

/// All word coefficients up to `level` for the 1-forms `letters` (letter j+1
/// is letters[j]): one dynamic program over the grid per refinement level.
inline TensorSeries transport_series(const Membrane& path,
                                     const std::vector<DifferentialForm>& letters,
                                     int level, const QuadratureConfig& cfg) {
  cfg.validate();
  if (cfg.rule == QuadratureRule::gauss)
    throw std::invalid_argument(
        "transport_series uses grid rules (trapezoid or simpson)");
  if (level > cfg.max_total_cuts)
    throw std::invalid_argument("level exceeds max_total_cuts");
  const int m = static_cast<int>(letters.size());
  TensorSeries out = TensorSeries::identity(m, level);

  for (int lvl = 0; lvl < cfg.refinement_levels; ++lvl) {
    detail::PathTabulation tab = detail::tabulate_path(
        path, letters, cfg.points_per_axis << lvl, cfg.rule);
    const std::size_t N = tab.grid.size();
    // running integrals per word, grown level by level
    std::map<Word, std::vector<double>> running;
    running[Word{}] = std::vector<double>(N, 1.0);
    for (int len = 1; len <= level; ++len) {
      std::map<Word, std::vector<double>> next;
      for (const auto& [w, v] : running) {
        if (static_cast<int>(w.size()) != len - 1) continue;
        for (int a = 1; a <= m; ++a) {
          Word wa = w;
          wa.push_back(a);
          std::vector<double> u(N);
          const auto& f = tab.factors[static_cast<std::size_t>(a - 1)];
          for (std::size_t q = 0; q < N; ++q) u[q] = f[q] * v[q];
          tab.grid.prefix_inplace(u);
          next.emplace(std::move(wa), std::move(u));
        }
      }
      for (auto& [w, v] : next) out.set(w, v.back());
      for (auto& [w, v] : next) running.emplace(w, std::move(v));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Identity checks on paths.

/// Product of two iterated integrals vs the shuffle sum.
inline CheckReport check_shuffle(const Membrane& path,
                                 const std::vector<DifferentialForm>& forms1,
                                 const std::vector<DifferentialForm>& forms2,
                                 const QuadratureConfig& cfg, double tolerance,
                                 const std::string& name = "shuffle") {
  double lhs = iterated_path_integral(path, forms1, cfg).value *
               iterated_path_integral(path, forms2, cfg).value;
  std::vector<DifferentialForm> all(forms1);
  all.insert(all.end(), forms2.begin(), forms2.end());
  double rhs = 0.0;
  for (const Arrangement& a :
       enumerate_sh(static_cast<int>(forms1.size()),
                    static_cast<int>(forms2.size()))) {
    std::vector<DifferentialForm> word;
    word.reserve(a.size());
    for (int label : a) word.push_back(all[static_cast<std::size_t>(label - 1)]);
    rhs += iterated_path_integral(path, word, cfg).value;
  }
  return CheckReport::make(name, "path-shuffle", lhs, rhs, tolerance);
}

/// Composition: coefficients of the concatenated path as splitting sums.
inline CheckReport check_composition(const Membrane& path1,
                                     const Membrane& path2,
                                     const std::vector<DifferentialForm>& letters,
                                     int level, const QuadratureConfig& cfg,
                                     double tolerance,
                                     const std::string& name = "composition") {
  Membrane joined = concat_paths(path1, path2);
  TensorSeries s1 = transport_series(path1, letters, level, cfg);
  TensorSeries s2 = transport_series(path2, letters, level, cfg);
  TensorSeries s12 = transport_series(joined, letters, level, cfg);
  TensorSeries prod = series_multiply(s1, s2);
  double worst = 0.0, wl = 1.0, wr = 1.0;
  for (const auto& [w, c] : s12.coefficients()) {
    double p = prod.coefficient(w);
    double d = std::abs(p - c);
    if (d >= worst) {
      worst = d;
      wl = p;
      wr = c;
    }
  }
  return CheckReport::worst(name, "composition", wl, wr, worst, tolerance,
                            "max over words up to level " +
                                std::to_string(level));
}

// ---------------------------------------------------------------------------
// Decorated (barred) shuffle: endpoint form decorations.

/// Value of a decorated iterated integral: the tensor
///   theta_start(gamma(0)) (x) theta_end(gamma(1)) scaled by the integral,
/// stored as a table over pairs of multi-indices.
using DecoratedValue = std::map<std::pair<MultiIndex, MultiIndex>, double>;

inline DecoratedValue decorated_integral(const Membrane& path,
                                         const DifferentialForm& start,
                                         const std::vector<DifferentialForm>& word,
                                         const DifferentialForm& end,
                                         const QuadratureConfig& cfg) {
  double mid = iterated_path_integral(path, word, cfg).value;
  std::vector<double> t0{0.0}, t1{1.0};
  FormValue s = evaluate_form(start, path.evaluate(t0));
  FormValue e = evaluate_form(end, path.evaluate(t1));
  DecoratedValue out;
  for (const auto& [I0, v0] : s)
    for (const auto& [I1, v1] : e)
      out[{I0, I1}] = v0 * mid * v1;
  return out;
}

namespace detail {

inline DecoratedValue decorated_product(const DecoratedValue& a,
                                        const DecoratedValue& b) {
  DecoratedValue out;
  for (const auto& [ka, va] : a)
    for (const auto& [kb, vb] : b) {
      auto head = merge_indices(ka.first, kb.first);
      if (!head) continue;
      auto tail = merge_indices(ka.second, kb.second);
      if (!tail) continue;
      out[{head->first, tail->first}] +=
          head->second * tail->second * va * vb;
    }
  return out;
}

inline double decorated_max_diff(const DecoratedValue& a,
                                 const DecoratedValue& b, double* lhs_at_max,
                                 double* rhs_at_max) {
  double worst = 0.0;
  *lhs_at_max = 0.0;
  *rhs_at_max = 0.0;
  for (const auto& [k, va] : a) {
    auto it = b.find(k);
    double vb = it == b.end() ? 0.0 : it->second;
    double d = std::abs(va - vb);
    if (d >= worst) {
      worst = d;
      *lhs_at_max = va;
      *rhs_at_max = vb;
    }
  }
  for (const auto& [k, vb] : b) {
    if (a.count(k)) continue;
    double d = std::abs(vb);
    if (d > worst) {
      worst = d;
      *lhs_at_max = 0.0;
      *rhs_at_max = vb;
    }
  }
  return worst;
}

}  // namespace detail

/// Decorated shuffle: the product of two decorated integrals equals the sum
/// over shuffles of the interleaved word with wedged endpoint decorations.
inline CheckReport check_decorated_shuffle(
    const Membrane& path, const DifferentialForm& start1,
    const std::vector<DifferentialForm>& forms1, const DifferentialForm& end1,
    const DifferentialForm& start2,
    const std::vector<DifferentialForm>& forms2, const DifferentialForm& end2,
    const QuadratureConfig& cfg, double tolerance,
    const std::string& name = "decorated-shuffle") {
  DecoratedValue lhs = detail::decorated_product(
      decorated_integral(path, start1, forms1, end1, cfg),
      decorated_integral(path, start2, forms2, end2, cfg));

  std::vector<DifferentialForm> all(forms1);
  all.insert(all.end(), forms2.begin(), forms2.end());
  DifferentialForm start12 = wedge(start1, start2);
  DifferentialForm end12 = wedge(end1, end2);
  DecoratedValue rhs;
  for (const Arrangement& a :
       enumerate_sh(static_cast<int>(forms1.size()),
                    static_cast<int>(forms2.size()))) {
    std::vector<DifferentialForm> word;
    word.reserve(a.size());
    for (int label : a) word.push_back(all[static_cast<std::size_t>(label - 1)]);
    for (const auto& [k, v] :
         decorated_integral(path, start12, word, end12, cfg))
      rhs[k] += v;
  }
  double wl = 0.0, wr = 0.0;
  double worst = detail::decorated_max_diff(lhs, rhs, &wl, &wr);
  return CheckReport::worst(name, "decorated-shuffle", wl, wr, worst,
                            tolerance,
                            "max over endpoint multi-index pairs");
}

// ---------------------------------------------------------------------------
// Finite transport steps.

/// One n-step transport term: the covector
///   (\int_gamma w . theta^{(n)}) theta(gamma(1))
/// where the iterated word is w followed by n copies of theta. Returned as a
/// numeric 1-form coefficient table at gamma(1).
inline FormValue transport_step(const Membrane& path,
                                const DifferentialForm& w,
                                const DifferentialForm& theta, int n,
                                const QuadratureConfig& cfg) {
  if (n < 0) throw std::invalid_argument("step count must be >= 0");
  std::vector<DifferentialForm> word{w};
  for (int i = 0; i < n; ++i) word.push_back(theta);
  double s = iterated_path_integral(path, word, cfg).value;
  std::vector<double> t1{1.0};
  FormValue tail = evaluate_form(theta, path.evaluate(t1));
  for (auto& [I, v] : tail) v *= s;
  return tail;
}

// ---------------------------------------------------------------------------
// Matrix transport and holonomy.

struct SquareMatrix {
  int size = 0;
  std::vector<double> a;  // row-major

  static SquareMatrix zero(int s) {
    SquareMatrix m;
    m.size = s;
    m.a.assign(static_cast<std::size_t>(s) * static_cast<std::size_t>(s), 0.0);
    return m;
  }
  static SquareMatrix identity(int s) {
    SquareMatrix m = zero(s);
    for (int i = 0; i < s; ++i) m(i, i) = 1.0;
    return m;
  }
  double& operator()(int r, int c) {
    return a[static_cast<std::size_t>(r) * static_cast<std::size_t>(size) +
             static_cast<std::size_t>(c)];
  }
  double operator()(int r, int c) const {
    return a[static_cast<std::size_t>(r) * static_cast<std::size_t>(size) +
             static_cast<std::size_t>(c)];
  }
  double max_abs() const {
    double m = 0.0;
    for (double v : a) m = std::max(m, std::abs(v));
    return m;
  }
};

inline SquareMatrix operator*(const SquareMatrix& x, const SquareMatrix& y) {
  SquareMatrix out = SquareMatrix::zero(x.size);
  for (int i = 0; i < x.size; ++i)
    for (int k = 0; k < x.size; ++k) {
      double v = x(i, k);
      if (v == 0.0) continue;
      for (int j = 0; j < x.size; ++j) out(i, j) += v * y(k, j);
    }
  return out;
}

inline SquareMatrix operator+(const SquareMatrix& x, const SquareMatrix& y) {
  SquareMatrix out = x;
  for (std::size_t i = 0; i < out.a.size(); ++i) out.a[i] += y.a[i];
  return out;
}

inline SquareMatrix operator-(const SquareMatrix& x, const SquareMatrix& y) {
  SquareMatrix out = x;
  for (std::size_t i = 0; i < out.a.size(); ++i) out.a[i] -= y.a[i];
  return out;
}

inline SquareMatrix operator*(double s, const SquareMatrix& x) {
  SquareMatrix out = x;
  for (double& v : out.a) v *= s;
  return out;
}

/// A matrix of 1-forms (entries row-major).
struct MatrixConnection {
  int size = 0;
  std::vector<DifferentialForm> entries;

  const DifferentialForm& entry(int r, int c) const {
    return entries[static_cast<std::size_t>(r) * static_cast<std::size_t>(size) +
                   static_cast<std::size_t>(c)];
  }

  void validate() const {
    if (size < 1) throw std::invalid_argument("connection size must be >= 1");
    if (entries.size() !=
        static_cast<std::size_t>(size) * static_cast<std::size_t>(size))
      throw std::invalid_argument("connection needs size*size entries");
    for (const auto& e : entries)
      if (e.degree() != 1)
        throw std::invalid_argument("connection entries must be 1-forms");
  }
};

/// Truncated transport Psi = I + sum_{k=1..level} \int Theta^{(k)} along the
/// path, where Theta is the pullback of the connection matrix.
inline SquareMatrix matrix_transport(const Membrane& path,
                                     const MatrixConnection& conn, int level,
                                     const QuadratureConfig& cfg) {
  conn.validate();
  cfg.validate();
  if (path.cube_dim() != 1)
    throw std::invalid_argument("matrix transport needs a path");
  const int s = conn.size;

  SquareMatrix psi = SquareMatrix::identity(s);
  for (int lvl = 0; lvl < cfg.refinement_levels; ++lvl) {
    Grid1D grid = Grid1D::piecewise(path.piece_cuts(),
                                    cfg.points_per_axis << lvl, cfg.rule);
    const std::size_t N = grid.size();
    // Theta at every node
    std::vector<SquareMatrix> theta(N, SquareMatrix::zero(s));
    for (int r = 0; r < s; ++r)
      for (int c = 0; c < s; ++c) {
        PullbackEvaluator pb(path, conn.entry(r, c));
        for (std::size_t m = 0; m < N; ++m) {
          double t = grid.coord(m);
          theta[m](r, c) = pb.coefficient(
              MultiIndex{1}, std::span<const double>(&t, 1), grid.piece(m));
        }
      }
    // running matrix integrals
    std::vector<SquareMatrix> run(N, SquareMatrix::identity(s));
    SquareMatrix acc = SquareMatrix::identity(s);
    std::vector<double> buf(N);
    for (int k = 1; k <= level; ++k) {
      std::vector<SquareMatrix> prod(N, SquareMatrix::zero(s));
      for (std::size_t m = 0; m < N; ++m) prod[m] = theta[m] * run[m];
      // prefix per entry
      for (int r = 0; r < s; ++r)
        for (int c = 0; c < s; ++c) {
          for (std::size_t m = 0; m < N; ++m) buf[m] = prod[m](r, c);
          grid.prefix_inplace(buf);
          for (std::size_t m = 0; m < N; ++m) run[m](r, c) = buf[m];
        }
      acc = acc + run.back();
    }
    psi = acc;
  }
  return psi;
}

struct HolonomyReport {
  SquareMatrix fitted;     // (Psi - I) / eps^2 at the smallest eps
  SquareMatrix reference;  // dtheta - theta^theta at the center, dx1^dx2 part
  double max_diff = 0.0;   // componentwise |fitted - reference| max
  std::vector<double> epsilons;
  std::vector<double> residuals;  // |Psi - I - eps^2 reference| max per eps
  double order = 0.0;             // log-log slope of residual decay
  bool order_converged = false;   // residuals at roundoff floor
  bool pass = false;
  double tolerance = 0.0;
};

/// Loop the boundary of the axis square [c1, c1+eps] x [c2, c2+eps] (in the
/// first two chart coordinates), counterclockwise, starting at the center's
/// corner.
inline Membrane square_loop(const std::vector<double>& corner, double eps) {
  std::vector<double> p0 = corner, p1 = corner, p2 = corner, p3 = corner;
  p1[0] += eps;
  p2[0] += eps;
  p2[1] += eps;
  p3[1] += eps;
  Membrane a = line_path(p0, p1);
  Membrane b = line_path(p1, p2);
  Membrane c = line_path(p2, p3);
  Membrane d = line_path(p3, p0);
  return concat_paths(concat_paths(concat_paths(a, b), c), d);
}

/// Transport around shrinking square loops vs the curvature
/// F = dtheta - theta ^ theta of nabla = d - theta: Psi - I ~ eps^2 F(12).
inline HolonomyReport holonomy_curvature_check(
    const MatrixConnection& conn, const std::vector<double>& center,
    const std::vector<double>& epsilons, int level,
    const QuadratureConfig& cfg, double tolerance) {
  conn.validate();
  if (epsilons.empty())
    throw std::invalid_argument("need at least one epsilon");
  const int s = conn.size;

  // reference curvature at the center: (dtheta - theta^theta)_{12}
  SquareMatrix F = SquareMatrix::zero(s);
  for (int r = 0; r < s; ++r)
    for (int c = 0; c < s; ++c) {
      DifferentialForm d = exterior_derivative(conn.entry(r, c));
      DifferentialForm quad =
          DifferentialForm::zero(conn.entry(r, c).ambient_dim(), 2);
      for (int m = 0; m < s; ++m)
        quad = quad + wedge(conn.entry(r, m), conn.entry(m, c));
      FormValue vd = evaluate_form(d - quad, center);
      auto it = vd.find(MultiIndex{1, 2});
      F(r, c) = it == vd.end() ? 0.0 : it->second;
    }

  HolonomyReport rep;
  rep.reference = F;
  rep.tolerance = tolerance;
  std::vector<double> eps_sorted(epsilons);
  std::sort(eps_sorted.begin(), eps_sorted.end(), std::greater<double>());
  for (double eps : eps_sorted) {
    Membrane loop = square_loop(center, eps);
    SquareMatrix psi = matrix_transport(loop, conn, level, cfg);
    SquareMatrix dev = psi - SquareMatrix::identity(s);
    SquareMatrix res = dev - (eps * eps) * F;
    rep.epsilons.push_back(eps);
    rep.residuals.push_back(res.max_abs());
    rep.fitted = (1.0 / (eps * eps)) * dev;  // smallest eps wins (sorted desc)
  }
  rep.max_diff = (rep.fitted - F).max_abs();

  // residual decay order: least-squares slope of log r vs log eps
  const double floor_scale = 1e-12 * (1.0 + F.max_abs());
  bool all_floor = true;
  for (double r : rep.residuals)
    if (r > floor_scale) all_floor = false;
  if (all_floor || rep.residuals.size() < 2) {
    rep.order_converged = true;
    rep.order = std::numeric_limits<double>::infinity();
  } else {
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < rep.epsilons.size(); ++i) {
      if (rep.residuals[i] <= 0.0) continue;
      double x = std::log(rep.epsilons[i]);
      double y = std::log(rep.residuals[i]);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
      ++n;
    }
    rep.order = n >= 2 ? (static_cast<double>(n) * sxy - sx * sy) /
                             (static_cast<double>(n) * sxx - sx * sx)
                       : std::numeric_limits<double>::infinity();
    if (n < 2) rep.order_converged = true;
  }

  double scale = std::max(1.0, F.max_abs());
  bool fit_ok = rep.max_diff <= tolerance * scale;
  bool order_ok = rep.order_converged || rep.order >= 3.0 - 1e-6;
  rep.pass = fit_ok && order_ok;
  return rep;
}

}  // namespace mint
