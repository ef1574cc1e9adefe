#pragma once

// Membranes: smooth maps [0,1]^n -> R^d, possibly piecewise along direction 1
// and possibly given by sampled grids. Pullback of differential forms along a
// membrane, membrane gluing, and one-parameter families.

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "expression.hpp"
#include "forms.hpp"

namespace mint {

class GeometryError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

namespace detail {

/// Regular grid samples of a map [0,1]^n -> R^d with (cells+1)^n nodes.
/// Values are stored node-major (axis 1 slowest), then component.
struct SampledMap {
  int cube_dim = 0;
  int ambient_dim = 0;
  int cells = 0;                 // per axis
  std::vector<double> values;    // (cells+1)^n * d
  std::vector<double> jacobian;  // (cells+1)^n * d * n, finite differences

  std::size_t node_index(std::span<const int> idx) const {
    std::size_t flat = 0;
    for (int a = 0; a < cube_dim; ++a)
      flat = flat * static_cast<std::size_t>(cells + 1) +
             static_cast<std::size_t>(idx[static_cast<std::size_t>(a)]);
    return flat;
  }

  void build_jacobian() {
    const int n = cube_dim, d = ambient_dim;
    const std::size_t nodes = values.size() / static_cast<std::size_t>(d);
    jacobian.assign(nodes * static_cast<std::size_t>(d * n), 0.0);
    const double h = 1.0 / cells;
    std::vector<int> idx(static_cast<std::size_t>(n), 0);
    for (std::size_t node = 0; node < nodes; ++node) {
      for (int a = 0; a < n; ++a) {
        int i = idx[static_cast<std::size_t>(a)];
        std::vector<int> lo(idx), hi(idx);
        if (i == 0) {
          hi[static_cast<std::size_t>(a)] = 1;
          std::vector<int> hi2(idx);
          hi2[static_cast<std::size_t>(a)] = 2;
          // second-order one-sided: (-3 f0 + 4 f1 - f2) / (2h)
          for (int c = 0; c < d; ++c) {
            double f0 = values[node_index(idx) * static_cast<std::size_t>(d) + static_cast<std::size_t>(c)];
            double f1 = values[node_index(hi) * static_cast<std::size_t>(d) + static_cast<std::size_t>(c)];
            double f2 = values[node_index(hi2) * static_cast<std::size_t>(d) + static_cast<std::size_t>(c)];
            jacobian[(node * static_cast<std::size_t>(d) + static_cast<std::size_t>(c)) * static_cast<std::size_t>(n) + static_cast<std::size_t>(a)] =
                (-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * h);
          }
          continue;
        }
        if (i == cells) {
          lo[static_cast<std::size_t>(a)] = cells - 1;
          std::vector<int> lo2(idx);
          lo2[static_cast<std::size_t>(a)] = cells - 2;
          for (int c = 0; c < d; ++c) {
            double f0 = values[node_index(idx) * static_cast<std::size_t>(d) + static_cast<std::size_t>(c)];
            double f1 = values[node_index(lo) * static_cast<std::size_t>(d) + static_cast<std::size_t>(c)];
            double f2 = values[node_index(lo2) * static_cast<std::size_t>(d) + static_cast<std::size_t>(c)];
            jacobian[(node * static_cast<std::size_t>(d) + static_cast<std::size_t>(c)) * static_cast<std::size_t>(n) + static_cast<std::size_t>(a)] =
                (3.0 * f0 - 4.0 * f1 + f2) / (2.0 * h);
          }
          continue;
        }
        lo[static_cast<std::size_t>(a)] = i - 1;
        hi[static_cast<std::size_t>(a)] = i + 1;
        const double scale = 1.0 / (2.0 * h);
        for (int c = 0; c < d; ++c) {
          double flo = values[node_index(lo) * static_cast<std::size_t>(d) + static_cast<std::size_t>(c)];
          double fhi = values[node_index(hi) * static_cast<std::size_t>(d) + static_cast<std::size_t>(c)];
          jacobian[(node * static_cast<std::size_t>(d) + static_cast<std::size_t>(c)) * static_cast<std::size_t>(n) + static_cast<std::size_t>(a)] =
              (fhi - flo) * scale;
        }
      }
      // advance mixed-radix index (axis n fastest)
      for (int a = n - 1; a >= 0; --a) {
        if (++idx[static_cast<std::size_t>(a)] <= cells) break;
        idx[static_cast<std::size_t>(a)] = 0;
      }
    }
  }

  /// Multilinear interpolation of an arbitrary per-node table with `width`
  /// doubles per node.
  void interpolate(const std::vector<double>& table, int width,
                   std::span<const double> t, double* out) const {
    const int n = cube_dim;
    std::vector<int> base(static_cast<std::size_t>(n));
    std::vector<double> frac(static_cast<std::size_t>(n));
    for (int a = 0; a < n; ++a) {
      double u = t[static_cast<std::size_t>(a)] * cells;
      int i = static_cast<int>(std::floor(u));
      i = std::clamp(i, 0, cells - 1);
      base[static_cast<std::size_t>(a)] = i;
      frac[static_cast<std::size_t>(a)] = u - i;
    }
    for (int c = 0; c < width; ++c) out[c] = 0.0;
    const int corners = 1 << n;
    std::vector<int> idx(static_cast<std::size_t>(n));
    for (int corner = 0; corner < corners; ++corner) {
      double weight = 1.0;
      for (int a = 0; a < n; ++a) {
        int bit = (corner >> a) & 1;
        idx[static_cast<std::size_t>(a)] = base[static_cast<std::size_t>(a)] + bit;
        weight *= bit ? frac[static_cast<std::size_t>(a)]
                      : 1.0 - frac[static_cast<std::size_t>(a)];
      }
      if (weight == 0.0) continue;
      std::size_t node = node_index(idx);
      for (int c = 0; c < width; ++c)
        out[c] += weight * table[node * static_cast<std::size_t>(width) + static_cast<std::size_t>(c)];
    }
  }
};

}  // namespace detail

/// One piece of a membrane, defined on [lo,hi] x [0,1]^{n-1} in direction 1.
/// The map is stored in piece-local coordinates (its own [0,1]^n cube).
struct MembranePiece {
  double lo = 0.0;
  double hi = 1.0;
  // symbolic: one expression per ambient component, in t1..tn (+ u)
  std::vector<Expression> components;
  std::vector<Expression> jacobian;  // d x n, row-major; built on construction
  std::shared_ptr<const detail::SampledMap> sampled;

  bool symbolic() const { return sampled == nullptr; }
};

class Membrane {
public:
  Membrane() = default;

  static Membrane symbolic(int cube_dim, int ambient_dim,
                           std::vector<Expression> components) {
    check(cube_dim, ambient_dim, components.size());
    MembranePiece piece;
    piece.components = std::move(components);
    build_symbolic_jacobian(piece, cube_dim, ambient_dim);
    Membrane g;
    g.cube_dim_ = cube_dim;
    g.ambient_dim_ = ambient_dim;
    g.pieces_.push_back(std::move(piece));
    return g;
  }

  static Membrane symbolic(int cube_dim, int ambient_dim,
                           const std::vector<std::string>& sources) {
    VariableListPtr vars = cube_variables(cube_dim);
    std::vector<Expression> comps;
    comps.reserve(sources.size());
    for (const auto& s : sources) comps.push_back(parse_expression(s, vars));
    return symbolic(cube_dim, ambient_dim, std::move(comps));
  }

  // the exact-match overload braced string literals need to avoid falling
  // into vector<Expression>'s iterator-pair constructor
  static Membrane symbolic(int cube_dim, int ambient_dim,
                           std::initializer_list<const char*> sources) {
    return symbolic(cube_dim, ambient_dim,
                    std::vector<std::string>(sources.begin(), sources.end()));
  }

  static Membrane sampled(int cube_dim, int ambient_dim, int cells_per_axis,
                          std::vector<double> grid_values) {
    if (cells_per_axis < 2)
      throw std::invalid_argument("sampled membrane needs >= 2 cells per axis");
    std::size_t nodes = 1;
    for (int a = 0; a < cube_dim; ++a)
      nodes *= static_cast<std::size_t>(cells_per_axis + 1);
    if (grid_values.size() != nodes * static_cast<std::size_t>(ambient_dim))
      throw std::invalid_argument(
          "sampled membrane grid has wrong size: expected " +
          std::to_string(nodes * static_cast<std::size_t>(ambient_dim)) +
          " values");
    auto sm = std::make_shared<detail::SampledMap>();
    sm->cube_dim = cube_dim;
    sm->ambient_dim = ambient_dim;
    sm->cells = cells_per_axis;
    sm->values = std::move(grid_values);
    sm->build_jacobian();
    MembranePiece piece;
    piece.sampled = std::move(sm);
    Membrane g;
    g.cube_dim_ = cube_dim;
    g.ambient_dim_ = ambient_dim;
    g.pieces_.push_back(std::move(piece));
    return g;
  }

  int cube_dim() const { return cube_dim_; }
  int ambient_dim() const { return ambient_dim_; }
  const std::vector<MembranePiece>& pieces() const { return pieces_; }
  bool is_symbolic() const {
    for (const auto& p : pieces_)
      if (!p.symbolic()) return false;
    return true;
  }

  int piece_at(double t1, int hint = -1) const {
    if (hint >= 0 && hint < static_cast<int>(pieces_.size())) {
      const auto& p = pieces_[static_cast<std::size_t>(hint)];
      if (t1 >= p.lo && t1 <= p.hi) return hint;
    }
    for (std::size_t i = 0; i < pieces_.size(); ++i)
      if (t1 <= pieces_[i].hi || i + 1 == pieces_.size())
        return static_cast<int>(i);
    return static_cast<int>(pieces_.size()) - 1;
  }

  /// Interior piece boundaries along direction 1 (empty for one piece).
  std::vector<double> piece_cuts() const {
    std::vector<double> cuts;
    for (std::size_t i = 0; i + 1 < pieces_.size(); ++i)
      cuts.push_back(pieces_[i].hi);
    return cuts;
  }

  std::vector<double> evaluate(std::span<const double> t, int hint = -1) const {
    check_point(t);
    int pi = piece_at(t[0], hint);
    const MembranePiece& p = pieces_[static_cast<std::size_t>(pi)];
    std::vector<double> local(t.begin(), t.end());
    local[0] = (t[0] - p.lo) / (p.hi - p.lo);
    std::vector<double> out(static_cast<std::size_t>(ambient_dim_));
    if (p.symbolic()) {
      for (int c = 0; c < ambient_dim_; ++c)
        out[static_cast<std::size_t>(c)] =
            p.components[static_cast<std::size_t>(c)].evaluate(local);
    } else {
      p.sampled->interpolate(p.sampled->values, ambient_dim_, local, out.data());
    }
    return out;
  }

  /// Jacobian d(g)/d(t) as a d x n row-major matrix (global coordinates:
  /// includes the direction-1 chain factor of pieces).
  std::vector<double> jacobian(std::span<const double> t, int hint = -1) const {
    check_point(t);
    int pi = piece_at(t[0], hint);
    const MembranePiece& p = pieces_[static_cast<std::size_t>(pi)];
    std::vector<double> local(t.begin(), t.end());
    local[0] = (t[0] - p.lo) / (p.hi - p.lo);
    const double chain = 1.0 / (p.hi - p.lo);
    std::vector<double> J(static_cast<std::size_t>(ambient_dim_ * cube_dim_));
    if (p.symbolic()) {
      for (int c = 0; c < ambient_dim_; ++c)
        for (int a = 0; a < cube_dim_; ++a)
          J[static_cast<std::size_t>(c * cube_dim_ + a)] =
              p.jacobian[static_cast<std::size_t>(c * cube_dim_ + a)].evaluate(local);
    } else {
      p.sampled->interpolate(p.sampled->jacobian, ambient_dim_ * cube_dim_,
                             local, J.data());
    }
    for (int c = 0; c < ambient_dim_; ++c)
      J[static_cast<std::size_t>(c * cube_dim_)] *= chain;
    return J;
  }

  friend Membrane concat_paths(const Membrane&, const Membrane&, double);
  friend Membrane glue_membranes(const Membrane&, const Membrane&, double);
  friend Membrane reverse_direction1(const Membrane&);

private:
  static void check(int cube_dim, int ambient_dim, std::size_t ncomp) {
    if (cube_dim < 1) throw std::invalid_argument("cube_dim must be >= 1");
    if (ambient_dim < 1) throw std::invalid_argument("ambient_dim must be >= 1");
    if (ncomp != static_cast<std::size_t>(ambient_dim))
      throw std::invalid_argument("need one component per ambient dimension");
  }

  static void build_symbolic_jacobian(MembranePiece& p, int cube_dim,
                                      int ambient_dim) {
    p.jacobian.clear();
    p.jacobian.reserve(static_cast<std::size_t>(ambient_dim * cube_dim));
    for (int c = 0; c < ambient_dim; ++c) {
      const Expression& e = p.components[static_cast<std::size_t>(c)];
      if (e.variables() &&
          static_cast<int>(e.variables()->size()) < cube_dim)
        throw std::invalid_argument(
            "component expression does not cover the cube variables");
      for (int a = 0; a < cube_dim; ++a)
        p.jacobian.push_back(e.differentiate(a));
    }
  }

  void check_point(std::span<const double> t) const {
    if (t.size() < static_cast<std::size_t>(cube_dim_))
      throw std::invalid_argument("membrane point has too few coordinates");
  }

  int cube_dim_ = 0;
  int ambient_dim_ = 0;
  std::vector<MembranePiece> pieces_;

  friend class PullbackEvaluator;
  friend class MembraneFamily;
};

// ---------------------------------------------------------------------------
// Constructors for common membranes.

inline Membrane line_path(const std::vector<double>& a,
                          const std::vector<double>& b) {
  if (a.size() != b.size() || a.empty())
    throw std::invalid_argument("line_path endpoints must match in dimension");
  VariableListPtr vars = cube_variables(1);
  Expression t = Expression::variable(0, vars);
  std::vector<Expression> comps;
  for (std::size_t c = 0; c < a.size(); ++c)
    comps.push_back(Expression::constant(a[c], vars) +
                    Expression::constant(b[c] - a[c], vars) * t);
  return Membrane::symbolic(1, static_cast<int>(a.size()), std::move(comps));
}

inline Membrane constant_path(const std::vector<double>& p) {
  return line_path(p, p);
}

// ---------------------------------------------------------------------------
// Composition and gluing.

namespace detail {

inline double face_mismatch(const Membrane& a, const Membrane& b) {
  // max over a sample grid of |a(1, t') - b(0, t')|
  const int n = a.cube_dim();
  const int probes = 7;
  std::vector<double> ta(static_cast<std::size_t>(n), 0.0);
  std::vector<double> tb(static_cast<std::size_t>(n), 0.0);
  ta[0] = 1.0;
  tb[0] = 0.0;
  double worst = 0.0;
  std::vector<int> idx(static_cast<std::size_t>(n > 1 ? n - 1 : 0), 0);
  while (true) {
    for (int a2 = 1; a2 < n; ++a2)
      ta[static_cast<std::size_t>(a2)] = tb[static_cast<std::size_t>(a2)] =
          static_cast<double>(idx[static_cast<std::size_t>(a2 - 1)]) / (probes - 1);
    std::vector<double> va = a.evaluate(ta);
    std::vector<double> vb = b.evaluate(tb);
    for (std::size_t c = 0; c < va.size(); ++c)
      worst = std::max(worst, std::abs(va[c] - vb[c]));
    if (n == 1) break;
    int axis = n - 2;
    while (axis >= 0) {
      if (++idx[static_cast<std::size_t>(axis)] < probes) break;
      idx[static_cast<std::size_t>(axis)] = 0;
      --axis;
    }
    if (axis < 0) break;
  }
  return worst;
}

}  // namespace detail

/// Concatenation g = a then b, reparametrized to [0,1] along direction 1.
inline Membrane glue_membranes(const Membrane& a, const Membrane& b,
                               double face_tol = 1e-9) {
  if (a.cube_dim() != b.cube_dim() || a.ambient_dim() != b.ambient_dim())
    throw std::invalid_argument(
        "glue_membranes: dimension mismatch between the two maps");
  double gap = detail::face_mismatch(a, b);
  if (gap > face_tol)
    throw GeometryError("glue_membranes: faces do not match (gap " +
                        std::to_string(gap) + " > tolerance " +
                        std::to_string(face_tol) + ")");
  Membrane out;
  out.cube_dim_ = a.cube_dim_;
  out.ambient_dim_ = a.ambient_dim_;
  for (const auto& p : a.pieces_) {
    MembranePiece q = p;
    q.lo = p.lo / 2.0;
    q.hi = p.hi / 2.0;
    out.pieces_.push_back(std::move(q));
  }
  for (const auto& p : b.pieces_) {
    MembranePiece q = p;
    q.lo = 0.5 + p.lo / 2.0;
    q.hi = 0.5 + p.hi / 2.0;
    out.pieces_.push_back(std::move(q));
  }
  return out;
}

inline Membrane concat_paths(const Membrane& a, const Membrane& b,
                             double endpoint_tol = 1e-9) {
  if (a.cube_dim() != 1 || b.cube_dim() != 1)
    throw std::invalid_argument("concat_paths expects 1-dimensional membranes");
  return glue_membranes(a, b, endpoint_tol);
}

/// Reverse orientation along direction 1: g(t) -> g(1-t1, t2, ...).
inline Membrane reverse_direction1(const Membrane& g) {
  Membrane out;
  out.cube_dim_ = g.cube_dim_;
  out.ambient_dim_ = g.ambient_dim_;
  for (auto it = g.pieces_.rbegin(); it != g.pieces_.rend(); ++it) {
    MembranePiece q;
    q.lo = 1.0 - it->hi;
    q.hi = 1.0 - it->lo;
    if (it->symbolic()) {
      VariableListPtr vars = it->components.front().variables();
      if (!vars) vars = cube_variables(g.cube_dim_);
      std::vector<Expression> repl;
      for (std::size_t v = 0; v < vars->size(); ++v)
        repl.push_back(Expression::variable(static_cast<int>(v), vars));
      repl[0] = Expression::constant(1.0, vars) - repl[0];
      for (const auto& comp : it->components)
        q.components.push_back(comp.substitute(repl, vars));
      Membrane scratch =
          Membrane::symbolic(g.cube_dim_, g.ambient_dim_, q.components);
      q.jacobian = scratch.pieces_.front().jacobian;
    } else {
      const detail::SampledMap& sm = *it->sampled;
      auto rev = std::make_shared<detail::SampledMap>();
      rev->cube_dim = sm.cube_dim;
      rev->ambient_dim = sm.ambient_dim;
      rev->cells = sm.cells;
      rev->values.resize(sm.values.size());
      const int cells = sm.cells, d = sm.ambient_dim, n = sm.cube_dim;
      std::size_t tail = 1;
      for (int a = 1; a < n; ++a) tail *= static_cast<std::size_t>(cells + 1);
      for (int i = 0; i <= cells; ++i)
        for (std::size_t r = 0; r < tail; ++r)
          for (int c = 0; c < d; ++c)
            rev->values[(static_cast<std::size_t>(i) * tail + r) * static_cast<std::size_t>(d) + static_cast<std::size_t>(c)] =
                sm.values[(static_cast<std::size_t>(cells - i) * tail + r) * static_cast<std::size_t>(d) + static_cast<std::size_t>(c)];
      rev->build_jacobian();
      q.sampled = std::move(rev);
    }
    out.pieces_.push_back(std::move(q));
  }
  return out;
}

/// The face membrane t1 = side extended constantly in direction 1.
inline Membrane constant_face_extension(const Membrane& g, int side) {
  if (side != 0 && side != 1)
    throw std::invalid_argument("side must be 0 or 1");
  const MembranePiece& p =
      side == 0 ? g.pieces().front() : g.pieces().back();
  if (!p.symbolic())
    throw std::invalid_argument(
        "constant_face_extension supports symbolic membranes only");
  VariableListPtr vars = p.components.front().variables();
  if (!vars) vars = cube_variables(g.cube_dim());
  std::vector<Expression> repl;
  for (std::size_t v = 0; v < vars->size(); ++v)
    repl.push_back(Expression::variable(static_cast<int>(v), vars));
  repl[0] = Expression::constant(side == 0 ? 0.0 : 1.0, vars);
  std::vector<Expression> comps;
  for (const auto& c : p.components) comps.push_back(c.substitute(repl, vars));
  return Membrane::symbolic(g.cube_dim(), g.ambient_dim(), std::move(comps));
}

// ---------------------------------------------------------------------------
// One-parameter families.

class MembraneFamily {
public:
  MembraneFamily() = default;

  /// Components are expressions in t1..tn,u (u last).
  MembraneFamily(int cube_dim, int ambient_dim,
                 std::vector<Expression> components)
      : cube_dim_(cube_dim),
        ambient_dim_(ambient_dim),
        components_(std::move(components)) {
    if (components_.size() != static_cast<std::size_t>(ambient_dim))
      throw std::invalid_argument("need one component per ambient dimension");
  }

  static MembraneFamily parse(int cube_dim, int ambient_dim,
                              const std::vector<std::string>& sources) {
    VariableListPtr vars = cube_variables(cube_dim, /*with_parameter=*/true);
    std::vector<Expression> comps;
    for (const auto& s : sources) comps.push_back(parse_expression(s, vars));
    return MembraneFamily(cube_dim, ambient_dim, std::move(comps));
  }

  int cube_dim() const { return cube_dim_; }
  int ambient_dim() const { return ambient_dim_; }

  Membrane at(double u) const {
    VariableListPtr fam_vars = cube_variables(cube_dim_, true);
    VariableListPtr vars = cube_variables(cube_dim_);
    std::vector<Expression> repl;
    for (int v = 0; v < cube_dim_; ++v)
      repl.push_back(Expression::variable(v, vars));
    repl.push_back(Expression::constant(u, vars));
    std::vector<Expression> comps;
    for (const auto& c : components_) comps.push_back(c.substitute(repl, vars));
    return Membrane::symbolic(cube_dim_, ambient_dim_, std::move(comps));
  }

private:
  int cube_dim_ = 0;
  int ambient_dim_ = 0;
  std::vector<Expression> components_;
};

// ---------------------------------------------------------------------------
// Pullback.

namespace detail {

/// Determinant of the minor of the d x n row-major jacobian J selecting
/// ambient rows I (1-based) and cube columns Jcols (1-based).
inline double minor_determinant(const std::vector<double>& J, int n,
                                const MultiIndex& I, const MultiIndex& Jcols) {
  const std::size_t p = I.size();
  if (p == 0) return 1.0;
  // gather the p x p minor then Laplace-expand (p is small)
  std::vector<double> M(p * p);
  for (std::size_t r = 0; r < p; ++r)
    for (std::size_t c = 0; c < p; ++c)
      M[r * p + c] = J[static_cast<std::size_t>((I[r] - 1) * n + (Jcols[c] - 1))];
  // LU-free recursive expansion
  struct Det {
    static double go(const std::vector<double>& A, std::vector<int>& cols,
                     std::size_t row, std::size_t p) {
      if (row == p) return 1.0;
      double acc = 0.0;
      int sign = 1;
      for (std::size_t k = 0; k < cols.size(); ++k) {
        if (cols[k] < 0) continue;
        int c = cols[k];
        double pivot = A[row * p + static_cast<std::size_t>(c)];
        if (pivot != 0.0) {
          cols[k] = -1;
          acc += sign * pivot * go(A, cols, row + 1, p);
          cols[k] = c;
        }
        sign = -sign;
      }
      return acc;
    }
  };
  std::vector<int> cols(p);
  for (std::size_t c = 0; c < p; ++c) cols[c] = static_cast<int>(c);
  return Det::go(M, cols, 0, p);
}

/// Symbolic determinant for symbolic pullback (small sizes).
inline Expression symbolic_minor(const std::vector<Expression>& J, int n,
                                 const MultiIndex& I, const MultiIndex& Jcols) {
  const std::size_t p = I.size();
  if (p == 0) return Expression::constant(1.0);
  std::vector<Expression> M;
  M.reserve(p * p);
  for (std::size_t r = 0; r < p; ++r)
    for (std::size_t c = 0; c < p; ++c)
      M.push_back(J[static_cast<std::size_t>((I[r] - 1) * n + (Jcols[c] - 1))]);
  struct Det {
    static Expression go(const std::vector<Expression>& A,
                         std::vector<int>& cols, std::size_t row,
                         std::size_t p) {
      if (row == p) return Expression::constant(1.0);
      Expression acc = Expression::constant(0.0);
      int sign = 1;
      for (std::size_t k = 0; k < cols.size(); ++k) {
        if (cols[k] < 0) continue;
        int c = cols[k];
        const Expression& pivot = A[row * p + static_cast<std::size_t>(c)];
        cols[k] = -1;
        Expression sub = go(A, cols, row + 1, p);
        cols[k] = c;
        Expression term = pivot * sub;
        acc = sign > 0 ? acc + term : acc - term;
        sign = -sign;
      }
      return acc;
    }
  };
  std::vector<int> cols(p);
  for (std::size_t c = 0; c < p; ++c) cols[c] = static_cast<int>(c);
  return Det::go(M, cols, 0, p);
}

inline void increasing_subsets(int n, int p, std::vector<MultiIndex>& out) {
  MultiIndex cur;
  struct Rec {
    static void go(int n, int p, int next, MultiIndex& cur,
                   std::vector<MultiIndex>& out) {
      if (static_cast<int>(cur.size()) == p) {
        out.push_back(cur);
        return;
      }
      for (int v = next; v <= n; ++v) {
        cur.push_back(v);
        go(n, p, v + 1, cur, out);
        cur.pop_back();
      }
    }
  };
  Rec::go(n, p, 1, cur, out);
}

}  // namespace detail

/// Symbolic pullback g*omega for a single-piece symbolic membrane. The result
/// is a form on the cube with coefficients in t1..tn.
inline DifferentialForm pullback(const Membrane& g,
                                 const DifferentialForm& omega) {
  if (omega.ambient_dim() != g.ambient_dim())
    throw std::invalid_argument("pullback: form does not match ambient space");
  if (g.pieces().size() != 1 || !g.pieces().front().symbolic())
    throw std::invalid_argument(
        "symbolic pullback needs a single-piece symbolic membrane "
        "(use PullbackEvaluator for piecewise or sampled maps)");
  const MembranePiece& piece = g.pieces().front();
  const int n = g.cube_dim();
  const int p = omega.degree();
  if (p > n)
    return DifferentialForm::zero(n, n);

  VariableListPtr cube_vars = cube_variables(n);
  // substitute chart coords by components
  std::vector<Expression> repl;
  repl.reserve(static_cast<std::size_t>(g.ambient_dim()));
  for (const auto& c : piece.components) repl.push_back(c);

  std::vector<MultiIndex> columns;
  detail::increasing_subsets(n, p, columns);

  std::map<MultiIndex, Expression> coeffs;
  for (const auto& Jcols : columns) {
    Expression acc = Expression::constant(0.0, cube_vars);
    for (const auto& [I, alpha] : omega.coefficients()) {
      Expression pulled = alpha.substitute(repl, cube_vars);
      Expression det = detail::symbolic_minor(piece.jacobian, n, I, Jcols);
      acc = acc + pulled * det;
    }
    coeffs.emplace(Jcols, acc);
  }
  return DifferentialForm::make(n, p, coeffs);
}

/// Numeric pullback coefficients of a form along any membrane (piecewise and
/// sampled included). coefficient(J, t) is the dt_J-component of g*omega at t.
class PullbackEvaluator {
public:
  PullbackEvaluator(const Membrane& g, const DifferentialForm& omega)
      : g_(&g), omega_(&omega) {
    if (omega.ambient_dim() != g.ambient_dim())
      throw std::invalid_argument(
          "pullback: form does not match ambient space");
  }

  double coefficient(const MultiIndex& J, std::span<const double> t,
                     int hint = -1) const {
    if (static_cast<int>(J.size()) != omega_->degree())
      throw std::invalid_argument(
          "pullback coefficient: |J| must equal the form degree");
    std::vector<double> x = g_->evaluate(t, hint);
    if (omega_->degree() == 0) {
      auto it = omega_->coefficients().find(MultiIndex{});
      return it == omega_->coefficients().end() ? 0.0 : it->second.evaluate(x);
    }
    std::vector<double> J0 = g_->jacobian(t, hint);
    double acc = 0.0;
    for (const auto& [I, alpha] : omega_->coefficients()) {
      double det = detail::minor_determinant(J0, g_->cube_dim(), I, J);
      if (det == 0.0) continue;
      acc += alpha.evaluate(x) * det;
    }
    return acc;
  }

  const Membrane& membrane() const { return *g_; }
  const DifferentialForm& form() const { return *omega_; }

private:
  const Membrane* g_;
  const DifferentialForm* omega_;
};

}  // namespace mint
