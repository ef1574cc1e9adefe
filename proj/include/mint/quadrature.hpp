#pragma once

// Quadrature over products of ordered simplices {0 < t^1 < ... < t^k < 1}.
//
// The workhorse is a cumulative ("prefix") composite rule on a 1-d grid: for
// every node m it supplies weights approximating \int_0^{t_m} f.  Prefixes at
// even node counts use composite Simpson; odd prefixes close the last cell
// with a 4-point Adams-Moulton-type rule.  Every prefix is exact for cubics,
// which makes nested (iterated) integrals of polynomial data of low degree
// exact to roundoff.  Grids may be piecewise, with interface nodes duplicated
// so integrands with jumps across piece boundaries are handled exactly.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mint {

enum class QuadratureRule { trapezoid, simpson, gauss };

struct QuadratureConfig {
  int points_per_axis = 64;   // target cells per unit length, per axis
  QuadratureRule rule = QuadratureRule::simpson;
  int refinement_levels = 2;  // >= 1; levels double points_per_axis
  double rel_tol = 1e-6;
  int max_total_cuts = 6;     // guard on the total simplex dimension

  void validate() const {
    if (points_per_axis < 4)
      throw std::invalid_argument("points_per_axis must be >= 4");
    if (refinement_levels < 1)
      throw std::invalid_argument("refinement_levels must be >= 1");
    if (rel_tol <= 0.0) throw std::invalid_argument("rel_tol must be > 0");
  }
};

struct IntegrationResult {
  double value = 0.0;
  double error_estimate = std::numeric_limits<double>::quiet_NaN();
};

class QuadratureError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

inline QuadratureRule parse_rule(const std::string& name) {
  if (name == "trapezoid") return QuadratureRule::trapezoid;
  if (name == "simpson") return QuadratureRule::simpson;
  if (name == "gauss") return QuadratureRule::gauss;
  throw std::invalid_argument("unknown quadrature rule '" + name + "'");
}

inline const char* rule_name(QuadratureRule r) {
  switch (r) {
    case QuadratureRule::trapezoid: return "trapezoid";
    case QuadratureRule::simpson: return "simpson";
    case QuadratureRule::gauss: return "gauss";
  }
  return "?";
}

// ---------------------------------------------------------------------------

class Grid1D {
public:
  /// Build a grid over [0,1] split at the given interior cuts. `cells` is the
  /// target total cell count; every piece receives an even number (>= 4) of
  /// cells proportional to its length. Interface nodes are duplicated (the
  /// left copy belongs to the left piece).
  static Grid1D piecewise(const std::vector<double>& cuts, int cells,
                          QuadratureRule rule) {
    if (rule == QuadratureRule::gauss)
      throw std::invalid_argument("Grid1D does not implement the gauss rule");
    Grid1D g;
    g.rule_ = rule;
    std::vector<double> bounds{0.0};
    for (double c : cuts) {
      if (c <= bounds.back() || c >= 1.0)
        throw std::invalid_argument("piece cuts must be increasing in (0,1)");
      bounds.push_back(c);
    }
    bounds.push_back(1.0);
    for (std::size_t p = 0; p + 1 < bounds.size(); ++p) {
      double lo = bounds[p], hi = bounds[p + 1];
      int n = static_cast<int>(std::lround(cells * (hi - lo)));
      n = std::max(4, n + (n % 2));
      Piece piece;
      piece.lo = lo;
      piece.hi = hi;
      piece.cells = n;
      piece.h = (hi - lo) / n;
      piece.first_node = g.coords_.size();
      for (int i = 0; i <= n; ++i) {
        g.coords_.push_back(lo + piece.h * i);
        g.piece_of_node_.push_back(static_cast<int>(p));
      }
      g.pieces_.push_back(piece);
    }
    g.coords_.back() = 1.0;
    g.build_weights();
    return g;
  }

  static Grid1D uniform(int cells, QuadratureRule rule) {
    return piecewise({}, cells, rule);
  }

  std::size_t size() const { return coords_.size(); }
  double coord(std::size_t m) const { return coords_[m]; }
  int piece(std::size_t m) const { return piece_of_node_[m]; }
  QuadratureRule rule() const { return rule_; }

  /// Weights of the full integral over [0,1].
  const std::vector<double>& weights() const { return total_weights_; }

  double integrate(const std::vector<double>& values) const {
    double acc = 0.0;
    for (std::size_t m = 0; m < total_weights_.size(); ++m)
      acc += total_weights_[m] * values[m];
    return acc;
  }

  /// v[m] := sum_r prefix_row(m)[r] * v_in[r]  (cumulative integral at node m,
  /// computed with O(size) recurrences).
  void prefix_inplace(std::vector<double>& v) const {
    if (v.size() != coords_.size())
      throw std::invalid_argument("prefix_inplace: size mismatch");
    std::vector<double> out(v.size(), 0.0);
    double base = 0.0;
    for (const Piece& p : pieces_) {
      const std::size_t b = p.first_node;
      const double h = p.h;
      out[b] = base;
      if (rule_ == QuadratureRule::trapezoid) {
        for (int m = 1; m <= p.cells; ++m)
          out[b + m] = out[b + m - 1] +
                       0.5 * h * (v[b + m - 1] + v[b + m]);
      } else {
        for (int m = 1; m <= p.cells; ++m) {
          if (m % 2 == 0) {
            out[b + m] = out[b + m - 2] +
                         h / 3.0 * (v[b + m - 2] + 4.0 * v[b + m - 1] + v[b + m]);
          } else if (m == 1) {
            out[b + 1] = base + h / 24.0 *
                                    (9.0 * v[b] + 19.0 * v[b + 1] -
                                     5.0 * v[b + 2] + v[b + 3]);
          } else {
            out[b + m] = out[b + m - 1] +
                         h / 24.0 *
                             (v[b + m - 3] - 5.0 * v[b + m - 2] +
                              19.0 * v[b + m - 1] + 9.0 * v[b + m]);
          }
        }
      }
      base = out[b + p.cells];
    }
    v.swap(out);
  }

  /// Explicit prefix weight rows; row m reproduces prefix_inplace at node m.
  /// rows[m] has extent(m) meaningful entries (zeros beyond).
  const std::vector<std::vector<double>>& prefix_rows() const {
    if (rows_.empty()) build_rows();
    return rows_;
  }
  const std::vector<std::size_t>& row_extent() const {
    if (rows_.empty()) build_rows();
    return extent_;
  }

private:
  struct Piece {
    double lo, hi, h;
    int cells;
    std::size_t first_node;
  };

  void build_weights() {
    total_weights_.assign(coords_.size(), 0.0);
    for (const Piece& p : pieces_) {
      const std::size_t b = p.first_node;
      if (rule_ == QuadratureRule::trapezoid) {
        for (int m = 0; m < p.cells; ++m) {
          total_weights_[b + m] += 0.5 * p.h;
          total_weights_[b + m + 1] += 0.5 * p.h;
        }
      } else {
        for (int m = 0; m + 2 <= p.cells; m += 2) {
          total_weights_[b + m] += p.h / 3.0;
          total_weights_[b + m + 1] += 4.0 * p.h / 3.0;
          total_weights_[b + m + 2] += p.h / 3.0;
        }
      }
    }
  }

  void build_rows() const {
    const std::size_t n = coords_.size();
    rows_.assign(n, std::vector<double>(n, 0.0));
    extent_.assign(n, 0);
    std::vector<double> base_row(n, 0.0);
    std::size_t base_extent = 0;
    for (const Piece& p : pieces_) {
      const std::size_t b = p.first_node;
      const double h = p.h;
      for (int m = 0; m <= p.cells; ++m) {
        std::vector<double>& row = rows_[b + m];
        row = base_row;
        std::size_t ext = base_extent;
        if (m > 0) {
          if (rule_ == QuadratureRule::trapezoid) {
            for (int i = 0; i < m; ++i) {
              row[b + i] += 0.5 * h;
              row[b + i + 1] += 0.5 * h;
            }
            ext = std::max(ext, b + m + 1);
          } else if (m % 2 == 0) {
            for (int i = 0; i + 2 <= m; i += 2) {
              row[b + i] += h / 3.0;
              row[b + i + 1] += 4.0 * h / 3.0;
              row[b + i + 2] += h / 3.0;
            }
            ext = std::max(ext, b + m + 1);
          } else if (m == 1) {
            row[b] += 9.0 * h / 24.0;
            row[b + 1] += 19.0 * h / 24.0;
            row[b + 2] += -5.0 * h / 24.0;
            row[b + 3] += h / 24.0;
            ext = std::max(ext, b + 4);
          } else {
            for (int i = 0; i + 2 <= m - 1; i += 2) {
              row[b + i] += h / 3.0;
              row[b + i + 1] += 4.0 * h / 3.0;
              row[b + i + 2] += h / 3.0;
            }
            row[b + m - 3] += h / 24.0;
            row[b + m - 2] += -5.0 * h / 24.0;
            row[b + m - 1] += 19.0 * h / 24.0;
            row[b + m] += 9.0 * h / 24.0;
            ext = std::max(ext, b + m + 1);
          }
        }
        extent_[b + m] = std::max(ext, b + static_cast<std::size_t>(m) + 1);
      }
      base_row = rows_[b + p.cells];
      base_extent = extent_[b + p.cells];
    }
  }

  QuadratureRule rule_ = QuadratureRule::simpson;
  std::vector<double> coords_;
  std::vector<int> piece_of_node_;
  std::vector<Piece> pieces_;
  std::vector<double> total_weights_;
  mutable std::vector<std::vector<double>> rows_;
  mutable std::vector<std::size_t> extent_;
};

/// Iterated 1-d integral: value at 1 of
///   I_L(t) = \int_0^t f_L(s) I_{L-1}(s) ds,  I_0 = 1,
/// with f_l given by per-node values factors[l].
inline double iterated_chain(const Grid1D& g,
                             const std::vector<std::vector<double>>& factors) {
  std::vector<double> v(g.size(), 1.0);
  for (const auto& f : factors) {
    if (f.size() != g.size())
      throw std::invalid_argument("iterated_chain: factor size mismatch");
    for (std::size_t m = 0; m < v.size(); ++m) v[m] *= f[m];
    g.prefix_inplace(v);
  }
  return v.empty() ? 0.0 : v.back();
}

// ---------------------------------------------------------------------------
// Gauss-Legendre nodes (Newton on the Legendre polynomial).

namespace detail {

inline void gauss_legendre(int n, std::vector<double>& nodes,
                           std::vector<double>& weights) {
  nodes.resize(static_cast<std::size_t>(n));
  weights.resize(static_cast<std::size_t>(n));
  const double pi = 3.14159265358979323846;
  for (int i = 0; i < n; ++i) {
    double x = std::cos(pi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (x * p0 - p1) / (x * x - 1.0);
      double dx = p0 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    nodes[static_cast<std::size_t>(i)] = x;
    weights[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - x * x) * pp * pp);
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Generic ordered-simplex integration.
//
// dims = (k_1, ..., k_n): integrate F over the product of ordered simplices
// {0 < t_i^1 < ... < t_i^{k_i} < 1}. F receives the flattened coordinates in
// direction-major ascending order (t_1^1..t_1^{k_1}, t_2^1, ...).

namespace detail {

// Recurse direction by direction, within a direction from the top variable
// (full-range weights) down (prefix rows of the node above).
template <typename G>
struct OrderedGridRec {
  const std::vector<int>& dims;
  const std::vector<std::size_t>& offsets;
  const Grid1D& grid;
  const std::vector<std::vector<double>>& rows;
  const std::vector<std::size_t>& extent;
  const std::vector<double>& W;
  std::vector<double>& point;
  std::size_t N;
  G& inner;

  double direction(std::size_t d) {
    if (d == dims.size()) return inner();
    return level(d, dims[d]);
  }

  double level(std::size_t d, int lvl) {
    if (lvl == 0) return direction(d + 1);
    // top level of this direction uses the full weights; lower levels use
    // the prefix row of the node chosen one level above
    double acc = 0.0;
    for (std::size_t m = 0; m < N; ++m) {
      double w = W[m];
      if (w == 0.0) continue;
      point[offsets[d] + static_cast<std::size_t>(lvl) - 1] = grid.coord(m);
      acc += w * lower(d, lvl - 1, m);
    }
    return acc;
  }

  double lower(std::size_t d, int lvl, std::size_t above) {
    if (lvl == 0) return direction(d + 1);
    const std::vector<double>& row = rows[above];
    const std::size_t ext = extent[above];
    double acc = 0.0;
    for (std::size_t m = 0; m < ext; ++m) {
      double w = row[m];
      if (w == 0.0) continue;
      point[offsets[d] + static_cast<std::size_t>(lvl) - 1] = grid.coord(m);
      acc += w * lower(d, lvl - 1, m);
    }
    return acc;
  }
};

template <typename F>
double ordered_value_grid(const std::vector<int>& dims, F&& f, int cells,
                          QuadratureRule rule) {
  Grid1D grid = Grid1D::uniform(cells, rule);
  const auto& rows = grid.prefix_rows();
  const auto& extent = grid.row_extent();
  const auto& W = grid.weights();
  const std::size_t N = grid.size();

  std::size_t total_vars = 0;
  for (int k : dims) total_vars += static_cast<std::size_t>(k);
  std::vector<double> point(total_vars, 0.0);
  std::vector<std::size_t> offsets(dims.size());
  {
    std::size_t off = 0;
    for (std::size_t d = 0; d < dims.size(); ++d) {
      offsets[d] = off;
      off += static_cast<std::size_t>(dims[d]);
    }
  }

  auto eval = [&]() { return f(std::span<const double>(point)); };
  OrderedGridRec<decltype(eval)> rec{dims, offsets, grid,  rows, extent,
                                     W,    point,   N,     eval};
  return rec.direction(0);
}

template <typename G>
struct OrderedGaussRec {
  const std::vector<int>& dims;
  const std::vector<std::size_t>& offsets;
  const std::vector<double>& nodes;
  const std::vector<double>& weights;
  std::vector<double>& point;
  G& inner;

  double direction(std::size_t d) {
    if (d == dims.size()) return inner();
    return level(d, dims[d], 1.0);
  }

  // integrate the ordered simplex 0 < t^1 < ... < t^lvl < upper from the
  // top down; each level is a scaled Gauss rule on [0, upper]
  double level(std::size_t d, int lvl, double upper) {
    if (lvl == 0) return direction(d + 1);
    double acc = 0.0;
    for (std::size_t q = 0; q < nodes.size(); ++q) {
      double t = 0.5 * upper * (nodes[q] + 1.0);
      double w = 0.5 * upper * weights[q];
      point[offsets[d] + static_cast<std::size_t>(lvl) - 1] = t;
      acc += w * level(d, lvl - 1, t);
    }
    return acc;
  }
};

template <typename F>
double ordered_value_gauss(const std::vector<int>& dims, F&& f, int points) {
  std::vector<double> nodes, weights;
  gauss_legendre(points, nodes, weights);

  std::size_t total_vars = 0;
  for (int k : dims) total_vars += static_cast<std::size_t>(k);
  std::vector<double> point(total_vars, 0.0);
  std::vector<std::size_t> offsets(dims.size());
  {
    std::size_t off = 0;
    for (std::size_t d = 0; d < dims.size(); ++d) {
      offsets[d] = off;
      off += static_cast<std::size_t>(dims[d]);
    }
  }

  auto eval = [&]() { return f(std::span<const double>(point)); };
  OrderedGaussRec<decltype(eval)> rec{dims, offsets, nodes, weights, point,
                                      eval};
  return rec.direction(0);
}

inline double richardson_denominator(QuadratureRule rule) {
  switch (rule) {
    case QuadratureRule::simpson: return 15.0;   // order 4
    case QuadratureRule::trapezoid: return 3.0;  // order 2
    case QuadratureRule::gauss: return 1.0;      // no order assumption
  }
  return 1.0;
}

}  // namespace detail

/// Integrate F over the product of ordered simplices given by dims, with
/// Richardson refinement. Throws QuadratureError if the estimate exceeds
/// rel_tol * (1 + |value|) after the last refinement level.
template <typename F>
IntegrationResult integrate_ordered(const std::vector<int>& dims, F&& f,
                                    const QuadratureConfig& cfg) {
  cfg.validate();
  int total = 0;
  for (int k : dims) {
    if (k < 0) throw std::invalid_argument("cut counts must be >= 0");
    total += k;
  }
  if (total > cfg.max_total_cuts)
    throw std::invalid_argument(
        "total simplex dimension " + std::to_string(total) +
        " exceeds max_total_cuts = " + std::to_string(cfg.max_total_cuts));
  if (total == 0) {
    std::vector<double> empty;
    return {f(std::span<const double>(empty)), 0.0};
  }

  IntegrationResult res;
  double prev = 0.0;
  for (int lvl = 0; lvl < cfg.refinement_levels; ++lvl) {
    int pts = cfg.points_per_axis << lvl;
    double v = cfg.rule == QuadratureRule::gauss
                   ? detail::ordered_value_gauss(dims, f, pts)
                   : detail::ordered_value_grid(dims, f, pts, cfg.rule);
    if (lvl > 0)
      res.error_estimate =
          std::abs(v - prev) / detail::richardson_denominator(cfg.rule);
    prev = v;
    res.value = v;
  }
  if (cfg.refinement_levels > 1 &&
      res.error_estimate > cfg.rel_tol * (1.0 + std::abs(res.value)))
    throw QuadratureError(
        "quadrature did not converge: estimate " +
        std::to_string(res.error_estimate) + " exceeds tolerance " +
        std::to_string(cfg.rel_tol * (1.0 + std::abs(res.value))));
  return res;
}

}  // namespace mint
