#pragma once

// Differential forms on a coordinate chart: coefficients are symbolic
// expressions indexed by strictly increasing multi-indices.

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "expression.hpp"

namespace mint {

using MultiIndex = std::vector<int>;  // strictly increasing, 1-based

/// Numeric coefficient table of a form at a point.
using FormValue = std::map<MultiIndex, double>;

namespace detail {

/// Merge two strictly increasing index lists; nullopt if they share an index.
/// The sign is the parity of moving the concatenation I|K into sorted order.
inline std::optional<std::pair<MultiIndex, int>> merge_indices(
    const MultiIndex& I, const MultiIndex& K) {
  MultiIndex out;
  out.reserve(I.size() + K.size());
  int sign = 1;
  std::size_t i = 0, k = 0;
  while (i < I.size() && k < K.size()) {
    if (I[i] == K[k]) return std::nullopt;
    if (I[i] < K[k]) {
      out.push_back(I[i++]);
    } else {
      // K[k] jumps over the remaining entries of I
      if ((I.size() - i) % 2 == 1) sign = -sign;
      out.push_back(K[k++]);
    }
  }
  while (i < I.size()) out.push_back(I[i++]);
  while (k < K.size()) out.push_back(K[k++]);
  return std::make_pair(std::move(out), sign);
}

inline bool strictly_increasing(const MultiIndex& I, int dim) {
  for (std::size_t p = 0; p < I.size(); ++p) {
    if (I[p] < 1 || I[p] > dim) return false;
    if (p > 0 && I[p] <= I[p - 1]) return false;
  }
  return true;
}

}  // namespace detail

class DifferentialForm {
  struct Data {
    int ambient_dim = 0;
    int degree = 0;
    std::map<MultiIndex, Expression> coeffs;
    VariableListPtr vars;
  };

public:
  DifferentialForm() : DifferentialForm(zero(1, 0)) {}

  static DifferentialForm zero(int ambient_dim, int degree) {
    check_dims(ambient_dim, degree);
    Data d;
    d.ambient_dim = ambient_dim;
    d.degree = degree;
    d.vars = chart_variables(ambient_dim);
    return DifferentialForm(std::move(d));
  }

  /// Constant-1 zero-form (the unit for the wedge product).
  static DifferentialForm unit(int ambient_dim) {
    return function(ambient_dim, Expression::constant(1.0));
  }

  static DifferentialForm function(int ambient_dim, const Expression& f) {
    check_dims(ambient_dim, 0);
    Data d;
    d.ambient_dim = ambient_dim;
    d.degree = 0;
    d.vars = pick_vars(ambient_dim, f);
    if (!f.is_zero()) d.coeffs.emplace(MultiIndex{}, f);
    return DifferentialForm(std::move(d));
  }

  static DifferentialForm dx(int ambient_dim, int i) {
    DifferentialForm f = zero(ambient_dim, 1);
    return f.with(MultiIndex{i}, Expression::constant(1.0));
  }

  static DifferentialForm make(
      int ambient_dim, int degree,
      const std::map<MultiIndex, Expression>& coeffs) {
    check_dims(ambient_dim, degree);
    Data d;
    d.ambient_dim = ambient_dim;
    d.degree = degree;
    d.vars = chart_variables(ambient_dim);
    for (const auto& [I, c] : coeffs) {
      if (static_cast<int>(I.size()) != degree)
        throw std::invalid_argument("multi-index length must equal the degree");
      if (!detail::strictly_increasing(I, ambient_dim))
        throw std::invalid_argument(
            "multi-indices must be strictly increasing within 1..dim");
      if (c.variables()) d.vars = pick_vars(ambient_dim, c);
      if (!c.is_zero()) d.coeffs.emplace(I, c);
    }
    return DifferentialForm(std::move(d));
  }

  /// Parse coefficients given as strings in chart coordinates x1..xd.
  static DifferentialForm parse(
      int ambient_dim, int degree,
      const std::map<MultiIndex, std::string>& coeffs) {
    VariableListPtr vars = chart_variables(ambient_dim);
    std::map<MultiIndex, Expression> parsed;
    for (const auto& [I, src] : coeffs)
      parsed.emplace(I, parse_expression(src, vars));
    return make(ambient_dim, degree, parsed);
  }

  int ambient_dim() const { return data_->ambient_dim; }
  int degree() const { return data_->degree; }
  const std::map<MultiIndex, Expression>& coefficients() const {
    return data_->coeffs;
  }
  const VariableListPtr& variables() const { return data_->vars; }
  bool is_zero() const { return data_->coeffs.empty(); }
  bool is_unit() const {
    if (data_->degree != 0 || data_->coeffs.size() != 1) return false;
    const Expression& c = data_->coeffs.begin()->second;
    return c.is_one();
  }

  Expression coefficient(const MultiIndex& I) const {
    auto it = data_->coeffs.find(I);
    if (it == data_->coeffs.end())
      return Expression::constant(0.0, data_->vars);
    return it->second;
  }

  /// Stable identity of the underlying immutable payload (used for caching).
  const void* identity() const { return data_.get(); }

private:
  explicit DifferentialForm(Data d)
      : data_(std::make_shared<const Data>(std::move(d))) {}

  DifferentialForm with(MultiIndex I, Expression c) const {
    Data d = *data_;
    if (c.is_zero())
      d.coeffs.erase(I);
    else
      d.coeffs.insert_or_assign(std::move(I), std::move(c));
    return DifferentialForm(std::move(d));
  }

  static void check_dims(int ambient_dim, int degree) {
    if (ambient_dim < 1) throw std::invalid_argument("ambient_dim must be >= 1");
    if (degree < 0 || degree > ambient_dim)
      throw std::invalid_argument("degree must lie in 0..ambient_dim");
  }

  static VariableListPtr pick_vars(int ambient_dim, const Expression& e) {
    if (e.variables()) {
      if (static_cast<int>(e.variables()->size()) != ambient_dim)
        throw std::invalid_argument(
            "coefficient variable list does not match ambient dimension");
      return e.variables();
    }
    return chart_variables(ambient_dim);
  }

  std::shared_ptr<const Data> data_;

  friend DifferentialForm operator+(const DifferentialForm&,
                                    const DifferentialForm&);
  friend DifferentialForm operator-(const DifferentialForm&,
                                    const DifferentialForm&);
  friend DifferentialForm scale(const DifferentialForm&, const Expression&);
  friend DifferentialForm wedge(const DifferentialForm&,
                                const DifferentialForm&);
  friend DifferentialForm exterior_derivative(const DifferentialForm&);
};

inline DifferentialForm operator+(const DifferentialForm& a,
                                  const DifferentialForm& b) {
  if (a.ambient_dim() != b.ambient_dim() || a.degree() != b.degree())
    throw std::invalid_argument("form sum requires matching dim and degree");
  std::map<MultiIndex, Expression> out = a.data_->coeffs;
  for (const auto& [I, c] : b.data_->coeffs) {
    auto it = out.find(I);
    if (it == out.end())
      out.emplace(I, c);
    else
      it->second = it->second + c;
  }
  return DifferentialForm::make(a.ambient_dim(), a.degree(), out);
}

inline DifferentialForm scale(const DifferentialForm& a, const Expression& s) {
  std::map<MultiIndex, Expression> out;
  for (const auto& [I, c] : a.data_->coeffs) out.emplace(I, s * c);
  return DifferentialForm::make(a.ambient_dim(), a.degree(), out);
}

inline DifferentialForm scale(const DifferentialForm& a, double s) {
  return scale(a, Expression::constant(s, a.variables()));
}

inline DifferentialForm operator-(const DifferentialForm& a,
                                  const DifferentialForm& b) {
  if (a.ambient_dim() != b.ambient_dim() || a.degree() != b.degree())
    throw std::invalid_argument(
        "form difference requires matching dim and degree");
  std::map<MultiIndex, Expression> out = a.data_->coeffs;
  for (const auto& [I, c] : b.data_->coeffs) {
    auto it = out.find(I);
    if (it == out.end())
      out.emplace(I, -c);
    else
      it->second = it->second - c;
  }
  return DifferentialForm::make(a.ambient_dim(), a.degree(), out);
}

inline DifferentialForm wedge(const DifferentialForm& a,
                              const DifferentialForm& b) {
  if (a.ambient_dim() != b.ambient_dim())
    throw std::invalid_argument("wedge requires matching ambient dimension");
  int degree = a.degree() + b.degree();
  if (degree > a.ambient_dim())
    return DifferentialForm::zero(a.ambient_dim(), a.ambient_dim());
  std::map<MultiIndex, Expression> out;
  for (const auto& [I, c] : a.data_->coeffs) {
    for (const auto& [K, d] : b.data_->coeffs) {
      auto merged = detail::merge_indices(I, K);
      if (!merged) continue;
      Expression term = c * d;
      if (merged->second < 0) term = -term;
      auto it = out.find(merged->first);
      if (it == out.end())
        out.emplace(merged->first, term);
      else
        it->second = it->second + term;
    }
  }
  return DifferentialForm::make(a.ambient_dim(), degree, out);
}

inline DifferentialForm exterior_derivative(const DifferentialForm& a) {
  int dim = a.ambient_dim();
  if (a.degree() == dim) return DifferentialForm::zero(dim, dim);
  std::map<MultiIndex, Expression> out;
  for (const auto& [I, c] : a.coefficients()) {
    for (int k = 1; k <= dim; ++k) {
      if (std::find(I.begin(), I.end(), k) != I.end()) continue;
      Expression dc = c.differentiate(k - 1);
      if (dc.is_zero()) continue;
      // insert dx_k in front: sign = (-1)^{#elements of I below k}
      auto merged = detail::merge_indices(MultiIndex{k}, I);
      Expression term = merged->second < 0 ? -dc : dc;
      auto it = out.find(merged->first);
      if (it == out.end())
        out.emplace(merged->first, term);
      else
        it->second = it->second + term;
    }
  }
  return DifferentialForm::make(dim, a.degree() + 1, out);
}

inline FormValue evaluate_form(const DifferentialForm& a,
                               std::span<const double> point) {
  if (point.size() != static_cast<std::size_t>(a.ambient_dim()))
    throw std::invalid_argument("point dimension does not match the form");
  FormValue out;
  for (const auto& [I, c] : a.coefficients()) out[I] = c.evaluate(point);
  return out;
}

/// Numeric wedge of two evaluated coefficient tables (same antisymmetric
/// combination as `wedge`, over doubles).
inline FormValue wedge_values(const FormValue& a, const FormValue& b) {
  FormValue out;
  for (const auto& [I, x] : a) {
    for (const auto& [K, y] : b) {
      auto merged = detail::merge_indices(I, K);
      if (!merged) continue;
      out[merged->first] += merged->second * x * y;
    }
  }
  for (auto it = out.begin(); it != out.end();)
    it = it->second == 0.0 ? out.erase(it) : std::next(it);
  return out;
}

// ---------------------------------------------------------------------------
// Least-squares decomposition of pairwise wedges in a 2-form basis.

struct WedgeCoefficients {
  std::vector<std::vector<std::vector<double>>> c;  // c[i][j][k], i<j
  double residual = 0.0;  // max abs residual over samples and pairs
  double closedness = 0.0;  // max |d w_i| coefficient over samples
  /// Bracket generators: one entry per k with the antisymmetrized
  /// coefficients c_ijk - c_jik = 2 c_ijk over pairs i<j.
  struct Generator {
    int k;
    std::vector<std::pair<std::pair<int, int>, double>> terms;  // ((i,j),coef)
  };
  std::vector<Generator> generators;
};

class FormsError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

namespace detail {

/// Solve the dense least squares min |A c - b| via normal equations with
/// partial-pivot Gaussian elimination. A is rows x cols, row-major.
inline std::vector<double> solve_normal_equations(
    const std::vector<double>& A, const std::vector<double>& b,
    std::size_t rows, std::size_t cols) {
  std::vector<double> M(cols * cols, 0.0), rhs(cols, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t i = 0; i < cols; ++i) {
      double ari = A[r * cols + i];
      if (ari == 0.0) continue;
      rhs[i] += ari * b[r];
      for (std::size_t j = 0; j < cols; ++j)
        M[i * cols + j] += ari * A[r * cols + j];
    }
  }
  // Gaussian elimination with partial pivoting
  std::vector<std::size_t> perm(cols);
  for (std::size_t i = 0; i < cols; ++i) perm[i] = i;
  for (std::size_t col = 0; col < cols; ++col) {
    std::size_t piv = col;
    double best = std::abs(M[col * cols + col]);
    for (std::size_t r = col + 1; r < cols; ++r) {
      double v = std::abs(M[r * cols + col]);
      if (v > best) {
        best = v;
        piv = r;
      }
    }
    if (best < 1e-13)
      throw FormsError("basis is numerically degenerate at the sample points");
    if (piv != col) {
      for (std::size_t j = 0; j < cols; ++j)
        std::swap(M[piv * cols + j], M[col * cols + j]);
      std::swap(rhs[piv], rhs[col]);
    }
    for (std::size_t r = col + 1; r < cols; ++r) {
      double f = M[r * cols + col] / M[col * cols + col];
      if (f == 0.0) continue;
      for (std::size_t j = col; j < cols; ++j)
        M[r * cols + j] -= f * M[col * cols + j];
      rhs[r] -= f * rhs[col];
    }
  }
  std::vector<double> c(cols, 0.0);
  for (std::size_t i = cols; i-- > 0;) {
    double s = rhs[i];
    for (std::size_t j = i + 1; j < cols; ++j) s -= M[i * cols + j] * c[j];
    c[i] = s / M[i * cols + i];
  }
  return c;
}

}  // namespace detail

/// Express every pairwise wedge w_i ^ w_j (i < j) of the closed 1-forms W in
/// the 2-form basis V by sampling on the box and solving least squares.
/// Throws FormsError if some w_i is not closed at the samples or the residual
/// exceeds tol.
inline WedgeCoefficients express_in_basis(
    const std::vector<DifferentialForm>& W,
    const std::vector<DifferentialForm>& V,
    const std::vector<std::pair<double, double>>& box, int sample_count,
    double tol, unsigned seed = 2024u) {
  if (W.empty() || V.empty())
    throw std::invalid_argument("express_in_basis requires nonempty W and V");
  int dim = W.front().ambient_dim();
  for (const auto& w : W)
    if (w.ambient_dim() != dim || w.degree() != 1)
      throw std::invalid_argument("W must consist of 1-forms on one chart");
  for (const auto& v : V)
    if (v.ambient_dim() != dim || v.degree() != 2)
      throw std::invalid_argument("V must consist of 2-forms on one chart");
  if (static_cast<int>(box.size()) != dim)
    throw std::invalid_argument("box must have one interval per coordinate");
  if (sample_count < static_cast<int>(V.size()))
    throw std::invalid_argument("sample_count must be >= |V|");

  std::mt19937 rng(seed);
  std::vector<std::vector<double>> samples;
  samples.reserve(static_cast<std::size_t>(sample_count));
  for (int s = 0; s < sample_count; ++s) {
    std::vector<double> p(static_cast<std::size_t>(dim));
    for (int c = 0; c < dim; ++c) {
      std::uniform_real_distribution<double> dist(box[static_cast<std::size_t>(c)].first,
                                                  box[static_cast<std::size_t>(c)].second);
      p[static_cast<std::size_t>(c)] = dist(rng);
    }
    samples.push_back(std::move(p));
  }

  // closedness of W at the samples
  double closed = 0.0;
  for (const auto& w : W) {
    DifferentialForm dw = exterior_derivative(w);
    for (const auto& p : samples)
      for (const auto& [I, v] : evaluate_form(dw, p))
        closed = std::max(closed, std::abs(v));
  }
  if (closed > tol)
    throw FormsError("the 1-forms are not closed (max |dw| = " +
                     std::to_string(closed) + ")");

  // all increasing pairs (a,b) a<b give rows; columns are V entries
  std::vector<MultiIndex> pairs;
  for (int a = 1; a <= dim; ++a)
    for (int b = a + 1; b <= dim; ++b) pairs.push_back(MultiIndex{a, b});

  const std::size_t rows = samples.size() * pairs.size();
  const std::size_t cols = V.size();
  std::vector<double> A(rows * cols, 0.0);
  for (std::size_t s = 0; s < samples.size(); ++s) {
    std::vector<FormValue> vvals;
    vvals.reserve(cols);
    for (const auto& v : V) vvals.push_back(evaluate_form(v, samples[s]));
    for (std::size_t pi = 0; pi < pairs.size(); ++pi)
      for (std::size_t k = 0; k < cols; ++k) {
        auto it = vvals[k].find(pairs[pi]);
        if (it != vvals[k].end())
          A[(s * pairs.size() + pi) * cols + k] = it->second;
      }
  }

  const std::size_t m = W.size();
  WedgeCoefficients out;
  out.closedness = closed;
  out.c.assign(m, std::vector<std::vector<double>>(
                      m, std::vector<double>(cols, 0.0)));
  double residual = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      DifferentialForm wij = wedge(W[i], W[j]);
      std::vector<double> b(rows, 0.0);
      for (std::size_t s = 0; s < samples.size(); ++s) {
        FormValue val = evaluate_form(wij, samples[s]);
        for (std::size_t pi = 0; pi < pairs.size(); ++pi) {
          auto it = val.find(pairs[pi]);
          if (it != val.end()) b[s * pairs.size() + pi] = it->second;
        }
      }
      std::vector<double> c = detail::solve_normal_equations(A, b, rows, cols);
      for (std::size_t r = 0; r < rows; ++r) {
        double pred = 0.0;
        for (std::size_t k = 0; k < cols; ++k) pred += A[r * cols + k] * c[k];
        residual = std::max(residual, std::abs(pred - b[r]));
      }
      out.c[i][j] = c;
      for (std::size_t k = 0; k < cols; ++k) out.c[j][i][k] = -c[k];
    }
  }
  out.residual = residual;
  if (residual > tol)
    throw FormsError("wedges do not lie in the span of V (residual = " +
                     std::to_string(residual) + ")");

  for (std::size_t k = 0; k < cols; ++k) {
    WedgeCoefficients::Generator g;
    g.k = static_cast<int>(k);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = i + 1; j < m; ++j) {
        double coef = out.c[i][j][k] - out.c[j][i][k];
        if (std::abs(coef) > 1e-12)
          g.terms.push_back({{static_cast<int>(i), static_cast<int>(j)}, coef});
      }
    out.generators.push_back(std::move(g));
  }
  return out;
}

}  // namespace mint
