#pragma once

// Labeled integrands over n-dimensional membranes and their iterated
// integrals: for cut counts k = (k_1..k_n) the domain is the product of
// ordered simplices {0 < t_i^1 < ... < t_i^{k_i} < 1}, and every slot
// j in prod_i {0..k_i+1} carries a form together with the set J of
// directions whose dt it consumes. Each interior pair (i, j_i) must be
// consumed exactly once across slots.
//
// The integral is the measure integral of the product of slot pullback
// coefficients; the slot listing in lexicographic index order is the
// reference orientation (see integrate_membrane_listed for the sign of any
// other listing order).

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <memory>
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

struct IntegrandSlot {
  DifferentialForm form;
  std::vector<int> directions;  // J: strictly increasing directions consumed
};

class LabeledIntegrand {
public:
  LabeledIntegrand() = default;

  LabeledIntegrand(int cube_dim, std::vector<int> cuts)
      : cube_dim_(cube_dim), cuts_(std::move(cuts)) {
    if (cube_dim < 1) throw std::invalid_argument("cube_dim must be >= 1");
    if (cuts_.size() != static_cast<std::size_t>(cube_dim))
      throw std::invalid_argument("need one cut count per direction");
    for (int k : cuts_)
      if (k < 0) throw std::invalid_argument("cut counts must be >= 0");
  }

  /// The unit integrand: no cuts, no slots (value 1 on any membrane).
  static LabeledIntegrand unit(int cube_dim) {
    return LabeledIntegrand(cube_dim, std::vector<int>(
                                          static_cast<std::size_t>(cube_dim), 0));
  }

  LabeledIntegrand& set_slot(std::vector<int> j, DifferentialForm form,
                             std::vector<int> J) {
    if (j.size() != static_cast<std::size_t>(cube_dim_))
      throw std::invalid_argument("slot index must have one entry per direction");
    for (int i = 0; i < cube_dim_; ++i)
      if (j[static_cast<std::size_t>(i)] < 0 ||
          j[static_cast<std::size_t>(i)] > cuts_[static_cast<std::size_t>(i)] + 1)
        throw std::invalid_argument("slot index out of range in direction " +
                                    std::to_string(i + 1));
    slots_.insert_or_assign(std::move(j),
                            IntegrandSlot{std::move(form), std::move(J)});
    return *this;
  }

  int cube_dim() const { return cube_dim_; }
  const std::vector<int>& cuts() const { return cuts_; }
  const std::map<std::vector<int>, IntegrandSlot>& slots() const {
    return slots_;
  }

  bool interior(int direction, int index) const {
    return index >= 1 && index <= cuts_[static_cast<std::size_t>(direction - 1)];
  }

  int total_cuts() const {
    int t = 0;
    for (int k : cuts_) t += k;
    return t;
  }

private:
  int cube_dim_ = 0;
  std::vector<int> cuts_;
  std::map<std::vector<int>, IntegrandSlot> slots_;
};

struct ValidationResult {
  bool ok = true;
  std::string message;
};

/// Structural validation: slot indices in range, J interior and consistent
/// with form degrees, and every interior pair (i, j_i) consumed exactly once.
/// A designated slot (slice integrands, see ComponentFunction) additionally
/// consumes the slice direction, so its form degree is |J| + 1.
inline ValidationResult validate_integrand(
    const LabeledIntegrand& I,
    const std::vector<int>* designated = nullptr) {
  const int n = I.cube_dim();
  const auto& cuts = I.cuts();
  std::map<std::pair<int, int>, int> consumed;
  int ambient = -1;
  for (const auto& [j, slot] : I.slots()) {
    const auto& J = slot.directions;
    for (std::size_t p = 0; p < J.size(); ++p) {
      if (J[p] < 1 || J[p] > n)
        return {false, "slot J contains direction " + std::to_string(J[p]) +
                           " outside 1.." + std::to_string(n)};
      if (p > 0 && J[p] <= J[p - 1])
        return {false, "slot J must be strictly increasing"};
      if (!I.interior(J[p], j[static_cast<std::size_t>(J[p] - 1)]))
        return {false,
                "slot at boundary of direction " + std::to_string(J[p]) +
                    " cannot consume dt in that direction"};
      ++consumed[{J[p], j[static_cast<std::size_t>(J[p] - 1)]}];
    }
    int expected = static_cast<int>(J.size()) +
                   (designated && j == *designated ? 1 : 0);
    if (!slot.form.is_zero() && slot.form.degree() != expected)
      return {false, "slot form degree " + std::to_string(slot.form.degree()) +
                         " does not match the consumed direction count " +
                         std::to_string(expected)};
    if (ambient < 0)
      ambient = slot.form.ambient_dim();
    else if (slot.form.ambient_dim() != ambient)
      return {false, "slot forms live on different ambient spaces"};
  }
  for (int i = 1; i <= n; ++i)
    for (int c = 1; c <= cuts[static_cast<std::size_t>(i - 1)]; ++c) {
      auto it = consumed.find({i, c});
      int count = it == consumed.end() ? 0 : it->second;
      if (count != 1)
        return {false, "interior pair (" + std::to_string(i) + "," +
                           std::to_string(c) + ") consumed " +
                           std::to_string(count) + " times (want exactly 1)"};
    }
  return {};
}

inline void require_valid(const LabeledIntegrand& I,
                          const std::vector<int>* designated = nullptr) {
  ValidationResult v = validate_integrand(I, designated);
  if (!v.ok) throw std::invalid_argument("invalid integrand: " + v.message);
}

inline ValidationResult validate_for_membrane(const LabeledIntegrand& I,
                                              const Membrane& g) {
  ValidationResult v = validate_integrand(I);
  if (!v.ok) return v;
  if (I.cube_dim() != g.cube_dim())
    return {false, "integrand cube dimension " + std::to_string(I.cube_dim()) +
                       " does not match membrane cube dimension " +
                       std::to_string(g.cube_dim())};
  for (const auto& [j, slot] : I.slots())
    if (slot.form.ambient_dim() != g.ambient_dim())
      return {false, "slot form ambient dimension does not match the membrane"};
  return {};
}

// ---------------------------------------------------------------------------
// Structured integration engine.

namespace detail {

struct TableKey {
  const void* form;
  MultiIndex J;
  std::vector<double> pattern;  // per direction: -1 = varies, else fixed coord

  bool operator<(const TableKey& o) const {
    if (form != o.form) return form < o.form;
    if (J != o.J) return J < o.J;
    return pattern < o.pattern;
  }
};

struct EngineOptions {
  int integration_dims = 0;            // directions 1..integration_dims vary
  bool has_fixed = false;              // slice mode: one extra fixed coord
  double fixed_coord = 0.0;            // value of direction integration_dims+1
  const std::vector<int>* designated = nullptr;  // slot consuming the fixed dir
  bool split_dir1 = false;             // glued product: split direction 1
  int lower_cuts = 0;                  // dir-1 cuts constrained to [0, 1/2]
};

class MembraneContext {
public:
  MembraneContext(const Membrane& g, QuadratureConfig cfg)
      : g_(&g), cfg_(cfg) {
    cfg_.validate();
    if (cfg_.rule == QuadratureRule::gauss)
      throw std::invalid_argument(
          "membrane integration uses grid rules (trapezoid or simpson)");
  }

  const Membrane& membrane() const { return *g_; }
  const QuadratureConfig& config() const { return cfg_; }

  const Grid1D& grid(int level, int direction) {
    auto key = std::make_pair(level, direction);
    auto it = grids_.find(key);
    if (it != grids_.end()) return it->second;
    int cells = cfg_.points_per_axis << level;
    Grid1D g = direction == 1
                   ? Grid1D::piecewise(g_->piece_cuts(), cells, cfg_.rule)
                   : Grid1D::uniform(cells, cfg_.rule);
    return grids_.emplace(key, std::move(g)).first->second;
  }

  /// Values of the pullback coefficient of `form` with multi-index J at all
  /// points given by `pattern` (entries -1 vary over that direction's grid,
  /// others are fixed). Row-major over the varying directions in ascending
  /// order. Cached per level.
  const std::vector<double>& table(int level, const DifferentialForm& form,
                                   const MultiIndex& J,
                                   const std::vector<double>& pattern) {
    TableKey key{form.identity(), J, pattern};
    auto& cache = tables_[level];
    auto it = cache.find(key);
    if (it != cache.end()) return *it->second;

    std::vector<int> deps;
    for (std::size_t i = 0; i < pattern.size(); ++i)
      if (pattern[i] == -1.0) deps.push_back(static_cast<int>(i) + 1);

    std::vector<const Grid1D*> dep_grids;
    std::size_t total = 1;
    for (int d : deps) {
      dep_grids.push_back(&grid(level, d));
      total *= dep_grids.back()->size();
    }

    auto out = std::make_shared<std::vector<double>>(total);
    PullbackEvaluator pb(*g_, form);
    std::vector<double> point(pattern.size());
    for (std::size_t i = 0; i < pattern.size(); ++i)
      point[i] = pattern[i] == -1.0 ? 0.0 : pattern[i];
    std::vector<std::size_t> idx(deps.size(), 0);
    for (std::size_t flat = 0; flat < total; ++flat) {
      int hint = -1;
      for (std::size_t d = 0; d < deps.size(); ++d) {
        point[static_cast<std::size_t>(deps[d] - 1)] =
            dep_grids[d]->coord(idx[d]);
        if (deps[d] == 1) hint = dep_grids[d]->piece(idx[d]);
      }
      (*out)[flat] = pb.coefficient(J, point, hint);
      for (std::size_t d = deps.size(); d-- > 0;) {
        if (++idx[d] < dep_grids[d]->size()) break;
        idx[d] = 0;
      }
    }
    return *cache.emplace(key, std::move(out)).first->second;
  }

private:
  const Membrane* g_;
  QuadratureConfig cfg_;
  std::map<std::pair<int, int>, Grid1D> grids_;
  std::map<int, std::map<TableKey, std::shared_ptr<std::vector<double>>>>
      tables_;
};

struct EngineSlot {
  std::vector<int> j;
  MultiIndex J_eff;
  std::vector<int> deps;              // varying directions, ascending
  const std::vector<double>* table = nullptr;
  std::vector<std::size_t> strides;   // per dep, row-major
};

/// Value of one refinement level of the structured integrator.
inline double engine_level_value(MembraneContext& ctx, int level,
                                 const LabeledIntegrand& I,
                                 const EngineOptions& opt) {
  const int n_int = opt.integration_dims;
  const auto& cuts = I.cuts();

  // --- prepare slots ------------------------------------------------------
  double const_factor = 1.0;
  std::vector<EngineSlot> slots;
  const std::size_t pattern_len =
      static_cast<std::size_t>(n_int) + (opt.has_fixed ? 1u : 0u);
  for (const auto& [j, slot] : I.slots()) {
    if (slot.form.is_zero()) return 0.0;
    bool designated = opt.designated && j == *opt.designated;
    if (slot.form.is_unit() && slot.directions.empty() && !designated)
      continue;
    EngineSlot es;
    es.j = j;
    es.J_eff = slot.directions;
    if (designated) es.J_eff.push_back(n_int + 1);
    std::vector<double> pattern(pattern_len);
    for (int i = 1; i <= n_int; ++i) {
      int ji = j[static_cast<std::size_t>(i - 1)];
      if (I.interior(i, ji)) {
        pattern[static_cast<std::size_t>(i - 1)] = -1.0;
        es.deps.push_back(i);
      } else {
        pattern[static_cast<std::size_t>(i - 1)] = ji == 0 ? 0.0 : 1.0;
      }
    }
    if (opt.has_fixed) pattern[static_cast<std::size_t>(n_int)] = opt.fixed_coord;
    if (es.deps.empty()) {
      const std::vector<double>& t =
          ctx.table(level, slot.form, es.J_eff, pattern);
      const_factor *= t[0];
      continue;
    }
    es.table = &ctx.table(level, slot.form, es.J_eff, pattern);
    es.strides.resize(es.deps.size());
    std::size_t stride = 1;
    for (std::size_t d = es.deps.size(); d-- > 0;) {
      es.strides[d] = stride;
      stride *= ctx.grid(level, es.deps[d]).size();
    }
    slots.push_back(std::move(es));
  }
  if (const_factor == 0.0) return 0.0;

  // --- choose the inner direction -----------------------------------------
  int inner = -1;
  for (int d = 1; d <= n_int; ++d) {
    int k = cuts[static_cast<std::size_t>(d - 1)];
    if (k <= 0) continue;
    if (inner == -1 || k >= cuts[static_cast<std::size_t>(inner - 1)]) inner = d;
  }
  if (inner == -1) {
    return const_factor;  // no integration variables at all
  }
  // a split direction 1 may serve as inner only via the carry chain; prefer
  // another direction when one has cuts
  if (opt.split_dir1 && inner == 1) {
    int alt = -1;
    for (int d = 2; d <= n_int; ++d) {
      int k = cuts[static_cast<std::size_t>(d - 1)];
      if (k <= 0) continue;
      if (alt == -1 || k >= cuts[static_cast<std::size_t>(alt - 1)]) alt = d;
    }
    if (alt != -1) inner = alt;
  }
  const bool inner_split = opt.split_dir1 && inner == 1;

  const Grid1D& inner_grid = ctx.grid(level, inner);
  const std::size_t Ninner = inner_grid.size();
  const int k_inner = cuts[static_cast<std::size_t>(inner - 1)];

  // classify slots
  struct RowSlot {
    const EngineSlot* slot;
    std::size_t inner_stride;
  };
  std::vector<std::vector<RowSlot>> rows(static_cast<std::size_t>(k_inner) + 1);
  std::vector<const EngineSlot*> outer_slots;
  for (const EngineSlot& es : slots) {
    auto pos = std::find(es.deps.begin(), es.deps.end(), inner);
    if (pos == es.deps.end()) {
      outer_slots.push_back(&es);
      continue;
    }
    std::size_t stride =
        es.strides[static_cast<std::size_t>(pos - es.deps.begin())];
    int row = es.j[static_cast<std::size_t>(inner - 1)];
    rows[static_cast<std::size_t>(row)].push_back(RowSlot{&es, stride});
  }

  // --- enumeration units for the outer directions --------------------------
  struct Unit {
    int dir;
    int first_cut, last_cut;       // global cut indices of this direction
    std::size_t node_lo, node_hi;  // inclusive node range
    const Grid1D* grid;
    const std::vector<double>* top;  // weights of the top variable
    std::vector<double> top_storage;
  };
  std::vector<Unit> units;
  std::pair<std::size_t, std::size_t> split_nodes{0, 0};
  if (opt.split_dir1) {
    // find the duplicated interface node pair at 1/2 on the dir-1 grid
    const Grid1D& g1 = ctx.grid(level, 1);
    bool found = false;
    for (std::size_t m = 0; m + 1 < g1.size(); ++m)
      if (std::abs(g1.coord(m) - 0.5) < 1e-12 &&
          std::abs(g1.coord(m + 1) - 0.5) < 1e-12) {
        split_nodes = {m, m + 1};
        found = true;
        break;
      }
    if (!found)
      throw std::logic_error(
          "split integration requires a piece boundary at 1/2");
  }
  for (int d = 1; d <= n_int; ++d) {
    if (d == inner) continue;
    int k = cuts[static_cast<std::size_t>(d - 1)];
    if (k == 0) continue;
    const Grid1D& g = ctx.grid(level, d);
    if (d == 1 && opt.split_dir1) {
      int kl = opt.lower_cuts, ku = k - opt.lower_cuts;
      if (kl > 0) {
        // top weights = prefix row of the left interface copy, restricting
        // the top lower-half variable to [0, 1/2]
        Unit u{1, 1, kl, 0, split_nodes.first, &g, nullptr,
               g.prefix_rows()[split_nodes.first]};
        units.push_back(std::move(u));
      }
      if (ku > 0) {
        // full weights restricted to nodes >= the right interface copy
        // integrate exactly over [1/2, 1]
        Unit u{1, kl + 1, k, split_nodes.second, g.size() - 1, &g,
               &g.weights(), {}};
        units.push_back(std::move(u));
      }
    } else {
      Unit u{d, 1, k, 0, g.size() - 1, &g, &g.weights(), {}};
      units.push_back(std::move(u));
    }
  }
  for (Unit& u : units)
    if (u.top == nullptr) u.top = &u.top_storage;

  // inner split bookkeeping for the carry chain
  int inner_lower_cuts = inner_split ? opt.lower_cuts : 0;

  // --- leaf evaluation ------------------------------------------------------
  // cur_node[d-1][c-1] = chosen node of variable (direction d, cut c)
  std::vector<std::vector<std::size_t>> cur_node(
      static_cast<std::size_t>(n_int));
  for (int d = 1; d <= n_int; ++d)
    cur_node[static_cast<std::size_t>(d - 1)].assign(
        static_cast<std::size_t>(cuts[static_cast<std::size_t>(d - 1)]), 0);

  std::vector<double> v(Ninner), u(Ninner);
  double acc = 0.0;

  auto slot_base = [&](const EngineSlot& es) {
    std::size_t base = 0;
    for (std::size_t d = 0; d < es.deps.size(); ++d) {
      int dir = es.deps[d];
      if (dir == inner) continue;
      int cut = es.j[static_cast<std::size_t>(dir - 1)];
      base += cur_node[static_cast<std::size_t>(dir - 1)]
                      [static_cast<std::size_t>(cut - 1)] *
              es.strides[d];
    }
    return base;
  };

  auto leaf = [&](double weight) {
    double pref = const_factor;
    for (const EngineSlot* es : outer_slots) {
      std::size_t base = slot_base(*es);
      pref *= (*es->table)[base];
    }
    if (pref == 0.0) {
      return;
    }
    std::fill(v.begin(), v.end(), 1.0);
    auto apply_row = [&](int c) {
      u = v;
      for (const RowSlot& rs : rows[static_cast<std::size_t>(c)]) {
        std::size_t base = slot_base(*rs.slot);
        const std::vector<double>& t = *rs.slot->table;
        for (std::size_t m = 0; m < Ninner; ++m)
          u[m] *= t[base + m * rs.inner_stride];
      }
    };
    if (!inner_split) {
      for (int c = 1; c <= k_inner; ++c) {
        apply_row(c);
        inner_grid.prefix_inplace(u);
        v.swap(u);
      }
      acc += weight * pref * v.back();
    } else {
      for (int c = 1; c <= inner_lower_cuts; ++c) {
        apply_row(c);
        inner_grid.prefix_inplace(u);
        v.swap(u);
      }
      double carry = v[split_nodes.first];
      std::fill(v.begin(), v.end(), carry);
      for (int c = inner_lower_cuts + 1; c <= k_inner; ++c) {
        apply_row(c);
        inner_grid.prefix_inplace(u);
        double at_split = u[split_nodes.second];
        for (std::size_t m = 0; m < Ninner; ++m) u[m] -= at_split;
        v.swap(u);
      }
      acc += weight * pref * v.back();
    }
  };

  // --- recursive enumeration over units -------------------------------------
  struct Rec {
    const std::vector<Unit>& units;
    std::vector<std::vector<std::size_t>>& cur_node;
    const std::function<void(double)>& leaf;

    void unit(std::size_t ui, double w) const {
      if (ui == units.size()) {
        leaf(w);
        return;
      }
      const Unit& U = units[ui];
      // top variable of the unit
      for (std::size_t m = U.node_lo;
           m <= U.node_hi && m < U.top->size(); ++m) {
        double wm = (*U.top)[m];
        if (wm == 0.0) continue;
        cur_node[static_cast<std::size_t>(U.dir - 1)]
                [static_cast<std::size_t>(U.last_cut - 1)] = m;
        lower(ui, U.last_cut - 1, m, w * wm);
      }
    }

    void lower(std::size_t ui, int cut, std::size_t above, double w) const {
      const Unit& U = units[ui];
      if (cut < U.first_cut) {
        unit(ui + 1, w);
        return;
      }
      const auto& rows = U.grid->prefix_rows();
      const auto& extent = U.grid->row_extent();
      const std::vector<double>& row = rows[above];
      std::size_t hi = std::min(U.node_hi + 1, extent[above]);
      for (std::size_t m = U.node_lo; m < hi; ++m) {
        double wm = row[m];
        if (wm == 0.0) continue;
        cur_node[static_cast<std::size_t>(U.dir - 1)]
                [static_cast<std::size_t>(cut - 1)] = m;
        lower(ui, cut - 1, m, w * wm);
      }
    }
  };

  std::function<void(double)> leaf_fn = leaf;
  Rec rec{units, cur_node, leaf_fn};
  rec.unit(0, 1.0);
  return acc;
}

/// Refinement loop shared by all membrane integrals.
inline IntegrationResult integrate_levels(MembraneContext& ctx,
                                          const LabeledIntegrand& I,
                                          const EngineOptions& opt,
                                          bool check_convergence = true) {
  const QuadratureConfig& cfg = ctx.config();
  int total = I.total_cuts();
  if (total > cfg.max_total_cuts)
    throw std::invalid_argument(
        "total cuts " + std::to_string(total) + " exceed max_total_cuts = " +
        std::to_string(cfg.max_total_cuts));
  IntegrationResult res;
  double prev = 0.0;
  for (int lvl = 0; lvl < cfg.refinement_levels; ++lvl) {
    double v = engine_level_value(ctx, lvl, I, opt);
    if (lvl > 0)
      res.error_estimate =
          std::abs(v - prev) / richardson_denominator(cfg.rule);
    prev = v;
    res.value = v;
  }
  if (check_convergence && cfg.refinement_levels > 1 &&
      res.error_estimate > cfg.rel_tol * (1.0 + std::abs(res.value)))
    throw QuadratureError(
        "membrane integral did not converge: estimate " +
        std::to_string(res.error_estimate));
  return res;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Public integration entry points.

inline IntegrationResult integrate_membrane(const Membrane& g,
                                            const LabeledIntegrand& I,
                                            const QuadratureConfig& cfg) {
  ValidationResult v = validate_for_membrane(I, g);
  if (!v.ok) throw std::invalid_argument("invalid integrand: " + v.message);
  detail::MembraneContext ctx(g, cfg);
  detail::EngineOptions opt;
  opt.integration_dims = g.cube_dim();
  return detail::integrate_levels(ctx, I, opt);
}

/// Parity of a slot listing relative to the lexicographic reference listing:
/// the sign of the rearrangement of the dt factors.
inline int listing_sign(const LabeledIntegrand& I,
                        const std::vector<std::vector<int>>& listing) {
  std::vector<std::pair<int, int>> ref;  // (direction, cut) in lex slot order
  for (const auto& [j, slot] : I.slots())
    for (int i : slot.directions)
      ref.push_back({i, j[static_cast<std::size_t>(i - 1)]});
  std::vector<std::pair<int, int>> given;
  std::size_t seen = 0;
  for (const auto& j : listing) {
    auto it = I.slots().find(j);
    if (it == I.slots().end())
      throw std::invalid_argument("listing names a slot that does not exist");
    ++seen;
    for (int i : it->second.directions)
      given.push_back({i, j[static_cast<std::size_t>(i - 1)]});
  }
  if (seen != I.slots().size() || given.size() != ref.size())
    throw std::invalid_argument("listing must name every slot exactly once");
  // permutation parity by transposition count
  std::vector<std::size_t> perm(given.size());
  std::vector<bool> used(ref.size(), false);
  for (std::size_t a = 0; a < given.size(); ++a) {
    bool ok = false;
    for (std::size_t b = 0; b < ref.size(); ++b) {
      if (used[b] || ref[b] != given[a]) continue;
      perm[a] = b;
      used[b] = true;
      ok = true;
      break;
    }
    if (!ok) throw std::invalid_argument("listing dt factors do not match");
  }
  int sign = 1;
  std::vector<bool> visited(perm.size(), false);
  for (std::size_t a = 0; a < perm.size(); ++a) {
    if (visited[a]) continue;
    std::size_t len = 0, b = a;
    while (!visited[b]) {
      visited[b] = true;
      b = perm[b];
      ++len;
    }
    if (len % 2 == 0) sign = -sign;
  }
  return sign;
}

/// Integral with an explicit slot listing order: the value of the reference
/// (lexicographic) listing times the parity of the rearrangement.
inline IntegrationResult integrate_membrane_listed(
    const Membrane& g, const LabeledIntegrand& I,
    const std::vector<std::vector<int>>& listing, const QuadratureConfig& cfg) {
  int sign = listing_sign(I, listing);
  IntegrationResult res = integrate_membrane(g, I, cfg);
  res.value *= sign;
  return res;
}

// ---------------------------------------------------------------------------
// Combination under shuffles.

namespace detail {

/// Position maps: out[i][s] = combined index of source index s in direction
/// i+1, or -1 if the source index may not carry a non-unit slot there.
using PositionMaps = std::vector<std::vector<int>>;

inline LabeledIntegrand combine_with_maps(const LabeledIntegrand& A,
                                          const LabeledIntegrand& B,
                                          const std::vector<int>& cuts,
                                          const PositionMaps& posA,
                                          const PositionMaps& posB,
                                          const char* what) {
  const int n = static_cast<int>(cuts.size());
  LabeledIntegrand out(n, cuts);
  auto place = [&](const LabeledIntegrand& src, const PositionMaps& pos) {
    for (const auto& [j, slot] : src.slots()) {
      std::vector<int> jj(static_cast<std::size_t>(n));
      bool forbidden = false;
      for (int i = 0; i < n && !forbidden; ++i) {
        int mapped = pos[static_cast<std::size_t>(i)]
                        [static_cast<std::size_t>(j[static_cast<std::size_t>(i)])];
        if (mapped < 0)
          forbidden = true;
        else
          jj[static_cast<std::size_t>(i)] = mapped;
      }
      if (forbidden) {
        if (slot.form.is_unit() && slot.directions.empty()) continue;
        throw std::invalid_argument(
            std::string(what) +
            ": a non-unit slot sits at a position this family does not "
            "support");
      }
      if (slot.form.is_unit() && slot.directions.empty()) continue;
      auto existing = out.slots().find(jj);
      if (existing == out.slots().end()) {
        std::vector<int> J = slot.directions;
        // remap consumed directions: same direction, new cut index is
        // already encoded by jj
        out.set_slot(jj, slot.form, J);
      } else {
        // corner collision: both must be pure decorations; wedge them
        if (!existing->second.directions.empty() || !slot.directions.empty())
          throw std::logic_error(
              std::string(what) + ": impossible interior slot collision");
        DifferentialForm merged = wedge(existing->second.form, slot.form);
        out.set_slot(jj, merged, {});
      }
    }
  };
  place(A, posA);
  place(B, posB);
  return out;
}

inline PositionMaps interior_maps_from_arrangements(
    const LabeledIntegrand& A, const LabeledIntegrand& B,
    const std::vector<Arrangement>& dirs, bool first_block, bool barred,
    const std::vector<int>& combined_cuts, const char* what) {
  const int n = static_cast<int>(combined_cuts.size());
  if (dirs.size() != combined_cuts.size())
    throw std::invalid_argument(std::string(what) +
                                ": shuffle direction count mismatch");
  const auto& ka = A.cuts();
  const auto& kb = B.cuts();
  PositionMaps out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    int kA = ka[static_cast<std::size_t>(i)];
    int kB = kb[static_cast<std::size_t>(i)];
    const Arrangement& arr = dirs[static_cast<std::size_t>(i)];
    if (static_cast<int>(arr.size()) != kA + kB)
      throw std::invalid_argument(std::string(what) +
                                  ": arrangement length mismatch");
    int own = first_block ? kA : kB;
    std::vector<int>& m = out[static_cast<std::size_t>(i)];
    m.assign(static_cast<std::size_t>(own) + 2, -1);
    // boundaries
    m[0] = barred ? 0 : -1;
    m[static_cast<std::size_t>(own) + 1] =
        barred ? combined_cuts[static_cast<std::size_t>(i)] + 1 : -1;
    for (int pos = 0; pos < kA + kB; ++pos) {
      int label = arr[static_cast<std::size_t>(pos)];
      if (first_block && label <= kA)
        m[static_cast<std::size_t>(label)] = pos + 1;
      else if (!first_block && label > kA)
        m[static_cast<std::size_t>(label - kA)] = pos + 1;
    }
  }
  return out;
}

}  // namespace detail

/// Combine two integrands along a product shuffle. For barred shuffles the
/// boundary slots come along (corner decorations wedge when they land on the
/// same combined corner); for unbarred shuffles every non-unit slot must be
/// interior.
inline LabeledIntegrand shuffle_combine(const LabeledIntegrand& A,
                                        const LabeledIntegrand& B,
                                        const Shuffle& rho) {
  if (A.cube_dim() != B.cube_dim())
    throw std::invalid_argument("integrand cube dimensions differ");
  const int n = A.cube_dim();
  if (static_cast<int>(rho.dirs.size()) != n)
    throw std::invalid_argument("shuffle has wrong number of directions");
  std::vector<int> cuts(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    cuts[static_cast<std::size_t>(i)] =
        A.cuts()[static_cast<std::size_t>(i)] + B.cuts()[static_cast<std::size_t>(i)];
  detail::PositionMaps posA = detail::interior_maps_from_arrangements(
      A, B, rho.dirs, true, rho.barred, cuts, "shuffle_combine");
  detail::PositionMaps posB = detail::interior_maps_from_arrangements(
      A, B, rho.dirs, false, rho.barred, cuts, "shuffle_combine");
  return detail::combine_with_maps(A, B, cuts, posA, posB, "shuffle_combine");
}

/// Combine along a gluing shuffle: direction 1 concatenates (A's cuts below
/// B's), interface decorations (A's direction-1 end, B's direction-1 start)
/// must be unit, outer boundaries survive; directions >= 2 are barred.
inline LabeledIntegrand glued_combine(const LabeledIntegrand& A,
                                      const LabeledIntegrand& B,
                                      const Shuffle& rho) {
  if (A.cube_dim() != B.cube_dim())
    throw std::invalid_argument("integrand cube dimensions differ");
  const int n = A.cube_dim();
  std::vector<int> cuts(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    cuts[static_cast<std::size_t>(i)] =
        A.cuts()[static_cast<std::size_t>(i)] + B.cuts()[static_cast<std::size_t>(i)];
  detail::PositionMaps posA = detail::interior_maps_from_arrangements(
      A, B, rho.dirs, true, true, cuts, "glued_combine");
  detail::PositionMaps posB = detail::interior_maps_from_arrangements(
      A, B, rho.dirs, false, true, cuts, "glued_combine");
  // direction 1 overrides: interface ends are forbidden (must be unit)
  int kA = A.cuts()[0], kB = B.cuts()[0];
  posA[0][static_cast<std::size_t>(kA) + 1] = -1;
  posB[0][0] = -1;
  for (int s = 1; s <= kA; ++s) posA[0][static_cast<std::size_t>(s)] = s;
  for (int s = 1; s <= kB; ++s) posB[0][static_cast<std::size_t>(s)] = kA + s;
  posA[0][0] = 0;
  posB[0][static_cast<std::size_t>(kB) + 1] = kA + kB + 1;
  return detail::combine_with_maps(A, B, cuts, posA, posB, "glued_combine");
}

/// Combine for the transport family: the result lives on an n-cube where
/// n = A.cube_dim() + 1. A sits at direction-n row 1 and each of the `copies`
/// copies of B at row 1+b; the designated slots consume direction n.
inline LabeledIntegrand transport_combine(const LabeledIntegrand& A,
                                          const std::vector<int>& a_designated,
                                          const LabeledIntegrand& B,
                                          const std::vector<int>& b_designated,
                                          int copies, const Shuffle& rho) {
  if (A.cube_dim() != B.cube_dim())
    throw std::invalid_argument("integrand cube dimensions differ");
  const int n1 = A.cube_dim();    // slice dimension
  const int n = n1 + 1;
  if (static_cast<int>(rho.dirs.size()) != n)
    throw std::invalid_argument("transport shuffle has wrong direction count");
  if (A.slots().find(a_designated) == A.slots().end() ||
      B.slots().find(b_designated) == B.slots().end())
    throw std::invalid_argument("designated slot does not exist");

  std::vector<int> cuts(static_cast<std::size_t>(n));
  for (int i = 0; i < n1; ++i)
    cuts[static_cast<std::size_t>(i)] =
        A.cuts()[static_cast<std::size_t>(i)] +
        copies * B.cuts()[static_cast<std::size_t>(i)];
  cuts[static_cast<std::size_t>(n1)] = copies + 1;

  LabeledIntegrand out(n, cuts);

  // position maps per direction i < n from the multi-argument arrangement:
  // block 0 = A, block b = copy b of B
  auto place = [&](const LabeledIntegrand& src, int block,
                   const std::vector<int>& designated, int row) {
    const auto& ka = A.cuts();
    const auto& kb = B.cuts();
    for (const auto& [j, slot] : src.slots()) {
      if (slot.form.is_unit() && slot.directions.empty() &&
          !(j == designated))
        continue;
      std::vector<int> jj(static_cast<std::size_t>(n));
      for (int i = 0; i < n1; ++i) {
        int ji = j[static_cast<std::size_t>(i)];
        int kS = block == 0 ? ka[static_cast<std::size_t>(i)]
                            : kb[static_cast<std::size_t>(i)];
        if (ji == 0) {
          jj[static_cast<std::size_t>(i)] = 0;
        } else if (ji == kS + 1) {
          jj[static_cast<std::size_t>(i)] = cuts[static_cast<std::size_t>(i)] + 1;
        } else {
          // interior: find the position of this block label
          int label = block == 0
                          ? ji
                          : ka[static_cast<std::size_t>(i)] +
                                (block - 1) * kb[static_cast<std::size_t>(i)] + ji;
          const Arrangement& arr = rho.dirs[static_cast<std::size_t>(i)];
          int pos = -1;
          for (std::size_t p = 0; p < arr.size(); ++p)
            if (arr[p] == label) {
              pos = static_cast<int>(p) + 1;
              break;
            }
          if (pos < 0)
            throw std::invalid_argument("arrangement does not cover a label");
          jj[static_cast<std::size_t>(i)] = pos;
        }
      }
      jj[static_cast<std::size_t>(n1)] = row;
      std::vector<int> J = slot.directions;
      if (j == designated) {
        J.push_back(n);  // n is largest, so J stays increasing
      }
      auto existing = out.slots().find(jj);
      if (existing == out.slots().end()) {
        out.set_slot(jj, slot.form, J);
      } else {
        if (!existing->second.directions.empty() || !J.empty())
          throw std::logic_error("transport combine: interior slot collision");
        out.set_slot(jj, wedge(existing->second.form, slot.form), {});
      }
    }
  };
  place(A, 0, a_designated, 1);
  for (int b = 1; b <= copies; ++b) place(B, b, b_designated, 1 + b);
  return out;
}

// ---------------------------------------------------------------------------
// Identity checks.

inline CheckReport check_membrane_shuffle(const Membrane& g,
                                          const LabeledIntegrand& A,
                                          const LabeledIntegrand& B,
                                          bool barred,
                                          const QuadratureConfig& cfg,
                                          double tolerance,
                                          const std::string& name =
                                              "membrane-shuffle") {
  for (const LabeledIntegrand* I : {&A, &B}) {
    ValidationResult v = validate_for_membrane(*I, g);
    if (!v.ok) throw std::invalid_argument("invalid integrand: " + v.message);
  }
  detail::MembraneContext ctx(g, cfg);
  detail::EngineOptions opt;
  opt.integration_dims = g.cube_dim();
  double lhs = detail::integrate_levels(ctx, A, opt).value *
               detail::integrate_levels(ctx, B, opt).value;
  double rhs = 0.0;
  std::size_t terms = 0;
  for (const Shuffle& rho : enumerate_product(A.cuts(), B.cuts(), barred)) {
    LabeledIntegrand combined = shuffle_combine(A, B, rho);
    require_valid(combined);
    rhs += detail::integrate_levels(ctx, combined, opt).value;
    ++terms;
  }
  return CheckReport::make(name, barred ? "membrane-shuffle-barred"
                                        : "membrane-shuffle",
                           lhs, rhs, tolerance,
                           std::to_string(terms) + " shuffle terms");
}

inline CheckReport check_glued_product(const Membrane& g1, const Membrane& g2,
                                       const LabeledIntegrand& A,
                                       const LabeledIntegrand& B,
                                       const QuadratureConfig& cfg,
                                       double tolerance,
                                       const std::string& name =
                                           "glued-product",
                                       double face_tol = 1e-9) {
  for (const auto& [I, g] : {std::make_pair(&A, &g1), std::make_pair(&B, &g2)}) {
    ValidationResult v = validate_for_membrane(*I, *g);
    if (!v.ok) throw std::invalid_argument("invalid integrand: " + v.message);
  }
  Membrane glued = glue_membranes(g1, g2, face_tol);

  {
    detail::MembraneContext c1(g1, cfg);
    detail::MembraneContext c2(g2, cfg);
    detail::EngineOptions o;
    o.integration_dims = g1.cube_dim();
    double lhs = detail::integrate_levels(c1, A, o).value *
                 detail::integrate_levels(c2, B, o).value;

    detail::MembraneContext ctx(glued, cfg);
    detail::EngineOptions opt;
    opt.integration_dims = glued.cube_dim();
    opt.split_dir1 = true;
    opt.lower_cuts = A.cuts()[0];
    double rhs = 0.0;
    std::size_t terms = 0;
    for (const Shuffle& rho : enumerate_sh1(A.cuts(), B.cuts())) {
      LabeledIntegrand combined = glued_combine(A, B, rho);
      require_valid(combined);
      rhs += detail::integrate_levels(ctx, combined, opt).value;
      ++terms;
    }
    return CheckReport::make(name, "glued-product", lhs, rhs, tolerance,
                             std::to_string(terms) + " gluing terms");
  }
}

// ---------------------------------------------------------------------------
// Slice components and higher transport.

/// The function a(s): the integral of the (n-1)-dimensional integrand over
/// the slice t_n = s, with the designated slot consuming dt_n as well.
class ComponentFunction {
public:
  ComponentFunction(const Membrane& g, LabeledIntegrand I,
                    std::vector<int> designated, const QuadratureConfig& cfg)
      : ctx_(std::make_shared<detail::MembraneContext>(g, cfg)),
        integrand_(std::move(I)),
        designated_(std::move(designated)) {
    if (integrand_.cube_dim() != g.cube_dim() - 1)
      throw std::invalid_argument(
          "slice integrand must have cube dimension n-1");
    if (integrand_.slots().find(designated_) == integrand_.slots().end())
      throw std::invalid_argument("designated slot does not exist");
    require_valid(integrand_, &designated_);
    for (const auto& [j, slot] : integrand_.slots())
      if (slot.form.ambient_dim() != g.ambient_dim())
        throw std::invalid_argument(
            "slice integrand forms do not match the membrane's ambient space");
  }

  double operator()(double s) const {
    detail::EngineOptions opt;
    opt.integration_dims = integrand_.cube_dim();
    opt.has_fixed = true;
    opt.fixed_coord = s;
    opt.designated = &designated_;
    return detail::integrate_levels(*ctx_, integrand_, opt).value;
  }

private:
  std::shared_ptr<detail::MembraneContext> ctx_;
  LabeledIntegrand integrand_;
  std::vector<int> designated_;
};

inline ComponentFunction extract_component(const Membrane& g,
                                           const LabeledIntegrand& I,
                                           const std::vector<int>& designated,
                                           const QuadratureConfig& cfg) {
  return ComponentFunction(g, I, designated, cfg);
}

struct HigherTransportResult {
  double lhs = 0.0;  // iterated path integral of the slice components
  double rhs = 0.0;  // shuffle-family sum of membrane integrals
  CheckReport report;
};

/// Transport identity: the iterated integral (in direction n) of the slice
/// components a_W(s_1) a_T(s_2) ... a_T(s_{1+copies}) equals the sum over the
/// transport shuffle family of the combined membrane integrals.
inline HigherTransportResult higher_transport(
    const Membrane& g, const LabeledIntegrand& W,
    const std::vector<int>& w_designated, const LabeledIntegrand& T,
    const std::vector<int>& t_designated, int copies,
    const QuadratureConfig& cfg, double tolerance,
    const std::string& name = "higher-transport") {
  if (copies < 1) throw std::invalid_argument("copies must be >= 1");
  const int n = g.cube_dim();
  if (W.cube_dim() != n - 1 || T.cube_dim() != n - 1)
    throw std::invalid_argument("W and T must be (n-1)-dimensional integrands");

  // LHS: iterated integral over 0 < s_1 < ... < s_{copies+1} < 1
  ComponentFunction aW = extract_component(g, W, w_designated, cfg);
  ComponentFunction aT = extract_component(g, T, t_designated, cfg);
  double lhs = 0.0;
  {
    double prev = 0.0;
    double estimate = std::numeric_limits<double>::quiet_NaN();
    for (int lvl = 0; lvl < cfg.refinement_levels; ++lvl) {
      Grid1D grid = Grid1D::uniform(cfg.points_per_axis << lvl, cfg.rule);
      const std::size_t N = grid.size();
      std::vector<double> fW(N), fT(N);
      for (std::size_t m = 0; m < N; ++m) {
        fW[m] = aW(grid.coord(m));
        fT[m] = aT(grid.coord(m));
      }
      std::vector<std::vector<double>> factors{fW};
      for (int c = 0; c < copies; ++c) factors.push_back(fT);
      double v = iterated_chain(grid, factors);
      if (lvl > 0)
        estimate = std::abs(v - prev) /
                   detail::richardson_denominator(cfg.rule);
      prev = v;
      lhs = v;
    }
    (void)estimate;
  }

  // RHS: sum over the transport family
  detail::MembraneContext ctx(g, cfg);
  detail::EngineOptions opt;
  opt.integration_dims = n;
  double rhs = 0.0;
  std::size_t terms = 0;
  for (const Shuffle& rho : enumerate_shn(W.cuts(), T.cuts(), copies)) {
    LabeledIntegrand combined =
        transport_combine(W, w_designated, T, t_designated, copies, rho);
    require_valid(combined);
    rhs += detail::integrate_levels(ctx, combined, opt).value;
    ++terms;
  }

  HigherTransportResult out;
  out.lhs = lhs;
  out.rhs = rhs;
  out.report = CheckReport::make(name, "higher-transport", lhs, rhs, tolerance,
                                 std::to_string(terms) + " family terms");
  return out;
}

}  // namespace mint
