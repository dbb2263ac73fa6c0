#include "expert_spread/transforms.hpp"

#include <algorithm>
#include <climits>
#include <functional>
#include <sstream>

namespace expert_spread {

namespace {

Grid merge_lines(const Grid& g, Index k) {
  const Index n = g.rows();
  Grid out(n - 1, g.cols());
  out.topRows(k) = g.topRows(k);
  out.row(k) = g.row(k) + g.row(k + 1);
  out.bottomRows(n - k - 2) = g.bottomRows(n - k - 2);
  return out;
}

Configuration merge_columns_unchecked(const Configuration& cfg, Index k) {
  return Configuration(cfg.delta(), merge_lines(cfg.a_mass(), k), merge_lines(cfg.ac_mass(), k));
}

Configuration merge_rows_unchecked(const Configuration& cfg, Index j) {
  return transpose(merge_columns_unchecked(transpose(cfg), j));
}

/// Condition for merging lines k and k+1 along the first grid index.
bool lines_mergeable(const Grid& mass, const Mask& b, Index k) {
  for (Index j = 0; j < mass.cols(); ++j) {
    const bool b0 = b(k, j);
    const bool b1 = b(k + 1, j);
    if (b0 && b1) continue;
    if ((b0 && !mass(k, j).is_zero()) || (b1 && !mass(k + 1, j).is_zero())) return false;
  }
  return true;
}

bool rows_mergeable(const Configuration& cfg, const Stats& st, Index j) {
  const Grid mass = (cfg.a_mass() + cfg.ac_mass()).transpose();
  const Mask b = st.b_mask.transpose();
  return lines_mergeable(mass, b, j);
}

bool corners_kept(const Stats& before, const Stats& after) {
  return !before.both_corners_positive() || after.both_corners_positive();
}

void require_below_half(const Configuration& cfg, const char* op) {
  if (!cfg.delta().below_half()) {
    throw ConfigError(std::string(op) + " requires delta < 1/2");
  }
}

void require_sorted(const Configuration& cfg, const char* op) {
  if (!is_sorted(cfg)) throw ConfigError(std::string(op) + " requires a normalized configuration");
}

std::string cell_name(Index k, Index j) {
  return "(" + std::to_string(k + 1) + "," + std::to_string(j + 1) + ")";
}

template <class Step>
Configuration fixpoint(const Configuration& start, const char* what, Step step) {
  const long cap = iteration_cap(start);
  Configuration s = start;
  for (long it = 0; it < cap; ++it) {
    Configuration next = step(s);
    if (next == s) return s;
    s = std::move(next);
  }
  throw TransformError(std::string(what) + " exceeded its iteration cap");
}

Configuration phi(const Configuration& cfg) { return transpose(complement_reflect(cfg)); }

}  // namespace

long iteration_cap(const Configuration& cfg) {
  const long d = static_cast<long>(cfg.cols() + cfg.rows());
  return 16 * d * d;
}

TransformTrace make_trace(std::string name, std::vector<Index> params, const Configuration& before,
                          const Configuration& after) {
  const Stats sb = compute_stats(before);
  const Stats sa = compute_stats(after);
  TransformTrace t;
  t.name = std::move(name);
  t.params = std::move(params);
  t.prob_B_before = sb.prob_B;
  t.prob_B_after = sa.prob_B;
  t.dims_before = {before.cols(), before.rows()};
  t.dims_after = {after.cols(), after.rows()};
  t.contract_prob_b = sa.prob_B >= sb.prob_B;
  t.contract_dims = after.cols() <= before.cols() && after.rows() <= before.rows();
  t.contract_corners = corners_kept(sb, sa);
  return t;
}

ContradictionError::ContradictionError(std::string label, std::vector<TransformTrace> trace)
    : std::logic_error("unreachable reduction branch " + label + " reached after " +
                       std::to_string(trace.size()) + " steps"),
      label_(std::move(label)),
      trace_(std::move(trace)) {}

Configuration transpose(const Configuration& cfg) {
  return Configuration(cfg.delta(), cfg.a_mass().transpose(), cfg.ac_mass().transpose());
}

Configuration complement_reflect(const Configuration& cfg) {
  return Configuration(cfg.delta(), cfg.ac_mass().reverse(), cfg.a_mass().reverse());
}

bool columns_mergeable(const Configuration& cfg, const Stats& st, Index k) {
  return lines_mergeable(cfg.a_mass() + cfg.ac_mass(), st.b_mask, k);
}

bool has_mergeable_pair(const Configuration& cfg) {
  const Stats st = compute_stats(cfg);
  for (Index k = 0; k + 1 < cfg.cols(); ++k) {
    if (columns_mergeable(cfg, st, k)) return true;
  }
  for (Index j = 0; j + 1 < cfg.rows(); ++j) {
    if (rows_mergeable(cfg, st, j)) return true;
  }
  return false;
}

Configuration merge_columns(const Configuration& cfg, Index k) {
  if (k < 0 || k + 1 >= cfg.cols()) throw ConfigError("merge_columns: column index out of range");
  require_sorted(cfg, "merge_columns");
  if (!columns_mergeable(cfg, compute_stats(cfg), k)) return cfg;
  return merge_columns_unchecked(cfg, k);
}

Configuration merge_rows(const Configuration& cfg, Index j) {
  if (j < 0 || j + 1 >= cfg.rows()) throw ConfigError("merge_rows: row index out of range");
  return transpose(merge_columns(transpose(cfg), j));
}

Configuration zigzag_normalize(const Configuration& cfg) {
  return fixpoint(normalize(cfg), "zigzag_normalize", [](const Configuration& s) {
    const Stats st = compute_stats(s);
    for (Index k = 0; k + 1 < s.cols(); ++k) {
      if (columns_mergeable(s, st, k)) return merge_columns_unchecked(s, k);
    }
    for (Index j = 0; j + 1 < s.rows(); ++j) {
      if (rows_mergeable(s, st, j)) return merge_rows_unchecked(s, j);
    }
    return s;
  });
}

namespace {

/// Merges the line holding zero-mass B cell (k, i) with the line holding its
/// neighbour (k + dk, i + di) when that neighbour lies outside B. Returns
/// nullopt unless the merge keeps P(B) and corner positivity.
std::optional<Configuration> absorb_toward(const Configuration& cfg, const Stats& st, Index k, Index i,
                                           Index dk, Index di) {
  const Index nk = k + dk;
  const Index ni = i + di;
  if (nk < 0 || nk >= cfg.cols() || ni < 0 || ni >= cfg.rows()) return std::nullopt;
  if (!st.b_mask(k, i) || !cfg.mass(k, i).is_zero() || st.b_mask(nk, ni)) return std::nullopt;
  Configuration merged = dk != 0 ? merge_columns_unchecked(cfg, std::min(k, nk))
                                 : merge_rows_unchecked(cfg, std::min(i, ni));
  const Stats after = compute_stats(merged);
  if (after.prob_B < st.prob_B || !corners_kept(st, after)) return std::nullopt;
  return merged;
}

}  // namespace

Configuration absorb_empty_border_cell(const Configuration& cfg, Index k, Index i) {
  if (k < 0 || k >= cfg.cols() || i < 0 || i >= cfg.rows()) return cfg;
  auto merged = absorb_toward(cfg, compute_stats(cfg), k, i, 1, 0);
  return merged ? *merged : cfg;
}

Configuration ensure_positive_border(const Configuration& cfg) {
  static constexpr Index kDirs[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
  return fixpoint(zigzag_normalize(cfg), "ensure_positive_border", [](const Configuration& s) {
    const Stats st = compute_stats(s);
    for (Index k = 0; k < s.cols(); ++k) {
      for (Index i = 0; i < s.rows(); ++i) {
        for (const auto& d : kDirs) {
          if (auto merged = absorb_toward(s, st, k, i, d[0], d[1])) return zigzag_normalize(*merged);
        }
      }
    }
    return s;
  });
}

namespace {

Configuration purify_minus(const Configuration& cfg, const Stats& st, Index k, Index j) {
  const Rational& a = cfg.a_mass()(k, j);
  const Rational& ac = cfg.ac_mass()(k, j);
  if (a.is_zero() || ac.is_zero()) return cfg;
  const Rational& delta = cfg.delta().value();
  const Rational& pk = st.p(k);
  const Rational& qj = st.q(j);
  Grid ga = cfg.a_mass();
  Grid gac = cfg.ac_mass();
  if (pk >= qj) {
    const Rational x_cap = k + 1 < cfg.cols() ? min(st.x(k + 1), delta) : delta;
    const Rational y_cap = j + 1 < cfg.rows() ? min(st.y(j + 1), Rational(1)) : Rational(1);
    const Rational alpha = min(min(pk * (x_cap - st.x(k)), qj * (y_cap - st.y(j))), ac);
    ga(k, j) += alpha;
    gac(k, j) -= alpha;
  } else {
    Rational alpha = min(pk * (st.x(k) - (k > 0 ? st.x(k - 1) : Rational(0))), a);
    if (j > 0) alpha = min(alpha, qj * (st.y(j) - st.y(j - 1)));
    if (k > 0) alpha = min(alpha, qj * (st.y(j) - cfg.delta().threshold() - st.x(k - 1)));
    ga(k, j) -= alpha;
    gac(k, j) += alpha;
  }
  Configuration out(cfg.delta(), std::move(ga), std::move(gac));
  const Stats after = compute_stats(out);
  for (Index c = 0; c < cfg.cols(); ++c) {
    for (Index r = 0; r < cfg.rows(); ++r) {
      if (st.b_mask(c, r) && !cfg.mass(c, r).is_zero() && !after.b_mask(c, r)) {
        throw TransformError("purify_border_cell removed cell " + cell_name(c, r) + " from B");
      }
    }
  }
  if (after.prob_B < st.prob_B) throw TransformError("purify_border_cell decreased P(B)");
  return out;
}

bool contains(const std::vector<CellIndex>& v, CellIndex c) {
  return std::find(v.begin(), v.end(), c) != v.end();
}

}  // namespace

Configuration purify_border_cell(const Configuration& cfg, Index k, Index j) {
  require_below_half(cfg, "purify_border_cell");
  if (k < 0 || k >= cfg.cols() || j < 0 || j >= cfg.rows()) {
    throw ConfigError("purify_border_cell: index out of range");
  }
  require_sorted(cfg, "purify_border_cell");
  const Stats st = compute_stats(cfg);
  if (contains(st.d_minus, {k, j})) return purify_minus(cfg, st, k, j);
  if (contains(st.d_plus, {k, j})) {
    const Configuration r = complement_reflect(cfg);
    return complement_reflect(
        purify_minus(r, compute_stats(r), cfg.cols() - 1 - k, cfg.rows() - 1 - j));
  }
  throw ConfigError("purify_border_cell: " + cell_name(k, j) + " is not on the internal border");
}

Configuration purify_all_borders(const Configuration& cfg) {
  require_below_half(cfg, "purify_all_borders");
  return fixpoint(cfg, "purify_all_borders", [](const Configuration& s) {
    Configuration t = ensure_positive_border(s);
    const Stats st = compute_stats(t);
    std::vector<CellIndex> border = st.d_minus;
    border.insert(border.end(), st.d_plus.begin(), st.d_plus.end());
    std::sort(border.begin(), border.end());
    for (const CellIndex& c : border) {
      if (!t.a_mass()(c.col, c.row).is_zero() && !t.ac_mass()(c.col, c.row).is_zero()) {
        return purify_border_cell(t, c.col, c.row);
      }
    }
    return t;
  });
}

bool swap_pattern_holds(const Stats& st, CellIndex c1, CellIndex c2) {
  const bool b11 = st.b_mask(c1.col, c1.row);
  const bool b22 = st.b_mask(c2.col, c2.row);
  const bool b12 = st.b_mask(c1.col, c2.row);
  const bool b21 = st.b_mask(c2.col, c1.row);
  const bool all = b11 && b22 && b12 && b21;
  const bool col1 = b11 && b12, col1c = !b11 && !b12;
  const bool col2 = b22 && b21, col2c = !b22 && !b21;
  const bool row1 = b11 && b21, row1c = !b11 && !b21;
  const bool row2 = b22 && b12, row2c = !b22 && !b12;
  return all || (col1 && col2c) || (col1c && col2) || (row1 && row2c) || (row1c && row2);
}

Configuration diagonal_swap(const Configuration& cfg, CellIndex c1, CellIndex c2, bool complement) {
  auto in_range = [&](CellIndex c) { return c.col >= 0 && c.col < cfg.cols() && c.row >= 0 && c.row < cfg.rows(); };
  if (!in_range(c1) || !in_range(c2)) throw ConfigError("diagonal_swap: index out of range");
  if (c1.col == c2.col || c1.row == c2.row) {
    throw ConfigError("diagonal_swap: cells must differ in both column and row");
  }
  Grid ga = cfg.a_mass();
  Grid gac = cfg.ac_mass();
  Grid& g = complement ? gac : ga;
  const Rational p = min(g(c1.col, c1.row), g(c2.col, c2.row));
  if (p.is_zero()) return cfg;
  if (!swap_pattern_holds(compute_stats(cfg), c1, c2)) return cfg;
  g(c1.col, c1.row) -= p;
  g(c2.col, c2.row) -= p;
  g(c1.col, c2.row) += p;
  g(c2.col, c1.row) += p;
  return Configuration(cfg.delta(), std::move(ga), std::move(gac));
}

Configuration corner_fill(const Configuration& cfg) {
  const Stats st = compute_stats(cfg);
  Grid ga = cfg.a_mass();
  Grid gac = cfg.ac_mass();
  for (Index k = 0; k < cfg.cols(); ++k) {
    for (Index j = 0; j < cfg.rows(); ++j) {
      const long kk = k + 1, jj = j + 1;
      const bool lower_left = kk < st.m_plus_G && jj < st.m_plus_H;
      const bool upper_right = kk > st.m_minus_G && jj > st.m_minus_H;
      if (lower_left) {
        gac(k, j) += ga(k, j);
        ga(k, j) = 0;
      } else if (upper_right) {
        ga(k, j) += gac(k, j);
        gac(k, j) = 0;
      }
    }
  }
  return Configuration(cfg.delta(), std::move(ga), std::move(gac));
}

namespace {

/// Empties the B^c cells of the upper-left rectangle, one at a time.
Configuration empty_upper_left(const Configuration& cfg) {
  return fixpoint(cfg, "empty_corner_rectangles", [](const Configuration& s) {
    const Stats st = compute_stats(s);
    const Rational t = s.delta().threshold();
    for (Index k = 0; k < s.cols() && k + 1 <= st.m_minus_G; ++k) {
      for (Index j = 0; j < s.rows(); ++j) {
        if (j + 1 < st.m_plus_H || st.b_mask(k, j)) continue;
        const Rational m = s.mass(k, j);
        if (m.is_zero()) continue;
        Grid ga = s.a_mass();
        Grid gac = s.ac_mass();
        if (ga(k, j) / m < t) {
          gac(k, 0) += m;
        } else {
          ga(s.cols() - 1, j) += m;
        }
        ga(k, j) = 0;
        gac(k, j) = 0;
        return drop_empty(Configuration(s.delta(), std::move(ga), std::move(gac)));
      }
    }
    return s;
  });
}

}  // namespace

Configuration empty_corner_rectangles(const Configuration& cfg) {
  require_below_half(cfg, "empty_corner_rectangles");
  if (!compute_stats(cfg).both_corners_positive()) {
    throw ConfigError("empty_corner_rectangles needs B-mass in both corners; apply augment first");
  }
  const Configuration s = empty_upper_left(cfg);
  return complement_reflect(empty_upper_left(complement_reflect(s)));
}

Configuration canonicalize(const Configuration& cfg) {
  require_below_half(cfg, "canonicalize");
  if (!compute_stats(drop_empty(cfg)).both_corners_positive()) {
    throw ConfigError("canonicalize needs B-mass in both corners; apply augment first");
  }
  return fixpoint(drop_empty(cfg), "canonicalize", [](const Configuration& s) {
    return empty_corner_rectangles(corner_fill(purify_all_borders(zigzag_normalize(s))));
  });
}

std::vector<std::string> canonical_violations(const Configuration& cfg) {
  std::vector<std::string> v;
  Stats st;
  try {
    st = compute_stats(cfg);
  } catch (const ConfigError& e) {
    return {e.what()};
  }
  const long mg = cfg.cols();
  const long mh = cfg.rows();
  for (Index k = 0; k + 1 < mg; ++k) {
    if (!(st.x(k) < st.x(k + 1))) v.push_back("x not strictly increasing at column " + std::to_string(k + 1));
  }
  for (Index j = 0; j + 1 < mh; ++j) {
    if (!(st.y(j) < st.y(j + 1))) v.push_back("y not strictly increasing at row " + std::to_string(j + 1));
  }
  if (has_mergeable_pair(cfg)) v.emplace_back("a mergeable pair of lines remains");
  if (!st.both_corners_positive()) {
    v.emplace_back("a contradiction corner carries no B-mass");
    return v;
  }
  const long m = st.m_minus_G;
  const long r1 = st.m_plus_H;
  const long n = st.m_minus_H;
  const long c1 = st.m_plus_G;
  if (m != mh - r1 + 1) v.emplace_back("upper-left staircase is not square");
  if (n != mg - c1 + 1) v.emplace_back("lower-right staircase is not square");
  for (long k = 1; k <= mg; ++k) {
    for (long j = 1; j <= mh; ++j) {
      const bool ul = k <= m && j >= r1 + k - 1;
      const bool lr = j <= n && k >= c1 + j - 1;
      if (st.upper_left(k - 1, j - 1) != ul || st.lower_right(k - 1, j - 1) != lr) {
        v.push_back("B deviates from the staircase at " + cell_name(k - 1, j - 1));
      }
      if (st.b_mask(k - 1, j - 1)) continue;
      const Rational& a = cfg.a_mass()(k - 1, j - 1);
      const Rational& ac = cfg.ac_mass()(k - 1, j - 1);
      if ((k <= m || j <= n) && !a.is_zero()) v.push_back("A outside B at " + cell_name(k - 1, j - 1));
      if ((k >= c1 || j >= r1) && !ac.is_zero()) v.push_back("A^c outside B at " + cell_name(k - 1, j - 1));
      if (((k <= m && j >= r1) || (k >= c1 && j <= n)) && !(a + ac).is_zero()) {
        v.push_back("corner rectangle cell not empty at " + cell_name(k - 1, j - 1));
      }
    }
  }
  std::vector<CellIndex> border = st.d_minus;
  border.insert(border.end(), st.d_plus.begin(), st.d_plus.end());
  for (const CellIndex& c : border) {
    const Rational& a = cfg.a_mass()(c.col, c.row);
    const Rational& ac = cfg.ac_mass()(c.col, c.row);
    if ((a + ac).is_zero()) v.push_back("empty border cell " + cell_name(c.col, c.row));
    if (!a.is_zero() && !ac.is_zero()) v.push_back("impure border cell " + cell_name(c.col, c.row));
  }
  return v;
}

namespace {

/// Adds a lower-right contradiction cell when only the upper-left corner
/// carries B-mass. Input is normalized.
Configuration augment_upper_left(const Configuration& cfg, const Stats& st, const Rational& epsilon) {
  const Rational& delta = cfg.delta().value();
  const Rational e1 = min(Rational(1, 2), epsilon / st.prob_B);
  const Rational s = Rational(1) - e1 / 2 - e1 * delta / 4;
  const Index nc = cfg.cols();
  const Index nr = cfg.rows();
  Grid ga = Grid::Zero(nc + 1, nr + 1);
  Grid gac = Grid::Zero(nc + 1, nr + 1);
  for (Index k = 0; k < nc; ++k) {
    for (Index j = 0; j < nr; ++j) {
      ga(k, j + 1) = s * cfg.a_mass()(k, j);
      gac(k, j + 1) = s * cfg.ac_mass()(k, j);
    }
    gac(k, 0) = e1 / 2 * st.p(k);
  }
  ga(nc, 0) = e1 * delta / 4;
  return Configuration(cfg.delta(), std::move(ga), std::move(gac));
}

}  // namespace

Configuration augment(const Configuration& cfg, const Rational& epsilon) {
  require_below_half(cfg, "augment");
  if (!epsilon.is_positive()) throw ConfigError("augment: epsilon must be positive");
  const Stats st = compute_stats(cfg);
  if (st.prob_B.is_zero()) throw ConfigError("augment: P(B) = 0, nothing to preserve");
  if (st.both_corners_positive()) return cfg;
  const Configuration base = normalize(cfg);
  const Stats sb = compute_stats(base);
  Configuration out = sb.corner_minus.is_positive()
                          ? augment_upper_left(base, sb, epsilon)
                          : transpose(augment_upper_left(transpose(base), compute_stats(transpose(base)), epsilon));
  const Stats so = compute_stats(out);
  if (!(so.prob_B > st.prob_B - epsilon) || !so.both_corners_positive()) {
    throw TransformError("augment failed its own postcondition");
  }
  return out;
}

bool reduced_g(const Configuration& cfg) {
  const Stats st = compute_stats(cfg);
  return st.m_minus_G <= 1 || (st.m_minus_G == 2 && cfg.mass(0, cfg.rows() - 1).is_zero());
}

bool reduced_h(const Configuration& cfg) { return reduced_g(transpose(cfg)); }

namespace {

/// The branching argument behind the reduction. Steps use the 1-based
/// indices of the notation; conjugated frames are tracked for the trace.
class Reducer {
 public:
  enum class Next { kContinue, kJump };

  std::vector<TransformTrace> trace;
  std::vector<std::string> branches;
  int a_visits = 0;

  template <class Map, class Step>
  auto in_frame(Configuration& s, const std::string& frame, Map map, Step step) {
    frames_.push_back(frame);
    Configuration t = map(s);
    auto r = step(t);
    s = map(t);
    frames_.pop_back();
    return r;
  }

  Configuration g_side(Configuration s) {
    long prev_dims = LONG_MAX;
    for (;;) {
      Configuration c = canonicalize(s);
      record("canonicalize", {}, s, c);
      s = std::move(c);
      ++a_visits;
      const long dims = static_cast<long>(s.cols() + s.rows());
      if (dims >= prev_dims) internal("returned to the root without a dimension decrease");
      prev_dims = dims;
      const auto bad = canonical_violations(s);
      if (!bad.empty()) internal("canonical form violated: " + bad.front());

      const Stats st = compute_stats(s);
      const int m = st.m_minus_G;
      const int mh = static_cast<int>(s.rows());
      if (m <= 1) return s;
      if (top_corner(s) == Next::kJump) continue;
      if (in_frame(s, "phi", phi, [this](Configuration& t) { return top_corner(t); }) == Next::kJump) continue;
      if (m == 2) {
        if (!mass(s, 1, mh).is_zero()) internal("top-left cell nonempty with two upper-left columns");
        return s;
      }
      if (m == 3) {
        if (ac(s, 2, mh - 1).is_zero()) {
          in_frame(s, "phi", phi, [this](Configuration& t) { return three_columns(t); });
        } else {
          three_columns(s);
        }
      } else {
        many_columns(s);
      }
    }
  }

  [[noreturn]] void internal(const std::string& msg) const {
    throw TransformError(prefix() + msg + " (after " + std::to_string(trace.size()) + " steps)");
  }

  void visit(const std::string& branch) { branches.push_back(prefix() + branch); }

  void record(const std::string& name, std::vector<Index> params, const Configuration& before,
              const Configuration& after) {
    trace.push_back(make_trace(prefix() + name, std::move(params), before, after));
  }

 private:
  std::vector<std::string> frames_;

  std::string prefix() const {
    std::string p;
    for (const auto& f : frames_) p += f + "/";
    return p;
  }

  [[noreturn]] void contradiction(const std::string& label) const {
    throw ContradictionError(prefix() + label, trace);
  }

  static const Rational& a(const Configuration& s, int k, int j) { return s.a_mass()(k - 1, j - 1); }
  static const Rational& ac(const Configuration& s, int k, int j) { return s.ac_mass()(k - 1, j - 1); }
  static Rational mass(const Configuration& s, int k, int j) { return s.mass(k - 1, j - 1); }

  void swap(Configuration& s, int k1, int j1, int k2, int j2, bool complement) {
    const CellIndex c1{k1 - 1, j1 - 1};
    const CellIndex c2{k2 - 1, j2 - 1};
    const Rational& m1 = complement ? ac(s, k1, j1) : a(s, k1, j1);
    const Rational& m2 = complement ? ac(s, k2, j2) : a(s, k2, j2);
    if (!m1.is_zero() && !m2.is_zero() && !swap_pattern_holds(compute_stats(s), c1, c2)) {
      internal("no B pattern for swap " + cell_name(c1.col, c1.row) + " " + cell_name(c2.col, c2.row));
    }
    Configuration n = diagonal_swap(s, c1, c2, complement);
    record(complement ? "diagonal_swap_c" : "diagonal_swap", {c1.col, c1.row, c2.col, c2.row}, s, n);
    s = std::move(n);
  }

  /// Purifies a border cell; reports a jump when the result has a tie.
  Next purify(Configuration& s, int k, int j) {
    const Stats before = compute_stats(s);
    Configuration n = purify_border_cell(s, k - 1, j - 1);
    record("purify_border_cell", {k - 1, j - 1}, s, n);
    s = std::move(n);
    if (has_mergeable_pair(s)) return Next::kJump;
    if (!(compute_stats(s).b_mask == before.b_mask).all()) {
      internal("border purification changed B without creating a tie");
    }
    return Next::kContinue;
  }

  /// Makes the top border cell of the last upper-left column pure A and
  /// clears A^c from the top row.
  Next top_corner(Configuration& s) {
    visit("top_corner");
    const Stats st = compute_stats(s);
    const int m = st.m_minus_G;
    const int mh = static_cast<int>(s.rows());
    const int r1 = st.m_plus_H;
    for (int k = 1; k < m; ++k) {
      for (int j = 1; j < r1; ++j) swap(s, k, mh, m, j, true);
    }
    if (purify(s, m, mh) == Next::kJump) return Next::kJump;
    bool column_clear = true;
    for (int j = 1; j < mh; ++j) column_clear = column_clear && ac(s, m, j).is_zero();
    if (column_clear) contradiction("top_corner/column_without_ac");
    for (int k = 1; k < m; ++k) {
      if (!ac(s, k, mh).is_zero()) internal("neither side of the top-corner swap was cleared");
    }
    if (a(s, m, mh).is_zero()) contradiction("top_corner/corner_without_a");
    return Next::kContinue;
  }

  /// Three upper-left columns, border cell (2, m(H)-1) free of A.
  Next three_columns(Configuration& s) {
    visit("three_columns");
    const Stats st = compute_stats(s);
    const int mg = static_cast<int>(s.cols());
    const int mh = static_cast<int>(s.rows());
    const int r1 = st.m_plus_H;
    for (int k = 4; k <= mg; ++k) swap(s, 2, mh, k, mh - 1, false);
    bool row_clear = true;
    for (int k = 4; k <= mg; ++k) row_clear = row_clear && a(s, k, mh - 1).is_zero();
    if (row_clear && a(s, 2, mh - 1).is_zero()) contradiction("three_columns/row_without_a");
    if (purify(s, 2, mh - 1) == Next::kJump) return Next::kJump;
    if (a(s, 2, mh - 1).is_zero()) contradiction("three_columns/border_without_a");
    for (int j = 1; j < r1; ++j) swap(s, 1, r1 + 1, 2, j, true);
    const bool left_clear = ac(s, 1, r1 + 1).is_zero();
    if (purify(s, 2, mh - 1) == Next::kJump) return Next::kJump;
    contradiction(left_clear ? "three_columns/left_cleared" : "three_columns/left_kept");
  }

  /// Border cell (m-1, m(H)-1) made free of A.
  Next second_top(Configuration& s) {
    visit("second_top");
    const Stats st = compute_stats(s);
    const int m = st.m_minus_G;
    const int mh = static_cast<int>(s.rows());
    const int r1 = st.m_plus_H;
    for (int k = 1; k <= m - 2; ++k) {
      for (int j = 1; j < r1; ++j) swap(s, k, mh - 1, m - 1, j, true);
    }
    bool column_clear = true;
    for (int j = 1; j < r1; ++j) column_clear = column_clear && ac(s, m - 1, j).is_zero();
    if (purify(s, m - 1, mh - 1) == Next::kJump) return Next::kJump;
    if (ac(s, m - 1, mh - 1).is_zero()) {
      contradiction(column_clear ? "second_top/column_cleared" : "second_top/column_kept");
    }
    return Next::kContinue;
  }

  /// Four or more upper-left columns.
  Next many_columns(Configuration& s) {
    visit("many_columns");
    if (second_top(s) == Next::kJump) return Next::kJump;
    if (in_frame(s, "phi", phi, [this](Configuration& t) { return second_top(t); }) == Next::kJump) {
      return Next::kJump;
    }
    const Stats st = compute_stats(s);
    const int m = st.m_minus_G;
    const int mg = static_cast<int>(s.cols());
    const int mh = static_cast<int>(s.rows());
    const int r1 = st.m_plus_H;
    auto row_of = [r1](int k) { return r1 + k - 1; };
    if (!ac(s, m, mh).is_zero() || !a(s, m - 1, mh - 1).is_zero() || !ac(s, 2, row_of(2)).is_zero()) {
      internal("border purity lost before the final swaps");
    }
    int k = 0;
    for (int i = 3; i <= m - 1 && k == 0; ++i) {
      if (a(s, i, row_of(i)).is_zero()) k = i - 1;
    }
    if (k == 0 || !ac(s, k, row_of(k)).is_zero()) internal("no adjacent pure A / pure A^c border pair");
    const int j = row_of(k);
    for (int j1 = 1; j1 <= mh; ++j1) {
      if (j1 != j && j1 != j + 1) swap(s, k + 1, j + 1, k, j1, true);
    }
    if (mass(s, k + 1, j + 1).is_zero()) return Next::kJump;
    for (int k1 = 1; k1 <= mg; ++k1) {
      if (k1 != k && k1 != k + 1) swap(s, k, j, k1, j + 1, false);
    }
    if (mass(s, k, j).is_zero()) return Next::kJump;
    contradiction("many_columns/swaps_exhausted");
  }
};

}  // namespace

ReduceResult reduce(const Configuration& cfg, const Rational& epsilon) {
  require_below_half(cfg, "reduce");
  if (!epsilon.is_positive()) throw ConfigError("reduce: epsilon must be positive");
  const Configuration start = normalize(cfg);
  const Stats st = compute_stats(start);
  if (st.prob_B.is_zero()) throw ConfigError("reduce: P(B) = 0");

  Reducer r;
  Configuration s = augment(start, epsilon);
  r.record("augment", {}, start, s);
  const long rounds = iteration_cap(s);
  for (long round = 0;; ++round) {
    if (round == rounds) r.internal("reduction exceeded its iteration cap");
    s = r.g_side(s);
    r.in_frame(s, "transpose", transpose, [&r](Configuration& t) {
      t = r.g_side(t);
      return 0;
    });
    if (reduced_g(s) && reduced_h(s)) break;
  }
  if (!(compute_stats(s).prob_B > st.prob_B - epsilon)) r.internal("reduction lost more than epsilon");
  return {s, std::move(r.trace), std::move(r.branches), r.a_visits};
}

}  // namespace expert_spread
