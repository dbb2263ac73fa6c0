#include "expert_spread/config.hpp"

#include <algorithm>
#include <numeric>

namespace expert_spread {

Delta::Delta(Rational value) : value_(std::move(value)) {
  if (!(value_ > 0 && value_ < 1)) {
    throw ConfigError("delta must lie strictly between 0 and 1, got " + value_.str());
  }
}

Configuration::Configuration(Delta delta, Grid a_mass, Grid ac_mass)
    : delta_(std::move(delta)), a_(std::move(a_mass)), ac_(std::move(ac_mass)) {
  if (a_.rows() < 1 || a_.cols() < 1) throw ConfigError("configuration needs at least one cell");
  if (a_.rows() != ac_.rows() || a_.cols() != ac_.cols()) {
    throw ConfigError("A and A^c mass grids differ in shape");
  }
  Rational total;
  for (Index k = 0; k < a_.rows(); ++k) {
    for (Index j = 0; j < a_.cols(); ++j) {
      if (a_(k, j).sign() < 0 || ac_(k, j).sign() < 0) {
        throw ConfigError("negative mass at cell (" + std::to_string(k + 1) + "," +
                          std::to_string(j + 1) + ")");
      }
      total += a_(k, j);
      total += ac_(k, j);
    }
  }
  if (total != 1) throw ConfigError("total mass is " + total.str() + ", expected 1");
}

Stats compute_stats(const Configuration& cfg) {
  const Index nc = cfg.cols();
  const Index nr = cfg.rows();
  const Grid mass = cfg.a_mass() + cfg.ac_mass();
  Stats st;
  st.p = mass.rowwise().sum();
  st.q = mass.colwise().sum().transpose();
  const Vector pa = cfg.a_mass().rowwise().sum();
  const Vector qa = cfg.a_mass().colwise().sum().transpose();
  st.x.resize(nc);
  st.y.resize(nr);
  for (Index k = 0; k < nc; ++k) {
    if (st.p(k).is_zero()) throw ConfigError("column " + std::to_string(k + 1) + " has zero mass");
    st.x(k) = pa(k) / st.p(k);
  }
  for (Index j = 0; j < nr; ++j) {
    if (st.q(j).is_zero()) throw ConfigError("row " + std::to_string(j + 1) + " has zero mass");
    st.y(j) = qa(j) / st.q(j);
  }

  const Rational t = cfg.delta().threshold();
  st.upper_left = Mask::Constant(nc, nr, false);
  st.lower_right = Mask::Constant(nc, nr, false);
  for (Index k = 0; k < nc; ++k) {
    for (Index j = 0; j < nr; ++j) {
      st.upper_left(k, j) = st.y(j) - st.x(k) >= t;
      st.lower_right(k, j) = st.x(k) - st.y(j) >= t;
      if (st.upper_left(k, j)) {
        st.m_minus_G = std::max<int>(st.m_minus_G, k + 1);
        st.m_plus_H = std::min<int>(st.m_plus_H, j + 1);
      }
      if (st.lower_right(k, j)) {
        st.m_plus_G = std::min<int>(st.m_plus_G, k + 1);
        st.m_minus_H = std::max<int>(st.m_minus_H, j + 1);
      }
    }
  }
  st.b_mask = st.upper_left || st.lower_right;

  for (Index k = 0; k < nc; ++k) {
    for (Index j = 0; j < nr; ++j) {
      if (!st.b_mask(k, j)) continue;
      const Rational& m = mass(k, j);
      st.prob_B += m;
      if (k + 1 <= st.m_minus_G) st.corner_minus += m;
      if (st.m_plus_G != kInfinity && k + 1 >= st.m_plus_G) st.corner_plus += m;
    }
  }

  for (Index k = 0; k < nc; ++k) {
    for (Index j = 0; j < nr; ++j) {
      if (st.upper_left(k, j) && (j == 0 || !st.upper_left(k, j - 1)) &&
          (k + 1 == nc || !st.upper_left(k + 1, j))) {
        st.d_minus.push_back({k, j});
      }
      if (st.lower_right(k, j) && (k == 0 || !st.lower_right(k - 1, j)) &&
          (j + 1 == nr || !st.lower_right(k, j + 1))) {
        st.d_plus.push_back({k, j});
      }
    }
  }
  return st;
}

Configuration drop_empty(const Configuration& cfg) {
  const Grid mass = cfg.a_mass() + cfg.ac_mass();
  const Vector p = mass.rowwise().sum();
  const Vector q = mass.colwise().sum().transpose();
  std::vector<Index> keep_c, keep_r;
  for (Index k = 0; k < p.size(); ++k) {
    if (!p(k).is_zero()) keep_c.push_back(k);
  }
  for (Index j = 0; j < q.size(); ++j) {
    if (!q(j).is_zero()) keep_r.push_back(j);
  }
  if (keep_c.size() == static_cast<size_t>(p.size()) && keep_r.size() == static_cast<size_t>(q.size())) {
    return cfg;
  }
  return Configuration(cfg.delta(), cfg.a_mass()(keep_c, keep_r), cfg.ac_mass()(keep_c, keep_r));
}

Configuration normalize(const Configuration& cfg) {
  Configuration trimmed = drop_empty(cfg);
  const Stats st = compute_stats(trimmed);
  std::vector<Index> cols(trimmed.cols()), rows(trimmed.rows());
  std::iota(cols.begin(), cols.end(), Index{0});
  std::iota(rows.begin(), rows.end(), Index{0});
  std::stable_sort(cols.begin(), cols.end(), [&](Index a, Index b) { return st.x(a) < st.x(b); });
  std::stable_sort(rows.begin(), rows.end(), [&](Index a, Index b) { return st.y(a) < st.y(b); });
  return Configuration(trimmed.delta(), trimmed.a_mass()(cols, rows), trimmed.ac_mass()(cols, rows));
}

bool is_sorted(const Configuration& cfg) {
  const Stats st = compute_stats(cfg);
  return std::is_sorted(st.x.begin(), st.x.end()) && std::is_sorted(st.y.begin(), st.y.end());
}

OverlapCheck overlap_check(const Configuration& cfg, Index k, Index j) {
  if (k < 0 || k >= cfg.cols() || j < 0 || j >= cfg.rows()) {
    throw ConfigError("overlap_check index out of range");
  }
  const Stats st = compute_stats(cfg);
  const Rational& d = cfg.delta().value();
  OverlapCheck r;
  r.lhs = cfg.mass(k, j);
  r.rhs = d / (Rational(1) + d) * (st.p(k) + st.q(j));
  r.applicable = st.b_mask(k, j);
  r.holds = !r.applicable || r.lhs <= r.rhs;
  return r;
}

bool separation_holds(const Configuration& cfg, const Stats& st, Index k, Index j) {
  const Rational& both = cfg.mass(k, j);
  const Rational uni = st.p(k) + st.q(j) - both;
  if (uni.is_zero()) return true;
  const Rational sym = st.p(k) + st.q(j) - both - both;
  return sym / uni >= abs(st.x(k) - st.y(j));
}

bool pitman_inclusion_holds(const Configuration& cfg, const Stats& st) {
  const Rational& d = cfg.delta().value();
  const Rational t = cfg.delta().threshold();
  for (Index k = 0; k < cfg.cols(); ++k) {
    for (Index j = 0; j < cfg.rows(); ++j) {
      if (!st.b_mask(k, j)) continue;
      const bool ul = st.x(k) <= d && st.y(j) >= t;
      const bool lr = st.y(j) <= d && st.x(k) >= t;
      if (!ul && !lr) return false;
    }
  }
  return true;
}

InvariantReport check_invariants(const Configuration& cfg) {
  InvariantReport report;
  Stats st;
  try {
    st = compute_stats(cfg);
  } catch (const ConfigError& e) {
    report.failures.emplace_back(e.what());
    return report;
  }
  const Rational lambda = cfg.delta().below_half()
                              ? Rational(2) * cfg.delta().value() / (Rational(1) + cfg.delta().value())
                              : Rational(1);
  if (st.prob_B > lambda) report.failures.push_back("P(B) = " + st.prob_B.str() + " exceeds the sharp bound");
  for (Index k = 0; k < cfg.cols(); ++k) {
    for (Index j = 0; j < cfg.rows(); ++j) {
      const std::string at = "(" + std::to_string(k + 1) + "," + std::to_string(j + 1) + ")";
      if (st.b_mask(k, j) && cfg.delta().below_half()) {
        const Rational rhs =
            cfg.delta().value() / (Rational(1) + cfg.delta().value()) * (st.p(k) + st.q(j));
        if (cfg.mass(k, j) > rhs) report.failures.push_back("overlap inequality fails at " + at);
      }
      if (!separation_holds(cfg, st, k, j)) report.failures.push_back("separation inequality fails at " + at);
    }
  }
  if (cfg.delta().below_half() && !pitman_inclusion_holds(cfg, st)) {
    report.failures.emplace_back("a B cell lies outside both contradiction corners");
  }
  return report;
}

}  // namespace expert_spread
