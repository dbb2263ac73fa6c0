#pragma once

#include <Eigen/Core>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "expert_spread/rational.hpp"

namespace expert_spread {

using Index = Eigen::Index;
/// Cell masses indexed (column, row): the first index runs over the
/// partition generating G, the second over the partition generating H.
using Grid = Eigen::Matrix<Rational, Eigen::Dynamic, Eigen::Dynamic>;
using Vector = Eigen::Matrix<Rational, Eigen::Dynamic, 1>;
using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Raised when an input violates a documented precondition.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Forecast disagreement parameter, strictly inside (0, 1).
class Delta {
 public:
  explicit Delta(Rational value);
  const Rational& value() const { return value_; }
  /// The B threshold 1 - delta.
  Rational threshold() const { return Rational(1) - value_; }
  bool below_half() const { return value_ < Rational(1, 2); }
  friend bool operator==(const Delta&, const Delta&) = default;

 private:
  Rational value_;
};

struct Cell {
  Rational a_mass;
  Rational ac_mass;
  Rational mass() const { return a_mass + ac_mass; }
};

/// Zero-based (column, row) pair.
struct CellIndex {
  Index col = 0;
  Index row = 0;
  friend auto operator<=>(const CellIndex&, const CellIndex&) = default;
};

/// Finite grid configuration: total mass exactly one, all masses nonnegative.
class Configuration {
 public:
  Configuration(Delta delta, Grid a_mass, Grid ac_mass);

  const Delta& delta() const { return delta_; }
  Index cols() const { return a_.rows(); }
  Index rows() const { return a_.cols(); }
  const Grid& a_mass() const { return a_; }
  const Grid& ac_mass() const { return ac_; }
  Cell cell(Index k, Index j) const { return {a_(k, j), ac_(k, j)}; }
  Rational mass(Index k, Index j) const { return a_(k, j) + ac_(k, j); }
  Configuration with_delta(Delta delta) const { return {delta, a_, ac_}; }

  friend bool operator==(const Configuration& l, const Configuration& r) {
    return l.delta_ == r.delta_ && l.a_.rows() == r.a_.rows() && l.a_.cols() == r.a_.cols() &&
           l.a_ == r.a_ && l.ac_ == r.ac_;
  }

 private:
  Delta delta_;
  Grid a_;
  Grid ac_;
};

/// Extended-integer conventions for the border indices (1-based, as in the
/// notation): max of the empty set is 0, min of the empty set is kInfinity.
inline constexpr int kInfinity = std::numeric_limits<int>::max();

struct Stats {
  Vector p, q, x, y;
  Mask b_mask;
  /// Cells with y - x >= 1 - delta (upper left) and x - y >= 1 - delta.
  Mask upper_left, lower_right;
  int m_minus_G = 0, m_plus_G = kInfinity, m_minus_H = 0, m_plus_H = kInfinity;
  std::vector<CellIndex> d_minus, d_plus;
  Rational prob_B;
  /// B-mass in columns 1..m_-(G) and in columns m_+(G)..m(G).
  Rational corner_minus, corner_plus;

  bool both_corners_positive() const { return corner_minus.is_positive() && corner_plus.is_positive(); }
};

/// Throws ConfigError naming the first zero-mass row or column.
Stats compute_stats(const Configuration& cfg);

/// Removes zero-mass rows and columns, keeping order.
Configuration drop_empty(const Configuration& cfg);
/// drop_empty followed by stable sorts of columns by x and rows by y.
Configuration normalize(const Configuration& cfg);
bool is_sorted(const Configuration& cfg);

struct OverlapCheck {
  Rational lhs, rhs;
  bool applicable = false;
  bool holds = true;
};
OverlapCheck overlap_check(const Configuration& cfg, Index k, Index j);

/// P((G Δ H) | G ∪ H) >= |x_k - y_j| for the pair; vacuous on empty union.
bool separation_holds(const Configuration& cfg, const Stats& st, Index k, Index j);

/// Every B cell lies in one of the two contradiction corners.
bool pitman_inclusion_holds(const Configuration& cfg, const Stats& st);

struct InvariantReport {
  std::vector<std::string> failures;
  bool ok() const { return failures.empty(); }
};
/// Runs every config-level check: masses, overlap, separation, Pitman inclusion.
InvariantReport check_invariants(const Configuration& cfg);

}  // namespace expert_spread
