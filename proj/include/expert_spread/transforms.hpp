#pragma once

#include <string>
#include <utility>
#include <vector>

#include "expert_spread/config.hpp"

namespace expert_spread {

/// Audit record of one transform application. Contract flags are computed
/// from the before/after configurations.
struct TransformTrace {
  std::string name;
  std::vector<Index> params;  // zero-based cell or line indices
  Rational prob_B_before, prob_B_after;
  std::pair<Index, Index> dims_before, dims_after;
  bool contract_prob_b = true;   // P(B) non-decreasing
  bool contract_dims = true;     // no dimension grows
  bool contract_corners = true;  // both corners positive before => after

  bool ok() const { return contract_prob_b && contract_dims && contract_corners; }
};

TransformTrace make_trace(std::string name, std::vector<Index> params, const Configuration& before,
                          const Configuration& after);

/// A branch the reduction argument proves unreachable was reached.
class ContradictionError : public std::logic_error {
 public:
  ContradictionError(std::string label, std::vector<TransformTrace> trace);
  const std::string& label() const { return label_; }
  const std::vector<TransformTrace>& trace() const { return trace_; }

 private:
  std::string label_;
  std::vector<TransformTrace> trace_;
};

/// Internal consistency failure: iteration cap, broken postcondition.
class TransformError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

Configuration transpose(const Configuration& cfg);
/// Swaps A and A^c and reverses both axes.
Configuration complement_reflect(const Configuration& cfg);

bool columns_mergeable(const Configuration& cfg, const Stats& st, Index k);
bool has_mergeable_pair(const Configuration& cfg);

Configuration merge_columns(const Configuration& cfg, Index k);
Configuration merge_rows(const Configuration& cfg, Index j);
Configuration zigzag_normalize(const Configuration& cfg);

Configuration absorb_empty_border_cell(const Configuration& cfg, Index k, Index i);
Configuration ensure_positive_border(const Configuration& cfg);

Configuration purify_border_cell(const Configuration& cfg, Index k, Index j);
Configuration purify_all_borders(const Configuration& cfg);

/// The four-corner B patterns under which a swap between c1 and c2 keeps B.
bool swap_pattern_holds(const Stats& st, CellIndex c1, CellIndex c2);
/// Moves p = min(mass at c1, mass at c2) of A (A^c if complement) from c1
/// and c2 to the opposite corners of their rectangle. Either diagonal
/// orientation is accepted.
Configuration diagonal_swap(const Configuration& cfg, CellIndex c1, CellIndex c2, bool complement);

Configuration corner_fill(const Configuration& cfg);
Configuration empty_corner_rectangles(const Configuration& cfg);
Configuration canonicalize(const Configuration& cfg);
/// Lists every canonical-form property that fails; empty when canonical.
std::vector<std::string> canonical_violations(const Configuration& cfg);

Configuration augment(const Configuration& cfg, const Rational& epsilon);

/// m_-(G) <= 1, or m_-(G) = 2 with an empty top-left cell.
bool reduced_g(const Configuration& cfg);
/// The same condition with the roles of G and H exchanged.
bool reduced_h(const Configuration& cfg);

struct ReduceResult {
  Configuration out;
  std::vector<TransformTrace> trace;
  /// Branch routines entered, with frame prefixes such as "phi/".
  std::vector<std::string> branches;
  int a_visits = 0;
};
ReduceResult reduce(const Configuration& cfg, const Rational& epsilon);

/// 16 (m(G) + m(H))^2.
long iteration_cap(const Configuration& cfg);

}  // namespace expert_spread
