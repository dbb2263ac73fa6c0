#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "expert_spread/bounds.hpp"
#include "expert_spread/search.hpp"
#include "expert_spread/transforms.hpp"
#include "oracle.hpp"

using namespace expert_spread;

namespace {

Configuration make(const Rational& delta, Index cols, Index rows,
                   std::initializer_list<std::tuple<Index, Index, Rational, Rational>> cells) {
  Grid a = Grid::Zero(cols, rows);
  Grid ac = Grid::Zero(cols, rows);
  for (const auto& [k, j, ma, mac] : cells) {
    a(k, j) = ma;
    ac(k, j) = mac;
  }
  return Configuration(Delta(delta), a, ac);
}

const Delta kQuarter(Rational(1, 4));

void expect_contract(const Configuration& before, const Configuration& after) {
  const TransformTrace t = make_trace("t", {}, before, after);
  EXPECT_TRUE(t.contract_prob_b) << t.prob_B_before << " -> " << t.prob_B_after;
  EXPECT_TRUE(t.contract_dims);
  EXPECT_TRUE(t.contract_corners);
}

}  // namespace

TEST(Reflections, AreInvolutionsPreservingProbability) {
  for (std::uint64_t i = 0; i < 200; ++i) {
    Rng rng(stream_seed(3, i));
    const Configuration c = random_config(kQuarter, rng);
    EXPECT_EQ(transpose(transpose(c)), c);
    EXPECT_EQ(complement_reflect(complement_reflect(c)), c);
    const mpq_class pb = oracle::prob_b(c);
    EXPECT_EQ(oracle::prob_b(transpose(c)), pb);
    EXPECT_EQ(oracle::prob_b(complement_reflect(c)), pb);
  }
}

TEST(Reflections, ComplementReflectSwapsBorderSets) {
  for (std::uint64_t i = 0; i < 200; ++i) {
    Rng rng(stream_seed(4, i));
    const Configuration c = normalize(random_config(kQuarter, rng));
    const Configuration r = complement_reflect(c);
    const Stats sc = compute_stats(c);
    const Stats sr = compute_stats(r);
    std::set<CellIndex> mapped;
    for (const CellIndex& d : sc.d_minus) mapped.insert({c.cols() - 1 - d.col, c.rows() - 1 - d.row});
    EXPECT_EQ(mapped, std::set<CellIndex>(sr.d_plus.begin(), sr.d_plus.end()));
    EXPECT_EQ(sc.d_minus.size(), sr.d_plus.size());
  }
}

TEST(MergeColumns, EqualForecastsMerge) {
  // Columns 1 and 2 carry the same forecast 1/2 and no B cells.
  const Configuration c = make(Rational(1, 4), 2, 2,
                               {{0, 0, Rational(1, 8), Rational(1, 8)},
                                {1, 0, Rational(1, 8), Rational(1, 8)},
                                {0, 1, Rational(1, 8), Rational(1, 8)},
                                {1, 1, Rational(1, 8), Rational(1, 8)}});
  const Configuration m = merge_columns(c, 0);
  ASSERT_EQ(m.cols(), 1);
  EXPECT_EQ(compute_stats(m).x(0), Rational(1, 2));
  EXPECT_EQ(oracle::prob_b(m), oracle::prob_b(c));
}

TEST(MergeColumns, ExtremalIsLeftAlone) {
  const Configuration c = extremal_config(kQuarter);
  EXPECT_EQ(merge_columns(c, 0), c);
  EXPECT_EQ(merge_rows(c, 0), c);
  EXPECT_THROW(merge_columns(c, 1), ConfigError);
}

TEST(ZigzagNormalize, ExtremalIsFixed) { EXPECT_EQ(zigzag_normalize(extremal_config(kQuarter)), extremal_config(kQuarter)); }

TEST(ZigzagNormalize, DuplicateColumnsCollapse) {
  const Configuration c = make(Rational(1, 4), 3, 2,
                               {{0, 0, Rational(0), Rational(3, 10)},
                                {1, 0, Rational(0), Rational(3, 10)},
                                {0, 1, Rational(1, 10), Rational(0)},
                                {1, 1, Rational(1, 10), Rational(0)},
                                {2, 0, Rational(1, 5), Rational(0)}});
  const Configuration z = zigzag_normalize(c);
  EXPECT_EQ(z.cols(), 2);
  EXPECT_GE(oracle::prob_b(z), oracle::prob_b(c));
}

TEST(ZigzagNormalize, OutputIsStrictlyIncreasing) {
  for (std::uint64_t i = 0; i < 300; ++i) {
    Rng rng(stream_seed(9, i));
    const Configuration c = random_config(Delta(Rational(1, 3)), rng, {5, 5, 4, 10});
    const Configuration z = zigzag_normalize(c);
    const Stats st = compute_stats(z);
    for (Index k = 0; k + 1 < z.cols(); ++k) ASSERT_LT(st.x(k), st.x(k + 1));
    for (Index j = 0; j + 1 < z.rows(); ++j) ASSERT_LT(st.y(j), st.y(j + 1));
    ASSERT_FALSE(has_mergeable_pair(z));
    expect_contract(normalize(c), z);
  }
}

TEST(AbsorbEmptyBorderCell, ZeroMassBorderCellMergesAway) {
  // Column 2 holds the zero-mass B cell (2,3) next to the non-B cell (3,3).
  const Delta d(Rational(1, 4));
  const Configuration c = make(d.value(), 3, 3,
                               {{0, 0, Rational(0), Rational(1, 2)},
                                {0, 2, Rational(1, 8), Rational(0)},
                                {1, 0, Rational(0), Rational(1, 8)},
                                {2, 1, Rational(1, 8), Rational(0)},
                                {2, 2, Rational(1, 8), Rational(0)}});
  const Stats st = compute_stats(c);
  ASSERT_TRUE(st.b_mask(1, 2));
  ASSERT_FALSE(st.b_mask(2, 2));
  const Configuration out = absorb_empty_border_cell(c, 1, 2);
  EXPECT_EQ(out.cols(), 2);
  EXPECT_EQ(oracle::prob_b(out), oracle::prob_b(c));
}

TEST(AbsorbEmptyBorderCell, PositiveCellIsIdentity) {
  const Configuration c = extremal_config(kQuarter);
  EXPECT_EQ(absorb_empty_border_cell(c, 0, 1), c);
}

TEST(EnsurePositiveBorder, ExtremalAndSingleCellAreFixed) {
  EXPECT_EQ(ensure_positive_border(extremal_config(kQuarter)), extremal_config(kQuarter));
  const Configuration one = make(Rational(1, 4), 1, 1, {{0, 0, Rational(1, 2), Rational(1, 2)}});
  EXPECT_EQ(ensure_positive_border(one), one);
}

TEST(EnsurePositiveBorder, LeavesNoZeroMassBorderCell) {
  for (std::uint64_t i = 0; i < 300; ++i) {
    Rng rng(stream_seed(12, i));
    const Configuration c = random_config(kQuarter, rng, {5, 5, 4, 8});
    const Configuration out = ensure_positive_border(c);
    expect_contract(normalize(c), out);
  }
}

TEST(PurifyBorderCell, HandComputedAlpha) {
  // delta = 1/4. Cell (1,2) is in D_- with a = ac = 1/16, p_1 = 3/4, q_2 = 3/8,
  // x_1 = 1/12, y_2 = 5/6. Since p_1 >= q_2:
  // alpha = min(3/4 (1/4 - 1/12), 3/8 (1 - 5/6), 1/16) = 1/16.
  const Configuration c = make(Rational(1, 4), 2, 2,
                               {{0, 0, Rational(0), Rational(5, 8)},
                                {0, 1, Rational(1, 16), Rational(1, 16)},
                                {1, 1, Rational(1, 4), Rational(0)}});
  const Configuration full = drop_empty(c);
  const Stats st = compute_stats(full);
  ASSERT_EQ(st.x(0), Rational(1, 12));
  ASSERT_EQ(st.y(1), Rational(5, 6));
  ASSERT_EQ(st.d_minus, (std::vector<CellIndex>{{0, 1}}));
  const Configuration out = purify_border_cell(full, 0, 1);
  EXPECT_EQ(out.a_mass()(0, 1), Rational(1, 8));
  EXPECT_EQ(out.ac_mass()(0, 1), Rational(0));
  EXPECT_EQ(compute_stats(out).y(1), Rational(1));
  EXPECT_EQ(oracle::prob_b(out), oracle::prob_b(full));
}

TEST(PurifyBorderCell, PureCellIsIdentityAndNonBorderRejected) {
  const Configuration c = extremal_config(kQuarter);
  EXPECT_EQ(purify_border_cell(c, 0, 1), c);
  EXPECT_EQ(purify_border_cell(c, 1, 0), c);
  EXPECT_THROW(purify_border_cell(c, 0, 0), ConfigError);
  EXPECT_THROW(purify_border_cell(c.with_delta(Delta(Rational(1, 2))), 0, 1), ConfigError);
}

TEST(PurifyAllBorders, BorderCellsEndPure) {
  for (std::uint64_t i = 0; i < 300; ++i) {
    Rng rng(stream_seed(13, i));
    const Configuration c = random_config(Delta(Rational(2, 5)), rng);
    const Configuration out = purify_all_borders(normalize(c));
    expect_contract(normalize(c), out);
    const Stats st = compute_stats(out);
    for (const auto* border : {&st.d_minus, &st.d_plus}) {
      for (const CellIndex& d : *border) {
        ASSERT_TRUE(out.a_mass()(d.col, d.row).is_zero() || out.ac_mass()(d.col, d.row).is_zero());
      }
    }
  }
}

TEST(DiagonalSwap, AllFourInBKeepsForecasts) {
  // Every cell lies in B for a threshold below the spread; A on the diagonal.
  const Delta d(Rational(1, 4));
  const Configuration c = make(d.value(), 2, 2,
                               {{0, 0, Rational(1, 8), Rational(1, 4)},
                                {1, 1, Rational(1, 8), Rational(1, 4)},
                                {0, 1, Rational(0), Rational(1, 8)},
                                {1, 0, Rational(0), Rational(1, 8)}});
  const Stats before = compute_stats(c);
  const Configuration out = diagonal_swap(c, {0, 0}, {1, 1}, false);
  const Stats after = compute_stats(out);
  EXPECT_EQ(after.x, before.x);
  EXPECT_EQ(after.y, before.y);
  EXPECT_EQ(after.p, before.p);
  EXPECT_EQ(after.q, before.q);
  EXPECT_EQ(after.prob_B, before.prob_B);
}

TEST(DiagonalSwap, MovesMassWhenPatternHolds) {
  // Column 1 (x = 0) is entirely in B against the pure-A rows; column 2 is not.
  const Delta d(Rational(1, 4));
  Grid a = Grid::Zero(2, 2), ac = Grid::Zero(2, 2);
  ac(0, 0) = Rational(1, 4);
  ac(0, 1) = Rational(1, 4);
  a(1, 0) = Rational(1, 4);
  a(1, 1) = Rational(1, 4);
  const Configuration c(d, a, ac);
  const Stats st = compute_stats(c);
  ASSERT_TRUE(swap_pattern_holds(st, {0, 0}, {1, 1}) || !st.b_mask.any());
  const Configuration out = diagonal_swap(c, {0, 0}, {1, 1}, true);
  EXPECT_EQ(compute_stats(out).x, st.x);
  EXPECT_EQ(compute_stats(out).y, st.y);
  EXPECT_EQ(oracle::prob_b(out), oracle::prob_b(c));
}

TEST(DiagonalSwap, EmptySourceIsIdentityAndSharedLineRejected) {
  const Configuration c = extremal_config(kQuarter);
  EXPECT_EQ(diagonal_swap(c, {0, 0}, {1, 1}, false), c);
  EXPECT_THROW(diagonal_swap(c, {0, 0}, {0, 1}, false), ConfigError);
  EXPECT_THROW(diagonal_swap(c, {0, 0}, {2, 1}, false), ConfigError);
}

TEST(DiagonalSwap, RandomAdmissibleSwapsAreExact) {
  int checked = 0;
  for (std::uint64_t i = 0; i < 400; ++i) {
    Rng rng(stream_seed(14, i));
    const Configuration c = normalize(random_config(Delta(Rational(1, 3)), rng));
    const Stats st = compute_stats(c);
    for (Index k1 = 0; k1 < c.cols(); ++k1) {
      for (Index k2 = k1 + 1; k2 < c.cols(); ++k2) {
        for (Index j1 = 0; j1 < c.rows(); ++j1) {
          for (Index j2 = 0; j2 < c.rows(); ++j2) {
            if (j1 == j2) continue;
            for (const bool comp : {false, true}) {
              const Configuration out = diagonal_swap(c, {k1, j1}, {k2, j2}, comp);
              const Stats so = compute_stats(out);
              if (!swap_pattern_holds(st, {k1, j1}, {k2, j2})) {
                ASSERT_EQ(out, c);
                continue;
              }
              ASSERT_EQ(so.x, st.x);
              ASSERT_EQ(so.y, st.y);
              ASSERT_EQ(so.p, st.p);
              ASSERT_EQ(so.q, st.q);
              ASSERT_EQ(so.prob_B, st.prob_B);
              ++checked;
            }
          }
        }
      }
    }
  }
  EXPECT_GT(checked, 100);
}

TEST(CornerFill, ExtremalIsFixed) { EXPECT_EQ(corner_fill(extremal_config(kQuarter)), extremal_config(kQuarter)); }

TEST(CornerFill, ForecastsMoveOutward) {
  for (std::uint64_t i = 0; i < 300; ++i) {
    Rng rng(stream_seed(15, i));
    const Configuration c = normalize(random_config(kQuarter, rng));
    const Configuration out = corner_fill(c);
    expect_contract(c, out);
    const Stats s0 = compute_stats(c);
    const Stats s1 = compute_stats(out);
    for (Index k = 0; k < c.cols(); ++k) {
      if (k + 1 <= s0.m_minus_G) ASSERT_LE(s1.x(k), s0.x(k));
      if (s0.m_plus_G != kInfinity && k + 1 >= s0.m_plus_G) ASSERT_GE(s1.x(k), s0.x(k));
    }
  }
}

TEST(EmptyCornerRectangles, ExtremalIsFixed) {
  EXPECT_EQ(empty_corner_rectangles(extremal_config(kQuarter)), extremal_config(kQuarter));
}

TEST(Canonicalize, ExtremalIsFixedAndOutputIdempotent) {
  EXPECT_EQ(canonicalize(extremal_config(kQuarter)), extremal_config(kQuarter));
  EXPECT_TRUE(canonical_violations(extremal_config(kQuarter)).empty());
  for (std::uint64_t i = 0; i < 300; ++i) {
    Rng rng(stream_seed(16, i));
    const auto c = random_config_with_b(Delta(Rational(1, 5)), rng);
    ASSERT_TRUE(c.has_value());
    const Configuration start = augment(normalize(*c), Rational(1, 1000));
    const Configuration out = canonicalize(start);
    expect_contract(start, out);
    const auto bad = canonical_violations(out);
    ASSERT_TRUE(bad.empty()) << bad.front();
    ASSERT_EQ(canonicalize(out), out);
  }
}

TEST(Canonicalize, RequiresBothCorners) {
  const Configuration one_sided = make(Rational(1, 4), 2, 2,
                                       {{0, 0, Rational(0), Rational(3, 4)},
                                        {0, 1, Rational(1, 8), Rational(0)},
                                        {1, 1, Rational(1, 8), Rational(0)}});
  EXPECT_THROW(canonicalize(one_sided), ConfigError);
}

TEST(Augment, OneSidedConfigurationGainsSecondCorner) {
  // All B-mass sits in the upper-left corner.
  const Configuration c = make(Rational(1, 4), 2, 2,
                               {{0, 0, Rational(0), Rational(3, 4)},
                                {0, 1, Rational(1, 8), Rational(0)},
                                {1, 1, Rational(1, 8), Rational(0)}});
  const Stats st = compute_stats(c);
  ASSERT_TRUE(st.corner_minus.is_positive());
  ASSERT_FALSE(st.corner_plus.is_positive());
  const Rational eps(1, 100);
  const Configuration out = augment(c, eps);
  const Stats so = compute_stats(out);
  EXPECT_TRUE(so.both_corners_positive());
  EXPECT_GT(so.prob_B, st.prob_B - eps);
  EXPECT_LE(out.cols(), c.cols() + 1);
  EXPECT_LE(out.rows(), c.rows() + 1);
}

TEST(Augment, TwoSidedIsIdentity) {
  EXPECT_EQ(augment(extremal_config(kQuarter), Rational(1, 100)), extremal_config(kQuarter));
  EXPECT_THROW(augment(extremal_config(kQuarter), Rational(0)), ConfigError);
}

TEST(Reduce, ExtremalIsNearIdentity) {
  const Configuration c = extremal_config(kQuarter);
  const ReduceResult r = reduce(c, Rational(1, 1000));
  EXPECT_EQ(r.out, c);
  EXPECT_TRUE(reduced_g(r.out));
  EXPECT_TRUE(reduced_h(r.out));
  EXPECT_EQ(certify_upper_bound(r.out), Rational(2, 5));
  for (const TransformTrace& t : r.trace) EXPECT_TRUE(t.ok()) << t.name;
}

TEST(Reduce, RejectsInvalidInput) {
  EXPECT_THROW(reduce(halfpoint_example(), Rational(1, 100)), ConfigError);
  const Configuration zero = make(Rational(1, 4), 1, 1, {{0, 0, Rational(1), Rational(0)}});
  EXPECT_THROW(reduce(zero, Rational(1, 100)), ConfigError);
  EXPECT_THROW(reduce(extremal_config(kQuarter), Rational(-1, 100)), ConfigError);
}

TEST(Reduce, RandomConfigurationsMeetPostconditions) {
  const Rational eps(1, 1000);
  for (const auto& d : {Rational(1, 10), Rational(1, 3), Rational(49, 100)}) {
    for (std::uint64_t i = 0; i < 100; ++i) {
      Rng rng(stream_seed(17, i));
      const auto c = random_config_with_b(Delta(d), rng);
      ASSERT_TRUE(c.has_value());
      const ReduceResult r = reduce(*c, eps);
      const Configuration start = normalize(*c);
      ASSERT_TRUE(reduced_g(r.out));
      ASSERT_TRUE(reduced_h(r.out));
      const mpq_class before = oracle::prob_b(*c);
      const mpq_class after = oracle::prob_b(r.out);
      ASSERT_GT(after, before - eps.mpq());
      const Rational cert = certify_upper_bound(r.out);
      ASSERT_GE(cert.mpq(), after);
      ASSERT_LE(cert.mpq(), oracle::lambda(d.mpq()));
      ASSERT_LE(r.a_visits, start.cols() + start.rows() + 2);
      for (const TransformTrace& t : r.trace) {
        if (t.name != "augment") ASSERT_TRUE(t.ok()) << t.name;
      }
    }
  }
}

TEST(Reduce, StaircasesReachEveryBranch) {
  std::set<std::string> seen;
  for (int m = 1; m <= 6; ++m) {
    for (std::uint64_t i = 0; i < 60; ++i) {
      Rng rng(stream_seed(18 + m, i));
      const Configuration c = random_staircase_config(Delta(Rational(1, 4)), rng, m, true);
      ASSERT_TRUE(canonical_violations(c).empty());
      const ReduceResult r = reduce(c, Rational(1, 1000));
      ASSERT_TRUE(reduced_g(r.out) && reduced_h(r.out));
      ASSERT_EQ(oracle::prob_b(r.out), oracle::prob_b(c));
      ASSERT_LE(r.a_visits, c.cols() + c.rows() + 2);
      certify_upper_bound(r.out);
      for (const std::string& b : r.branches) {
        seen.insert(b.substr(b.find_last_of('/') + 1));
      }
    }
  }
  for (const char* b : {"top_corner", "three_columns", "second_top", "many_columns"}) {
    EXPECT_TRUE(seen.count(b)) << b;
  }
}

TEST(IterationCap, GrowsQuadratically) {
  EXPECT_EQ(iteration_cap(extremal_config(kQuarter)), 16 * 16);
}
