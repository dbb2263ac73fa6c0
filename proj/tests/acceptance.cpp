// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "expert_spread/bounds.hpp"
#include "expert_spread/discretize.hpp"
#include "expert_spread/search.hpp"
#include "expert_spread/transforms.hpp"
#include "oracle.hpp"

using namespace expert_spread;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void fail(const std::string& why) {
    if (pass) detail = why;
    pass = false;
  }
};

std::vector<Rational> deltas(std::initializer_list<Rational> v) { return v; }

/// Keeps drawing until P(B) > 0; small delta can need many rounds of rejection.
Configuration config_with_b(const Delta& delta, Rng& rng) {
  for (;;) {
    if (std::optional<Configuration> c = random_config_with_b(delta, rng)) return std::move(*c);
  }
}

Outcome sharp_value() {
  Outcome o;
  const Rational expected[] = {Rational(2, 11), Rational(2, 5), Rational(1, 2), Rational(4, 7)};
  int i = 0;
  for (const Rational& d : deltas({Rational(1, 10), Rational(1, 4), Rational(1, 3), Rational(2, 5)})) {
    const Rational got = compute_stats(extremal_config(Delta(d))).prob_B;
    const mpq_class closed = 2 * d.mpq() / (1 + d.mpq());
    if (got != expected[i] || got.mpq() != closed) o.fail("delta " + d.str() + " gave " + got.str());
    ++i;
  }
  if (o.pass) o.detail = "2/11, 2/5, 1/2, 4/7 exact";
  return o;
}

Outcome brute_force() {
  Outcome o;
  const Delta d(Rational(1, 4));
  const SearchResult fifths = exhaustive_search(d, 2, 2, 5);
  if (fifths.best_prob_B != Rational(2, 5)) o.fail("2x2/5 max " + fifths.best_prob_B.str());
  if (normalize(fifths.best_config) != normalize(extremal_config(d))) o.fail("2x2/5 witness is not the extremal");
  const SearchResult eighths = exhaustive_search(d, 2, 2, 8);
  const SearchResult sixths = exhaustive_search(d, 3, 3, 6);
  if (eighths.best_prob_B > Rational(2, 5)) o.fail("2x2/8 max " + eighths.best_prob_B.str());
  if (sixths.best_prob_B > Rational(2, 5)) o.fail("3x3/6 max " + sixths.best_prob_B.str());
  if (o.pass) {
    o.detail = "2x2/5 = 2/5 (extremal witness), 2x2/8 = " + eighths.best_prob_B.str() +
               ", 3x3/6 = " + sixths.best_prob_B.str() + ", " +
               std::to_string(fifths.configs_evaluated + eighths.configs_evaluated + sixths.configs_evaluated) +
               " configs";
  }
  return o;
}

Outcome upper_bound_safety() {
  Outcome o;
  std::uint64_t total = 0, b_cells = 0;
  const auto ds = deltas({Rational(1, 10), Rational(1, 4), Rational(1, 3), Rational(2, 5), Rational(49, 100)});
  for (size_t di = 0; di < ds.size(); ++di) {
    const Delta delta(ds[di]);
    const Rational bound = lambda_sharp(delta);
    for (std::uint64_t i = 0; i < 2000; ++i) {
      Rng rng(stream_seed(1000 + di, i));
      const Configuration c = i % 2 == 0 ? config_with_b(delta, rng) : random_config(delta, rng);
      const Stats st = compute_stats(c);
      ++total;
      if (st.prob_B.mpq() != oracle::prob_b(c)) o.fail("P(B) disagrees with the oracle");
      if (st.prob_B > bound) o.fail("P(B) = " + st.prob_B.str() + " above bound at delta " + ds[di].str());
      for (Index k = 0; k < c.cols(); ++k) {
        for (Index j = 0; j < c.rows(); ++j) {
          if (!st.b_mask(k, j)) continue;
          ++b_cells;
          if (!overlap_check(c, k, j).holds) o.fail("overlap check failed");
        }
      }
      if (!pitman_inclusion_holds(c, st)) o.fail("Pitman inclusion failed");
    }
  }
  if (o.pass) o.detail = std::to_string(total) + " configs, " + std::to_string(b_cells) + " B cells";
  return o;
}

Outcome transform_contracts() {
  Outcome o;
  const FuzzReport r = fuzz_transforms(Delta(Rational(1, 4)), 10000, 20240101);
  for (const TransformTrace& v : r.violations) o.fail("violation in " + v.name);
  if (r.swaps_checked == 0) o.fail("no diagonal swaps exercised");
  if (o.pass) {
    o.detail = std::to_string(r.configs) + " configs, " + std::to_string(r.reductions) + " reductions, " +
               std::to_string(r.swaps_checked) + " exact swaps";
  }
  return o;
}

Outcome reduction_postconditions() {
  Outcome o;
  const Rational eps(1, 1000);
  std::uint64_t runs = 0, steps = 0;
  const auto ds = deltas({Rational(1, 10), Rational(1, 4), Rational(1, 3), Rational(2, 5), Rational(49, 100)});
  for (size_t di = 0; di < ds.size(); ++di) {
    const Delta delta(ds[di]);
    for (std::uint64_t i = 0; i < 240; ++i) {
      Rng rng(stream_seed(5000 + di, i));
      const Configuration c = i % 3 == 2 ? random_staircase_config(delta, rng, 1 + static_cast<int>(rng.below(6)),
                                                                   true)
                                         : config_with_b(delta, rng);
      const Rational before = compute_stats(c).prob_B;
      try {
        const ReduceResult res = reduce(c, eps);
        const Rational after = compute_stats(res.out).prob_B;
        const Rational cert = certify_upper_bound(res.out);
        ++runs;
        steps += res.trace.size();
        if (!reduced_g(res.out) || !reduced_h(res.out)) o.fail("output not reduced");
        if (!(before - after < eps)) o.fail("P(B) dropped by " + (before - after).str());
        if (cert < after || cert > lambda_sharp(delta)) o.fail("certificate " + cert.str() + " out of range");
        // augment may give up less than eps of P(B); the eps check above covers it.
        for (const TransformTrace& t : res.trace) {
          if (t.name != "augment" && !t.ok()) o.fail("contract broken in " + t.name);
        }
      } catch (const ContradictionError& e) {
        o.fail(std::string("contradiction branch fired: ") + e.what());
      } catch (const std::exception& e) {
        o.fail(e.what());
      }
    }
  }
  if (o.pass) o.detail = std::to_string(runs) + " reductions, " + std::to_string(steps) + " steps";
  return o;
}

Outcome discontinuity() {
  Outcome o;
  const Configuration c = halfpoint_example();
  if (compute_stats(c.with_delta(Delta(Rational(1, 2)))).prob_B != 1) o.fail("P(B) != 1 at 1/2");
  if (compute_stats(c.with_delta(Delta(Rational(3, 4)))).prob_B != 1) o.fail("P(B) != 1 at 3/4");
  if (!compute_stats(c.with_delta(Delta(Rational(49, 100)))).prob_B.is_zero()) o.fail("P(B) != 0 at 49/100");
  if (o.pass) o.detail = "1, 1, 0 at 1/2, 3/4, 49/100";
  return o;
}

Outcome correlation() {
  Outcome o;
  for (const Rational& d : deltas({Rational(1, 4), Rational(1, 2), Rational(9, 10)})) {
    const Rational rho = correlation_example(Delta(d)).correlation;
    if (rho != -d) o.fail("delta " + d.str() + " gave " + rho.str());
  }
  if (o.pass) o.detail = "-1/4, -1/2, -9/10 exact";
  return o;
}

Outcome discretization() {
  Outcome o;
  std::uint64_t checks = 0;
  const auto ds = deltas({Rational(1, 10), Rational(1, 4), Rational(2, 5)});
  for (std::uint64_t i = 0; i < 1200; ++i) {
    const Delta delta(ds[i % ds.size()]);
    Rng rng(stream_seed(9000, i));
    const RawSpace s = random_raw_space(rng);
    const Rational raw = contradiction_mass(to_configuration(s, delta), delta.threshold());
    for (long n : {4L, 16L, 64L}) {
      const Coarsening c = grid_coarsen(s, n, delta);
      ++checks;
      if (c.max_x_shift > Rational(1, n) || c.max_y_shift > Rational(1, n)) o.fail("shift above 1/n");
      if (raw > contradiction_mass(c.cfg, delta.threshold() - Rational(2, n))) {
        o.fail("coarse mass below raw mass at n = " + std::to_string(n));
      }
    }
  }
  if (o.pass) o.detail = std::to_string(checks) + " coarsenings of 1200 spaces";
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"sharp value exactness", sharp_value},
      {"brute-force sharpness", brute_force},
      {"upper-bound safety", upper_bound_safety},
      {"transformation contracts", transform_contracts},
      {"reduction postconditions", reduction_postconditions},
      {"discontinuity at one half", discontinuity},
      {"correlation example", correlation},
      {"discretization", discretization},
  };
  int failures = 0;
  int index = 1;
  for (const auto& [name, run] : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o.fail(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %d %s: %s [%.2f s]\n", o.pass ? "PASS" : "FAIL", index++, name, o.detail.c_str(), secs);
    std::fflush(stdout);
    if (!o.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
