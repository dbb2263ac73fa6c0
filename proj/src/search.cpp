#include "expert_spread/search.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <mutex>
#include <thread>
#include <tuple>

#include "expert_spread/bounds.hpp"

namespace expert_spread {

std::uint64_t Rng::below(std::uint64_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  for (;;) {
    const std::uint64_t v = next();
    if (v < limit) return v % n;
  }
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

unsigned worker_count(unsigned requested) {
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

Configuration from_units(const Delta& delta, Index cols, Index rows, const std::vector<long>& units, long denom) {
  Grid a(cols, rows);
  Grid ac(cols, rows);
  for (Index k = 0; k < cols; ++k) {
    for (Index j = 0; j < rows; ++j) {
      const size_t s = static_cast<size_t>(2 * (k * rows + j));
      a(k, j) = Rational(units[s], denom);
      ac(k, j) = Rational(units[s + 1], denom);
    }
  }
  return drop_empty(Configuration(delta, std::move(a), std::move(ac)));
}

}  // namespace

Configuration random_config(const Delta& delta, Rng& rng, const RandomConfigOptions& opt) {
  const Index cols = 1 + static_cast<Index>(rng.below(opt.max_cols));
  const Index rows = 1 + static_cast<Index>(rng.below(opt.max_rows));
  const int exponent = opt.min_exponent + static_cast<int>(rng.below(opt.max_exponent - opt.min_exponent + 1));
  const long denom = 1L << exponent;
  const size_t slots = static_cast<size_t>(2 * cols * rows);
  std::vector<size_t> active;
  if (rng.coin()) {
    const size_t count = 1 + rng.below(std::min<size_t>(slots, 5));
    while (active.size() < count) {
      const size_t s = rng.below(slots);
      if (std::find(active.begin(), active.end(), s) == active.end()) active.push_back(s);
    }
  } else {
    for (size_t s = 0; s < slots; ++s) {
      if (rng.coin()) active.push_back(s);
    }
    if (active.empty()) active.push_back(rng.below(slots));
  }
  std::vector<long> units(slots, 0);
  for (long u = 0; u < denom; ++u) ++units[active[rng.below(active.size())]];
  return from_units(delta, cols, rows, units, denom);
}

std::optional<Configuration> random_config_with_b(const Delta& delta, Rng& rng, const RandomConfigOptions& opt,
                                                  int max_tries) {
  for (int i = 0; i < max_tries; ++i) {
    Configuration c = random_config(delta, rng, opt);
    if (compute_stats(c).prob_B.is_positive()) return c;
  }
  return std::nullopt;
}

Configuration random_staircase_config(const Delta& delta, Rng& rng, int m, bool reorient) {
  if (!delta.below_half() || m < 1) throw ConfigError("random_staircase_config needs delta < 1/2 and m >= 1");
  const Rational& d = delta.value();
  const Rational t = delta.threshold();
  // Chain 0 < x_1 < s_1 < x_2 < ... < x_m <= s_m = delta, with y_{k+1} = s_k + t.
  const long grid = 64L * m;
  std::vector<long> picks;
  while (picks.size() < static_cast<size_t>(2 * m - 1)) {
    const long v = 1 + static_cast<long>(rng.below(grid - 1));
    if (std::find(picks.begin(), picks.end(), v) == picks.end()) picks.push_back(v);
  }
  std::sort(picks.begin(), picks.end());
  std::vector<Rational> x(m), y(m + 1);
  for (int k = 0; k < m; ++k) {
    x[k] = d * Rational(picks[2 * k], grid);
    const Rational s = k + 1 < m ? d * Rational(picks[2 * k + 1], grid) : d;
    y[k + 1] = s + t;
  }
  auto weight = [&] { return Rational(1 + static_cast<long>(rng.below(16)), 1 + static_cast<long>(rng.below(16))); };

  const Index n = m + 1;
  Grid a = Grid::Zero(n, n);
  Grid ac = Grid::Zero(n, n);
  // Rows 1..m-1 (0-based) get their A^c from the border cell (j-1, j).
  for (Index j = 1; j < m; ++j) {
    ac(j - 1, j) = weight();
    for (Index k = 0; k + 1 < j; ++k) {
      if (rng.below(3) != 0) a(k, j) = weight() * ac(j - 1, j) / 8;
    }
    const Rational target = ac(j - 1, j) * y[j] / (Rational(1) - y[j]);
    Rational ul = a.col(j).sum();
    if (ul > target) {
      for (Index k = 0; k + 1 < j; ++k) a(k, j) = a(k, j) * target / (ul * 2);
      ul = a.col(j).sum();
    }
    a(m, j) = target - ul;
  }
  for (Index k = 0; k < m; ++k) a(k, m) = weight();
  if (rng.coin()) a(m, m) = weight();
  for (Index k = 0; k < m; ++k) {
    Rational col_a = a.row(k).sum();
    const Rational col_ac_top = ac.row(k).sum();
    const Rational need = col_ac_top * x[k] / (Rational(1) - x[k]);
    if (col_a <= need) {
      a(k, m) += need - col_a + weight() / 16;
      col_a = a.row(k).sum();
    }
    ac(k, 0) = col_a * (Rational(1) - x[k]) / x[k] - col_ac_top;
  }
  const Rational bottom = ac.col(0).sum();
  a(m, 0) = bottom * d / (Rational(1) - d) * Rational(1 + static_cast<long>(rng.below(8)), 9);

  const Rational total = a.sum() + ac.sum();
  Configuration cfg(delta, a / total, ac / total);
  if (reorient) {
    if (rng.coin()) cfg = transpose(cfg);
    if (rng.coin()) cfg = complement_reflect(cfg);
  }
  return cfg;
}

std::uint64_t enumeration_cap() {
  if (const char* env = std::getenv("EXPERT_SPREAD_ENUM_CAP")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end != env && *end == '\0') return v;
  }
  return kDefaultEnumerationCap;
}

mpz_class enumeration_size(Index cols, Index rows, long denom) {
  mpz_class r;
  mpz_bin_uiui(r.get_mpz_t(), static_cast<unsigned long>(denom + 2 * cols * rows - 1),
               static_cast<unsigned long>(denom));
  return r;
}

namespace {

/// Exact integer evaluation of P(B) * denom for one composition.
class UnitEvaluator {
 public:
  UnitEvaluator(const Delta& delta, Index cols, Index rows)
      : cols_(cols), rows_(rows), pa_(cols), pm_(cols), qa_(rows), qm_(rows) {
    const mpz_class num = delta.value().numerator();
    const mpz_class den = delta.value().denominator();
    if (!num.fits_slong_p() || !den.fits_slong_p() || den > 1'000'000'000L) {
      throw SearchError("exhaustive search needs a delta with a small denominator");
    }
    dn_ = num.get_si();
    dd_ = den.get_si();
  }

  long b_units(const std::vector<long>& u) {
    std::fill(pa_.begin(), pa_.end(), 0);
    std::fill(pm_.begin(), pm_.end(), 0);
    std::fill(qa_.begin(), qa_.end(), 0);
    std::fill(qm_.begin(), qm_.end(), 0);
    for (Index k = 0; k < cols_; ++k) {
      for (Index j = 0; j < rows_; ++j) {
        const size_t s = static_cast<size_t>(2 * (k * rows_ + j));
        pa_[k] += u[s];
        qa_[j] += u[s];
        pm_[k] += u[s] + u[s + 1];
        qm_[j] += u[s] + u[s + 1];
      }
    }
    long count = 0;
    for (Index k = 0; k < cols_; ++k) {
      for (Index j = 0; j < rows_; ++j) {
        const size_t s = static_cast<size_t>(2 * (k * rows_ + j));
        const long m = u[s] + u[s + 1];
        if (m == 0) continue;
        __int128 diff = static_cast<__int128>(pa_[k]) * qm_[j] - static_cast<__int128>(qa_[j]) * pm_[k];
        if (diff < 0) diff = -diff;
        const __int128 lhs = diff * dd_;
        const __int128 rhs = static_cast<__int128>(dd_ - dn_) * pm_[k] * qm_[j];
        if (lhs >= rhs) count += m;
      }
    }
    return count;
  }

  /// count / denom <= 2 delta / (1 + delta), or <= 1 from delta = 1/2 on.
  bool within_bound(long count, long denom) const {
    if (2 * dn_ >= dd_) return count <= denom;
    return static_cast<__int128>(count) * (dd_ + dn_) <= static_cast<__int128>(2) * dn_ * denom;
  }

 private:
  Index cols_, rows_;
  long dn_ = 0, dd_ = 1;
  std::vector<long> pa_, pm_, qa_, qm_;
};

struct PartialBest {
  long count = -1;
  long a_units = 0;
  std::vector<long> units;
  std::uint64_t evaluated = 0;

  /// Ties on P(B) go to the smaller P(A), then to the earlier composition.
  bool improved_by(long c, long a) const { return c > count || (c == count && a < a_units); }
};

long a_units_of(const std::vector<long>& u) {
  long a = 0;
  for (size_t s = 0; s < u.size(); s += 2) a += u[s];
  return a;
}

void enumerate_rest(UnitEvaluator& ev, std::vector<long>& u, size_t pos, long remaining, long denom,
                    PartialBest& best) {
  if (pos + 1 == u.size()) {
    u[pos] = remaining;
    const long c = ev.b_units(u);
    ++best.evaluated;
    if (!ev.within_bound(c, denom)) {
      throw SearchError("found a configuration above the sharp bound");
    }
    if (best.improved_by(c, a_units_of(u))) {
      best.count = c;
      best.a_units = a_units_of(u);
      best.units = u;
    }
    return;
  }
  for (long v = 0; v <= remaining; ++v) {
    u[pos] = v;
    enumerate_rest(ev, u, pos + 1, remaining - v, denom, best);
  }
  u[pos] = 0;
}

}  // namespace

SearchResult exhaustive_search(const Delta& delta, Index cols, Index rows, long denom, std::uint64_t cap,
                               unsigned threads) {
  if (cols < 1 || rows < 1 || denom < 1) throw ConfigError("exhaustive_search needs positive dimensions and denom");
  const mpz_class size = enumeration_size(cols, rows, denom);
  if (size > mpz_class(std::to_string(cap))) {
    throw SearchError("enumeration size " + size.get_str() + " exceeds cap " + std::to_string(cap));
  }
  const size_t slots = static_cast<size_t>(2 * cols * rows);
  std::vector<PartialBest> parts(static_cast<size_t>(denom + 1));
  std::atomic<long> next_first{0};
  std::mutex error_mu;
  std::string error;
  auto work = [&] {
    UnitEvaluator ev(delta, cols, rows);
    std::vector<long> u(slots, 0);
    for (long first = next_first++; first <= denom; first = next_first++) {
      try {
        u.assign(slots, 0);
        u[0] = first;
        if (slots == 1) {
          if (first != denom) continue;
          PartialBest& pb = parts[first];
          pb.count = ev.b_units(u);
          pb.a_units = a_units_of(u);
          pb.units = u;
          pb.evaluated = 1;
        } else {
          enumerate_rest(ev, u, 1, denom - first, denom, parts[first]);
        }
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(error_mu);
        error = e.what();
      }
    }
  };
  const unsigned n = std::min<unsigned>(worker_count(threads), static_cast<unsigned>(denom + 1));
  std::vector<std::thread> pool;
  for (unsigned i = 0; i < n; ++i) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (!error.empty()) throw SearchError(error);

  PartialBest best;
  std::uint64_t evaluated = 0;
  for (const PartialBest& pb : parts) {
    evaluated += pb.evaluated;
    if (best.improved_by(pb.count, pb.a_units)) best = pb;  // earlier partitions hold earlier compositions
  }
  Configuration witness = from_units(delta, cols, rows, best.units, denom);
  const Rational prob = compute_stats(witness).prob_B;
  if (prob != Rational(best.count, denom)) throw std::logic_error("exhaustive search evaluation mismatch");
  return {delta, prob, witness, evaluated, "exhaustive", std::nullopt};
}

SearchResult hill_climb(const Delta& delta, Index cols, Index rows, std::uint64_t iters, std::uint64_t seed) {
  if (cols < 1 || rows < 1 || iters < 1) throw ConfigError("hill_climb needs positive dimensions and iterations");
  Rng rng(seed);
  const size_t slots = static_cast<size_t>(2 * cols * rows);
  const Rational bound = lambda_sharp(delta);
  auto evaluate = [&](const std::vector<Rational>& mass) {
    Grid a(cols, rows);
    Grid ac(cols, rows);
    for (Index k = 0; k < cols; ++k) {
      for (Index j = 0; j < rows; ++j) {
        const size_t s = static_cast<size_t>(2 * (k * rows + j));
        a(k, j) = mass[s];
        ac(k, j) = mass[s + 1];
      }
    }
    Configuration c = drop_empty(Configuration(delta, std::move(a), std::move(ac)));
    Rational p = compute_stats(c).prob_B;
    if (p > bound) throw SearchError("hill climb found a configuration above the sharp bound");
    return std::pair{std::move(c), std::move(p)};
  };

  const std::uint64_t restarts = std::clamp<std::uint64_t>(iters / 1250, 1, 8);
  const std::uint64_t per_restart = (iters + restarts - 1) / restarts;
  std::optional<std::pair<Configuration, Rational>> best;
  std::uint64_t evaluated = 0;
  while (evaluated < iters) {
    std::vector<Rational> cur(slots);
    for (int u = 0; u < 16; ++u) cur[rng.below(slots)] += Rational(1, 16);
    auto [cfg, val] = evaluate(cur);
    ++evaluated;
    if (!best || val > best->second) best = std::pair{cfg, val};
    for (std::uint64_t t = 1; t < per_restart && evaluated < iters; ++t) {
      ++evaluated;
      const long level = 2 + static_cast<long>(8 * t / per_restart);
      const Rational quantum(1, 1L << level);
      const size_t src = rng.below(slots);
      const size_t dst = rng.below(slots);
      if (src == dst || cur[src] < quantum) continue;
      cur[src] -= quantum;
      cur[dst] += quantum;
      auto [next_cfg, next_val] = evaluate(cur);
      if (next_val >= val) {
        val = next_val;
        if (val > best->second) best = std::pair{next_cfg, val};
      } else {
        cur[src] += quantum;
        cur[dst] -= quantum;
      }
    }
  }
  return {delta, best->second, best->first, evaluated, "hill_climb", seed};
}

namespace {

TransformTrace error_trace(const std::string& op, const std::string& what, const Configuration& cfg) {
  TransformTrace t;
  t.name = "error:" + op + ": " + what;
  t.dims_before = t.dims_after = {cfg.cols(), cfg.rows()};
  t.contract_prob_b = t.contract_dims = t.contract_corners = false;
  return t;
}

struct FuzzLocal {
  std::vector<TransformTrace> violations;
  std::uint64_t reductions = 0;
  std::uint64_t swaps = 0;
};

void fuzz_one(const Configuration& raw, Rng& rng, FuzzLocal& out) {
  auto check = [&](const std::string& name, std::vector<Index> params, const Configuration& before,
                   const Configuration& after) {
    TransformTrace t = make_trace(name, std::move(params), before, after);
    if (!t.ok()) out.violations.push_back(std::move(t));
  };
  auto guarded = [&](const std::string& op, const Configuration& cfg, auto&& body) {
    try {
      body();
    } catch (const std::exception& e) {
      out.violations.push_back(error_trace(op, e.what(), cfg));
    }
  };

  const Configuration base = normalize(raw);
  {
    // Corner masses are only meaningful on sorted input.
    TransformTrace t = make_trace("normalize", {}, raw, base);
    if (!is_sorted(raw)) t.contract_corners = true;
    if (!t.ok()) out.violations.push_back(std::move(t));
  }
  const Stats st = compute_stats(base);

  for (Index k = 0; k + 1 < base.cols(); ++k) {
    guarded("merge_columns", base, [&] { check("merge_columns", {k}, base, merge_columns(base, k)); });
  }
  for (Index j = 0; j + 1 < base.rows(); ++j) {
    guarded("merge_rows", base, [&] { check("merge_rows", {j}, base, merge_rows(base, j)); });
  }
  guarded("corner_fill", base, [&] { check("corner_fill", {}, base, corner_fill(base)); });
  guarded("ensure_positive_border", base,
          [&] { check("ensure_positive_border", {}, base, ensure_positive_border(base)); });
  guarded("purify_all_borders", base, [&] { check("purify_all_borders", {}, base, purify_all_borders(base)); });

  guarded("zigzag_normalize", base, [&] {
    const Configuration z = zigzag_normalize(base);
    check("zigzag_normalize", {}, base, z);
    const Stats sz = compute_stats(z);
    for (Index k = 0; k + 1 < z.cols(); ++k) {
      if (!(sz.x(k) < sz.x(k + 1))) out.violations.push_back(error_trace("zigzag_normalize", "x tie", z));
    }
    for (Index j = 0; j + 1 < z.rows(); ++j) {
      if (!(sz.y(j) < sz.y(j + 1))) out.violations.push_back(error_trace("zigzag_normalize", "y tie", z));
    }
    std::vector<CellIndex> border = sz.d_minus;
    border.insert(border.end(), sz.d_plus.begin(), sz.d_plus.end());
    for (const CellIndex& c : border) {
      if (z.mass(c.col, c.row).is_zero()) continue;
      guarded("purify_border_cell", z, [&] {
        check("purify_border_cell", {c.col, c.row}, z, purify_border_cell(z, c.col, c.row));
      });
    }
    for (Index k = 0; k < z.cols(); ++k) {
      for (Index i = 0; i < z.rows(); ++i) {
        if (!sz.b_mask(k, i) || !z.mass(k, i).is_zero()) continue;
        guarded("absorb_empty_border_cell", z, [&] {
          check("absorb_empty_border_cell", {k, i}, z, absorb_empty_border_cell(z, k, i));
        });
      }
    }
  });

  // Swaps are sampled among pairs whose B pattern admits them and whose masses are positive.
  std::vector<std::tuple<CellIndex, CellIndex, bool>> swaps;
  for (Index k1 = 0; k1 < base.cols(); ++k1) {
    for (Index k2 = 0; k2 < base.cols(); ++k2) {
      for (Index j1 = 0; j1 < base.rows(); ++j1) {
        for (Index j2 = 0; j2 < base.rows(); ++j2) {
          if (k1 >= k2 || j1 == j2) continue;
          const CellIndex c1{k1, j1}, c2{k2, j2};
          if (!swap_pattern_holds(st, c1, c2)) continue;
          for (const bool complement : {false, true}) {
            const Grid& g = complement ? base.ac_mass() : base.a_mass();
            if (!g(k1, j1).is_zero() && !g(k2, j2).is_zero()) swaps.emplace_back(c1, c2, complement);
          }
        }
      }
    }
  }
  for (int n = 0; n < 4 && !swaps.empty(); ++n) {
    const auto [c1, c2, complement] = swaps[rng.below(swaps.size())];
    guarded("diagonal_swap", base, [&] {
      const Configuration sw = diagonal_swap(base, c1, c2, complement);
      TransformTrace t = make_trace(complement ? "diagonal_swap_c" : "diagonal_swap",
                                    {c1.col, c1.row, c2.col, c2.row}, base, sw);
      const Stats ss = compute_stats(sw);
      const bool exact = !(sw == base) && t.prob_B_after == t.prob_B_before && ss.x == st.x && ss.y == st.y &&
                         ss.p == st.p && ss.q == st.q;
      if (!exact) t.contract_prob_b = false;
      if (!t.ok()) out.violations.push_back(std::move(t));
      ++out.swaps;
    });
  }

  if (st.both_corners_positive()) {
    guarded("empty_corner_rectangles", base,
            [&] { check("empty_corner_rectangles", {}, base, empty_corner_rectangles(base)); });
    guarded("canonicalize", base, [&] {
      const Configuration c = canonicalize(base);
      check("canonicalize", {}, base, c);
      const auto bad = canonical_violations(c);
      if (!bad.empty()) out.violations.push_back(error_trace("canonicalize", bad.front(), c));
    });
  }

  if (st.prob_B.is_positive()) {
    const Rational eps(1, 1000);
    guarded("augment", base, [&] {
      const Configuration a = augment(base, eps);
      const Stats sa = compute_stats(a);
      if (!(sa.prob_B > st.prob_B - eps) || !sa.both_corners_positive() || a.cols() > base.cols() + 1 ||
          a.rows() > base.rows() + 1) {
        out.violations.push_back(error_trace("augment", "postcondition", a));
      }
    });
    guarded("reduce", base, [&] {
      ++out.reductions;
      const ReduceResult r = reduce(base, eps);
      for (const TransformTrace& t : r.trace) {
        if (t.name != "augment" && !t.ok()) out.violations.push_back(t);
      }
      const Rational out_b = compute_stats(r.out).prob_B;
      const Rational cert = certify_upper_bound(r.out);
      const bool ok = reduced_g(r.out) && reduced_h(r.out) && out_b > st.prob_B - eps && cert >= out_b &&
                      cert <= lambda_sharp(base.delta()) &&
                      r.a_visits <= static_cast<int>(base.cols() + base.rows() + 2);
      if (!ok) out.violations.push_back(error_trace("reduce", "postcondition", r.out));
    });
  }
}

}  // namespace

FuzzReport fuzz_transforms(const Delta& delta, std::uint64_t n_configs, std::uint64_t seed, unsigned threads,
                           const std::vector<Configuration>& injected) {
  if (n_configs < 1) throw ConfigError("fuzz_transforms needs at least one configuration");
  if (!delta.below_half()) throw ConfigError("fuzz_transforms requires delta < 1/2");
  std::vector<FuzzLocal> locals(n_configs);
  std::atomic<std::uint64_t> next{0};
  auto work = [&] {
    for (std::uint64_t i = next++; i < n_configs; i = next++) {
      Rng rng(stream_seed(seed, i));
      // Half the draws are conditioned on P(B) > 0 and a quarter are canonical
      // staircases, which reach the deep reduction branches.
      std::optional<Configuration> drawn;
      if (i < injected.size()) {
        drawn = injected[i].with_delta(delta);
      } else if (i % 2 == 0) {
        drawn = random_config_with_b(delta, rng);
      } else if (i % 4 == 1) {
        drawn = random_staircase_config(delta, rng, 1 + static_cast<int>(rng.below(6)), true);
      }
      const Configuration cfg = drawn ? *drawn : random_config(delta, rng);
      try {
        fuzz_one(cfg, rng, locals[i]);
      } catch (const std::exception& e) {
        locals[i].violations.push_back(error_trace("fuzz", e.what(), cfg));
      }
    }
  };
  const unsigned n = static_cast<unsigned>(std::min<std::uint64_t>(worker_count(threads), n_configs));
  std::vector<std::thread> pool;
  for (unsigned i = 0; i < n; ++i) pool.emplace_back(work);
  for (auto& t : pool) t.join();

  FuzzReport report;
  report.configs = n_configs;
  for (auto& l : locals) {
    report.reductions += l.reductions;
    report.swaps_checked += l.swaps;
    for (auto& v : l.violations) report.violations.push_back(std::move(v));
  }
  return report;
}

}  // namespace expert_spread
