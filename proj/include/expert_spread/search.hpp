#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "expert_spread/config.hpp"
#include "expert_spread/transforms.hpp"

namespace expert_spread {

/// Seeded generator with a platform-independent bounded draw.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  std::uint64_t next() { return engine_(); }
  /// Uniform on [0, n); n > 0.
  std::uint64_t below(std::uint64_t n);
  bool coin() { return (next() >> 63) != 0; }

 private:
  std::mt19937_64 engine_;
};

/// Mixes a base seed with a stream index so that every stream is independent
/// of how work is split between threads.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index);

struct RandomConfigOptions {
  Index max_cols = 4;
  Index max_rows = 4;
  int min_exponent = 4;   // denominators 2^min_exponent ..
  int max_exponent = 10;  // .. 2^max_exponent
};

/// Integer composition over the 2*m*n mass slots; zero lines dropped, not sorted.
Configuration random_config(const Delta& delta, Rng& rng, const RandomConfigOptions& opt = {});
/// Rejection-samples random_config until P(B) > 0.
std::optional<Configuration> random_config_with_b(const Delta& delta, Rng& rng, const RandomConfigOptions& opt = {},
                                                  int max_tries = 10000);

/// Canonical staircase with m upper-left columns and one pure-A lower-right
/// column, built from interleaved forecast targets; requires delta < 1/2, m >= 1.
/// A random transpose or complement_reflect is applied when `reorient` is set.
Configuration random_staircase_config(const Delta& delta, Rng& rng, int m, bool reorient = false);

struct SearchResult {
  Delta delta;
  Rational best_prob_B;
  Configuration best_config;
  std::uint64_t configs_evaluated = 0;
  std::string method;
  std::optional<std::uint64_t> seed;
};

inline constexpr std::uint64_t kDefaultEnumerationCap = 100'000'000;
/// kDefaultEnumerationCap unless EXPERT_SPREAD_ENUM_CAP is set.
std::uint64_t enumeration_cap();
/// C(denom + slots - 1, denom) with slots = 2 * cols * rows.
mpz_class enumeration_size(Index cols, Index rows, long denom);

class SearchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

SearchResult exhaustive_search(const Delta& delta, Index cols, Index rows, long denom,
                               std::uint64_t cap = enumeration_cap(), unsigned threads = 0);

SearchResult hill_climb(const Delta& delta, Index cols, Index rows, std::uint64_t iters, std::uint64_t seed);

struct FuzzReport {
  std::vector<TransformTrace> violations;
  std::uint64_t configs = 0;
  std::uint64_t reductions = 0;
  std::uint64_t swaps_checked = 0;
};

/// Runs every transform and the full reduction on seeded random inputs and
/// collects each contract violation.
FuzzReport fuzz_transforms(const Delta& delta, std::uint64_t n_configs, std::uint64_t seed, unsigned threads = 0,
                           const std::vector<Configuration>& injected = {});

}  // namespace expert_spread
