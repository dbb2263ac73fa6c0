#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "expert_spread/config.hpp"

namespace expert_spread {

struct BoundReport {
  Delta delta;
  Rational lambda_sharp;
  std::optional<Rational> pitman_upper;  // defined for delta < 1/2 only
  Rational achieved;
  std::optional<Rational> certified_upper;
};

/// 2 delta / (1 + delta) below one half, 1 from one half on.
Rational lambda_sharp(const Delta& delta);
/// 2 delta; requires delta < 1/2.
Rational pitman_upper(const Delta& delta);

Configuration extremal_config(const Delta& delta);
Configuration halfpoint_example(const Delta& delta = Delta(Rational(1, 2)));

struct WeightedPoint {
  Rational x, y, mass;
};
struct CorrelationExample {
  std::vector<WeightedPoint> points;
  Rational correlation;
};
CorrelationExample correlation_example(const Delta& delta);

/// Sum over matched B cells of delta/(1+delta) (p_k + q_j(k)). Requires at
/// most one positive-mass B cell per column and per row.
Rational certify_upper_bound(const Configuration& cfg);

BoundReport bound_report(const Delta& delta, const std::optional<Configuration>& cfg = std::nullopt);

}  // namespace expert_spread
