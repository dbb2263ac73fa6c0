#include "expert_spread/bounds.hpp"

#include <stdexcept>

namespace expert_spread {

Rational lambda_sharp(const Delta& delta) {
  if (!delta.below_half()) return Rational(1);
  return Rational(2) * delta.value() / (Rational(1) + delta.value());
}

Rational pitman_upper(const Delta& delta) {
  if (!delta.below_half()) throw ConfigError("pitman_upper requires delta < 1/2");
  return Rational(2) * delta.value();
}

Configuration extremal_config(const Delta& delta) {
  const Rational& d = delta.value();
  const Rational side = d / (Rational(1) + d);
  Grid a = Grid::Zero(2, 2);
  Grid ac = Grid::Zero(2, 2);
  ac(0, 0) = (Rational(1) - d) / (Rational(1) + d);
  a(0, 1) = side;
  a(1, 0) = side;
  return Configuration(delta, std::move(a), std::move(ac));
}

Configuration halfpoint_example(const Delta& delta) {
  Grid a = Grid::Zero(1, 2);
  Grid ac = Grid::Zero(1, 2);
  ac(0, 0) = Rational(1, 2);
  a(0, 1) = Rational(1, 2);
  return Configuration(delta, std::move(a), std::move(ac));
}

CorrelationExample correlation_example(const Delta& delta) {
  const Rational& d = delta.value();
  const Rational hi = Rational(1) - d;
  const Rational side = d / (Rational(1) + d);
  CorrelationExample ex;
  ex.points = {{hi, hi, hi / (Rational(1) + d)}, {Rational(0), hi, side}, {hi, Rational(0), side}};
  Rational ex_, ey, exx, eyy, exy;
  for (const auto& pt : ex.points) {
    ex_ += pt.mass * pt.x;
    ey += pt.mass * pt.y;
    exx += pt.mass * pt.x * pt.x;
    eyy += pt.mass * pt.y * pt.y;
    exy += pt.mass * pt.x * pt.y;
  }
  const Rational var_x = exx - ex_ * ex_;
  const Rational var_y = eyy - ey * ey;
  if (var_x != var_y || var_x.is_zero()) throw std::logic_error("correlation example lost its symmetry");
  ex.correlation = (exy - ex_ * ey) / var_x;
  return ex;
}

Rational certify_upper_bound(const Configuration& cfg) {
  const Stats st = compute_stats(cfg);
  const Rational& d = cfg.delta().value();
  std::vector<Index> row_owner(cfg.rows(), -1);
  Rational cert;
  for (Index k = 0; k < cfg.cols(); ++k) {
    Index chosen = -1;
    for (Index j = 0; j < cfg.rows(); ++j) {
      if (!st.b_mask(k, j) || cfg.mass(k, j).is_zero()) continue;
      if (chosen >= 0) {
        throw ConfigError("certificate: column " + std::to_string(k + 1) + " has two positive B cells");
      }
      if (row_owner[j] >= 0) {
        throw ConfigError("certificate: row " + std::to_string(j + 1) + " has two positive B cells");
      }
      chosen = j;
      row_owner[j] = k;
    }
    if (chosen >= 0) cert += d / (Rational(1) + d) * (st.p(k) + st.q(chosen));
  }
  if (cert < st.prob_B || cert > lambda_sharp(cfg.delta())) {
    throw std::logic_error("certificate " + cert.str() + " outside [P(B), 2d/(1+d)]");
  }
  return cert;
}

BoundReport bound_report(const Delta& delta, const std::optional<Configuration>& cfg) {
  BoundReport r{delta, lambda_sharp(delta), std::nullopt, Rational(0), std::nullopt};
  if (delta.below_half()) r.pitman_upper = pitman_upper(delta);
  const Configuration c = cfg ? *cfg : (delta.below_half() ? extremal_config(delta) : halfpoint_example(delta));
  r.achieved = compute_stats(c).prob_B;
  if (delta.below_half()) {
    try {
      r.certified_upper = certify_upper_bound(c);
    } catch (const ConfigError&) {
    }
  }
  return r;
}

}  // namespace expert_spread
