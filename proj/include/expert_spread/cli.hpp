#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "expert_spread/rational.hpp"

namespace expert_spread {

inline constexpr int kExitOk = 0;
inline constexpr int kExitViolation = 1;
inline constexpr int kExitUsage = 2;

/// Runs one command; args exclude the program name. "-" as an input path reads `in`.
int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

struct CurveRow {
  Rational delta;
  Rational lambda_sharp;
  std::optional<Rational> pitman_upper;
  std::optional<Rational> empirical_best;
};

std::string curve_csv(const std::vector<CurveRow>& rows, bool include_empirical);
std::string curve_svg(const std::vector<CurveRow>& rows);

}  // namespace expert_spread
