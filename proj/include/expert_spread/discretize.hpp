#pragma once

#include <string>
#include <vector>

#include "expert_spread/config.hpp"

namespace expert_spread {

class Rng;

struct Atom {
  Rational weight;
  Rational a_weight;  // part of the atom inside A
  std::string g_label;
  std::string h_label;
};

/// Finite labeled probability space; validated on construction.
class RawSpace {
 public:
  explicit RawSpace(std::vector<Atom> atoms);
  const std::vector<Atom>& atoms() const { return atoms_; }

 private:
  std::vector<Atom> atoms_;
};

/// One column per distinct G label and one row per distinct H label, normalized.
Configuration to_configuration(const RawSpace& space, const Delta& delta);

struct Coarsening {
  Configuration cfg;
  Rational max_x_shift;
  Rational max_y_shift;
};

/// Bins labels by floor(n X) and floor(n Y); X = 1 falls in bin n.
Coarsening grid_coarsen(const RawSpace& space, long n, const Delta& delta);

/// P(|X - Y| >= threshold) on a configuration; the threshold may be <= 0.
Rational contradiction_mass(const Configuration& cfg, const Rational& threshold);

/// Random space with up to max_labels labels per side and dyadic weights.
RawSpace random_raw_space(Rng& rng, int max_atoms = 8, int max_labels = 5);

}  // namespace expert_spread
