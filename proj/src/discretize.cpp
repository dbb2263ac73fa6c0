#include "expert_spread/discretize.hpp"

#include <map>

#include "expert_spread/search.hpp"

namespace expert_spread {

RawSpace::RawSpace(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
  if (atoms_.empty()) throw ConfigError("raw space has no atoms");
  Rational total;
  for (const Atom& at : atoms_) {
    if (at.weight.sign() < 0 || at.a_weight.sign() < 0 || at.a_weight > at.weight) {
      throw ConfigError("atom needs 0 <= a <= w, got a = " + at.a_weight.str() + ", w = " + at.weight.str());
    }
    total += at.weight;
  }
  if (total != 1) throw ConfigError("atom weights sum to " + total.str() + ", expected 1");
}

namespace {

/// Labels in order of first appearance among atoms of positive weight.
struct LabelIndex {
  std::map<std::string, Index> index;
  std::vector<std::string> order;

  Index add(const std::string& label) {
    auto [it, inserted] = index.try_emplace(label, static_cast<Index>(order.size()));
    if (inserted) order.push_back(label);
    return it->second;
  }
};

Configuration accumulate(const RawSpace& space, const Delta& delta, const std::vector<Index>& col_of,
                         const std::vector<Index>& row_of, Index cols, Index rows) {
  Grid a = Grid::Zero(cols, rows);
  Grid ac = Grid::Zero(cols, rows);
  for (size_t i = 0; i < space.atoms().size(); ++i) {
    const Atom& at = space.atoms()[i];
    if (at.weight.is_zero()) continue;
    a(col_of[i], row_of[i]) += at.a_weight;
    ac(col_of[i], row_of[i]) += at.weight - at.a_weight;
  }
  return Configuration(delta, std::move(a), std::move(ac));
}

struct Labelled {
  std::vector<Index> col_of, row_of;
  LabelIndex g, h;
};

Labelled label_atoms(const RawSpace& space) {
  Labelled l;
  for (const Atom& at : space.atoms()) {
    if (at.weight.is_zero()) {
      l.col_of.push_back(-1);
      l.row_of.push_back(-1);
      continue;
    }
    l.col_of.push_back(l.g.add(at.g_label));
    l.row_of.push_back(l.h.add(at.h_label));
  }
  return l;
}

Index bin_of(const Rational& value, long n) {
  const mpq_class scaled = value.mpq() * n;
  const mpz_class floor = scaled.get_num() / scaled.get_den();
  return static_cast<Index>(floor.get_si());
}

}  // namespace

Configuration to_configuration(const RawSpace& space, const Delta& delta) {
  const Labelled l = label_atoms(space);
  return normalize(accumulate(space, delta, l.col_of, l.row_of, static_cast<Index>(l.g.order.size()),
                              static_cast<Index>(l.h.order.size())));
}

Coarsening grid_coarsen(const RawSpace& space, long n, const Delta& delta) {
  if (n < 2) throw ConfigError("grid_coarsen needs n >= 2");
  const Labelled l = label_atoms(space);
  const Index ng = static_cast<Index>(l.g.order.size());
  const Index nh = static_cast<Index>(l.h.order.size());
  const Configuration fine = accumulate(space, delta, l.col_of, l.row_of, ng, nh);
  const Stats st = compute_stats(fine);

  std::vector<Index> g_bin(ng), h_bin(nh);
  for (Index k = 0; k < ng; ++k) g_bin[k] = bin_of(st.x(k), n);
  for (Index j = 0; j < nh; ++j) h_bin[j] = bin_of(st.y(j), n);
  std::vector<Index> col_of(l.col_of.size()), row_of(l.row_of.size());
  for (size_t i = 0; i < col_of.size(); ++i) {
    col_of[i] = l.col_of[i] < 0 ? -1 : g_bin[l.col_of[i]];
    row_of[i] = l.row_of[i] < 0 ? -1 : h_bin[l.row_of[i]];
  }
  const Configuration binned = accumulate(space, delta, col_of, row_of, n + 1, n + 1);

  // Shifts are measured before empty bins are dropped so bin indices line up.
  const Grid mass = binned.a_mass() + binned.ac_mass();
  const Vector p = mass.rowwise().sum();
  const Vector q = mass.colwise().sum().transpose();
  const Vector pa = binned.a_mass().rowwise().sum();
  const Vector qa = binned.a_mass().colwise().sum().transpose();
  Coarsening out{drop_empty(binned), Rational(0), Rational(0)};
  for (Index k = 0; k < ng; ++k) {
    out.max_x_shift = max(out.max_x_shift, abs(pa(g_bin[k]) / p(g_bin[k]) - st.x(k)));
  }
  for (Index j = 0; j < nh; ++j) {
    out.max_y_shift = max(out.max_y_shift, abs(qa(h_bin[j]) / q(h_bin[j]) - st.y(j)));
  }
  return out;
}

Rational contradiction_mass(const Configuration& cfg, const Rational& threshold) {
  const Stats st = compute_stats(cfg);
  Rational total;
  for (Index k = 0; k < cfg.cols(); ++k) {
    for (Index j = 0; j < cfg.rows(); ++j) {
      if (abs(st.x(k) - st.y(j)) >= threshold) total += cfg.mass(k, j);
    }
  }
  return total;
}

RawSpace random_raw_space(Rng& rng, int max_atoms, int max_labels) {
  const int n_atoms = 1 + static_cast<int>(rng.below(max_atoms));
  const long denom = 1L << (4 + rng.below(5));
  std::vector<long> units(n_atoms, 0);
  for (long u = 0; u < denom; ++u) ++units[rng.below(n_atoms)];
  std::vector<Atom> atoms;
  for (int i = 0; i < n_atoms; ++i) {
    const long a_units = rng.coin() ? static_cast<long>(rng.below(units[i] + 1)) : (rng.coin() ? units[i] : 0);
    atoms.push_back({Rational(units[i], denom), Rational(a_units, denom),
                     "g" + std::to_string(rng.below(max_labels)), "h" + std::to_string(rng.below(max_labels))});
  }
  return RawSpace(std::move(atoms));
}

}  // namespace expert_spread
