#include "expert_spread/io.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

namespace expert_spread {

namespace {

Json rational_json(const Rational& r) { return r.str(); }

const Json& field(const Json& j, const char* key, const std::string& what) {
  if (!j.is_object() || !j.contains(key)) throw IoError(what + ": missing field \"" + key + "\"");
  return j.at(key);
}

long integer_field(const Json& j, const char* key, const std::string& what) {
  const Json& v = field(j, key, what);
  if (!v.is_number_integer()) throw IoError(what + ": field \"" + key + "\" must be an integer");
  return v.get<long>();
}

}  // namespace

Rational rational_from_json(const Json& j, const std::string& what) {
  if (!j.is_string()) throw IoError(what + ": rationals must be strings like \"p/q\"");
  try {
    return Rational::parse(j.get<std::string>());
  } catch (const std::exception& e) {
    throw IoError(what + ": " + e.what());
  }
}

Json config_to_json(const Configuration& cfg) {
  Json cells = Json::array();
  for (Index k = 0; k < cfg.cols(); ++k) {
    for (Index j = 0; j < cfg.rows(); ++j) {
      if (cfg.mass(k, j).is_zero()) continue;
      cells.push_back({{"col", k + 1},
                       {"row", j + 1},
                       {"a", rational_json(cfg.a_mass()(k, j))},
                       {"ac", rational_json(cfg.ac_mass()(k, j))}});
    }
  }
  return {{"delta", rational_json(cfg.delta().value())}, {"cols", cfg.cols()}, {"rows", cfg.rows()},
          {"cells", std::move(cells)}};
}

Configuration config_from_json(const Json& j) {
  const std::string what = "configuration";
  const Rational delta = rational_from_json(field(j, "delta", what), what + " delta");
  const long cols = integer_field(j, "cols", what);
  const long rows = integer_field(j, "rows", what);
  if (cols < 1 || rows < 1) throw IoError("configuration: cols and rows must be positive");
  const Json& cells = field(j, "cells", what);
  if (!cells.is_array()) throw IoError("configuration: \"cells\" must be an array");
  Grid a = Grid::Zero(cols, rows);
  Grid ac = Grid::Zero(cols, rows);
  Mask seen = Mask::Constant(cols, rows, false);
  for (const Json& c : cells) {
    const long k = integer_field(c, "col", "cell");
    const long r = integer_field(c, "row", "cell");
    if (k < 1 || k > cols || r < 1 || r > rows) {
      throw IoError("cell (" + std::to_string(k) + "," + std::to_string(r) + ") out of range");
    }
    const std::string at = "cell (" + std::to_string(k) + "," + std::to_string(r) + ")";
    if (seen(k - 1, r - 1)) throw IoError(at + " listed twice");
    seen(k - 1, r - 1) = true;
    a(k - 1, r - 1) = rational_from_json(field(c, "a", at), at);
    ac(k - 1, r - 1) = rational_from_json(field(c, "ac", at), at);
  }
  return Configuration(Delta(delta), std::move(a), std::move(ac));
}

std::string dump_config(const Configuration& cfg) { return config_to_json(cfg).dump(2) + "\n"; }

Json raw_space_to_json(const RawSpace& space) {
  Json atoms = Json::array();
  for (const Atom& at : space.atoms()) {
    atoms.push_back({{"w", rational_json(at.weight)}, {"a", rational_json(at.a_weight)}, {"g", at.g_label},
                     {"h", at.h_label}});
  }
  return {{"atoms", std::move(atoms)}};
}

RawSpace raw_space_from_json(const Json& j) {
  const Json& atoms = field(j, "atoms", "raw space");
  if (!atoms.is_array()) throw IoError("raw space: \"atoms\" must be an array");
  std::vector<Atom> out;
  for (const Json& at : atoms) {
    const Json& g = field(at, "g", "atom");
    const Json& h = field(at, "h", "atom");
    if (!g.is_string() || !h.is_string()) throw IoError("atom: labels must be strings");
    out.push_back({rational_from_json(field(at, "w", "atom"), "atom w"),
                   rational_from_json(field(at, "a", "atom"), "atom a"), g.get<std::string>(),
                   h.get<std::string>()});
  }
  return RawSpace(std::move(out));
}

Json trace_to_json(const TransformTrace& t) {
  Json params = Json::array();
  for (Index v : t.params) params.push_back(v + 1);
  return {{"name", t.name},
          {"params", std::move(params)},
          {"prob_B_before", rational_json(t.prob_B_before)},
          {"prob_B_after", rational_json(t.prob_B_after)},
          {"dims_before", {t.dims_before.first, t.dims_before.second}},
          {"dims_after", {t.dims_after.first, t.dims_after.second}},
          {"contract_prob_b", t.contract_prob_b},
          {"contract_dims", t.contract_dims},
          {"contract_corners", t.contract_corners}};
}

std::string dump_trace_jsonl(const std::vector<TransformTrace>& trace) {
  std::string out;
  for (const TransformTrace& t : trace) out += trace_to_json(t).dump() + "\n";
  return out;
}

Json bound_report_to_json(const BoundReport& r) {
  Json j = {{"delta", rational_json(r.delta.value())},
            {"lambda_sharp", rational_json(r.lambda_sharp)},
            {"lambda_sharp_dec", r.lambda_sharp.decimal()}};
  if (r.pitman_upper) {
    j["pitman_upper"] = rational_json(*r.pitman_upper);
    j["pitman_upper_dec"] = r.pitman_upper->decimal();
  } else {
    j["pitman_upper"] = nullptr;
  }
  j["achieved"] = rational_json(r.achieved);
  j["achieved_dec"] = r.achieved.decimal();
  if (r.certified_upper) {
    j["certified_upper"] = rational_json(*r.certified_upper);
    j["certified_upper_dec"] = r.certified_upper->decimal();
  }
  return j;
}

Json search_result_to_json(const SearchResult& r) {
  Json j = {{"method", r.method},
            {"delta", rational_json(r.delta.value())},
            {"best_prob_B", rational_json(r.best_prob_B)},
            {"best_prob_B_dec", r.best_prob_B.decimal()},
            {"configs_evaluated", r.configs_evaluated}};
  j["seed"] = r.seed ? Json(*r.seed) : Json(nullptr);
  j["best_config"] = config_to_json(r.best_config);
  return j;
}

std::string read_text(const std::string& path) {
  std::ostringstream buf;
  if (path == "-") {
    buf << std::cin.rdbuf();
    return buf.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << text;
  if (!out) throw IoError("write failed for " + path);
}

Json parse_json(const std::string& text, const std::string& source) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw IoError(source + ": " + e.what());
  }
}

}  // namespace expert_spread
