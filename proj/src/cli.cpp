#include "expert_spread/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <iostream>
#include <sstream>

#include "expert_spread/bounds.hpp"
#include "expert_spread/discretize.hpp"
#include "expert_spread/io.hpp"
#include "expert_spread/search.hpp"
#include "expert_spread/transforms.hpp"

namespace expert_spread {

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Rational parse_rational(const std::string& text, const std::string& what) {
  try {
    return Rational::parse(text);
  } catch (const std::exception&) {
    throw UsageError(what + " must be a rational like p/q, got \"" + text + "\"");
  }
}

Delta parse_delta(const std::string& text) {
  const Rational v = parse_rational(text, "delta");
  if (!(v > 0 && v < 1)) throw UsageError("delta must lie strictly between 0 and 1, got " + v.str());
  return Delta(v);
}

struct Context {
  std::istream& in;
  std::ostream& out;
  std::ostream& err;

  std::string read(const std::string& path) const {
    if (path != "-") return read_text(path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
  }

  /// Writes to a file, or to `out` when the path is empty or "-".
  void emit(const std::string& path, const std::string& text) const {
    if (path.empty() || path == "-") {
      out << text;
    } else {
      write_text(path, text);
    }
  }
};

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

std::string curve_csv(const std::vector<CurveRow>& rows, bool include_empirical) {
  std::string out = "delta,lambda_sharp,pitman_upper";
  if (include_empirical) out += ",empirical_best";
  out += ",delta_dec,lambda_sharp_dec,pitman_upper_dec";
  if (include_empirical) out += ",empirical_best_dec";
  out += "\n";
  auto opt_str = [](const std::optional<Rational>& r) { return r ? r->str() : std::string(); };
  auto opt_dec = [](const std::optional<Rational>& r) { return r ? r->decimal() : std::string(); };
  for (const CurveRow& r : rows) {
    out += r.delta.str() + "," + r.lambda_sharp.str() + "," + opt_str(r.pitman_upper);
    if (include_empirical) out += "," + opt_str(r.empirical_best);
    out += "," + r.delta.decimal() + "," + r.lambda_sharp.decimal() + "," + opt_dec(r.pitman_upper);
    if (include_empirical) out += "," + opt_dec(r.empirical_best);
    out += "\n";
  }
  return out;
}

std::string curve_svg(const std::vector<CurveRow>& rows) {
  constexpr double kW = 480, kH = 360, kL = 50, kR = 20, kT = 20, kB = 40;
  auto sx = [&](double d) { return fmt_double(kL + d * (kW - kL - kR)); };
  auto sy = [&](double v) { return fmt_double(kH - kB - v * (kH - kT - kB)); };
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"480\" height=\"360\" viewBox=\"0 0 480 360\">\n";
  s += "<rect width=\"480\" height=\"360\" fill=\"white\"/>\n";
  s += "<line x1=\"" + sx(0) + "\" y1=\"" + sy(0) + "\" x2=\"" + sx(1) + "\" y2=\"" + sy(0) +
       "\" stroke=\"black\"/>\n";
  s += "<line x1=\"" + sx(0) + "\" y1=\"" + sy(0) + "\" x2=\"" + sx(0) + "\" y2=\"" + sy(1) +
       "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double t = i / 4.0;
    s += "<text x=\"" + sx(t) + "\" y=\"" + fmt_double(kH - kB + 16) + "\" font-size=\"11\" text-anchor=\"middle\">" +
         fmt_double(t) + "</text>\n";
    s += "<text x=\"" + fmt_double(kL - 6) + "\" y=\"" + sy(t) + "\" font-size=\"11\" text-anchor=\"end\">" +
         fmt_double(t) + "</text>\n";
  }
  s += "<text x=\"" + sx(0.5) + "\" y=\"" + fmt_double(kH - 4) +
       "\" font-size=\"12\" text-anchor=\"middle\">delta</text>\n";

  // The curve is split at one half, where it jumps from 2/3 to 1.
  const Rational half(1, 2);
  std::string below, above;
  for (const CurveRow& r : rows) {
    std::string& seg = r.delta < half ? below : above;
    seg += sx(r.delta.to_double()) + "," + sy(r.lambda_sharp.to_double()) + " ";
  }
  for (const std::string* seg : {&below, &above}) {
    if (!seg->empty()) {
      s += "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"" + *seg + "\"/>\n";
    }
  }
  if (!rows.empty() && rows.front().delta < half && rows.back().delta >= half) {
    s += "<circle cx=\"" + sx(0.5) + "\" cy=\"" + sy(2.0 / 3.0) +
         "\" r=\"4\" fill=\"white\" stroke=\"steelblue\" stroke-width=\"2\"/>\n";
    s += "<circle cx=\"" + sx(0.5) + "\" cy=\"" + sy(1.0) + "\" r=\"4\" fill=\"steelblue\"/>\n";
  }
  for (const CurveRow& r : rows) {
    if (!r.empirical_best) continue;
    s += "<circle cx=\"" + sx(r.delta.to_double()) + "\" cy=\"" + sy(r.empirical_best->to_double()) +
         "\" r=\"3\" fill=\"darkorange\"/>\n";
  }
  s += "</svg>\n";
  return s;
}

namespace {

int cmd_bound(const Context& ctx, const std::string& delta_text, const std::string& config_path) {
  const Delta delta = parse_delta(delta_text);
  std::optional<Configuration> cfg;
  if (!config_path.empty()) cfg = config_from_json(parse_json(ctx.read(config_path), config_path)).with_delta(delta);
  ctx.out << bound_report_to_json(bound_report(delta, cfg)).dump(2) << "\n";
  return kExitOk;
}

int cmd_extremal(const Context& ctx, const std::string& delta_text, const std::string& out_path) {
  ctx.emit(out_path, dump_config(extremal_config(parse_delta(delta_text))));
  return kExitOk;
}

int cmd_reduce(const Context& ctx, const std::string& in_path, const std::string& eps_text,
               const std::string& out_path, const std::string& trace_path) {
  const Configuration cfg = config_from_json(parse_json(ctx.read(in_path), in_path));
  const Rational eps = parse_rational(eps_text, "--eps");
  if (!eps.is_positive()) throw UsageError("--eps must be positive");
  if (!cfg.delta().below_half()) throw UsageError("reduce requires delta < 1/2");
  const Stats st = compute_stats(cfg);
  if (!st.prob_B.is_positive()) throw UsageError("reduce requires P(B) > 0");
  std::optional<ReduceResult> res;
  try {
    res = reduce(cfg, eps);
  } catch (const ContradictionError& e) {
    if (!trace_path.empty()) write_text(trace_path, dump_trace_jsonl(e.trace()));
    ctx.err << "reduce reached an unreachable branch: " << e.label() << "\n";
    return kExitViolation;
  }
  const ReduceResult& r = *res;
  if (!trace_path.empty()) write_text(trace_path, dump_trace_jsonl(r.trace));
  if (!out_path.empty()) write_text(out_path, dump_config(r.out));
  const Rational after = compute_stats(r.out).prob_B;
  const Json summary = {{"prob_B_before", st.prob_B.str()},
                        {"prob_B_after", after.str()},
                        {"certificate", certify_upper_bound(r.out).str()},
                        {"lambda_sharp", lambda_sharp(cfg.delta()).str()},
                        {"steps", r.trace.size()},
                        {"dims_after", {r.out.cols(), r.out.rows()}}};
  ctx.out << summary.dump(2) << "\n";
  return kExitOk;
}

struct SearchFlags {
  std::string delta;
  std::string method = "exhaustive";
  long cols = 2, rows = 2, denom = 5;
  std::uint64_t iters = 10000, seed = 1;
  unsigned threads = 0;
  std::string out_path;
};

int cmd_search(const Context& ctx, const SearchFlags& f) {
  const Delta delta = parse_delta(f.delta);
  if (f.cols < 1 || f.rows < 1) throw UsageError("--cols and --rows must be positive");
  SearchResult r = [&] {
    if (f.method == "exhaustive") {
      if (f.denom < 1) throw UsageError("--denom must be positive");
      try {
        return exhaustive_search(delta, f.cols, f.rows, f.denom, enumeration_cap(), f.threads);
      } catch (const SearchError& e) {
        throw UsageError(e.what());
      }
    }
    if (f.iters < 1) throw UsageError("--iters must be positive");
    return hill_climb(delta, f.cols, f.rows, f.iters, f.seed);
  }();
  ctx.emit(f.out_path, search_result_to_json(r).dump(2) + "\n");
  return kExitOk;
}

int cmd_verify(const Context& ctx, const std::string& in_path) {
  const Configuration cfg = config_from_json(parse_json(ctx.read(in_path), in_path));
  const InvariantReport rep = check_invariants(cfg);
  Json failures = Json::array();
  for (const std::string& f : rep.failures) failures.push_back(f);
  Json j = {{"ok", rep.ok()}, {"failures", std::move(failures)}};
  if (rep.ok()) {
    const Stats st = compute_stats(cfg);
    j["prob_B"] = st.prob_B.str();
    j["lambda_sharp"] = lambda_sharp(cfg.delta()).str();
  }
  ctx.out << j.dump(2) << "\n";
  return rep.ok() ? kExitOk : kExitViolation;
}

struct CurveFlags {
  std::string from, to;
  long steps = 0;
  bool empirical = false;
  long cols = 2, rows = 2;
  std::uint64_t iters = 2000, seed = 1;
  std::string csv_path, svg_path;
};

int cmd_curve(const Context& ctx, const CurveFlags& f) {
  const Rational from = parse_rational(f.from, "--from");
  const Rational to = parse_rational(f.to, "--to");
  if (!(from > 0 && from < to && to < 1)) throw UsageError("curve needs 0 < from < to < 1");
  if (f.steps < 2) throw UsageError("--steps must be at least 2");
  std::vector<CurveRow> rows;
  for (long i = 0; i < f.steps; ++i) {
    const Delta d(from + (to - from) * Rational(i, f.steps - 1));
    CurveRow row{d.value(), lambda_sharp(d), std::nullopt, std::nullopt};
    if (d.below_half()) row.pitman_upper = pitman_upper(d);
    if (f.empirical) {
      row.empirical_best = hill_climb(d, f.cols, f.rows, f.iters, stream_seed(f.seed, i)).best_prob_B;
    }
    rows.push_back(std::move(row));
  }
  ctx.emit(f.csv_path, curve_csv(rows, f.empirical));
  if (!f.svg_path.empty()) write_text(f.svg_path, curve_svg(rows));
  return kExitOk;
}

int cmd_discretize(const Context& ctx, const std::string& in_path, const std::string& delta_text, long n,
                   const std::string& out_path) {
  const Delta delta = parse_delta(delta_text);
  const RawSpace space = raw_space_from_json(parse_json(ctx.read(in_path), in_path));
  if (n == 0) {
    ctx.emit(out_path, dump_config(to_configuration(space, delta)));
    return kExitOk;
  }
  if (n < 2) throw UsageError("--n must be at least 2");
  const Coarsening c = grid_coarsen(space, n, delta);
  const Rational raw = contradiction_mass(to_configuration(space, delta), delta.threshold());
  const Rational coarse = contradiction_mass(c.cfg, delta.threshold() - Rational(2, n));
  Json j = {{"config", config_to_json(c.cfg)},
            {"max_x_shift", c.max_x_shift.str()},
            {"max_y_shift", c.max_y_shift.str()},
            {"raw_prob_B", raw.str()},
            {"coarse_prob_widened", coarse.str()}};
  ctx.emit(out_path, j.dump(2) + "\n");
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bounds on the probability that two experts radically disagree", "expert-spread"};
  app.require_subcommand(1);
  const Context ctx{in, out, err};
  std::function<int()> action;

  std::string delta_text, path, out_path, trace_path, config_path, eps_text = "1/1000";
  auto* bound = app.add_subcommand("bound", "Print the sharp bound and the weaker 2 delta bound");
  bound->add_option("delta", delta_text, "delta as p/q")->required();
  bound->add_option("--config", config_path, "configuration whose P(B) and certificate to report");
  bound->callback([&] { action = [&] { return cmd_bound(ctx, delta_text, config_path); }; });

  auto* extremal = app.add_subcommand("extremal", "Write the extremal configuration");
  extremal->add_option("delta", delta_text, "delta as p/q")->required();
  extremal->add_option("-o,--out", out_path, "output file (default stdout)");
  extremal->callback([&] { action = [&] { return cmd_extremal(ctx, delta_text, out_path); }; });

  auto* red = app.add_subcommand("reduce", "Reduce a configuration and certify its bound");
  red->add_option("input", path, "configuration file, - for stdin")->required();
  red->add_option("--eps", eps_text, "allowed P(B) loss");
  red->add_option("-o,--out", out_path, "reduced configuration output");
  red->add_option("--trace", trace_path, "JSONL transform trace output");
  red->callback([&] { action = [&] { return cmd_reduce(ctx, path, eps_text, out_path, trace_path); }; });

  SearchFlags sf;
  auto* search = app.add_subcommand("search", "Search grid configurations for the largest P(B)");
  search->add_option("delta", sf.delta, "delta as p/q")->required();
  search->add_option("--method", sf.method, "exhaustive or hill_climb")
      ->check(CLI::IsMember({"exhaustive", "hill_climb"}));
  search->add_option("--cols", sf.cols, "grid columns");
  search->add_option("--rows", sf.rows, "grid rows");
  search->add_option("--denom", sf.denom, "mass unit 1/denom (exhaustive)");
  search->add_option("--iters", sf.iters, "iterations (hill_climb)");
  search->add_option("--seed", sf.seed, "random seed (hill_climb)");
  search->add_option("--threads", sf.threads, "worker threads, 0 for all cores");
  search->add_option("-o,--out", sf.out_path, "result file (default stdout)");
  search->callback([&] { action = [&] { return cmd_search(ctx, sf); }; });

  std::string verify_path = "-";
  auto* verify = app.add_subcommand("verify", "Check every configuration invariant");
  verify->add_option("input", verify_path, "configuration file, - for stdin (default)");
  verify->callback([&] { action = [&] { return cmd_verify(ctx, verify_path); }; });

  CurveFlags cf;
  auto* curve = app.add_subcommand("curve", "Emit the lambda(delta) curve as CSV and SVG");
  curve->add_option("--from", cf.from, "first delta")->required();
  curve->add_option("--to", cf.to, "last delta")->required();
  curve->add_option("--steps", cf.steps, "number of delta values")->required();
  curve->add_option("--out", cf.csv_path, "CSV output (default stdout)");
  curve->add_option("--svg", cf.svg_path, "SVG output");
  curve->add_flag("--empirical", cf.empirical, "add hill-climb maxima");
  curve->add_option("--cols", cf.cols, "grid columns for --empirical");
  curve->add_option("--rows", cf.rows, "grid rows for --empirical");
  curve->add_option("--iters", cf.iters, "hill-climb iterations per delta");
  curve->add_option("--seed", cf.seed, "random seed for --empirical");
  curve->callback([&] { action = [&] { return cmd_curve(ctx, cf); }; });

  long n = 0;
  auto* disc = app.add_subcommand("discretize", "Turn a labeled finite space into a configuration");
  disc->add_option("input", path, "raw space file, - for stdin")->required();
  disc->add_option("--delta", delta_text, "delta as p/q")->required();
  disc->add_option("--n", n, "coarsen forecasts to a 1/n grid");
  disc->add_option("-o,--out", out_path, "output file (default stdout)");
  disc->callback([&] { action = [&] { return cmd_discretize(ctx, path, delta_text, n, out_path); }; });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }
  try {
    return action();
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitViolation;
  }
}

}  // namespace expert_spread
