#include "curvepat/bourgain.hpp"
#include "curvepat/counting.hpp"
#include "curvepat/errors.hpp"
#include "curvepat/generators.hpp"
#include "curvepat/io.hpp"
#include "curvepat/oscillatory.hpp"
#include "curvepat/patterns.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

namespace {

using namespace curvepat;

constexpr int kOk = 0, kError = 1, kFailed = 2;

struct Common {
  std::string config;
  std::uint64_t seed = 0;
  std::string out;
};

void add_common(CLI::App* sub, Common& c, const std::string& default_out) {
  sub->add_option("--config", c.config, "JSON object of option values; command-line flags take precedence");
  sub->add_option("--seed", c.seed, "Seed recorded in outputs and used by generators")->capture_default_str();
  c.out = default_out;
  sub->add_option("--out", c.out, "Output path prefix")->capture_default_str();
}

// Effective option values, for the reproducibility hash.
json effective_config(const CLI::App* sub) {
  json j = json::object();
  for (const CLI::Option* opt : sub->get_options()) {
    if (opt->get_lnames().empty()) continue;
    const std::string& name = opt->get_lnames().front();
    if (name == "help" || name == "config") continue;
    if (opt->count() > 0)
      j[name] = opt->results();
    else
      j[name] = opt->get_default_str();
  }
  return j;
}

RunMeta make_meta(const CLI::App* sub, const Common& common, json tolerances) {
  RunMeta m;
  m.command = sub->get_name();
  m.config_hash = config_hash(effective_config(sub));
  m.seed = common.seed;
  m.tolerances = std::move(tolerances);
  return m;
}

void write_json(const std::string& path, const RunMeta& meta, const std::string& key, const json& payload) {
  json doc = {{"meta", to_json(meta)}, {key, payload}};
  atomic_write(path, doc.dump(2) + "\n");
}

int report_checks(const std::vector<Check>& checks) {
  for (const auto& c : checks)
    if (!c.ok) std::cerr << "check failed: " << c.name << " lhs=" << c.lhs << " rhs=" << c.rhs << "\n";
  return all_ok(checks) ? kOk : kFailed;
}

// ---- decay -------------------------------------------------------------------

struct DecayArgs {
  Common common;
  std::string curve;
  int s = 0, ell = 0, kmin = 6, kmax = 16, shell_points = 0;
  double slack = 0.1, tol = 1e-9;
};

int cmd_decay(const CLI::App* sub, const DecayArgs& a) {
  const Curve c = read_curve(a.curve);
  check_decay_hypothesis(c, a.s);
  int ell = a.ell;
  int gamma = 0;
  if (ell <= 0) {
    gamma = calibrate_lattice(c).Gamma;
    ell = gamma;
  }
  const int pts = a.shell_points > 0 ? a.shell_points : (c.n >= 3 ? 16384 : 4096);
  DecayOptions opt;
  opt.slack = a.slack;
  opt.tol = a.tol;
  const DecayFit fit = decay_fit(c, a.s, ell, a.kmin, a.kmax, pts, bump_kit(c.n), opt);
  const RunMeta meta = make_meta(sub, a.common, {{"slack", a.slack}, {"quadrature_tol", a.tol}});
  json payload = to_json(fit);
  payload["shell_points"] = pts;
  if (gamma > 0) payload["calibrated_gamma"] = gamma;
  write_json(a.common.out + ".json", meta, "decay", payload);
  atomic_write(a.common.out + ".csv", decay_csv(fit, meta));
  std::cout << fit.curve << " s=" << a.s << " ell=" << ell << " slope=" << fit.slope
            << " threshold=" << -1.0 / fit.d + fit.slack << " verdict=" << (fit.verdict ? "pass" : "fail") << "\n";
  return fit.verdict ? kOk : kFailed;
}

// ---- iterate -----------------------------------------------------------------

struct IterateArgs {
  Common common;
  std::string grid, curve;
  double eps = 0.2, c_base = 2.0, c = 0.0, c_rho = 0.0;
  int gamma = 1, suite = 4;
};

int cmd_iterate(const CLI::App* sub, const IterateArgs& a) {
  const GridFunction f = read_grid(a.grid);
  const Curve c = read_curve(a.curve);
  const BumpKit& kit = bump_kit(f.n);
  if (integral(f) < a.eps) throw PreconditionError("integral of f is below --eps");
  const ScaleLattice lattice = ScaleLattice::with_gamma(a.gamma, 64);
  Schedule sched = make_schedule(a.eps, lattice, a.c_base, max_resolvable_ell(kit, f));

  CCalibration calib;
  double cc = a.c;
  if (cc <= 0.0) {
    std::vector<GridFunction> suite{f};
    for (int j = 0; j < a.suite; ++j)
      suite.push_back(random_density(f.dims, a.eps, a.common.seed + 1 + j, f.lo, f.hi));
    cc = 1.0;
    for (int ell : sched.ells) {
      const CCalibration m = measure_c(suite, kit, ell);
      if (m.c < cc) {
        cc = m.c;
        calib = m;
      }
    }
  }
  IterationOptions opt;
  opt.c = cc;
  opt.C_rho = a.c_rho;
  const RunMeta meta =
      make_meta(sub, a.common, {{"check_tol", opt.step.tol}, {"c", cc}, {"epsilon", a.eps}});
  IterationTrace trace;
  try {
    trace = run_iteration(f, c, kit, sched, opt);
  } catch (const BudgetExceeded& e) {
    write_json(a.common.out + ".json", meta, "failure", {{"kind", e.kind()}, {"message", e.what()}});
    std::cerr << "BudgetExceeded: " << e.what() << "\n";
    return kFailed;
  }
  json payload = to_json(trace);
  payload["c_calibration"] = {{"ell", calib.ell}, {"c", cc}, {"ratios", calib.ratios}, {"measured", a.c <= 0.0}};
  write_json(a.common.out + ".json", meta, "trace", payload);
  atomic_write(a.common.out + ".csv", iteration_csv(trace, meta));
  std::cout << "k0=" << trace.k0 << " delta=" << trace.delta << " increments=" << trace.increments
            << " K_cap=" << trace.schedule.K_cap << "\n"
            << trace.certificate << "\n";
  return report_checks(trace.checks);
}

// ---- search ------------------------------------------------------------------

struct SearchArgs {
  Common common;
  std::string grid, curve, mode = "auto";
  double eps = 0.0, noise_factor = 4.0;
  int gamma = 0;
};

int cmd_search(const CLI::App* sub, const SearchArgs& a) {
  const GridFunction E = read_grid(a.grid);
  const Curve c = read_curve(a.curve);
  SearchConfig cfg;
  cfg.epsilon = a.eps;
  cfg.noise_factor = a.noise_factor;
  auto lattice = [&] { return ScaleLattice::with_gamma(a.gamma > 0 ? a.gamma : calibrate_lattice(c).Gamma, 64); };
  const RunMeta meta = make_meta(sub, a.common, {{"noise_factor", a.noise_factor}, {"epsilon", a.eps}});
  PatternWitness w;
  try {
    if (a.mode == "unit") {
      w = search_unit(E, c, cfg);
    } else if (a.mode == "scaled") {
      w = search_scaled(E, c, lattice(), cfg);
    } else if (a.mode == "slice") {
      w = slice_search(E, c, cfg);
    } else {
      const bool needs_lattice = c.rank == c.n && !(E.lo == std::vector<double>(E.n, 0.0) &&
                                                     E.hi == std::vector<double>(E.n, 1.0));
      w = search(E, c, needs_lattice ? lattice() : ScaleLattice::with_gamma(1), cfg);
    }
  } catch (const NoWitnessFound& e) {
    write_json(a.common.out + ".json", meta, "failure", {{"kind", e.kind()}, {"message", e.what()}});
    std::cerr << e.kind() << ": " << e.what() << "\n";
    return kFailed;
  } catch (const NoSliceFound& e) {
    write_json(a.common.out + ".json", meta, "failure", {{"kind", e.kind()}, {"message", e.what()}});
    std::cerr << e.kind() << ": " << e.what() << "\n";
    return kFailed;
  }
  write_json(a.common.out + ".json", meta, "witness", to_json(w));
  atomic_write(a.common.out + ".csv", witness_csv(w, meta));
  std::cout << mode_name(w.mode) << " witness t=" << w.t << " gap=" << w.gap_certified
            << " overlap=" << w.overlap_mass << "\n";
  return kOk;
}

// ---- corner ------------------------------------------------------------------

struct CornerArgs {
  Common common;
  std::string grid, curve;
  int s = 0;
  std::vector<int> ells{3, 5, 7};
  double c_rho = 0.5, tol = 1e-9, eps = 0.0;
  int gamma = 1;
  bool search = false;
};

int cmd_corner(const CLI::App* sub, const CornerArgs& a) {
  const GridFunction S = read_grid(a.grid);
  const Curve pair = read_curve(a.curve);
  if (pair.n != 2) throw ConfigError("corner needs a curve file with exactly two polynomials P1, P2");
  const Polynomial &P1 = pair.polys[0], &P2 = pair.polys[1];
  const RunMeta meta = make_meta(sub, a.common, {{"check_tol", a.tol}, {"c_rho", a.c_rho}});
  json payload = json::object();
  int rc = kOk;
  const ScaleLattice lattice = ScaleLattice::with_gamma(a.gamma, 64);
  if (a.ells.size() != 3) throw ConfigError("--ells takes three scales ell' ell ell''");
  CornerOptions opt;
  opt.c_rho = a.c_rho;
  opt.tol = a.tol;
  const CornerAudit audit = corner_step(S, P1, P2, a.s, a.ells[0], a.ells[1], a.ells[2], opt);
  payload["audit"] = to_json(audit);
  rc = report_checks(audit.checks);
  std::cout << "corner audit " << (audit.passed ? "passed" : "failed") << " I1''=" << audit.I1_dprime
            << " sigma=" << audit.sigma << "\n";
  if (a.search) {
    SearchConfig cfg;
    cfg.epsilon = a.eps;
    try {
      const PatternWitness w = corner_search(S, P1, P2, lattice, cfg);
      payload["witness"] = to_json(w);
      atomic_write(a.common.out + ".csv", witness_csv(w, meta));
      std::cout << "corner witness t=" << w.t << "\n";
    } catch (const NoWitnessFound& e) {
      payload["witness_failure"] = e.what();
      rc = kFailed;
    }
  }
  write_json(a.common.out + ".json", meta, "corner", payload);
  return rc;
}

// ---- telescope ---------------------------------------------------------------

struct TelescopeArgs {
  Common common;
  std::string grid;
  std::vector<int> ells{3, 5, 9, 17};
};

int cmd_telescope(const CLI::App* sub, const TelescopeArgs& a) {
  const GridFunction f = read_grid(a.grid);
  const TelescopeAudit audit = telescope_audit(f, bump_kit(f.n), a.ells);
  const RunMeta meta = make_meta(sub, a.common, {{"split_rel", 1e-8}});
  write_json(a.common.out + ".json", meta, "telescope", to_json(audit));
  std::cout << "total=" << audit.total << " C_rho_measured*|f|^2=" << audit.C_rho_measured * audit.f_l2_sq
            << " split_residual=" << audit.split_residual << "\n";
  return report_checks(audit.checks);
}

// ---- gen ---------------------------------------------------------------------

struct GenArgs {
  Common common;
  std::string kind = "random", curve;
  std::vector<int> dims;
  double eps = 0.2, box = 1.0, t = 0.25, r_min = 0.02, r_max = 0.08;
  int count = 12, levels = 2, smooth_ell = 0;
};

int cmd_gen(const CLI::App* sub, const GenArgs& a) {
  if (a.dims.empty()) throw ConfigError("--dims is required");
  const int n = static_cast<int>(a.dims.size());
  const std::vector<double> lo(n, 0.0), hi(n, a.box);
  GridFunction g;
  json extra = json::object();
  if (a.kind == "random") {
    g = random_density(a.dims, a.eps, a.common.seed, lo, hi);
  } else if (a.kind == "balls") {
    g = union_of_balls(a.dims, a.count, a.r_min, a.r_max, a.common.seed);
  } else if (a.kind == "cantor") {
    g = cantor_like(a.dims, a.levels);
  } else if (a.kind == "planted") {
    if (a.curve.empty()) throw ConfigError("--kind planted needs --curve");
    const auto p = planted_pair(a.dims, lo, hi, read_curve(a.curve), a.t, a.common.seed);
    g = p.set;
    extra = {{"t", a.t}, {"x", std::vector<double>(p.x.data(), p.x.data() + n)},
             {"y", std::vector<double>(p.y.data(), p.y.data() + n)}};
  } else if (a.kind == "corner") {
    if (a.curve.empty()) throw ConfigError("--kind corner needs --curve with P1, P2");
    const Curve pair = read_curve(a.curve);
    if (pair.n != 2) throw ConfigError("corner curve file needs two polynomials");
    const auto p = planted_corner(a.dims, a.box, pair.polys[0], pair.polys[1], a.t, a.common.seed);
    g = p.set;
    extra = {{"t", a.t}};
  } else {
    throw ConfigError("unknown --kind " + a.kind + " (random, balls, cantor, planted, corner)");
  }
  if (a.smooth_ell > 0) g = presmoothed(g, bump_kit(n), a.smooth_ell);
  RunMeta meta = make_meta(sub, a.common, json::object());
  write_grid(a.common.out, g, meta);
  std::cout << a.kind << " grid written to " << a.common.out << " (integral " << integral(g) << ")";
  if (!extra.empty()) std::cout << " planted " << extra.dump();
  std::cout << "\n";
  return kOk;
}

// Appends "--key value..." for every config-file key whose flag is absent from the command line.
std::vector<std::string> merge_config(std::vector<std::string> args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty()) return args;
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw ConfigError("config file " + path + " must hold a JSON object");
  auto given = [&](const std::string& flag) {
    for (const auto& a : args)
      if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
    return false;
  };
  auto text = [](const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string flag = "--" + it.key();
    if (it.key() == "config" || given(flag)) continue;
    const json& v = it.value();
    if (v.is_boolean()) {
      if (v.get<bool>()) args.push_back(flag);
      continue;
    }
    args.push_back(flag);
    if (v.is_array()) {
      for (const auto& e : v) args.push_back(text(e));
    } else {
      args.push_back(text(v));
    }
  }
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Polynomial-curve pattern toolkit"};
  app.require_subcommand(1);

  DecayArgs decay;
  auto* sd = app.add_subcommand("decay", "Fit the multiplier decay over dyadic shells");
  add_common(sd, decay.common, "decay");
  sd->add_option("--curve", decay.curve, "Curve JSON file")->required();
  sd->add_option("--s", decay.s, "Rescaling exponent")->capture_default_str();
  sd->add_option("--ell", decay.ell, "Window scale (0: calibrated Gamma)")->capture_default_str();
  sd->add_option("--kmin", decay.kmin)->capture_default_str();
  sd->add_option("--kmax", decay.kmax)->capture_default_str();
  sd->add_option("--shell-points", decay.shell_points, "0: 4096 for n <= 2, 16384 for n = 3")->capture_default_str();
  sd->add_option("--slack", decay.slack)->capture_default_str();
  sd->add_option("--tol", decay.tol, "Quadrature tolerance")->capture_default_str();

  IterateArgs iter;
  auto* si = app.add_subcommand("iterate", "Run the density-increment iteration");
  add_common(si, iter.common, "iterate");
  si->add_option("--grid", iter.grid)->required();
  si->add_option("--curve", iter.curve)->required();
  si->add_option("--eps", iter.eps)->capture_default_str();
  si->add_option("--c-base", iter.c_base)->capture_default_str();
  si->add_option("--c", iter.c, "Dichotomy constant (0: measured on a calibration suite)")->capture_default_str();
  si->add_option("--c-rho", iter.c_rho, "Telescoping constant (0: measured)")->capture_default_str();
  si->add_option("--gamma", iter.gamma, "Lattice step of the schedule")->capture_default_str();
  si->add_option("--suite", iter.suite, "Extra random sets in the c calibration")->capture_default_str();

  SearchArgs srch;
  auto* ss = app.add_subcommand("search", "Find a witness pair x, x + gamma(t)");
  add_common(ss, srch.common, "search");
  ss->add_option("--grid", srch.grid)->required();
  ss->add_option("--curve", srch.curve)->required();
  ss->add_option("--mode", srch.mode)->check(CLI::IsMember({"auto", "unit", "scaled", "slice"}))->capture_default_str();
  ss->add_option("--eps", srch.eps, "Required density (0: one cell, or the set's density)")->capture_default_str();
  ss->add_option("--noise-factor", srch.noise_factor)->capture_default_str();
  ss->add_option("--gamma", srch.gamma, "Lattice for the rectangle reduction (0: calibrated)")->capture_default_str();

  CornerArgs corner;
  auto* sc = app.add_subcommand("corner", "Audit the corner decomposition and optionally search for a triple");
  add_common(sc, corner.common, "corner");
  sc->add_option("--grid", corner.grid)->required();
  sc->add_option("--curve", corner.curve, "Curve JSON with P1, P2")->required();
  sc->add_option("--s", corner.s)->capture_default_str();
  sc->add_option("--ells", corner.ells, "ell' ell ell''")->expected(3)->capture_default_str();
  sc->add_option("--c-rho", corner.c_rho)->capture_default_str();
  sc->add_option("--tol", corner.tol)->capture_default_str();
  sc->add_option("--eps", corner.eps)->capture_default_str();
  sc->add_option("--gamma", corner.gamma)->capture_default_str();
  sc->add_flag("--search", corner.search, "Also search for a corner triple");

  TelescopeArgs tele;
  auto* st = app.add_subcommand("telescope", "Spectral audit of the telescoping budget");
  add_common(st, tele.common, "telescope");
  st->add_option("--grid", tele.grid)->required();
  st->add_option("--ells", tele.ells)->capture_default_str();

  GenArgs gen;
  auto* sg = app.add_subcommand("gen", "Generate a test set");
  add_common(sg, gen.common, "grid.bin");
  sg->add_option("--kind", gen.kind)->capture_default_str();
  sg->add_option("--dims", gen.dims)->required();
  sg->add_option("--eps", gen.eps, "Cell probability for random sets")->capture_default_str();
  sg->add_option("--box", gen.box, "Side N of the box [0, N]^n")->capture_default_str();
  sg->add_option("--curve", gen.curve, "Curve for planted sets");
  sg->add_option("--t", gen.t, "Planted parameter")->capture_default_str();
  sg->add_option("--count", gen.count)->capture_default_str();
  sg->add_option("--r-min", gen.r_min)->capture_default_str();
  sg->add_option("--r-max", gen.r_max)->capture_default_str();
  sg->add_option("--levels", gen.levels)->capture_default_str();
  sg->add_option("--smooth-ell", gen.smooth_ell, "Mollify at this scale (0: off)")->capture_default_str();

  try {
    std::vector<std::string> args = merge_config(std::vector<std::string>(argv + 1, argv + argc));
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const Error& e) {
    std::cerr << "error: " << e.kind() << ": " << e.what() << "\n";
    return kError;
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kError;
  }

  try {
    if (sd->parsed()) return cmd_decay(sd, decay);
    if (si->parsed()) return cmd_iterate(si, iter);
    if (ss->parsed()) return cmd_search(ss, srch);
    if (sc->parsed()) return cmd_corner(sc, corner);
    if (st->parsed()) return cmd_telescope(st, tele);
    if (sg->parsed()) return cmd_gen(sg, gen);
  } catch (const Error& e) {
    std::cerr << "error: " << e.kind() << ": " << e.what() << "\n";
    return kError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kError;
  }
  return kError;
}
