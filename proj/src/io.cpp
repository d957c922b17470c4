#include "curvepat/io.hpp"

#include "curvepat/errors.hpp"

#include <openssl/evp.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <unistd.h>

namespace curvepat {

namespace fs = std::filesystem;

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw IoError("sha256 digest failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return os.str();
}

std::string config_hash(const json& config) { return sha256_hex(config.dump()).substr(0, 16); }

json to_json(const RunMeta& m) {
  return {{"tool_version", m.version}, {"command", m.command}, {"config_hash", m.config_hash},
          {"seed", m.seed}, {"tolerances", m.tolerances}};
}

std::string csv_header(const RunMeta& m) {
  std::ostringstream os;
  os << "# tool_version=" << m.version << "\n# command=" << m.command << "\n# config_hash=" << m.config_hash
     << "\n# seed=" << m.seed << "\n# tolerances=" << m.tolerances.dump() << "\n";
  return os.str();
}

void atomic_write(const std::string& path, const std::string& bytes) {
  const fs::path target(path);
  if (target.has_parent_path() && !fs::exists(target.parent_path()))
    throw IoError("output directory does not exist: " + target.parent_path().string());
  const std::string tmp = path + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + tmp);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + tmp);
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw IoError("cannot rename " + tmp + " to " + path + ": " + ec.message());
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// ---- curves ------------------------------------------------------------------

Curve curve_from_json(const json& j) {
  const json& polys = j.is_array() ? j : j.at("polys");
  if (!polys.is_array() || polys.empty()) throw ConfigError("curve needs a non-empty \"polys\" array");
  std::vector<CoeffMap> specs;
  for (const auto& entry : polys) {
    if (!entry.is_object()) throw ConfigError("each polynomial is an object mapping exponent to coefficient");
    const json& p = entry.contains("coeffs") ? entry.at("coeffs") : entry;
    if (!p.is_object()) throw ConfigError("\"coeffs\" must map exponent to coefficient");
    CoeffMap m;
    for (auto it = p.begin(); it != p.end(); ++it) {
      std::size_t used = 0;
      int e = 0;
      try {
        e = std::stoi(it.key(), &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != it.key().size()) throw ConfigError("exponent is not an integer: " + it.key());
      if (!it.value().is_number()) throw ConfigError("coefficient for exponent " + it.key() + " is not a number");
      m[e] = it.value().get<double>();
    }
    specs.push_back(m);
  }
  return make_curve(specs);
}

json curve_to_json(const Curve& c) {
  json polys = json::array();
  for (const auto& p : c.polys) {
    json o = json::object();
    for (const auto& [e, a] : p.coeffs) o[std::to_string(e)] = a;
    polys.push_back({{"coeffs", o}});
  }
  return {{"polys", polys}};
}

Curve read_curve(const std::string& path) {
  const std::string text = read_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError("cannot parse curve file " + path + ": " + e.what());
  }
  try {
    return curve_from_json(j);
  } catch (const json::exception& e) {
    throw ConfigError("bad curve file " + path + ": " + e.what());
  }
}

// ---- grids -------------------------------------------------------------------

std::string sidecar_path(const std::string& grid_path) { return grid_path + ".json"; }

namespace {

void put_le(double v, char* out) {
  std::uint64_t u;
  std::memcpy(&u, &v, 8);
  for (int b = 0; b < 8; ++b) out[b] = static_cast<char>((u >> (8 * b)) & 0xff);
}

double get_le(const char* in) {
  std::uint64_t u = 0;
  for (int b = 0; b < 8; ++b) u |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[b])) << (8 * b);
  double v;
  std::memcpy(&v, &u, 8);
  return v;
}

json vec(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

}  // namespace

void write_grid(const std::string& path, const GridFunction& g, const RunMeta& meta) {
  std::string payload(static_cast<std::size_t>(g.size()) * 8, '\0');
  for (Eigen::Index k = 0; k < g.size(); ++k) put_le(g.values(k), &payload[static_cast<std::size_t>(k) * 8]);
  json box = json::array();
  for (int a = 0; a < g.n; ++a) box.push_back({g.lo[a], g.hi[a]});
  json side = {{"n", g.n},
               {"dims", g.dims},
               {"box", box},
               {"dtype", "f64-le"},
               {"order", "row-major"},
               {"payload_sha256", sha256_hex(payload)},
               {"meta", to_json(meta)}};
  atomic_write(path, payload);
  atomic_write(sidecar_path(path), side.dump(2) + "\n");
}

GridFunction read_grid(const std::string& path) {
  json side;
  try {
    side = json::parse(read_file(sidecar_path(path)));
  } catch (const json::exception& e) {
    throw IoError("cannot parse grid sidecar " + sidecar_path(path) + ": " + e.what());
  }
  GridFunction g;
  try {
    const auto dims = side.at("dims").get<std::vector<int>>();
    std::vector<double> lo, hi;
    for (const auto& b : side.at("box")) {
      lo.push_back(b.at(0).get<double>());
      hi.push_back(b.at(1).get<double>());
    }
    if (side.value("dtype", "f64-le") != "f64-le") throw IoError("unsupported dtype in " + sidecar_path(path));
    if (side.value("order", "row-major") != "row-major") throw IoError("unsupported order in " + sidecar_path(path));
    if (dims.size() != lo.size()) throw IoError("dims and box disagree in " + sidecar_path(path));
    if (side.contains("n") && side.at("n").get<std::size_t>() != dims.size())
      throw IoError("n and dims disagree in " + sidecar_path(path));
    g = GridFunction::zeros(dims, lo, hi);
  } catch (const json::exception& e) {
    throw IoError("bad grid sidecar " + sidecar_path(path) + ": " + e.what());
  }
  const std::string payload = read_file(path);
  if (payload.size() != static_cast<std::size_t>(g.size()) * 8)
    throw IoError("grid payload " + path + " has " + std::to_string(payload.size()) + " bytes, expected " +
                  std::to_string(g.size() * 8));
  for (Eigen::Index k = 0; k < g.size(); ++k) g.values(k) = get_le(&payload[static_cast<std::size_t>(k) * 8]);
  g.density = g.size() > 0 && g.values.minCoeff() >= 0.0 && g.values.maxCoeff() <= 1.0;
  return g;
}

// ---- reports -----------------------------------------------------------------

json to_json(const Check& c) {
  return {{"name", c.name}, {"lhs", c.lhs}, {"rhs", c.rhs}, {"tol", c.tol}, {"ok", c.ok}};
}

json to_json(const std::vector<Check>& checks) {
  json a = json::array();
  for (const auto& c : checks) a.push_back(to_json(c));
  return a;
}

json to_json(const CountingResult& r) {
  return {{"value", r.value}, {"error", r.error}, {"t_nodes", r.t_nodes}, {"scheme", r.scheme}, {"window", r.window}};
}

json to_json(const DecayFit& f) {
  json xi = json::array();
  for (const auto& v : f.argmax_xi) xi.push_back(vec(v));
  return {{"curve", f.curve},
          {"s", f.s},
          {"ell", f.ell},
          {"kmin", f.kmin},
          {"kmax", f.kmax},
          {"d", f.d},
          {"ks", f.ks},
          {"sup_values", f.sup_values},
          {"argmax_xi", xi},
          {"i0", f.i0},
          {"quad_error_max", f.quad_error_max},
          {"evaluated", f.evaluated},
          {"pruned", f.pruned},
          {"fit_kmin", f.fit_kmin},
          {"slope", f.slope},
          {"intercept", f.intercept},
          {"slack", f.slack},
          {"threshold", -1.0 / f.d + f.slack},
          {"verdict", f.verdict},
          {"monotone", f.monotone}};
}

json to_json(const StepAudit& a) {
  return {{"ell_prime", a.ell_prime},
          {"ell", a.ell},
          {"ell_dprime", a.ell_dprime},
          {"smoothed", a.smoothed},
          {"I1", a.I1},
          {"I2", a.I2},
          {"I3", a.I3},
          {"I1_prime", a.I1_prime},
          {"norm_f", a.norm_f},
          {"mass", a.mass},
          {"bound_I2", a.bound_I2},
          {"bound_I1_shift", a.bound_I1_shift},
          {"rate_I1_shift", a.rate_I1_shift},
          {"lower_I1_prime", a.lower_I1_prime},
          {"c", a.c},
          {"k0", a.k0},
          {"low_term", a.low_term},
          {"low_norm", a.low_norm},
          {"low_gradient", a.low_gradient},
          {"band_ks", a.band_ks},
          {"band_terms", a.band_terms},
          {"band_bounds", a.band_bounds},
          {"quad_error", a.quad_error},
          {"t_nodes", a.t_nodes},
          {"checks", to_json(a.checks)},
          {"passed", a.passed}};
}

json to_json(const CornerAudit& a) {
  return {{"s", a.s},
          {"ell_prime", a.ell_prime},
          {"ell", a.ell},
          {"ell_dprime", a.ell_dprime},
          {"smoothed", a.smoothed},
          {"I1", a.I1},
          {"I2", a.I2},
          {"I3", a.I3},
          {"I4", a.I4},
          {"I1_prime", a.I1_prime},
          {"I1_dprime", a.I1_dprime},
          {"mass", a.mass},
          {"norm_f", a.norm_f},
          {"bound_I2", a.bound_I2},
          {"bound_I1_shift", a.bound_I1_shift},
          {"r1", a.r1},
          {"r2", a.r2},
          {"r_low", a.r_low},
          {"varsigma", a.varsigma},
          {"varsigma_prime", a.varsigma_prime},
          {"varsigma_dprime", a.varsigma_dprime},
          {"A1", a.A1},
          {"A2", a.A2},
          {"reflected", a.reflected},
          {"tau_tilde_mass", a.tau_tilde_mass},
          {"swap_lhs", a.swap_lhs},
          {"swap_mollifier_term", a.swap_mollifier_term},
          {"swap_tail_high", a.swap_tail_high},
          {"swap_tail_low", a.swap_tail_low},
          {"c_rho", a.c_rho},
          {"k0", a.k0},
          {"low_norm", a.low_norm},
          {"low_gradient", a.low_gradient},
          {"band_ks", a.band_ks},
          {"band_terms", a.band_terms},
          {"band_lambda", a.band_lambda},
          {"band_square_sum", a.band_square_sum},
          {"band_square_max", a.band_square_max},
          {"squares", a.squares},
          {"sigma", a.sigma},
          {"sigma_intercept", a.sigma_intercept},
          {"b_zero", a.b_zero},
          {"quad_error", a.quad_error},
          {"checks", to_json(a.checks)},
          {"passed", a.passed}};
}

json to_json(const Schedule& s) {
  return {{"epsilon", s.epsilon}, {"C_base", s.C_base}, {"Gamma", s.Gamma},     {"ell_cap", s.ell_cap},
          {"ells", s.ells},       {"c", s.c},           {"C_rho", s.C_rho},     {"K_cap", s.K_cap},
          {"resolution_limited", s.resolution_limited}};
}

json to_json(const IterationTrace& t) {
  json steps = json::array();
  for (const auto& st : t.steps)
    steps.push_back({{"k", st.k},
                     {"ell_k", st.ell_k},
                     {"ell_mid", st.ell_mid},
                     {"ell_next", st.ell_next},
                     {"I_cert", st.I_cert},
                     {"threshold_large", st.threshold_large},
                     {"increment_norm", st.increment_norm},
                     {"threshold_increment", st.threshold_increment},
                     {"branch", branch_name(st.branch)},
                     {"partial_sum", st.partial_sum},
                     {"audit", to_json(st.audit)}});
  return {{"schedule", to_json(t.schedule)},
          {"curve", t.curve},
          {"c", t.c},
          {"C_rho", t.C_rho},
          {"mass", t.mass},
          {"norm_f_sq", t.norm_f_sq},
          {"steps", steps},
          {"k0", t.k0},
          {"increments", t.increments},
          {"increment_sum", t.increment_sum},
          {"increment_step_bound", t.increment_step_bound},
          {"delta", t.delta},
          {"certificate", t.certificate},
          {"resolution_limited", t.resolution_limited},
          {"checks", to_json(t.checks)},
          {"passed", t.passed}};
}

json to_json(const TelescopeAudit& a) {
  return {{"ells", a.ells},
          {"diff_sq", a.diff_sq},
          {"J1", a.J1},
          {"J2", a.J2},
          {"J3", a.J3},
          {"total", a.total},
          {"J1_total", a.J1_total},
          {"J2_total", a.J2_total},
          {"J3_total", a.J3_total},
          {"f_l2_sq", a.f_l2_sq},
          {"C_rho_measured", a.C_rho_measured},
          {"C_rho_analytic", a.C_rho_analytic},
          {"grad_rho_hat", a.grad_rho_hat},
          {"rho_hat_sup", a.rho_hat_sup},
          {"J1_bound", a.J1_bound},
          {"J2_bound", a.J2_bound},
          {"J3_bound", a.J3_bound},
          {"split_residual", a.split_residual},
          {"checks", to_json(a.checks)},
          {"passed", a.passed}};
}

json to_json(const PatternWitness& w) {
  json pts = json::array();
  for (const auto& p : w.points) pts.push_back(vec(p));
  json ledger = json::array();
  for (const auto& lv : w.ledger)
    ledger.push_back({{"ell", lv.ell},
                      {"t_lo", lv.t_lo},
                      {"t_hi", lv.t_hi},
                      {"nodes", lv.nodes},
                      {"max_overlap", lv.max_overlap},
                      {"threshold", lv.threshold},
                      {"hit", lv.hit}});
  json reductions = json::array();
  if (w.rectangle) {
    const auto& r = *w.rectangle;
    reductions.push_back({{"kind", "rectangle"},
                          {"s", r.s},
                          {"N", r.N},
                          {"N_rounded", r.N_rounded},
                          {"offset", r.offset},
                          {"extents", r.extents},
                          {"density_in_rect", r.density_in_rect},
                          {"density_global", r.density_global},
                          {"density_max", r.density_max},
                          {"rect_index", r.rect_index},
                          {"rect_count", r.rect_count}});
  }
  if (w.slice) {
    const auto& s = *w.slice;
    json L = json::array();
    for (int i = 0; i < s.L.rows(); ++i) L.push_back(vec(s.L.row(i).transpose()));
    reductions.push_back({{"kind", "slice"},
                          {"n0", s.n0},
                          {"basis_idx", s.basis_idx},
                          {"dependent_idx", s.dependent_idx},
                          {"L", L},
                          {"x0", vec(s.x0)},
                          {"slice_measure", s.slice_measure},
                          {"max_slice_measure", s.max_slice_measure},
                          {"kappa", s.kappa},
                          {"jacobian", s.jacobian},
                          {"lift_identity_residual", s.lift_identity_residual},
                          {"translates_scanned", s.translates_scanned}});
  }
  return {{"mode", mode_name(w.mode)},
          {"x", vec(w.x)},
          {"y", vec(w.y)},
          {"points", pts},
          {"t", w.t},
          {"gap_certified", w.gap_certified},
          {"overlap_mass", w.overlap_mass},
          {"noise", w.noise},
          {"threshold", w.threshold},
          {"level", w.level},
          {"residual_cells", w.residual_cells},
          {"scan", ledger},
          {"reductions", reductions}};
}

namespace {

std::string join(const Eigen::VectorXd& v) {
  std::ostringstream os;
  os << std::setprecision(17);
  for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? ";" : "") << v(i);
  return os.str();
}

}  // namespace

std::string decay_csv(const DecayFit& f, const RunMeta& meta) {
  std::ostringstream os;
  os << csv_header(meta) << std::setprecision(17);
  os << "k,s,ell,sup_abs_m,log2_sup,argmax_xi,i0,quad_error_max,evaluated,pruned\n";
  for (std::size_t j = 0; j < f.ks.size(); ++j)
    os << f.ks[j] << ',' << f.s << ',' << f.ell << ',' << f.sup_values[j] << ',' << std::log2(f.sup_values[j]) << ','
       << join(f.argmax_xi[j]) << ',' << f.i0[j] << ',' << f.quad_error_max[j] << ',' << f.evaluated[j] << ','
       << f.pruned[j] << '\n';
  return os.str();
}

std::string iteration_csv(const IterationTrace& t, const RunMeta& meta) {
  std::ostringstream os;
  os << csv_header(meta) << std::setprecision(17);
  os << "k,ell_k,ell_mid,ell_next,I_cert,threshold_large,increment_norm,threshold_increment,branch,partial_sum,"
        "audit_passed\n";
  for (const auto& s : t.steps)
    os << s.k << ',' << s.ell_k << ',' << s.ell_mid << ',' << s.ell_next << ',' << s.I_cert << ','
       << s.threshold_large << ',' << s.increment_norm << ',' << s.threshold_increment << ','
       << branch_name(s.branch) << ',' << s.partial_sum << ',' << (s.audit.passed ? 1 : 0) << '\n';
  return os.str();
}

std::string witness_csv(const PatternWitness& w, const RunMeta& meta) {
  std::ostringstream os;
  os << csv_header(meta) << std::setprecision(17);
  os << "mode,t,gap_certified,overlap_mass,x,y,residual_cells\n";
  os << mode_name(w.mode) << ',' << w.t << ',' << w.gap_certified << ',' << w.overlap_mass << ',' << join(w.x) << ','
     << join(w.y) << ',' << w.residual_cells << '\n';
  return os.str();
}

}  // namespace curvepat
