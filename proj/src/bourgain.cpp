#include "curvepat/bourgain.hpp"

#include "curvepat/errors.hpp"
#include "curvepat/fft.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace curvepat {

Schedule make_schedule(double epsilon, const ScaleLattice& lattice, double C_base, int ell_cap) {
  if (!(epsilon > 0.0 && epsilon < 0.5)) throw PreconditionError("epsilon must lie in (0, 1/2)");
  if (!(C_base > 1.0)) throw PreconditionError("C_base must exceed 1");
  Schedule s;
  s.epsilon = epsilon;
  s.C_base = C_base;
  s.Gamma = lattice.Gamma;
  s.ell_cap = ell_cap;
  const double base = std::log2(1.0 / epsilon);
  for (int k = 0; k < 64; ++k) {
    int ell = lattice.round_ell(std::pow(C_base, k) * base);
    if (!s.ells.empty() && ell <= s.ells.back()) ell = s.ells.back() + 2 * lattice.Gamma;
    if (ell > ell_cap) break;
    s.ells.push_back(ell);
  }
  if (s.ells.size() < 3) {
    std::ostringstream os;
    os << "only " << s.ells.size() << " lattice scales (Gamma=" << lattice.Gamma << ") fit under the resolution cap "
       << ell_cap;
    throw ScheduleError(os.str());
  }
  s.resolution_limited = true;
  return s;
}

long long k_cap(double c, double C_rho, double epsilon) {
  return static_cast<long long>(std::ceil(8.0 * C_rho / (c * c * std::pow(epsilon, 4)))) + 1;
}

void finalize_schedule(Schedule& s, double c, double C_rho) {
  s.c = c;
  s.C_rho = C_rho;
  s.K_cap = k_cap(c, C_rho, s.epsilon);
  s.resolution_limited = static_cast<long long>(s.ells.size()) < s.K_cap + 1;
}

int midpoint_scale(const ScaleLattice& lattice, int lo, int hi) {
  if (hi - lo < 2) {
    std::ostringstream os;
    os << "no integer scale strictly between " << lo << " and " << hi;
    throw ScheduleError(os.str());
  }
  const double mid = 0.5 * (lo + hi);
  int best = -1;
  for (int ell = lo + 1; ell < hi; ++ell)
    if (lattice.admissible_ell(ell) && (best < 0 || std::abs(ell - mid) < std::abs(best - mid))) best = ell;
  if (best >= 0) return best;
  return static_cast<int>(std::floor(mid));
}

namespace {

double rho_hat_tab(const BumpKit& kit, double r) { return r > kit.rho_hat_max ? 0.0 : kit.rho_hat(r); }

std::vector<int> padded_shape(const BumpKit& kit, int ell_min, const GridFunction& f) {
  std::vector<int> shape(f.n);
  for (int a = 0; a < f.n; ++a) {
    const int J = static_cast<int>(std::ceil(std::ldexp(kit.support_radius, -ell_min) / f.cell(a)));
    shape[a] = next_pow2(static_cast<long long>(f.dims[a]) + 2LL * J + 2);
  }
  return shape;
}

}  // namespace

double analytic_C_rho(const BumpKit& kit, const std::vector<int>& ells) {
  if (ells.size() < 2) return 0.0;
  const int top = *std::max_element(ells.begin(), ells.end());
  const double rmax = std::ldexp(kit.rho_hat_max, top);
  double best = 0.0;
  const int samples = 20000;
  for (int j = 0; j <= samples; ++j) {
    const double r = 1e-3 * std::pow(rmax / 1e-3, static_cast<double>(j) / samples);
    double sum = 0.0;
    for (std::size_t k = 0; k + 1 < ells.size(); ++k) {
      const double d = rho_hat_tab(kit, std::ldexp(r, -ells[k])) - rho_hat_tab(kit, std::ldexp(r, -ells[k + 1]));
      sum += d * d;
    }
    best = std::max(best, sum);
  }
  return best;
}

double discrete_C_rho(const BumpKit& kit, const std::vector<int>& ells, const GridFunction& f) {
  if (ells.size() < 2) return 0.0;
  const auto shape = padded_shape(kit, *std::min_element(ells.begin(), ells.end()), f);
  std::vector<Eigen::ArrayXcd> K;
  for (int ell : ells) K.push_back(mollifier_spectrum(kit, ell, f, shape));
  Eigen::ArrayXd sum = Eigen::ArrayXd::Zero(K[0].size());
  for (std::size_t k = 0; k + 1 < K.size(); ++k) sum += (K[k] - K[k + 1]).abs2();
  return sum.maxCoeff();
}

CCalibration measure_c(const std::vector<GridFunction>& suite, const BumpKit& kit, int ell) {
  if (suite.empty()) throw PreconditionError("calibration suite is empty");
  CCalibration cal;
  cal.ell = ell;
  cal.c = std::numeric_limits<double>::infinity();
  for (const auto& f : suite) {
    const auto lb = lower_bound_lemma(f, kit, ell);
    cal.ratios.push_back(lb.ratio);
    cal.c = std::min(cal.c, lb.ratio);
  }
  return cal;
}

std::string branch_name(Branch b) { return b == Branch::Large ? "large-form" : "increment"; }

IterationTrace run_iteration(const GridFunction& f, const Curve& c, const BumpKit& kit, const Schedule& schedule,
                             const IterationOptions& opt) {
  const double eps = schedule.epsilon;
  if (f.values.minCoeff() < 0.0 || f.values.maxCoeff() > 1.0) throw PreconditionError("need 0 <= f <= 1");
  for (int a = 0; a < f.n; ++a)
    if (f.lo[a] < 0.0 || f.hi[a] > 1.0) throw PreconditionError("f must be supported in the unit box");
  IterationTrace tr;
  tr.schedule = schedule;
  tr.curve = describe(c);
  tr.mass = integral(f);
  if (tr.mass < eps) {
    std::ostringstream os;
    os << "int f = " << tr.mass << " is below epsilon = " << eps;
    throw PreconditionError(os.str());
  }
  const double nf = l2_norm(f);
  tr.norm_f_sq = nf * nf;
  tr.c = opt.c;
  tr.C_rho = opt.C_rho > 0.0 ? opt.C_rho
                             : std::max(analytic_C_rho(kit, schedule.ells), discrete_C_rho(kit, schedule.ells, f));
  tr.schedule.c = tr.c;
  tr.schedule.C_rho = tr.C_rho;
  tr.schedule.K_cap = k_cap(tr.c, tr.C_rho, eps);
  tr.resolution_limited = static_cast<long long>(schedule.ells.size()) < tr.schedule.K_cap + 1;
  const double eps2 = eps * eps;
  tr.increment_step_bound = tr.C_rho * tr.norm_f_sq / std::pow(0.5 * tr.c * eps2, 2);

  const ScaleLattice lattice = ScaleLattice::with_gamma(schedule.Gamma, 64);
  bool done = false;
  for (std::size_t k = 0; k + 1 < schedule.ells.size(); ++k) {
    if (static_cast<long long>(k + 1) > tr.schedule.K_cap) break;
    IterationStep st;
    st.k = static_cast<int>(k + 1);
    st.ell_k = schedule.ells[k];
    st.ell_next = schedule.ells[k + 1];
    st.ell_mid = midpoint_scale(lattice, st.ell_k, st.ell_next);
    StepOptions so = opt.step;
    so.c = opt.c;
    st.audit = bourgain_step(f, c, kit, st.ell_k, st.ell_mid, st.ell_next, so);
    st.I_cert = st.audit.smoothed / (std::ldexp(1.0, st.ell_mid) * kit.tau_max);
    st.threshold_large = std::ldexp(opt.c * eps2, -st.ell_next - 1);
    st.increment_norm = st.audit.bound_I2;
    st.threshold_increment = 0.5 * opt.c * eps2;
    if (st.I_cert > st.threshold_large) {
      st.branch = Branch::Large;
      st.partial_sum = tr.increment_sum;
      tr.k0 = st.k;
      tr.delta = st.threshold_large;
      std::ostringstream os;
      os << "int int f(x) f(x+gamma(t)) dt dx >= " << st.I_cert << " > 2^{-" << st.ell_next + 1 << "} c eps^2 = "
         << tr.delta << " (tau-smoothed at ell = " << st.ell_mid << ", step " << st.k << ")";
      tr.certificate = os.str();
      tr.steps.push_back(std::move(st));
      done = true;
      break;
    }
    if (st.increment_norm >= st.threshold_increment) {
      st.branch = Branch::Increment;
      ++tr.increments;
      tr.increment_sum += st.increment_norm * st.increment_norm;
      st.partial_sum = tr.increment_sum;
      tr.steps.push_back(std::move(st));
      continue;
    }
    std::ostringstream os;
    os << "step " << st.k << ": neither branch holds (I_cert = " << st.I_cert << " <= " << st.threshold_large
       << ", increment " << st.increment_norm << " < " << st.threshold_increment << "); increments so far "
       << tr.increments << ", sum of squares " << tr.increment_sum;
    throw BudgetExceeded(os.str());
  }
  if (!done) {
    std::ostringstream os;
    os << "schedule exhausted after " << tr.steps.size() << " steps without a large-form step (K_cap "
       << tr.schedule.K_cap << ", " << schedule.ells.size() << " resolvable scales); increments " << tr.increments
       << ", sum of squares " << tr.increment_sum;
    throw BudgetExceeded(os.str());
  }
  const double tol = 1e-12 * std::max(1.0, tr.C_rho * tr.norm_f_sq);
  tr.checks.push_back(make_check("sum of squared increments <= C_rho ||f||^2", tr.increment_sum,
                                 tr.C_rho * tr.norm_f_sq, tol));
  tr.checks.push_back(make_check("increment steps <= C_rho ||f||^2 / (c eps^2/2)^2", tr.increments,
                                 tr.increment_step_bound, 0.0));
  tr.checks.push_back(make_check("k0 <= K_cap", tr.k0, static_cast<double>(tr.schedule.K_cap), 0.0));
  tr.checks.push_back(make_check("delta > 0", -tr.delta, 0.0, -std::numeric_limits<double>::min()));
  tr.passed = all_ok(tr.checks);
  return tr;
}

TelescopeAudit telescope_audit(const GridFunction& f, const BumpKit& kit, const std::vector<int>& ells) {
  if (ells.size() < 2) throw PreconditionError("telescope audit needs at least two scales");
  for (std::size_t k = 0; k + 1 < ells.size(); ++k)
    if (ells[k + 1] <= ells[k]) throw PreconditionError("scales must be strictly increasing");
  TelescopeAudit a;
  a.ells = ells;
  const auto shape = padded_shape(kit, ells.front(), f);
  const auto& fft = fft_for(shape);
  const auto lengths = padded_lengths(f, shape);
  const Eigen::ArrayXd power = fft.forward(embed_padded(f, shape)).abs2();
  const Eigen::ArrayXd radius = fft.frequency_radius(lengths).sqrt();
  const Eigen::ArrayXd mult = fft.multiplicity();
  const double norm = f.cell_volume() / static_cast<double>(fft.real_size());
  a.f_l2_sq = (mult * power).sum() * norm;

  const int K = static_cast<int>(ells.size()) - 1;
  a.diff_sq.assign(K, 0.0);
  a.J1.assign(K, 0.0);
  a.J2.assign(K, 0.0);
  a.J3.assign(K, 0.0);
  Eigen::ArrayXd sup_sum = Eigen::ArrayXd::Zero(power.size());
  double grad_measured = 0.0, J3_const = 0.0;
  Eigen::ArrayXd lower = radius.unaryExpr([&](double r) { return rho_hat_tab(kit, std::ldexp(r, -ells[0])); });
  for (int k = 0; k < K; ++k) {
    const Eigen::ArrayXd upper =
        radius.unaryExpr([&](double r) { return rho_hat_tab(kit, std::ldexp(r, -ells[k + 1])); });
    const Eigen::ArrayXd d2 = (lower - upper).square();
    sup_sum += d2;
    const double lo_cut = std::exp2(0.5 * ells[k]), hi_cut = std::exp2(0.5 * ells[k + 1]);
    double j3_sup = 0.0;
    for (Eigen::Index i = 0; i < power.size(); ++i) {
      const double e = mult(i) * power(i) * d2(i) * norm;
      const double r = radius(i);
      if (r <= lo_cut) {
        a.J1[k] += e;
        if (r > 0) grad_measured = std::max(grad_measured, std::sqrt(d2(i)) / (std::ldexp(r, -ells[k])));
      } else if (r < hi_cut) {
        a.J2[k] += e;
      } else {
        a.J3[k] += e;
        j3_sup = std::max(j3_sup, d2(i));
      }
    }
    J3_const += j3_sup;
    a.diff_sq[k] = a.J1[k] + a.J2[k] + a.J3[k];
    lower = upper;
  }
  for (int k = 0; k < K; ++k) {
    a.J1_total += a.J1[k];
    a.J2_total += a.J2[k];
    a.J3_total += a.J3[k];
  }
  // the total is summed independently of the split
  for (int k = 0; k < K; ++k) {
    const Eigen::ArrayXd lo =
        radius.unaryExpr([&](double r) { return rho_hat_tab(kit, std::ldexp(r, -ells[k])); });
    const Eigen::ArrayXd hi =
        radius.unaryExpr([&](double r) { return rho_hat_tab(kit, std::ldexp(r, -ells[k + 1])); });
    a.total += (mult * power * (lo - hi).square()).sum() * norm;
  }
  a.split_residual = std::abs(a.J1_total + a.J2_total + a.J3_total - a.total);
  a.C_rho_measured = sup_sum.maxCoeff();
  a.C_rho_analytic = analytic_C_rho(kit, ells);
  a.grad_rho_hat = std::max(kit.rho_hat_grad_sup, grad_measured);
  double geo = 0.0;
  for (int k = 0; k < K; ++k) geo += std::ldexp(1.0, -ells[k]);
  a.J1_bound = a.grad_rho_hat * a.grad_rho_hat * a.f_l2_sq * geo;
  a.J2_bound = a.rho_hat_sup * a.rho_hat_sup * a.f_l2_sq;
  a.J3_bound = J3_const * a.f_l2_sq;

  const double tol = 1e-12 * std::max(a.total, a.f_l2_sq);
  auto& ch = a.checks;
  ch.push_back(make_check("telescoping sum <= C_rho ||f||^2", a.total, a.C_rho_measured * a.f_l2_sq, tol));
  ch.push_back(make_check("J1 + J2 + J3 reproduces the sum", a.split_residual, 0.0, 1e-8 * std::max(a.total, 1e-300)));
  ch.push_back(make_check("J1 <= |grad rho^|^2 ||f||^2 sum 2^{-ell_k}", a.J1_total, a.J1_bound, tol));
  ch.push_back(make_check("J2 <= |rho^|^2 ||f||^2", a.J2_total, a.J2_bound, tol));
  ch.push_back(make_check("J3 <= sum_k sup_high |Delta_k|^2 ||f||^2", a.J3_total, a.J3_bound, tol));
  a.passed = all_ok(ch);
  return a;
}

}  // namespace curvepat
