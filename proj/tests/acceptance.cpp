// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include "curvepat/bourgain.hpp"
#include "curvepat/counting.hpp"
#include "curvepat/errors.hpp"
#include "curvepat/generators.hpp"
#include "curvepat/gridfield.hpp"
#include "curvepat/oscillatory.hpp"
#include "curvepat/patterns.hpp"
#include "curvepat/sampling.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

using namespace curvepat;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Outcome {
  bool ok = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Curve curve_of(std::vector<CoeffMap> polys) { return make_curve(polys); }

// Least-squares slope of log2 y against x, computed here rather than taken from the fit.
double slope_of(const std::vector<int>& xs, const std::vector<double>& ys, int from) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (std::size_t j = 0; j < xs.size(); ++j) {
    if (xs[j] < from) continue;
    const double x = xs[j], y = std::log2(ys[j]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++m;
  }
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

// ---- 1 ----------------------------------------------------------------------

Outcome multiplier_decay() {
  struct Case {
    Curve c;
    int d, pts;
  };
  std::vector<Case> cases{{curve_of({{{1, 1.0}}, {{2, 1.0}}}), 2, 4096},
                          {curve_of({{{1, 1.0}}, {{3, 1.0}}}), 3, 4096},
                          {curve_of({{{1, 1.0}}, {{2, 1.0}}, {{3, 1.0}}}), 3, 16384}};
  Outcome o{true, ""};
  std::ostringstream os;
  for (const auto& cs : cases) {
    const int gamma = calibrate_lattice(cs.c).Gamma;
    const auto t0 = std::chrono::steady_clock::now();
    const auto fit = decay_fit(cs.c, 0, gamma, 6, 16, cs.pts, bump_kit(cs.c.n));
    const double secs = seconds_since(t0);
    const double slope = slope_of(fit.ks, fit.sup_values, fit.fit_kmin);
    const bool ok = slope <= -1.0 / cs.d + 0.1 && secs <= 300.0;
    o.ok = o.ok && ok;
    os << describe(cs.c) << " Gamma=" << gamma << " slope=" << slope << " (<= " << -1.0 / cs.d + 0.1 << ") "
       << secs << "s; ";
  }
  o.detail = os.str();
  return o;
}

// ---- 2 ----------------------------------------------------------------------

Outcome rescaled_decay() {
  const Curve c = curve_of({{{1, 1.0}}, {{2, 1.0}}});
  const int gamma = calibrate_lattice(c).Gamma;
  Outcome o{true, ""};
  std::ostringstream os;
  for (int s : {2 * gamma, 4 * gamma})
    for (int ell : {gamma, 3 * gamma}) {
      // lambda = 2^{k - 2 ell} must reach 4 inside the window
      const int kmin = ell == gamma ? 6 : 2 * ell + 2;
      const int kmax = ell == gamma ? 16 : 2 * ell + 12;
      const auto fit = decay_fit(c, s, ell, kmin, kmax, 4096, bump_kit(2));
      const double slope = slope_of(fit.ks, fit.sup_values, fit.fit_kmin);
      const bool ok = slope <= -0.5 + 0.1;
      o.ok = o.ok && ok;
      os << "s=" << s << " ell=" << ell << " k=[" << kmin << "," << kmax << "] slope=" << slope << "; ";
    }
  o.detail = os.str();
  return o;
}

// ---- 3 ----------------------------------------------------------------------

Outcome operator_consistency() {
  const Curve c = curve_of({{{1, 1.0}}, {{2, 1.0}}});
  const BumpKit& kit = bump_kit(2);
  const int ell = 9, dims = 1024;
  const auto shell = shell_points(2, 4096);
  Rng rng(2024);
  Outcome o{true, ""};
  double worst_ratio = 0, worst_route = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const int k = 8 + trial % 5;
    const double L = std::ldexp(1.0, 1 - k);
    GridFunction g = GridFunction::zeros({dims, dims}, {0, 0}, {L, L});
    std::vector<Eigen::VectorXd> modes;
    // integer modes 2 <= |m| < 4 on a box of side 2^{1-k}: |xi| = |m| 2^{k-1} lies in [2^k, 2^{k+1})
    for (int m1 = -4; m1 <= 4; ++m1)
      for (int m2 = -4; m2 <= 4; ++m2) {
        const double r = std::hypot(m1, m2);
        if (r < 2 || r >= 4) continue;
        const double amp = rng.normal(), ph = kTwoPi * rng.uniform();
        for (int i = 0; i < dims; ++i)
          for (int j = 0; j < dims; ++j)
            g.values(static_cast<Eigen::Index>(i) * dims + j) +=
                amp * std::cos(kTwoPi * (m1 * (i + 0.5) + m2 * (j + 0.5)) / dims + ph);
        Eigen::VectorXd xi(2);
        xi << 0.5 * m1, 0.5 * m2;
        modes.push_back(xi);
      }
    double sup = 0;
    for (const auto& xi : shell) sup = std::max(sup, std::abs(multiplier(c, k, 0, ell, xi, kit).value));
    for (const auto& xi : modes) sup = std::max(sup, std::abs(multiplier(c, k, 0, ell, xi, kit).value));

    ApplyTOptions opt;
    opt.boundary = Boundary::Periodic;
    const auto spatial = apply_T(g, c, 0, ell, kit, TRoute::Spatial, opt);
    const auto spectral = apply_T(g, c, 0, ell, kit, TRoute::Multiplier, opt);
    const double ratio = l2_norm(spectral.out) / (sup * l2_norm(g));
    const double route = l2_norm(subtract(spatial.out, spectral.out)) / l2_norm(spectral.out);
    worst_ratio = std::max(worst_ratio, ratio);
    worst_route = std::max(worst_route, route);
    o.ok = o.ok && ratio <= 1.0 + 1e-3 && route <= 1e-4;
  }
  std::ostringstream os;
  os << "max ||Tg||/(sup|m| ||g||)=" << worst_ratio << " (<= 1.001), max route difference=" << worst_route
     << " (<= 1e-4)";
  o.detail = os.str();
  return o;
}

// ---- 4 ----------------------------------------------------------------------

// Bilinear interpolation of cell-centred samples, zero outside the box.
double bilinear(const GridFunction& f, double x, double y) {
  const double u = x / f.cell(0) - 0.5, v = y / f.cell(1) - 0.5;
  const int i = static_cast<int>(std::floor(u)), j = static_cast<int>(std::floor(v));
  const double a = u - i, b = v - j;
  double s = 0;
  for (int di = 0; di < 2; ++di)
    for (int dj = 0; dj < 2; ++dj) {
      const int ii = i + di, jj = j + dj;
      if (ii < 0 || jj < 0 || ii >= f.dims[0] || jj >= f.dims[1]) continue;
      s += (di ? a : 1 - a) * (dj ? b : 1 - b) * f.values(static_cast<Eigen::Index>(ii) * f.dims[1] + jj);
    }
  return s;
}

Outcome counting_oracles() {
  Outcome o{true, ""};
  std::ostringstream os;
  auto f1 = GridFunction::unit({1024});
  f1.values.setOnes();
  const double half = two_point_form(f1, curve_of({{{1, 1.0}}}), 0, TWindow::unit()).value;
  auto f2 = GridFunction::unit({1024, 1024});
  f2.values.setOnes();
  const double twelfths = two_point_form(f2, curve_of({{{1, 1.0}}, {{2, 1.0}}}), 0, TWindow::unit()).value;
  o.ok = std::abs(half - 0.5) <= 5e-3 && std::abs(twelfths - 5.0 / 12) <= 5e-3;
  os << "1/2 -> " << half << ", 5/12 -> " << twelfths << "; ";

  const auto P1 = make_polynomial({{1, 1.0}}), P2 = make_polynomial({{2, 1.0}});
  const int N = 64, T = 40;
  double worst = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto f = random_density({N, N}, 0.2 + 0.05 * seed, 100 + seed);
    const double form = corner_form(f, P1, P2, 0, TWindow::unit(), T).value;
    double brute = 0;
    for (int q = 0; q <= T; ++q) {
      const double t = double(q) / T, w = (q == 0 || q == T) ? 0.5 : 1.0;
      for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) {
          const double fv = f.values(i * N + j);
          if (fv == 0) continue;
          const double x = f.center(0, i), y = f.center(1, j);
          brute += w * fv * bilinear(f, x + t, y) * bilinear(f, x, y + t * t);
        }
    }
    brute *= f.cell_volume() / T;
    worst = std::max(worst, std::abs(form - brute) / brute);
  }
  o.ok = o.ok && worst <= 1e-2;
  os << "corner vs brute force max rel=" << worst << " over 10 sets";
  o.detail = os.str();
  return o;
}

// ---- 5 ----------------------------------------------------------------------

Outcome lower_bound_floor() {
  double worst = 1e300;
  int violations = 0, evaluations = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const bool one_d = seed % 2 == 0;
    const auto f = one_d ? random_density({4096}, 0.1, 500 + seed) : random_density({256, 256}, 0.1, 500 + seed);
    const BumpKit& kit = bump_kit(f.n);
    for (int k = 4; k <= max_resolvable_ell(kit, f); ++k) {
      const auto lb = lower_bound_lemma(f, kit, k);
      worst = std::min(worst, lb.ratio);
      ++evaluations;
      if (lb.ratio < 0.5) ++violations;
    }
  }
  std::ostringstream os;
  os << "min ratio=" << worst << " over " << evaluations << " (set, k) pairs, violations=" << violations;
  return {violations == 0, os.str()};
}

// ---- 6 ----------------------------------------------------------------------

Outcome telescope_budget() {
  int violations = 0;
  double worst_split = 0, worst_budget = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    GridFunction f = GridFunction::unit({128, 128});
    Rng rng(900 + seed);
    if (seed % 2 == 0) {
      for (Eigen::Index i = 0; i < f.size(); ++i) f.values(i) = rng.uniform();
    } else {
      f = random_density({128, 128}, 0.1 + 0.008 * seed, 900 + seed);
    }
    const auto a = telescope_audit(f, bump_kit(2), {2, 3, 5, 9, 17});
    const double split = std::abs(a.J1_total + a.J2_total + a.J3_total - a.total) / a.total;
    const double budget = a.total / (a.C_rho_measured * a.f_l2_sq);
    worst_split = std::max(worst_split, split);
    worst_budget = std::max(worst_budget, budget);
    if (split > 1e-8 || budget > 1.0 || !a.passed) ++violations;
  }
  std::ostringstream os;
  os << "max total/(C_rho ||f||^2)=" << worst_budget << ", max split error=" << worst_split
     << ", violations=" << violations;
  return {violations == 0, os.str()};
}

// ---- 7 ----------------------------------------------------------------------

struct IterationCheck {
  bool ok = false;
  int k0 = 0;
};

IterationCheck iterate_once(const GridFunction& f, const Curve& c, double eps) {
  const BumpKit& kit = bump_kit(2);
  const Schedule sched = make_schedule(eps, ScaleLattice::with_gamma(1, 64), 2.0, max_resolvable_ell(kit, f));
  double cc = 1.0;
  for (int ell : sched.ells) cc = std::min(cc, measure_c({f}, kit, ell).c);
  IterationOptions opt;
  opt.c = cc;
  try {
    const auto tr = run_iteration(f, c, kit, sched, opt);
    const double bound = tr.C_rho / std::pow(tr.c * eps * eps / 2, 2);
    const bool ok = tr.passed && tr.k0 >= 1 && tr.k0 <= tr.schedule.K_cap && tr.delta > 0 && tr.increments <= bound;
    return {ok, tr.k0};
  } catch (const BudgetExceeded&) {
    return {false, -1};
  }
}

Outcome bourgain_iteration() {
  const Curve c = curve_of({{{1, 1.0}}, {{2, 1.0}}});
  const double eps = 0.2;
  int failures = 0, max_k0 = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(3000 + seed);
    const double p = 0.22 + 0.3 * rng.uniform();
    const auto r = iterate_once(random_density({1024, 1024}, p, 3100 + seed), c, eps);
    if (!r.ok) ++failures;
    max_k0 = std::max(max_k0, r.k0);
  }
  int smooth_failures = 0;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto g = presmoothed(random_density({1024, 1024}, 0.3, 4000 + seed), bump_kit(2), 5);
    const auto r = iterate_once(g, c, eps);
    if (!r.ok || r.k0 != 1) ++smooth_failures;
  }
  std::ostringstream os;
  os << "random: " << 50 - failures << "/50 certified, max k0=" << max_k0 << "; pre-smoothed with k0=1: "
     << 3 - smooth_failures << "/3";
  return {failures == 0 && smooth_failures == 0, os.str()};
}

// ---- 8 ----------------------------------------------------------------------

Outcome planted_witnesses() {
  const Curve c = curve_of({{{1, 1.0}}, {{2, 1.0}}});
  int found = 0, total = 0;
  double worst = 0;
  auto record = [&](double cells) {
    ++total;
    worst = std::max(worst, cells);
    if (cells <= 2.0) ++found;
  };
  auto max_cells = [&](const Eigen::VectorXd& d, const GridFunction& E) {
    double m = 0;
    for (int a = 0; a < E.n; ++a) m = std::max(m, std::abs(d(a)) / E.cell(a));
    return m;
  };

  for (std::uint64_t seed = 1; seed <= 7; ++seed) {
    const double t = 0.05 + 0.13 * seed;
    const auto P = planted_pair({512, 512}, {0, 0}, {1, 1}, c, t, seed);
    SearchConfig cfg;
    cfg.epsilon = integral(P.set);
    try {
      const auto w = search_unit(P.set, c, cfg);
      record(max_cells(eval_curve(c, w.t) - eval_curve(c, t), P.set));
    } catch (const Error&) {
      record(1e9);
    }
  }

  // N = 2^{sd} = 4096 with Gamma = 3: the pair sits inside one 64 x 4096 rectangle
  const ScaleLattice lat = calibrate_lattice(c);
  for (std::uint64_t seed = 1; seed <= 7; ++seed) {
    Rng rng(70 + seed);
    const double t = 8.0 + 50.0 * rng.uniform();
    const int col = static_cast<int>(rng.below(64));
    const auto local = planted_pair({16, 1024}, {0, 0}, {64, 4096}, c, t, seed);
    auto E = GridFunction::zeros({1024, 1024}, {0, 0}, {4096, 4096});
    for (Eigen::Index k = 0; k < local.set.size(); ++k) {
      const auto id = local.set.unflat(k);
      E.values(E.flat({id[0] + 16 * col, id[1]})) = local.set.values(k);
    }
    try {
      const auto w = search(E, c, lat);
      record(w.mode == SearchMode::Scaled ? max_cells(eval_curve(c, w.t) - eval_curve(c, t), E) : 1e9);
    } catch (const Error&) {
      record(1e9);
    }
  }

  const auto P1 = make_polynomial({{1, 1.0}}), P2 = make_polynomial({{2, 1.0}});
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const double t = 0.1 + 0.12 * seed;
    const auto C = planted_corner({256, 256}, 1.0, P1, P2, t, seed);
    try {
      const auto w = corner_search(C.set, P1, P2, ScaleLattice::with_gamma(1));
      const double cell = C.set.cell(0);
      record(std::max(std::abs(eval_polynomial(P1, w.t) - eval_polynomial(P1, t)),
                      std::abs(eval_polynomial(P2, w.t) - eval_polynomial(P2, t))) /
             cell);
    } catch (const Error&) {
      record(1e9);
    }
  }
  std::ostringstream os;
  os << found << "/" << total << " planted instances within 2 cells (7 unit, 7 scaled, 6 corner), worst="
     << worst << " cells";
  return {found == 20 && total == 20, os.str()};
}

// ---- 9 ----------------------------------------------------------------------

Outcome dependent_curves() {
  Outcome o{true, ""};
  std::ostringstream os;
  const Curve line = curve_of({{{1, 1.0}}, {{1, 2.0}}});
  for (int trial = 0; trial < 3; ++trial) {
    auto strip = GridFunction::unit({256, 256});
    const double lo = -0.7 + 0.15 * trial;
    for (Eigen::Index k = 0; k < strip.size(); ++k) {
      const auto id = strip.unflat(k);
      const double r = strip.center(1, id[1]) - 2 * strip.center(0, id[0]);
      if (r > lo && r < lo + 0.3) strip.values(k) = 1.0;
    }
    try {
      const auto w = slice_search(strip, line);
      const bool ok = w.slice && w.slice->n0 == 1 && w.residual_cells <= 2.0;
      o.ok = o.ok && ok;
      os << "(t,2t) n0=" << (w.slice ? w.slice->n0 : -1) << " residual=" << w.residual_cells << "; ";
    } catch (const Error& e) {
      o.ok = false;
      os << "(t,2t) " << e.kind() << "; ";
    }
  }
  const Curve spread = curve_of({{{1, 1.0}}, {{2, 1.0}}, {{1, 1.0}, {2, 1.0}}});
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto E = random_density({64, 64, 64}, 0.3, 40 + seed);
    try {
      const auto w = slice_search(E, spread);
      const bool ok = w.slice && w.slice->n0 == 2 && w.residual_cells <= 2.0;
      o.ok = o.ok && ok;
      os << "(t,t^2,t+t^2) n0=" << (w.slice ? w.slice->n0 : -1) << " residual=" << w.residual_cells << "; ";
    } catch (const Error& e) {
      o.ok = false;
      os << "(t,t^2,t+t^2) " << e.kind() << "; ";
    }
  }
  o.detail = os.str();
  return o;
}

// ---- 10 ---------------------------------------------------------------------

Outcome band_machinery() {
  GridFunction f = GridFunction::unit({1024, 1024});
  Rng rng(77);
  for (Eigen::Index i = 0; i < f.size(); ++i) f.values(i) = rng.uniform();
  const auto b = band_project(f, 2, 8);
  Eigen::ArrayXd sum = b.low.values + b.high.values;
  double parts = b.low.values.square().sum() + b.high.values.square().sum();
  for (const auto& g : b.bands) {
    sum += g.values;
    parts += g.values.square().sum();
  }
  const double recon = (sum - f.values).abs().maxCoeff();
  const double energy = f.values.square().sum();
  const double parseval = std::abs(parts - energy) / energy;
  std::ostringstream os;
  os << "reconstruction max error=" << recon << ", Parseval relative error=" << parseval;
  return {recon <= 1e-10 && parseval <= 1e-10, os.str()};
}

}  // namespace

int main() {
  const std::vector<std::pair<int, std::function<Outcome()>>> criteria{
      {1, multiplier_decay},    {2, rescaled_decay},    {3, operator_consistency}, {4, counting_oracles},
      {5, lower_bound_floor},   {6, telescope_budget},  {7, bourgain_iteration},   {8, planted_witnesses},
      {9, dependent_curves},    {10, band_machinery}};
  int failed = 0;
  for (const auto& [id, run] : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const Error& e) {
      o = {false, std::string(e.kind()) + ": " + e.what()};
    }
    if (!o.ok) ++failed;
    std::printf("%s criterion %d: %s [%.1fs]\n", o.ok ? "PASS" : "FAIL", id, o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
