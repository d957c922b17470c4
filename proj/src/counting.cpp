#include "curvepat/counting.hpp"

#include "curvepat/errors.hpp"
#include "curvepat/fft.hpp"
#include "counting_detail.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace curvepat {

Check make_check(std::string name, double lhs, double rhs, double tol) {
  Check c{std::move(name), lhs, rhs, tol, false};
  c.ok = std::isfinite(lhs) && std::isfinite(rhs) && lhs <= rhs + tol;
  return c;
}

bool all_ok(const std::vector<Check>& checks) {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.ok; });
}

std::string TWindow::describe() const {
  if (full) return "full [0,1]";
  std::ostringstream os;
  os << "tau_" << ell << " on [2^-" << ell + 1 << ", 2^" << 1 - ell << "]";
  return os.str();
}

namespace detail {

TNodes make_nodes(const std::vector<const Polynomial*>& comps, const std::vector<double>& cells, TWindow window,
                  const BumpKit& kit, int requested, double cells_per_node) {
  // largest speed of the displacement, in cells per unit of the quadrature variable
  const double span = window.full ? 1.0 : 1.5;
  double speed = 0.0;
  for (int j = 0; j <= 4000; ++j) {
    const double x = window.full ? j / 4000.0 : 0.5 + 1.5 * j / 4000.0;
    const double t = window.full ? x : std::ldexp(x, -window.ell);
    const double dt = window.full ? 1.0 : std::ldexp(1.0, -window.ell);
    for (std::size_t a = 0; a < comps.size(); ++a)
      if (comps[a]) speed = std::max(speed, std::abs(eval_derivative(*comps[a], 1, t)) * dt / cells[a]);
  }
  int N = requested;
  if (N <= 0) N = std::max(window.full ? 256 : 128, static_cast<int>(std::ceil(speed * span / cells_per_node)));
  if (N % 2) ++N;
  const double per_node = speed * span / N;
  if (per_node > 4.0) {
    std::ostringstream os;
    os << "t-quadrature moves " << per_node << " cells per node (limit 4)";
    throw ResolutionError(os.str());
  }
  TNodes nodes;
  nodes.N = N;
  nodes.cells_per_node = per_node;
  const double h = span / N;
  for (int j = 0; j <= N; ++j) {
    double t, w;
    if (window.full) {
      t = j * h;
      w = (j == 0 || j == N) ? 0.5 * h : h;
    } else {
      const double u = 0.5 + j * h;
      t = std::ldexp(u, -window.ell);
      w = kit.tau(u) * h;
      if (w == 0.0) continue;
    }
    nodes.t.push_back(t);
    nodes.w.push_back(w);
    // halving weights: even nodes at doubled spacing
    double wh = 0.0;
    if (j % 2 == 0) wh = window.full ? ((j == 0 || j == N) ? h : 2.0 * h) : 2.0 * w;
    nodes.w_half.push_back(wh);
  }
  return nodes;
}

double interp_wrapped(const Eigen::ArrayXd& C, const std::vector<int>& shape, const double* v,
                      const std::vector<int>& limit) {
  const int n = static_cast<int>(shape.size());
  int base[3];
  double fr[3];
  for (int a = 0; a < n; ++a) {
    const double fl = std::floor(v[a]);
    base[a] = static_cast<int>(fl);
    fr[a] = v[a] - fl;
  }
  double acc = 0.0;
  for (int corner = 0; corner < (1 << n); ++corner) {
    double w = 1.0;
    Eigen::Index p = 0;
    bool zero = false;
    for (int a = 0; a < n; ++a) {
      const int bit = (corner >> a) & 1;
      w *= bit ? fr[a] : 1.0 - fr[a];
      const int i = base[a] + bit;
      if (std::abs(i) > limit[a]) {
        zero = true;
        break;
      }
      p = p * shape[a] + ((i % shape[a]) + shape[a]) % shape[a];
    }
    if (!zero && w != 0.0) acc += w * C(p);
  }
  return acc;
}

QuadPair integrate_correlation(const Eigen::ArrayXd& C, const std::vector<int>& shape, const TNodes& nodes,
                               const Curve& cs, const std::vector<double>& cells, const std::vector<int>& limit) {
  QuadPair q;
  std::vector<double> v(cs.n);
  for (std::size_t j = 0; j < nodes.t.size(); ++j) {
    for (int a = 0; a < cs.n; ++a) v[a] = eval_polynomial(cs.polys[a], nodes.t[j]) / cells[a];
    const double val = interp_wrapped(C, shape, v.data(), limit);
    q.full += nodes.w[j] * val;
    q.half += nodes.w_half[j] * val;
  }
  return q;
}

std::vector<const Polynomial*> components(const Curve& c) {
  std::vector<const Polynomial*> out;
  for (const auto& p : c.polys) out.push_back(&p);
  return out;
}

}  // namespace detail

using detail::integrate_correlation;
using detail::make_nodes;

CountingResult two_point_form(const GridFunction& f, const Curve& c, int s, TWindow window, int t_nodes) {
  if (f.n != c.n) throw DimensionError("grid and curve dimensions differ");
  const Curve cs = rescale_curve(c, s);
  const int n = f.n;
  std::vector<double> cells(n);
  std::vector<int> shape(n), limit(n);
  for (int a = 0; a < n; ++a) {
    cells[a] = f.cell(a);
    shape[a] = next_pow2(2LL * f.dims[a]);
    limit[a] = f.dims[a] - 1;  // the correlation vanishes beyond
  }
  const auto& kit = bump_kit(n);
  const auto nodes = make_nodes(detail::components(cs), cells, window, kit, t_nodes, 0.5);
  const auto& fft = fft_for(shape);
  Eigen::ArrayXcd F = fft.forward(embed_padded(f, shape));
  F = F.abs2().cast<cplx>();
  Eigen::ArrayXd C = fft.inverse(F) * f.cell_volume();
  if (f.values.minCoeff() >= 0.0) C = C.max(0.0);
  const auto q = integrate_correlation(C, shape, nodes, cs, cells, limit);
  CountingResult r;
  r.value = q.full;
  r.error = std::abs(q.full - q.half);
  r.t_nodes = nodes.N;
  r.scheme = "trapezoid in t x multilinear interpolation of the FFT autocorrelation";
  r.window = window.describe();
  return r;
}

namespace {

// cellvol / M * sum mult |X|^2 over a mask.
template <typename Pred>
double spectral_norm2(const RealFft& fft, const std::vector<double>& lengths, const Eigen::ArrayXd& power,
                      double cellvol, Pred&& keep) {
  double s = 0.0;
  fft.for_each_frequency(lengths, [&](Eigen::Index k, const double* xi, double mult) {
    if (keep(k, xi)) s += mult * power(k);
  });
  return s * cellvol / static_cast<double>(fft.real_size());
}

}  // namespace

StepAudit bourgain_step(const GridFunction& f, const Curve& c, const BumpKit& kit, int ell_prime, int ell,
                        int ell_dprime, const StepOptions& opt) {
  if (f.n != c.n || kit.n != f.n) throw DimensionError("grid, curve and kit dimensions differ");
  if (!(ell_prime < ell && ell < ell_dprime)) throw PreconditionError("need ell' < ell < ell''");
  const int resolvable = max_resolvable_ell(kit, f);
  if (ell_dprime > resolvable) {
    std::ostringstream os;
    os << "ell'' = " << ell_dprime << " exceeds the resolvable scale " << resolvable;
    throw ResolutionError(os.str());
  }
  const int n = f.n;
  const TWindow window = TWindow::scale(ell);
  std::vector<double> cells(n);
  for (int a = 0; a < n; ++a) cells[a] = f.cell(a);
  const auto nodes = make_nodes(detail::components(c), cells, window, kit, 0, 0.5);

  std::vector<int> shape(n), limit(n);
  double reach_len = 0.0;
  for (int a = 0; a < n; ++a) {
    double reach = 0.0;
    for (double t : nodes.t) reach = std::max(reach, std::abs(eval_polynomial(c.polys[a], t)));
    const int S = static_cast<int>(std::ceil(reach / cells[a])) + 1;
    const int J = static_cast<int>(std::ceil(std::ldexp(kit.support_radius, -ell_prime) / cells[a]));
    shape[a] = next_pow2(static_cast<long long>(f.dims[a]) + 2LL * J + S + 2);
    limit[a] = S + 1;
  }
  for (double t : nodes.t) reach_len = std::max(reach_len, eval_curve(c, t).norm());

  const auto& fft = fft_for(shape);
  const auto lengths = padded_lengths(f, shape);
  const double cellvol = f.cell_volume();
  const Eigen::ArrayXcd F = fft.forward(embed_padded(f, shape));
  const Eigen::ArrayXd power = F.abs2();
  const Eigen::ArrayXcd K1 = mollifier_spectrum(kit, ell_prime, f, shape);
  const Eigen::ArrayXcd K2 = mollifier_spectrum(kit, ell_dprime, f, shape);

  auto correlate = [&](const Eigen::ArrayXcd& mult) -> Eigen::ArrayXd {
    return fft.inverse((power.cast<cplx>() * mult).eval()) * cellvol;
  };
  auto integrate = [&](const Eigen::ArrayXd& C) { return integrate_correlation(C, shape, nodes, c, cells, limit); };

  StepAudit a;
  a.ell_prime = ell_prime;
  a.ell = ell;
  a.ell_dprime = ell_dprime;
  a.c = opt.c;
  a.t_nodes = nodes.N;
  a.mass = integral(f);
  a.norm_f = l2_norm(f);
  const double f_sup = f.values.abs().maxCoeff();

  const Eigen::ArrayXcd ones = Eigen::ArrayXcd::Ones(F.size());
  const Eigen::ArrayXd CS = correlate(ones);
  const Eigen::ArrayXd C1 = correlate(K1);
  const Eigen::ArrayXd C2 = correlate(K2 - K1);
  const Eigen::ArrayXcd high = ones - K2;
  const Eigen::ArrayXd C3 = correlate(high);
  const auto qS = integrate(CS), q1 = integrate(C1), q2 = integrate(C2), q3 = integrate(C3);
  a.smoothed = qS.full;
  a.I1 = q1.full;
  a.I2 = q2.full;
  a.I3 = q3.full;
  a.quad_error = std::max({std::abs(qS.full - qS.half), std::abs(q1.full - q1.half), std::abs(q2.full - q2.half),
                           std::abs(q3.full - q3.half)});
  a.I1_prime = C1(0);

  const Eigen::ArrayXd diff_power = power * (K2 - K1).abs2();
  const Eigen::ArrayXd high_power = power * high.abs2();
  auto all = [](Eigen::Index, const double*) { return true; };
  a.bound_I2 = std::sqrt(spectral_norm2(fft, lengths, diff_power, cellvol, all));

  // mean-value shift bound, discrete and continuum forms
  const auto D = kernel_difference_norms(kit, ell_prime, f);
  double shift_sum = 0.0;
  for (std::size_t j = 0; j < nodes.t.size(); ++j) {
    double s = 0.0;
    for (int ax = 0; ax < n; ++ax) s += std::abs(eval_polynomial(c.polys[ax], nodes.t[j])) / cells[ax] * D[ax];
    shift_sum += nodes.w[j] * s;
  }
  const double f_l1 = f.values.abs().sum() * cellvol;
  a.bound_I1_shift = f_l1 * f_sup * shift_sum;
  a.rate_I1_shift = kit.grad_l1 * std::ldexp(1.0, ell_prime) * reach_len * f_l1 * f_sup;
  a.lower_I1_prime = opt.c * a.mass * a.mass;

  // dyadic bands of f - f*rho'' on the padded grid; band -1 is |xi| < 1
  std::vector<int> band_of(F.size());
  int kmax = -1;
  fft.for_each_frequency(lengths, [&](Eigen::Index k, const double* xi, double) {
    double r2 = 0.0;
    for (int ax = 0; ax < n; ++ax) r2 += xi[ax] * xi[ax];
    const double r = std::sqrt(r2);
    const int b = r < 1.0 ? -1 : static_cast<int>(std::floor(std::log2(r)));
    band_of[k] = b;
    kmax = std::max(kmax, b);
  });
  for (int b = -1; b <= kmax; ++b) {
    Eigen::ArrayXcd mask = Eigen::ArrayXcd::Zero(F.size());
    bool any = false;
    for (Eigen::Index k = 0; k < F.size(); ++k)
      if (band_of[k] == b) {
        mask(k) = high(k);
        any = true;
      }
    if (!any) continue;
    const auto q = integrate(correlate(mask));
    const auto in_band = [&](Eigen::Index k, const double*) { return band_of[k] == b; };
    const double gk = std::sqrt(spectral_norm2(fft, lengths, high_power, cellvol, in_band));
    const double fk = std::sqrt(spectral_norm2(fft, lengths, power, cellvol, in_band));
    a.band_ks.push_back(b);
    a.band_terms.push_back(q.full);
    a.band_bounds.push_back(fk * gk);
  }

  // k0: balance 2^{k0-ell''} against the measured tail of band terms
  if (opt.k0 >= 0) {
    a.k0 = opt.k0;
  } else {
    double best = std::numeric_limits<double>::infinity();
    for (int k0 = 0; k0 <= std::max(0, kmax); ++k0) {
      double cost = std::ldexp(1.0, k0 - ell_dprime);
      for (std::size_t j = 0; j < a.band_ks.size(); ++j)
        if (a.band_ks[j] > k0) cost += std::abs(a.band_terms[j]);
      if (cost < best) {
        best = cost;
        a.k0 = k0;
      }
    }
  }
  double band_total = 0.0;
  for (std::size_t j = 0; j < a.band_ks.size(); ++j) {
    band_total += a.band_terms[j];
    if (a.band_ks[j] <= a.k0) a.low_term += a.band_terms[j];
  }
  const auto low = [&](Eigen::Index k, const double*) { return band_of[k] <= a.k0; };
  a.low_norm = std::sqrt(spectral_norm2(fft, lengths, high_power, cellvol, low));
  const double f_low = std::sqrt(spectral_norm2(fft, lengths, power, cellvol, low));
  double G = kit.rho_hat_grad_sup;
  fft.for_each_frequency(lengths, [&](Eigen::Index k, const double* xi, double) {
    double r2 = 0.0;
    for (int ax = 0; ax < n; ++ax) r2 += xi[ax] * xi[ax];
    if (r2 > 0.0) G = std::max(G, std::abs(high(k)) / (std::ldexp(1.0, -ell_dprime) * std::sqrt(r2)));
  });
  a.low_gradient = G;

  const double scale = std::max({std::abs(a.smoothed), std::abs(a.I1), std::abs(a.I3), 1e-300});
  const double tol = opt.tol * scale + 1e-14;
  auto& ch = a.checks;
  ch.push_back(make_check("splitting identity", std::abs(a.I1 + a.I2 + a.I3 - a.smoothed), 0.0, tol));
  ch.push_back(make_check("|I2| <= ||f||_2 ||f*rho'' - f*rho'||_2", std::abs(a.I2), a.norm_f * a.bound_I2, tol));
  ch.push_back(make_check("||f||_2 <= 1", a.norm_f, 1.0, 1e-12));
  ch.push_back(make_check("|I1 - I1'| <= shift bound", std::abs(a.I1 - a.I1_prime), a.bound_I1_shift, tol));
  ch.push_back(make_check("I1' >= c (int f)^2", a.lower_I1_prime, a.I1_prime, tol));
  ch.push_back(make_check("band sum reproduces I3", std::abs(band_total - a.I3), 0.0, tol));
  ch.push_back(make_check("|low term| <= ||f_low|| ||g_low||", std::abs(a.low_term), f_low * a.low_norm, tol));
  ch.push_back(make_check("low-pass norm <= G 2^{k0+1-ell''} ||f||_2", a.low_norm,
                          G * std::ldexp(1.0, a.k0 + 1 - ell_dprime) * a.norm_f, tol));
  for (std::size_t j = 0; j < a.band_ks.size(); ++j)
    ch.push_back(make_check("band " + std::to_string(a.band_ks[j]) + " Plancherel", std::abs(a.band_terms[j]),
                            a.band_bounds[j], tol));
  a.passed = all_ok(ch);
  return a;
}

LowerBound lower_bound_lemma(const GridFunction& f, const BumpKit& kit, int k) {
  const GridFunction g = crop(mollify(f, kit, k), f);
  LowerBound r;
  r.lhs = inner(f, g);
  const double m = integral(f);
  r.rhs = m * m;
  r.ratio = r.rhs > 0 ? r.lhs / r.rhs : std::numeric_limits<double>::infinity();
  return r;
}

}  // namespace curvepat
