#include "curvepat/oscillatory.hpp"

#include "curvepat/errors.hpp"
#include "curvepat/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <numeric>
#include <sstream>

namespace curvepat {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;
constexpr int kAnchorStride = 256;

// tau at the trapezoid nodes u_j = 1/2 + 1.5 j / N, shared across calls.
const std::vector<double>& tau_nodes(const BumpKit& kit, int N) {
  static std::map<int, std::unique_ptr<std::vector<double>>> cache;
  static std::mutex m;
  std::lock_guard<std::mutex> lock(m);
  auto it = cache.find(N);
  if (it == cache.end()) {
    auto w = std::make_unique<std::vector<double>>(N + 1);
    const double h = 1.5 / N;
    for (int j = 0; j <= N; ++j) (*w)[j] = kit.tau(0.5 + j * h);
    it = cache.emplace(N, std::move(w)).first;
  }
  return *it->second;
}

double frac(double x) { return x - std::floor(x); }

// Stirling numbers of the second kind S(q, r), q, r <= 16.
double stirling2(int q, int r) {
  static const auto table = [] {
    std::vector<std::vector<double>> S(17, std::vector<double>(17, 0.0));
    S[0][0] = 1.0;
    for (int a = 1; a <= 16; ++a)
      for (int b = 1; b <= a; ++b) S[a][b] = b * S[a - 1][b] + S[a - 1][b - 1];
    return S;
  }();
  return table[q][r];
}

// Trapezoid sums over all nodes and over even nodes.
void trapezoid_sums(const std::vector<double>& theta, const std::vector<double>& w, int N, double& all_re,
                    double& all_im, double& even_re, double& even_im) {
  const int d = static_cast<int>(theta.size());
  const double h = 1.5 / N;
  double se_re = 0.0, se_im = 0.0, so_re = 0.0, so_im = 0.0;
  std::vector<double> c(d + 1), er(d + 1), ei(d + 1);
  for (int j0 = 0; j0 <= N; j0 += kAnchorStride) {
    const double u0 = 0.5 + j0 * h;
    // Taylor coefficients of m -> Phi(u0 + m h).
    double hq = 1.0;
    for (int q = 0; q <= d; ++q) {
      double acc = 0.0;
      for (int beta = std::max(q, 1); beta <= d; ++beta) {
        double binom = 1.0;
        for (int j = 0; j < q; ++j) binom = binom * (beta - j) / (j + 1);
        acc += theta[beta - 1] * binom * std::pow(u0, beta - q);
      }
      c[q] = acc * hq;
      hq *= h;
    }
    // Forward differences at m = 0, reduced mod 1.
    double fact = 1.0;
    for (int r = 0; r <= d; ++r) {
      if (r > 0) fact *= r;
      double delta = r == 0 ? c[0] : 0.0;
      if (r > 0)
        for (int q = r; q <= d; ++q) delta += fact * stirling2(q, r) * c[q];
      const double a = two_pi * frac(delta);
      er[r] = std::cos(a);
      ei[r] = std::sin(a);
    }
    const int stop = std::min(N + 1, j0 + kAnchorStride);
    for (int j = j0; j < stop; ++j) {
      const double wj = w[j];
      if (j & 1) {
        so_re += wj * er[0];
        so_im += wj * ei[0];
      } else {
        se_re += wj * er[0];
        se_im += wj * ei[0];
      }
      for (int r = 0; r < d; ++r) {
        const double re = er[r] * er[r + 1] - ei[r] * ei[r + 1];
        const double im = er[r] * ei[r + 1] + ei[r] * er[r + 1];
        er[r] = re;
        ei[r] = im;
      }
    }
  }
  all_re = h * (se_re + so_re);
  all_im = h * (se_im + so_im);
  even_re = 2.0 * h * se_re;
  even_im = 2.0 * h * se_im;
}

// sum_beta beta |theta_beta| 2^{beta-1}: bound on |Phi'| over [1/2, 2].
double phase_speed_bound(const std::vector<double>& theta) {
  double b = 0.0;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const int beta = static_cast<int>(i) + 1;
    b += beta * std::abs(theta[i]) * std::ldexp(1.0, beta - 1);
  }
  return b;
}

}  // namespace

double phase(const Curve& c, int s, int ell, double t, const Eigen::VectorXd& xi) {
  double total = 0.0;
  for (int beta = 1; beta <= c.d; ++beta) {
    double coef = 0.0;
    for (int i = 0; i < c.n; ++i) coef += c.polys[i].coeff(beta) * std::ldexp(xi(i), -s * c.polys[i].deg);
    total += coef * std::ldexp(std::pow(t, beta), s * beta + (c.d - beta) * ell);
  }
  return total;
}

double phase_rescaled(const Curve& c, int s, int ell, double t, const Eigen::VectorXd& xi) {
  const Curve cs = rescale_curve(c, s);
  const Eigen::VectorXd g = eval_curve(cs, std::ldexp(t, -ell));
  return std::ldexp(g.dot(xi), c.d * ell);
}

std::vector<double> unit_phase_coeffs(const Curve& c, int k, int s, int ell, const double* xi) {
  std::vector<double> theta(c.d, 0.0);
  for (int i = 0; i < c.n; ++i) {
    const int di = c.polys[i].deg;
    for (const auto& [beta, a] : c.polys[i].coeffs)
      theta[beta - 1] += std::ldexp(a * xi[i], k + s * (beta - di) - beta * ell);
  }
  return theta;
}

OscillatoryResult oscillatory_integral(const std::vector<double>& theta, const BumpKit& kit, double tol,
                                       double budget_factor) {
  if (theta.size() > 16) throw QuadratureError("phase degree above 16 is not supported");
  const double B = phase_speed_bound(theta);
  // tau's spectrum is below 1e-12 past about 40 cycles per unit.
  const long long start = static_cast<long long>(std::ceil(1.5 * (B + 40.0) * 1.25));
  const long long budget = static_cast<long long>(budget_factor * (B + 100.0)) + 4096;
  int N = std::max(64, next_pow2(start));
  while (true) {
    const auto& w = tau_nodes(kit, N);
    double ar, ai, er, ei;
    trapezoid_sums(theta, w, N, ar, ai, er, ei);
    const double err = std::hypot(ar - er, ai - ei);
    if (err <= tol) return {cplx(ar, ai), err, N};
    if (2LL * N > budget || N >= (1 << 26)) {
      std::ostringstream os;
      os << "trapezoid estimate " << err << " above target " << tol << " at " << N << " nodes";
      throw QuadratureError(os.str());
    }
    N *= 2;
  }
}

double nonstationary_bound(const std::vector<double>& theta, const BumpKit& kit) {
  const int d = static_cast<int>(theta.size());
  // sup |Phi''| on [1/2, 2]
  double m2 = 0.0;
  for (int beta = 2; beta <= d; ++beta)
    m2 += beta * (beta - 1) * std::abs(theta[beta - 1]) * std::ldexp(1.0, beta - 2);
  constexpr int G = 64;
  const double step = 1.5 / G;
  double mu = std::numeric_limits<double>::infinity();
  for (int j = 0; j <= G; ++j) {
    const double u = 0.5 + j * step;
    double p = 0.0;
    for (int beta = d; beta >= 1; --beta) p = p * u + beta * theta[beta - 1];
    mu = std::min(mu, std::abs(p));
  }
  mu -= 0.5 * step * m2;
  if (mu <= 0.0) return std::numeric_limits<double>::infinity();
  const double tv = 2.0 * kit.tau_max;  // tau is unimodal
  return (tv / mu + kit.tau_max * 1.5 * m2 / (mu * mu)) / two_pi;
}

int pigeonhole_index(const Eigen::VectorXd& xi) {
  const double r = xi.norm();
  if (!(r >= 0.5 * (1 - 1e-12) && r <= 4.0 * (1 + 1e-12))) {
    std::ostringstream os;
    os << "|xi| = " << r << " outside the shell [1/2, 4]";
    throw ShellError(os.str());
  }
  int i0 = 0;
  for (int i = 1; i < xi.size(); ++i)
    if (std::abs(xi(i)) > std::abs(xi(i0))) i0 = i;
  return i0;
}

MultiplierSample multiplier(const Curve& c, int k, int s, int ell, const Eigen::VectorXd& xi, const BumpKit& kit,
                            const MultiplierOptions& opt) {
  if (xi.size() != c.n) throw DimensionError("frequency dimension differs from the curve's");
  if (opt.lattice && !opt.lattice->admissible_pair(s, ell)) {
    std::ostringstream os;
    os << "(s, ell) = (" << s << ", " << ell << ") is not admissible for Gamma = " << opt.lattice->Gamma;
    throw PreconditionError(os.str());
  }
  MultiplierSample out;
  out.k = k;
  out.s = s;
  out.ell = ell;
  out.xi = xi;
  out.lambda = std::ldexp(1.0, k - c.d * ell);
  const double weight = kit.psi(xi.norm());
  if (weight == 0.0) {
    out.value = 0.0;
    return out;
  }
  const auto theta = unit_phase_coeffs(c, k, s, ell, xi.data());
  const auto r = oscillatory_integral(theta, kit, opt.tol, opt.budget_factor);
  out.value = weight * r.value;
  out.quad_error = weight * r.error;
  out.nodes = r.nodes;
  return out;
}

void check_decay_hypothesis(const Curve& c, int s) {
  if (c.distinct_degrees) return;
  if (s == 0 && c.rank == c.n) return;
  throw HypothesisError(s == 0 ? "curve components are dependent and degrees are not distinct"
                               : "s > 0 needs pairwise distinct degrees");
}

namespace {

struct ShellEval {
  double value = 0.0;
  double error = 0.0;
};

ShellEval eval_abs(const Curve& c, int k, int s, int ell, const Eigen::VectorXd& xi, const BumpKit& kit,
                   double tol) {
  const double weight = kit.psi(xi.norm());
  if (weight == 0.0) return {};
  const auto theta = unit_phase_coeffs(c, k, s, ell, xi.data());
  const auto r = oscillatory_integral(theta, kit, tol);
  return {weight * std::abs(r.value), weight * r.error};
}

// Compass search inside the shell, starting from a sampled maximiser.
ShellEval refine(const Curve& c, int k, int s, int ell, Eigen::VectorXd& xi, ShellEval cur, const BumpKit& kit,
                 double tol, double& err_max) {
  for (double step = 0.05; step >= 1e-4; step *= 0.5) {
    bool moved = true;
    while (moved) {
      moved = false;
      for (int a = 0; a < xi.size() && !moved; ++a)
        for (double sign : {1.0, -1.0}) {
          Eigen::VectorXd trial = xi;
          trial(a) += sign * step;
          const double r = trial.norm();
          if (r < 0.5 || r > 4.0) continue;
          const auto v = eval_abs(c, k, s, ell, trial, kit, tol);
          err_max = std::max(err_max, v.error);
          if (v.value > cur.value) {
            cur = v;
            xi = trial;
            moved = true;
            break;
          }
        }
    }
  }
  return cur;
}

}  // namespace

DecayFit decay_fit(const Curve& c, int s, int ell, int kmin, int kmax, int shell_pts, const BumpKit& kit,
                   const DecayOptions& opt) {
  check_decay_hypothesis(c, s);
  if (kmax - kmin < 6) throw PreconditionError("decay_fit needs kmax - kmin >= 6");
  if (shell_pts < 1) throw PreconditionError("decay_fit needs at least one shell point");
  DecayFit fit;
  fit.curve = describe(c);
  fit.s = s;
  fit.ell = ell;
  fit.kmin = kmin;
  fit.kmax = kmax;
  fit.d = c.d;
  fit.slack = opt.slack;
  const auto shell = shell_points(c.n, shell_pts);

  for (int k = kmin; k <= kmax; ++k) {
    // Visit points in order of decreasing a-priori bound so pruning never changes the sampled sup.
    std::vector<std::pair<double, int>> order;
    order.reserve(shell.size());
    for (int p = 0; p < static_cast<int>(shell.size()); ++p) {
      const double weight = kit.psi(shell[p].norm());
      if (weight == 0.0) continue;
      const auto theta = unit_phase_coeffs(c, k, s, ell, shell[p].data());
      order.emplace_back(weight * nonstationary_bound(theta, kit), p);
    }
    std::stable_sort(order.begin(), order.end(), [](const auto& a, const auto& b) { return a.first > b.first; });

    std::vector<std::pair<double, int>> top;  // (|m|, point)
    double err_max = 0.0;
    int evaluated = 0;
    double best = 0.0;
    for (const auto& [bound, p] : order) {
      if (bound < best) break;
      const auto v = eval_abs(c, k, s, ell, shell[p], kit, opt.tol);
      ++evaluated;
      err_max = std::max(err_max, v.error);
      best = std::max(best, v.value);
      top.emplace_back(v.value, p);
      std::sort(top.begin(), top.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
      if (static_cast<int>(top.size()) > opt.refine_candidates) top.pop_back();
    }

    Eigen::VectorXd arg = top.empty() ? shell.front() : shell[top.front().second];
    double sup = top.empty() ? 0.0 : top.front().first;
    for (const auto& [val, p] : top) {
      Eigen::VectorXd xi = shell[p];
      const auto r = refine(c, k, s, ell, xi, {val, 0.0}, kit, opt.tol, err_max);
      if (r.value > sup) {
        sup = r.value;
        arg = xi;
      }
    }
    fit.ks.push_back(k);
    fit.sup_values.push_back(sup);
    fit.argmax_xi.push_back(arg);
    fit.i0.push_back(pigeonhole_index(arg));
    fit.quad_error_max.push_back(err_max);
    fit.evaluated.push_back(evaluated);
    fit.pruned.push_back(static_cast<int>(order.size()) - evaluated);
  }

  // Fit only where lambda = 2^{k - d ell} >= 4.
  fit.fit_kmin = std::max(kmin, c.d * ell + 2);
  std::vector<double> xs, ys;
  for (std::size_t j = 0; j < fit.ks.size(); ++j)
    if (fit.ks[j] >= fit.fit_kmin) {
      xs.push_back(fit.ks[j]);
      ys.push_back(std::log2(fit.sup_values[j]));
    }
  if (xs.size() < 3) {
    std::ostringstream os;
    os << "fewer than 3 values of k with lambda >= 4 (need k >= " << fit.fit_kmin << ")";
    throw PreconditionError(os.str());
  }
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / ys.size();
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t j = 0; j < xs.size(); ++j) {
    sxx += (xs[j] - mx) * (xs[j] - mx);
    sxy += (xs[j] - mx) * (ys[j] - my);
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.verdict = std::isfinite(fit.slope) && fit.slope <= -1.0 / c.d + opt.slack;
  fit.monotone = true;
  for (std::size_t j = 0; j + 1 < fit.ks.size(); ++j)
    if (fit.ks[j] >= fit.fit_kmin && fit.sup_values[j + 1] > (1.0 + opt.monotone_tolerance) * fit.sup_values[j])
      fit.monotone = false;
  return fit;
}

OscillatoryResult operator_symbol(const Curve& c, int s, int ell, const double* eta, const BumpKit& kit,
                                  double tol) {
  return oscillatory_integral(unit_phase_coeffs(c, 0, s, ell, eta), kit, tol);
}

namespace {

// dst += w * src(. + shift) with multilinear weights; shift in cells per axis.
void shift_accumulate(const Eigen::ArrayXd& src, Eigen::ArrayXd& dst, const std::vector<int>& dims,
                      const std::vector<double>& shift, double w, bool periodic) {
  const int n = static_cast<int>(dims.size());
  const int D = dims.back();
  std::vector<int> base(n);
  std::vector<double> fr(n);
  for (int a = 0; a < n; ++a) {
    const double fl = std::floor(shift[a]);
    base[a] = static_cast<int>(fl);
    fr[a] = shift[a] - fl;
  }
  const Eigen::Index rows = src.size() / D;
  std::vector<int> lead(n, 0);
  for (int corner = 0; corner < (1 << n); ++corner) {
    double cw = w;
    std::vector<int> q(n);
    for (int a = 0; a < n; ++a) {
      const int bit = (corner >> a) & 1;
      cw *= bit ? fr[a] : 1.0 - fr[a];
      q[a] = base[a] + bit;
    }
    if (cw == 0.0) continue;
    const int ql = q[n - 1];
    for (Eigen::Index row = 0; row < rows; ++row) {
      // source row from the leading indices of this output row
      Eigen::Index rem = row, src_row = 0, stride = 1;
      bool inside = true;
      for (int a = n - 2; a >= 0; --a) {
        const int ia = static_cast<int>(rem % dims[a]);
        rem /= dims[a];
        int ja = ia + q[a];
        if (periodic) {
          ja %= dims[a];
          if (ja < 0) ja += dims[a];
        } else if (ja < 0 || ja >= dims[a]) {
          inside = false;
          break;
        }
        src_row += ja * stride;
        stride *= dims[a];
      }
      if (!inside) continue;
      const double* s = src.data() + src_row * D;
      double* o = dst.data() + row * D;
      if (periodic) {
        int shift_l = ql % D;
        if (shift_l < 0) shift_l += D;
        const int split = D - shift_l;
        for (int j = 0; j < split; ++j) o[j] += cw * s[j + shift_l];
        for (int j = split; j < D; ++j) o[j] += cw * s[j + shift_l - D];
      } else {
        const int j_lo = std::max(0, -ql), j_hi = std::min(D, D - ql);
        for (int j = j_lo; j < j_hi; ++j) o[j] += cw * s[j + ql];
      }
    }
  }
}

ApplyTResult apply_spatial(const GridFunction& f, const Curve& cs, int ell, const BumpKit& kit,
                           const ApplyTOptions& opt) {
  const int n = f.n;
  // max over u of |d/du gamma_s(2^{-ell} u)| in cells, per axis
  double speed = 0.0;
  for (int j = 0; j <= 2000; ++j) {
    const double u = 0.5 + 1.5 * j / 2000.0;
    for (int a = 0; a < n; ++a)
      speed = std::max(speed, std::abs(std::ldexp(eval_derivative(cs.polys[a], 1, std::ldexp(u, -ell)), -ell)) /
                                  f.cell(a));
  }
  int N = opt.t_nodes;
  if (N <= 0) N = std::max(128, 2 * static_cast<int>(std::ceil(speed * 1.5 / 4.0)));
  if (N % 2) ++N;
  const double per_node = speed * 1.5 / N;
  if (per_node > 4.0) {
    std::ostringstream os;
    os << "t-quadrature moves " << per_node << " cells per node (limit 4); use more nodes";
    throw ResolutionError(os.str());
  }
  const bool periodic = opt.boundary == Boundary::Periodic;
  const auto& w = tau_nodes(kit, N);
  const double h = 1.5 / N;
  Eigen::ArrayXd even = Eigen::ArrayXd::Zero(f.size()), odd = Eigen::ArrayXd::Zero(f.size());
  std::vector<double> shift(n);
  for (int j = 1; j < N; ++j) {
    if (w[j] == 0.0) continue;
    const double t = std::ldexp(0.5 + j * h, -ell);
    for (int a = 0; a < n; ++a) shift[a] = eval_polynomial(cs.polys[a], t) / f.cell(a);
    shift_accumulate(f.values, (j & 1) ? odd : even, f.dims, shift, w[j], periodic);
  }
  ApplyTResult r;
  r.out = f;
  r.out.density = false;
  r.out.values = h * (even + odd);
  const Eigen::ArrayXd half = 2.0 * h * even;
  const double norm = std::sqrt(r.out.values.square().sum());
  r.error_estimate = norm > 0 ? std::sqrt((r.out.values - half).square().sum()) / norm : 0.0;
  r.t_nodes = N;
  r.max_cells_per_node = per_node;
  return r;
}

ApplyTResult apply_multiplier(const GridFunction& f, const Curve& c, int s, int ell, const BumpKit& kit,
                              const ApplyTOptions& opt) {
  const int n = f.n;
  const Curve cs = rescale_curve(c, s);
  std::vector<int> shape = f.dims;
  if (opt.boundary == Boundary::Zero) {
    // room for the largest displacement on either side
    for (int a = 0; a < n; ++a) {
      double reach = 0.0;
      for (int j = 0; j <= 2000; ++j)
        reach = std::max(reach, std::abs(eval_polynomial(cs.polys[a], std::ldexp(0.5 + 1.5 * j / 2000.0, -ell))));
      shape[a] = next_pow2(f.dims[a] + static_cast<long long>(std::ceil(reach / f.cell(a))) + 2);
    }
  }
  const auto& fft = fft_for(shape);
  const auto lengths = padded_lengths(f, shape);
  Eigen::ArrayXcd F = fft.forward(opt.boundary == Boundary::Zero ? embed_padded(f, shape) : f.values);
  const double cutoff = opt.spectral_threshold * F.abs().maxCoeff();
  ApplyTResult r;
  double err2 = 0.0, norm2 = 0.0;
  fft.for_each_frequency(lengths, [&](Eigen::Index idx, const double* eta, double mult) {
    const double mag = std::abs(F(idx));
    norm2 += mult * mag * mag;
    if (mag <= cutoff) {
      F(idx) = 0.0;
      return;
    }
    const auto sym = operator_symbol(c, s, ell, eta, kit, opt.tol);
    F(idx) *= sym.value;
    err2 += mult * mag * mag * sym.error * sym.error;
    ++r.symbols;
  });
  const Eigen::ArrayXd out = fft.inverse(F);
  r.out = opt.boundary == Boundary::Zero ? extract_padded(out, shape, f) : f;
  if (opt.boundary == Boundary::Periodic) r.out.values = out;
  r.out.density = false;
  r.error_estimate = norm2 > 0 ? std::sqrt(err2 / norm2) : 0.0;
  return r;
}

}  // namespace

ApplyTResult apply_T(const GridFunction& f, const Curve& c, int s, int ell, const BumpKit& kit, TRoute route,
                     const ApplyTOptions& opt) {
  if (f.n != c.n) throw DimensionError("grid and curve dimensions differ");
  if (route == TRoute::Spatial) return apply_spatial(f, rescale_curve(c, s), ell, kit, opt);
  return apply_multiplier(f, c, s, ell, kit, opt);
}

}  // namespace curvepat
