#include "curvepat/counting.hpp"

#include "curvepat/errors.hpp"
#include "curvepat/fft.hpp"
#include "counting_detail.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace curvepat {

namespace {

using RowArray = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// A row-major plane read through box indices: (ix, iy) -> v[(ix+ox)*ny + iy+oy], zero outside.
struct Plane {
  const double* v = nullptr;
  int nx = 0, ny = 0, ox = 0, oy = 0;
  double at(int ix, int iy) const {
    const int a = ix + ox, b = iy + oy;
    if (a < 0 || a >= nx || b < 0 || b >= ny) return 0.0;
    return v[static_cast<Eigen::Index>(a) * ny + b];
  }
  double y_interp(int ix, int iy, double frac) const { return (1.0 - frac) * at(ix, iy) + frac * at(ix, iy + 1); }
};

Plane plane_of(const Eigen::ArrayXd& v, int nx, int ny, int ox = 0, int oy = 0) {
  return {v.data(), nx, ny, ox, oy};
}

// Visits the box cells with X shifted by vx cells along x; fn(ix, iy, x_value, iy + floor(vy), frac(vy)).
template <typename Fn>
void sweep(const Plane& X, int nbx, int nby, double vx, double vy, Fn&& fn) {
  const double flx = std::floor(vx), fly = std::floor(vy);
  const int mx = static_cast<int>(flx), my = static_cast<int>(fly);
  const double ax = vx - flx, ay = vy - fly;
  for (int ix = 0; ix < nbx; ++ix) {
    const int r0 = ix + mx + X.ox;
    if (r0 + 1 < 0 || r0 >= X.nx) continue;
    for (int iy = 0; iy < nby; ++iy) {
      const double xv = (1.0 - ax) * X.at(ix + mx, iy) + ax * X.at(ix + mx + 1, iy);
      if (xv != 0.0) fn(ix, iy, xv, iy + my, ay);
    }
  }
}

void check_corner_hypothesis(const Polynomial& P1, const Polynomial& P2) {
  if (P1.coeffs.empty() || P2.coeffs.empty()) throw HypothesisError("corner polynomials must be nonzero");
  if (P1.deg >= P2.deg) {
    std::ostringstream os;
    os << "corner form needs deg P1 < deg P2 (got " << P1.deg << " and " << P2.deg << ")";
    throw HypothesisError(os.str());
  }
}

double varsigma_at(const Polynomial& P1, int s, int ell) {
  const int r = s < ell ? P1.sigma : P1.deg;
  return std::abs(P1.coeff(r)) * std::ldexp(1.0, -s * (P1.deg - r) - r * ell);
}

// Linear convolution of equally spaced samples via FFT; out has a.size() + k.size() - 1 entries.
std::vector<double> convolve_samples(const std::vector<double>& a, const std::vector<double>& k) {
  const int len = static_cast<int>(a.size() + k.size() - 1);
  const int M = next_pow2(len);
  const auto& fft = fft_for({M});
  Eigen::ArrayXd pa = Eigen::ArrayXd::Zero(M), pk = Eigen::ArrayXd::Zero(M);
  for (std::size_t i = 0; i < a.size(); ++i) pa(i) = a[i];
  for (std::size_t i = 0; i < k.size(); ++i) pk(i) = k[i];
  const Eigen::ArrayXcd prod = fft.forward(pa) * fft.forward(pk);
  const Eigen::ArrayXd out = fft.inverse(prod);
  return std::vector<double>(out.data(), out.data() + len);
}

// Per-axis partition of unity over `squares` equal pieces of `cells` cells, ramps `ramp` cells wide.
std::vector<std::vector<std::pair<int, double>>> axis_partition(int cells, int squares, double ramp) {
  std::vector<std::vector<std::pair<int, double>>> out(cells);
  const double side = static_cast<double>(cells) / squares;
  ramp = std::min(ramp, side);
  auto R = [&](int j, double u) {
    if (j <= 0) return 1.0;
    if (j >= squares) return 0.0;
    return std::clamp((u - j * side) / ramp + 0.5, 0.0, 1.0);
  };
  for (int i = 0; i < cells; ++i) {
    const double u = i + 0.5;
    const int j0 = std::clamp(static_cast<int>(u / side), 0, squares - 1);
    for (int j = std::max(0, j0 - 1); j <= std::min(squares - 1, j0 + 1); ++j) {
      const double w = R(j, u) - R(j + 1, u);
      if (w > 0.0) out[i].emplace_back(j, w);
    }
  }
  return out;
}

double rho_scaled(const BumpKit& kit1, double width, double x) { return kit1.rho(std::abs(x) / width) / width; }

}  // namespace

CountingResult corner_form(const GridFunction& f, const Polynomial& P1, const Polynomial& P2, int s, TWindow window,
                           int t_nodes) {
  if (f.n != 2) throw DimensionError("corner form needs a two-dimensional grid");
  check_corner_hypothesis(P1, P2);
  const Polynomial P1s = rescale_polynomial(P1, s), P2s = rescale_polynomial(P2, s);
  const std::vector<double> cells{f.cell(0), f.cell(1)};
  const int nx = f.dims[0], ny = f.dims[1];
  const auto nodes = detail::make_nodes({&P1s, &P2s}, cells, window, bump_kit(1), t_nodes, 0.5);
  const Plane F = plane_of(f.values, nx, ny);
  double full = 0.0, half = 0.0;
  for (std::size_t j = 0; j < nodes.t.size(); ++j) {
    const double vx = eval_polynomial(P1s, nodes.t[j]) / cells[0];
    const double vy = eval_polynomial(P2s, nodes.t[j]) / cells[1];
    double acc = 0.0;
    sweep(F, nx, ny, vx, vy, [&](int ix, int iy, double xv, int jy, double ay) {
      acc += F.at(ix, iy) * xv * F.y_interp(ix, jy, ay);
    });
    acc *= f.cell_volume();
    full += nodes.w[j] * acc;
    half += nodes.w_half[j] * acc;
  }
  CountingResult r;
  r.value = full;
  r.error = std::abs(full - half);
  r.t_nodes = nodes.N;
  r.scheme = "trapezoid in t x linear interpolation along each shifted axis";
  r.window = window.describe();
  return r;
}

Substitution substitute(const Polynomial& P1s, int ell, int samples) {
  const double t0 = std::ldexp(0.5, -ell), t1 = std::ldexp(2.0, -ell);
  const int scan = 4096;
  double prev = eval_derivative(P1s, 1, t0);
  for (int j = 1; j <= scan; ++j) {
    const double t = t0 + (t1 - t0) * j / scan;
    const double d = eval_derivative(P1s, 1, t);
    if (d == 0.0 || prev == 0.0 || (d > 0) != (prev > 0)) {
      double a = t - (t1 - t0) / scan, b = t;
      for (int it = 0; it < 200 && b - a > 1e-15 * b; ++it) {
        const double m = 0.5 * (a + b);
        if ((eval_derivative(P1s, 1, m) > 0) == (eval_derivative(P1s, 1, a) > 0)) a = m;
        else b = m;
      }
      std::ostringstream os;
      os << "P_1,s is not strictly monotone on [" << t0 << ", " << t1 << "]: critical point near t = "
         << 0.5 * (a + b);
      throw SubstitutionError(os.str());
    }
    prev = d;
  }
  const double p0 = eval_polynomial(P1s, t0), p1 = eval_polynomial(P1s, t1);
  if (p0 == 0.0 || p1 == 0.0 || (p0 > 0) != (p1 > 0)) {
    std::ostringstream os;
    os << "P_1,s changes sign on [" << t0 << ", " << t1 << "], so |P_1,s| is not monotone there";
    throw SubstitutionError(os.str());
  }
  Substitution sub;
  sub.reflected = p0 > 0;
  sub.omega_lo = std::min(std::abs(p0), std::abs(p1));
  sub.omega_hi = std::max(std::abs(p0), std::abs(p1));
  const bool increasing = std::abs(p1) > std::abs(p0);
  const auto& kit1 = bump_kit(1);
  auto invert = [&](double omega) {
    double a = t0, b = t1;
    for (int it = 0; it < 200; ++it) {
      const double m = 0.5 * (a + b);
      if (m == a || m == b) break;
      if ((std::abs(eval_polynomial(P1s, m)) < omega) == increasing) a = m;
      else b = m;
    }
    return 0.5 * (a + b);
  };
  sub.omega.resize(samples);
  sub.weight.resize(samples);
  const double h = (sub.omega_hi - sub.omega_lo) / (samples - 1);
  for (int j = 0; j < samples; ++j) {
    const double omega = sub.omega_lo + j * h;
    sub.omega[j] = omega;
    if (j == 0 || j == samples - 1) {
      sub.weight[j] = 0.0;  // tau vanishes at the window ends
      continue;
    }
    const double t = invert(omega);
    sub.weight[j] = tau_scaled(kit1, ell, t) / std::abs(eval_derivative(P1s, 1, t));
  }
  double mass = 0.0;
  for (int j = 1; j + 1 < samples; ++j) mass += sub.weight[j];
  sub.mass = mass * h;
  return sub;
}

CornerAudit corner_step(const GridFunction& f, const Polynomial& P1, const Polynomial& P2, int s, int ell_prime,
                        int ell, int ell_dprime, const CornerOptions& opt) {
  if (f.n != 2) throw DimensionError("corner step needs a two-dimensional grid");
  check_corner_hypothesis(P1, P2);
  if (!(ell_prime < ell && ell < ell_dprime)) throw PreconditionError("need ell' < ell < ell''");
  if (opt.lattice) {
    const auto& L = *opt.lattice;
    if (!L.admissible_s(s) || !L.admissible_ell(ell_prime) || !L.admissible_ell(ell) || !L.admissible_ell(ell_dprime)) {
      std::ostringstream os;
      os << "scales (s=" << s << "; " << ell_prime << ", " << ell << ", " << ell_dprime
         << ") violate the Gamma=" << L.Gamma << " parity lattice";
      throw PreconditionError(os.str());
    }
  }
  const auto& kit1 = bump_kit(1);
  const Polynomial P1s = rescale_polynomial(P1, s), P2s = rescale_polynomial(P2, s);
  const double cx = f.cell(0), cy = f.cell(1), cellvol = f.cell_volume();
  const int nx = f.dims[0], ny = f.dims[1];

  CornerAudit a;
  a.s = s;
  a.ell_prime = ell_prime;
  a.ell = ell;
  a.ell_dprime = ell_dprime;
  a.c_rho = opt.c_rho;
  a.r_low = s < ell;
  a.r1 = a.r_low ? P1.sigma : P1.deg;
  a.r2 = a.r_low ? P2.sigma : P2.deg;
  a.b_zero = a.r1 != a.r2;
  a.varsigma = varsigma_at(P1, s, ell);
  a.varsigma_prime = varsigma_at(P1, s, ell_prime);
  a.varsigma_dprime = varsigma_at(P1, s, ell_dprime);
  a.A1 = std::ldexp(1.0, (P1.deg - a.r1) * s + ell * a.r1);
  a.A2 = std::ldexp(1.0, (P2.deg - a.r2) * s + ell * a.r2);

  const double support = kit1.support_radius;
  if (support * a.varsigma_dprime / cx < 2.0 || support * std::ldexp(1.0, -ell_dprime) / cy < 2.0) {
    std::ostringstream os;
    os << "scale ell'' = " << ell_dprime << " spans fewer than 2 cells on this grid";
    throw ResolutionError(os.str());
  }

  const Substitution sub = substitute(P1s, ell);
  a.reflected = sub.reflected;
  a.tau_tilde_omega = sub.omega;
  a.tau_tilde = sub.weight;
  a.tau_tilde_mass = sub.mass;

  const Kernel1D Ky1 = scaled_profile_1d(kit1, std::ldexp(1.0, -ell_prime), cy);
  const Kernel1D Ky2 = scaled_profile_1d(kit1, std::ldexp(1.0, -ell_dprime), cy);
  const Kernel1D Kx1 = scaled_profile_1d(kit1, a.varsigma_prime, cx);
  const Kernel1D Kx2 = scaled_profile_1d(kit1, a.varsigma_dprime, cx);

  const auto nodes = detail::make_nodes({&P1s, &P2s}, {cx, cy}, TWindow::scale(ell), kit1, 0, 0.5);
  std::vector<double> vx(nodes.t.size()), vy(nodes.t.size());
  double rx = 0.0, ry = 0.0;
  for (std::size_t j = 0; j < nodes.t.size(); ++j) {
    vx[j] = eval_polynomial(P1s, nodes.t[j]) / cx;
    vy[j] = eval_polynomial(P2s, nodes.t[j]) / cy;
    rx = std::max(rx, std::abs(vx[j]));
    ry = std::max(ry, std::abs(vy[j]));
  }

  // grid extended on both axes so every convolution and shift stays inside it
  const int padx = static_cast<int>(std::ceil(rx)) + std::max(Kx1.center, Kx2.center) + 2;
  const int pady = static_cast<int>(std::ceil(ry)) + std::max(Ky1.center, Ky2.center) + 2;
  const int ex = nx + 2 * padx, ey = ny + 2 * pady;
  GridFunction fe = GridFunction::zeros({ex, ey}, {f.lo[0] - padx * cx, f.lo[1] - pady * cy},
                                        {f.hi[0] + padx * cx, f.hi[1] + pady * cy});
  for (int ix = 0; ix < nx; ++ix)
    fe.values.segment(static_cast<Eigen::Index>(ix + padx) * ey + pady, ny) =
        f.values.segment(static_cast<Eigen::Index>(ix) * ny, ny);
  const GridFunction hA = partial_convolve(fe, Ky1, 2);
  const GridFunction hB = partial_convolve(fe, Ky2, 2);
  const Eigen::ArrayXd dh = hB.values - hA.values;
  const Eigen::ArrayXd g = fe.values - hB.values;

  auto ext_plane = [&](const Eigen::ArrayXd& v) { return plane_of(v, ex, ey, padx, pady); };
  const Plane F = plane_of(f.values, nx, ny);
  const Plane PF = ext_plane(fe.values), PA = ext_plane(hA.values), PD = ext_plane(dh), PG = ext_plane(g);

  a.mass = integral(f);
  a.norm_f = l2_norm(f);
  const double f_sup = f.values.abs().maxCoeff();

  // S, I1, I2, I3 and the per-node first-factor mass
  double S[2] = {0, 0}, I1[2] = {0, 0}, I2[2] = {0, 0}, I3[2] = {0, 0};
  double shift_sum = 0.0;
  double Ddiff = std::abs(Ky1.weights.front()) + std::abs(Ky1.weights.back());
  for (std::size_t o = 0; o + 1 < Ky1.weights.size(); ++o) Ddiff += std::abs(Ky1.weights[o + 1] - Ky1.weights[o]);
  for (std::size_t j = 0; j < nodes.t.size(); ++j) {
    double s0 = 0, s1 = 0, s2 = 0, s3 = 0, mass1 = 0;
    sweep(PF, nx, ny, vx[j], vy[j], [&](int ix, int iy, double xv, int jy, double ay) {
      const double fx = F.at(ix, iy) * xv;
      s0 += fx * PF.y_interp(ix, jy, ay);
      s1 += fx * PA.y_interp(ix, jy, ay);
      s2 += fx * PD.y_interp(ix, jy, ay);
      s3 += fx * PG.y_interp(ix, jy, ay);
      mass1 += std::abs(fx);
    });
    const double w[2] = {nodes.w[j], nodes.w_half[j]};
    for (int h = 0; h < 2; ++h) {
      S[h] += w[h] * s0 * cellvol;
      I1[h] += w[h] * s1 * cellvol;
      I2[h] += w[h] * s2 * cellvol;
      I3[h] += w[h] * s3 * cellvol;
    }
    shift_sum += nodes.w[j] * std::abs(vy[j]) * mass1 * cellvol;
  }
  a.smoothed = S[0];
  a.I1 = I1[0];
  a.I2 = I2[0];
  a.I3 = I3[0];
  a.quad_error = std::max({std::abs(S[0] - S[1]), std::abs(I1[0] - I1[1]), std::abs(I2[0] - I2[1]),
                           std::abs(I3[0] - I3[1])});
  a.bound_I2 = std::sqrt((dh * dh).sum() * cellvol);
  a.bound_I1_shift = f_sup * Ddiff * shift_sum;

  // U = int f(x + P_1,s(t), y) tau_ell(t) dt on the extended grid
  RowArray U = RowArray::Zero(ex, ey);
  {
    Eigen::Map<const RowArray> fr(fe.values.data(), ex, ey);
    for (std::size_t j = 0; j < nodes.t.size(); ++j) {
      const double fl = std::floor(vx[j]);
      const int m = static_cast<int>(fl);
      const double frac = vx[j] - fl;
      for (int ix = 0; ix < ex; ++ix) {
        const int r0 = ix + m, r1 = r0 + 1;
        if (r0 >= 0 && r0 < ex) U.row(ix) += nodes.w[j] * (1.0 - frac) * fr.row(r0);
        if (r1 >= 0 && r1 < ex) U.row(ix) += nodes.w[j] * frac * fr.row(r1);
      }
    }
  }
  const Eigen::Map<const Eigen::ArrayXd> Uv(U.data(), U.size());
  const GridFunction R1 = partial_convolve(fe, Kx1, 1);
  const GridFunction R2 = partial_convolve(fe, Kx2, 1);
  a.swap_lhs = std::sqrt((Uv - R1.values).square().sum() * cellvol);
  a.swap_mollifier_term = std::sqrt((R2.values - R1.values).square().sum() * cellvol);

  double fhA2 = 0.0, i1p = 0.0, i1pp = 0.0;
  for (int ix = 0; ix < nx; ++ix)
    for (int iy = 0; iy < ny; ++iy) {
      const double fa = F.at(ix, iy) * PA.at(ix, iy);
      const Eigen::Index e = static_cast<Eigen::Index>(ix + padx) * ey + iy + pady;
      fhA2 += fa * fa;
      i1p += fa * Uv(e);
      i1pp += fa * R1.values(e);
    }
  a.I1_prime = i1p * cellvol;
  a.I1_dprime = i1pp * cellvol;
  const double norm_fhA = std::sqrt(fhA2 * cellvol);

  // kernel tails of the swap estimate on a fine omega grid
  {
    const double wide = support * a.varsigma_prime;
    double h = std::min(a.varsigma_dprime / 16.0, (sub.omega_hi - sub.omega_lo) / 400.0);
    const double lo = sub.omega_lo - wide - 4 * h, hi = sub.omega_hi + wide + 4 * h;
    h = std::max(h, (hi - lo) / (1 << 18));
    const int N = static_cast<int>(std::ceil((hi - lo) / h)) + 1;
    std::vector<double> tt(N);
    const double dw = sub.omega[1] - sub.omega[0];
    for (int i = 0; i < N; ++i) {
      const double w = lo + i * h;
      if (w <= sub.omega_lo || w >= sub.omega_hi) continue;
      const double p = (w - sub.omega_lo) / dw;
      const int k = std::min(static_cast<int>(p), static_cast<int>(sub.omega.size()) - 2);
      tt[i] = (1.0 - (p - k)) * sub.weight[k] + (p - k) * sub.weight[k + 1];
    }
    auto kernel = [&](double width, int& half) {
      half = static_cast<int>(std::ceil(support * width / h));
      std::vector<double> k(2 * half + 1);
      double m = 0.0;
      for (int i = -half; i <= half; ++i) m += k[i + half] = rho_scaled(kit1, width, i * h);
      for (double& v : k) v /= m;
      return k;
    };
    int hk1 = 0, hk2 = 0;
    const auto k1 = kernel(a.varsigma_prime, hk1);
    const auto k2 = kernel(a.varsigma_dprime, hk2);
    const auto t2 = convolve_samples(tt, k2);  // index i + hk2 aligns with tt[i]
    const auto t1 = convolve_samples(tt, k1);
    double high = 0.0, low = 0.0;
    for (int i = 0; i < static_cast<int>(t2.size()); ++i) {
      const int src = i - hk2;
      high += std::abs(t2[i] - (src >= 0 && src < N ? tt[src] : 0.0)) * h;
    }
    // rho_varsigma' centred at omega = 0 on the same lattice
    const int zero = static_cast<int>(std::lround(-lo / h));
    const double shift = -lo / h - zero;  // sub-cell misalignment of omega = 0
    for (int i = 0; i < static_cast<int>(t1.size()); ++i) {
      const int rel = i - hk1 - zero;
      low += std::abs(t1[i] - rho_scaled(kit1, a.varsigma_prime, (rel - shift) * h)) * h;
    }
    a.swap_tail_high = high;
    a.swap_tail_low = low;
  }
  const double swap_rhs = a.swap_mollifier_term + (a.swap_tail_high + a.swap_tail_low) * a.norm_f;

  // y-frequency bands of g
  const int My = next_pow2(ey);
  const std::vector<int> shape{ex, My};
  const std::vector<double> lengths{ex * cx, My * cy};
  const auto& fft = fft_for(shape);
  Eigen::ArrayXd gpad = Eigen::ArrayXd::Zero(static_cast<Eigen::Index>(ex) * My);
  for (int ix = 0; ix < ex; ++ix)
    gpad.segment(static_cast<Eigen::Index>(ix) * My, ey) = g.segment(static_cast<Eigen::Index>(ix) * ey, ey);
  const Eigen::ArrayXcd G = fft.forward(gpad);
  std::vector<int> band_of(G.size());
  int kmax = -1;
  double G_low = kit1.rho_hat_grad_sup;
  fft.for_each_frequency(lengths, [&](Eigen::Index k, const double* xi, double) {
    const double r = std::abs(xi[1]);
    const int b = r < 1.0 ? -1 : static_cast<int>(std::floor(std::log2(r)));
    band_of[k] = b;
    kmax = std::max(kmax, b);
  });
  {
    const double dxi = 1.0 / (My * cy);
    for (int m = 1; m <= My / 2; ++m) {
      const double xi = m * dxi;
      double K = 0.0;
      for (int j = 0; j < static_cast<int>(Ky2.weights.size()); ++j)
        K += Ky2.weights[j] * std::cos(2.0 * M_PI * xi * (j - Ky2.center) * cy);
      G_low = std::max(G_low, std::abs(1.0 - K) / (std::ldexp(1.0, -ell_dprime) * xi));
    }
  }
  a.low_gradient = G_low;

  const int sqx = std::clamp(static_cast<int>(std::llround(a.A1)), 1, nx);
  const int sqy = std::clamp(static_cast<int>(std::llround(a.A2)), 1, ny);
  a.squares = sqx * sqy;
  const auto part_x = axis_partition(nx, sqx, 2.0), part_y = axis_partition(ny, sqy, 2.0);

  std::vector<double> band_norms;
  std::vector<Check> band_checks;
  for (int b = -1; b <= kmax; ++b) {
    Eigen::ArrayXcd masked = Eigen::ArrayXcd::Zero(G.size());
    bool any = false;
    for (Eigen::Index k = 0; k < G.size(); ++k)
      if (band_of[k] == b) {
        masked(k) = G(k);
        any = true;
      }
    if (!any) continue;
    const Eigen::ArrayXd gb = fft.inverse(masked);
    const Plane PB = plane_of(gb, ex, My, padx, pady);
    RowArray B = RowArray::Zero(nx, ny);
    for (std::size_t j = 0; j < nodes.t.size(); ++j)
      sweep(PF, nx, ny, vx[j], vy[j], [&](int ix, int iy, double xv, int jy, double ay) {
        B(ix, iy) += nodes.w[j] * xv * PB.y_interp(ix, jy, ay);
      });
    double term = 0.0;
    std::vector<double> sq(static_cast<std::size_t>(a.squares), 0.0);
    for (int ix = 0; ix < nx; ++ix)
      for (int iy = 0; iy < ny; ++iy) {
        term += F.at(ix, iy) * B(ix, iy);
        const double ab = std::abs(B(ix, iy));
        if (ab == 0.0) continue;
        for (const auto& [jx, wx] : part_x[ix])
          for (const auto& [jy, wy] : part_y[iy]) sq[static_cast<std::size_t>(jx) * sqy + jy] += wx * wy * ab;
      }
    term *= cellvol;
    double sq_sum = 0.0, sq_max = 0.0;
    for (double& v : sq) {
      v *= cellvol;
      sq_sum += v;
      sq_max = std::max(sq_max, v);
    }
    const double gn = std::sqrt(gb.square().sum() * cellvol);
    a.band_ks.push_back(b);
    a.band_terms.push_back(term);
    a.band_lambda.push_back(std::ldexp(1.0, b) / a.A2);
    a.band_square_sum.push_back(sq_sum);
    a.band_square_max.push_back(sq_max);
    band_norms.push_back(gn);
    const double tol = opt.tol * std::max(std::abs(term), 1e-300) + 1e-14;
    band_checks.push_back(make_check("band " + std::to_string(b) + " unit-square partition", std::abs(term),
                                     f_sup * sq_sum, tol));
    band_checks.push_back(make_check("band " + std::to_string(b) + " Cauchy-Schwarz", std::abs(term),
                                     f_sup * a.norm_f * gn, tol));
  }

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
  double band_total = 0.0, low2 = 0.0;
  for (std::size_t j = 0; j < a.band_ks.size(); ++j) {
    band_total += a.band_terms[j];
    if (a.band_ks[j] <= a.k0) {
      a.I4 += a.band_terms[j];
      low2 += band_norms[j] * band_norms[j];
    }
  }
  a.low_norm = std::sqrt(low2);

  // decay of the normalised band terms in lambda = 2^k / A2
  {
    std::vector<double> xs, ys;
    for (std::size_t j = 0; j < a.band_ks.size(); ++j) {
      const double denom = a.norm_f * band_norms[j];
      if (a.band_ks[j] <= a.k0 || denom <= 0.0 || a.band_terms[j] == 0.0) continue;
      xs.push_back(std::log2(a.band_lambda[j]));
      ys.push_back(std::log2(std::abs(a.band_terms[j]) / denom));
    }
    if (xs.size() >= 2) {
      const double n = static_cast<double>(xs.size());
      double mx = 0, my = 0;
      for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i] / n;
        my += ys[i] / n;
      }
      double sxy = 0, sxx = 0;
      for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
      }
      const double slope = sxx > 0 ? sxy / sxx : 0.0;
      a.sigma = -slope;
      a.sigma_intercept = my - slope * mx;
    } else {
      a.sigma = std::numeric_limits<double>::quiet_NaN();
      a.sigma_intercept = std::numeric_limits<double>::quiet_NaN();
    }
  }

  const double scale = std::max({std::abs(a.smoothed), std::abs(a.I1), std::abs(a.I3), 1e-300});
  const double tol = opt.tol * scale + 1e-14;
  auto& ch = a.checks;
  ch.push_back(make_check("splitting identity", std::abs(a.I1 + a.I2 + a.I3 - a.smoothed), 0.0, 1e-6 * scale));
  ch.push_back(make_check("substituted kernel mass", std::abs(a.tau_tilde_mass - 1.0), 0.0, 1e-8));
  ch.push_back(make_check("varsigma > 0", -a.varsigma, 0.0, 0.0));
  ch.push_back(make_check("|I2| <= sup f ||f||_2 ||rho'' *_2 f - rho' *_2 f||_2", std::abs(a.I2),
                          f_sup * a.norm_f * a.bound_I2, tol));
  ch.push_back(make_check("|I1 - I1'| <= shift bound", std::abs(a.I1 - a.I1_prime), a.bound_I1_shift, tol));
  ch.push_back(make_check("mollifier swap triangle", a.swap_lhs, swap_rhs, tol));
  ch.push_back(make_check("|I1' - I1''| <= ||f h'||_2 swap", std::abs(a.I1_prime - a.I1_dprime),
                          norm_fhA * a.swap_lhs, tol));
  ch.push_back(make_check("I1'' >= c_rho (int f)^3", opt.c_rho * a.mass * a.mass * a.mass, a.I1_dprime, tol));
  ch.push_back(make_check("bands reproduce I3", std::abs(band_total - a.I3), 0.0, 1e-9 * scale + 1e-14));
  ch.push_back(make_check("|I4| <= sup f ||f||_2 ||S g||_2", std::abs(a.I4), f_sup * a.norm_f * a.low_norm, tol));
  ch.push_back(make_check("low-pass norm <= G 2^{k0+1-ell''} ||f||_2", a.low_norm,
                          G_low * std::ldexp(1.0, a.k0 + 1 - ell_dprime) * a.norm_f, tol));
  ch.insert(ch.end(), band_checks.begin(), band_checks.end());
  a.passed = all_ok(ch);
  return a;
}

}  // namespace curvepat
