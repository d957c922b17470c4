#include "curvepat/gridfield.hpp"

#include "curvepat/errors.hpp"
#include "curvepat/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <tuple>

namespace curvepat {

namespace {

constexpr double kPi = std::numbers::pi;

double sphere_area(int n) {
  switch (n) {
    case 1: return 2.0;
    case 2: return 2.0 * kPi;
    case 3: return 4.0 * kPi;
  }
  throw DimensionError("bump kit supports n = 1, 2, 3");
}

double ball_volume(int n, double r) { return sphere_area(n) * std::pow(r, n) / n; }

// Smoothing cap, support radius 1/2.
double cap(double a) {
  const double x = 2.0 * a;
  if (x >= 1.0) return 0.0;
  return std::exp(-1.0 / (1.0 - x * x));
}

// Fraction of the sphere |y| = a lying in the ball of radius R about r e_1.
double sphere_fraction(int n, double R, double r, double a) {
  if (r == 0.0 || a == 0.0) return (r + a <= R) ? 1.0 : 0.0;
  const double c0 = (r * r + a * a - R * R) / (2.0 * r * a);
  if (c0 <= -1.0) return 1.0;
  if (c0 >= 1.0) return 0.0;
  switch (n) {
    case 1: return 0.5;
    case 2: return std::acos(c0) / kPi;
    default: return 0.5 * (1.0 - c0);
  }
}

double smooth_step(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double a = std::exp(-1.0 / x), b = std::exp(-1.0 / (1.0 - x));
  return a / (a + b);
}

// Fourier transform of the ball indicator (radius R) at radial frequency xi.
double ball_hat(int n, double R, double xi) {
  const double x = 2.0 * kPi * R * xi;
  const double vol = ball_volume(n, R);
  if (x < 1e-3) {
    const double c = n == 1 ? 1.0 / 6.0 : n == 2 ? 1.0 / 8.0 : 1.0 / 10.0;
    return vol * (1.0 - c * x * x);
  }
  switch (n) {
    case 1: return std::sin(x) / (kPi * xi);
    case 2: return R * std::cyl_bessel_j(1.0, x) / xi;
    default: return (std::sin(x) - x * std::cos(x)) / (2.0 * kPi * kPi * xi * xi * xi);
  }
}

double radial_kernel(int n, double x) {
  switch (n) {
    case 1: return 2.0 * std::cos(x);
    case 2: return 2.0 * kPi * std::cyl_bessel_j(0.0, x);
    default: return x < 1e-8 ? 4.0 * kPi : 4.0 * kPi * std::sin(x) / x;
  }
}

// Catmull-Rom on a uniform table.
double table_lookup(const std::vector<double>& tab, double step, double x) {
  const double u = x / step;
  const int last = static_cast<int>(tab.size()) - 1;
  if (u >= last) return tab.back();
  const int i = static_cast<int>(u);
  const double f = u - i;
  const double p0 = tab[std::max(i - 1, 0)], p1 = tab[i], p2 = tab[std::min(i + 1, last)],
               p3 = tab[std::min(i + 2, last)];
  return p1 + 0.5 * f * (p2 - p0 + f * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 + f * (3.0 * (p1 - p2) + p3 - p0)));
}

constexpr int kRhoIntervals = 8192;
constexpr int kRhoHatIntervals = 8192;
constexpr double kRhoHatMax = 64.0;

struct CapTransform {
  std::vector<double> nodes, weights;  // Gauss-Legendre on [0, 1/2], weights include cap * a^{n-1}
  int n = 0;
  double operator()(double xi) const {
    double s = 0.0;
    for (std::size_t q = 0; q < nodes.size(); ++q) s += weights[q] * radial_kernel(n, 2.0 * kPi * nodes[q] * xi);
    return s;
  }
};

std::unique_ptr<BumpKit> build_kit(int n) {
  auto kit = std::make_unique<BumpKit>();
  kit->n = n;
  const double R = std::sqrt(static_cast<double>(n)) + 1.0;
  kit->ball_radius = R;
  kit->cap_radius = 0.5;
  kit->support_radius = R + 0.5;
  kit->plateau_radius = R - 0.5;

  const double area = sphere_area(n);
  auto cap_mass_integrand = [&](double a) { return cap(a) * area * std::pow(a, n - 1); };
  const double cap_mass = tanh_sinh(cap_mass_integrand, 0.0, 0.5, 1e-15).value;
  const double norm = ball_volume(n, R) * cap_mass;

  kit->rho_table.resize(kRhoIntervals + 1);
  const double dr = kit->support_radius / kRhoIntervals;
  for (int i = 0; i <= kRhoIntervals; ++i) {
    const double r = i * dr;
    if (r <= kit->plateau_radius) {
      kit->rho_table[i] = 1.0 / ball_volume(n, R);
      continue;
    }
    auto g = [&](double a) { return cap_mass_integrand(a) * sphere_fraction(n, R, r, a); };
    const double kink = std::abs(R - r);
    double v = 0.0;
    if (kink > 0.0 && kink < 0.5) {
      v = tanh_sinh(g, 0.0, kink, 1e-14).value + tanh_sinh(g, kink, 0.5, 1e-14).value;
    } else {
      v = tanh_sinh(g, 0.0, 0.5, 1e-14).value;
    }
    kit->rho_table[i] = v / norm;
  }
  kit->rho_table.back() = 0.0;
  kit->plateau_value = kit->rho_table.front();

  // grad rho is radial and rho decreases, so ||grad rho||_1 integrates by parts.
  {
    auto simpson = [&](auto&& fn) {
      double s = fn(0) + fn(kRhoIntervals);
      for (int i = 1; i < kRhoIntervals; ++i) s += (i % 2 ? 4.0 : 2.0) * fn(i);
      return s * dr / 3.0;
    };
    if (n == 1) {
      kit->grad_l1 = 2.0 * kit->plateau_value;
    } else {
      kit->grad_l1 = area * (n - 1) *
                     simpson([&](int i) { return kit->rho_table[i] * std::pow(i * dr, n - 2); });
    }
  }

  CapTransform ct;
  ct.n = n;
  {
    auto [x, w] = gauss_legendre(128);
    for (std::size_t q = 0; q < x.size(); ++q) {
      const double a = 0.25 * (x[q] + 1.0);
      ct.nodes.push_back(a);
      ct.weights.push_back(0.25 * w[q] * cap(a) * std::pow(a, n - 1));
    }
  }
  const double cap0 = ct(0.0);
  kit->rho_hat_max = kRhoHatMax;
  kit->rho_hat_table.resize(kRhoHatIntervals + 1);
  const double dxi = kRhoHatMax / kRhoHatIntervals;
  for (int i = 0; i <= kRhoHatIntervals; ++i) {
    const double xi = i * dxi;
    kit->rho_hat_table[i] = ball_hat(n, R, xi) * ct(xi) / (ball_volume(n, R) * cap0);
  }
  double gsup = 0.0;
  for (int i = 1; i < kRhoHatIntervals; ++i)
    gsup = std::max(gsup, std::abs(kit->rho_hat_table[i + 1] - kit->rho_hat_table[i - 1]) / (2.0 * dxi));
  kit->rho_hat_grad_sup = gsup;

  auto tau_raw = [](double u) {
    if (u <= 0.5 || u >= 2.0) return 0.0;
    return std::exp(-1.0 / ((u - 0.5) * (2.0 - u)));
  };
  kit->tau_norm = 1.0 / tanh_sinh(tau_raw, 0.5, 2.0, 1e-15).value;
  kit->tau_max = kit->tau_norm * tau_raw(1.25);
  kit->quad_nodes = static_cast<int>(ct.nodes.size());
  return kit;
}

}  // namespace

// ---- GridFunction ---------------------------------------------------------

GridFunction GridFunction::zeros(const std::vector<int>& dims, const std::vector<double>& lo,
                                 const std::vector<double>& hi) {
  if (dims.empty() || dims.size() != lo.size() || dims.size() != hi.size())
    throw DimensionError("grid: dims and box sizes disagree");
  GridFunction f;
  f.n = static_cast<int>(dims.size());
  f.dims = dims;
  f.lo = lo;
  f.hi = hi;
  Eigen::Index total = 1;
  for (int a = 0; a < f.n; ++a) {
    if (dims[a] < 1) throw DimensionError("grid: non-positive dimension");
    if (!(hi[a] > lo[a])) throw DimensionError("grid: empty box along an axis");
    total *= dims[a];
  }
  f.values = Eigen::ArrayXd::Zero(total);
  return f;
}

GridFunction GridFunction::unit(const std::vector<int>& dims) {
  return zeros(dims, std::vector<double>(dims.size(), 0.0), std::vector<double>(dims.size(), 1.0));
}

double GridFunction::cell_volume() const {
  double v = 1.0;
  for (int a = 0; a < n; ++a) v *= cell(a);
  return v;
}

Eigen::Index GridFunction::flat(const std::vector<int>& idx) const {
  Eigen::Index k = 0;
  for (int a = 0; a < n; ++a) k = k * dims[a] + idx[a];
  return k;
}

std::vector<int> GridFunction::unflat(Eigen::Index k) const {
  std::vector<int> idx(n);
  for (int a = n - 1; a >= 0; --a) {
    idx[a] = static_cast<int>(k % dims[a]);
    k /= dims[a];
  }
  return idx;
}

bool GridFunction::same_grid(const GridFunction& o) const {
  return n == o.n && dims == o.dims && lo == o.lo && hi == o.hi;
}

double integral(const GridFunction& f) { return f.values.sum() * f.cell_volume(); }

double inner(const GridFunction& f, const GridFunction& g) {
  if (!f.same_grid(g)) throw DimensionError("inner: grids differ");
  return (f.values * g.values).sum() * f.cell_volume();
}

double l2_norm(const GridFunction& f) { return std::sqrt(f.values.square().sum() * f.cell_volume()); }

GridFunction subtract(const GridFunction& f, const GridFunction& g) {
  if (!f.same_grid(g)) throw DimensionError("subtract: grids differ");
  GridFunction out = f;
  out.values = f.values - g.values;
  out.density = false;
  return out;
}

GridFunction clamp(const GridFunction& f, double lo, double hi) {
  GridFunction out = f;
  out.values = f.values.max(lo).min(hi);
  out.density = lo >= 0.0 && hi <= 1.0;
  return out;
}

// ---- BumpKit --------------------------------------------------------------

double BumpKit::rho(double r) const {
  r = std::abs(r);
  if (r >= support_radius) return 0.0;
  if (r <= plateau_radius) return plateau_value;
  return table_lookup(rho_table, support_radius / (rho_table.size() - 1), r);
}

double BumpKit::rho_hat(double xi) const {
  xi = std::abs(xi);
  if (xi <= rho_hat_max) return table_lookup(rho_hat_table, rho_hat_max / (rho_hat_table.size() - 1), xi);
  CapTransform ct;
  ct.n = n;
  auto [x, w] = gauss_legendre(128);
  for (std::size_t q = 0; q < x.size(); ++q) {
    const double a = 0.25 * (x[q] + 1.0);
    ct.nodes.push_back(a);
    ct.weights.push_back(0.25 * w[q] * cap(a) * std::pow(a, n - 1));
  }
  return ball_hat(n, ball_radius, xi) * ct(xi) / (ball_volume(n, ball_radius) * ct(0.0));
}

double BumpKit::tau(double u) const {
  if (u <= 0.5 || u >= 2.0) return 0.0;
  return tau_norm * std::exp(-1.0 / ((u - 0.5) * (2.0 - u)));
}

double BumpKit::psi(double u) const {
  if (u <= 0.5 || u >= 4.0) return 0.0;
  if (u < 1.0) return smooth_step(2.0 * u - 1.0);
  if (u <= 2.0) return 1.0;
  return smooth_step((4.0 - u) / 2.0);
}

double BumpKit::radial_mass() const {
  const int m = static_cast<int>(rho_table.size()) - 1;
  const double dr = support_radius / m;
  double s = 0.0;
  for (int i = 0; i <= m; ++i) {
    const double w = (i == 0 || i == m) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    s += w * rho_table[i] * std::pow(i * dr, n - 1);
  }
  return sphere_area(n) * s * dr / 3.0;
}

const BumpKit& bump_kit(int n) {
  static std::mutex m;
  static std::unique_ptr<BumpKit> kits[4];
  if (n < 1 || n > 3) throw DimensionError("bump kit supports n = 1, 2, 3");
  std::lock_guard<std::mutex> lock(m);
  if (!kits[n]) kits[n] = build_kit(n);
  return *kits[n];
}

double tau_scaled(const BumpKit& kit, int ell, double t) {
  const double s = std::ldexp(1.0, ell);
  return s * kit.tau(s * t);
}

// ---- padded spectral helpers ---------------------------------------------

std::vector<double> padded_lengths(const GridFunction& f, const std::vector<int>& shape) {
  std::vector<double> L(f.n);
  for (int a = 0; a < f.n; ++a) L[a] = shape[a] * f.cell(a);
  return L;
}

Eigen::ArrayXd embed_padded(const GridFunction& f, const std::vector<int>& shape) {
  Eigen::Index total = 1;
  for (int m : shape) total *= m;
  Eigen::ArrayXd out = Eigen::ArrayXd::Zero(total);
  const int last = f.dims.back();
  const Eigen::Index rows = f.size() / last;
  std::vector<int> idx(f.n, 0);
  for (Eigen::Index row = 0; row < rows; ++row) {
    Eigen::Index rem = row, dst = 0, stride = shape.back();
    for (int a = f.n - 2; a >= 0; --a) {
      idx[a] = static_cast<int>(rem % f.dims[a]);
      rem /= f.dims[a];
      dst += idx[a] * stride;
      stride *= shape[a];
    }
    out.segment(dst, last) = f.values.segment(row * last, last);
  }
  return out;
}

GridFunction extract_padded(const Eigen::ArrayXd& padded, const std::vector<int>& shape,
                            const GridFunction& like, const std::vector<int>& offset) {
  GridFunction out = like;
  out.density = false;
  const int n = like.n;
  std::vector<int> off = offset.empty() ? std::vector<int>(n, 0) : offset;
  const int last = like.dims.back();
  const Eigen::Index rows = like.size() / last;
  std::vector<int> idx(n, 0);
  const int M = shape.back();
  for (Eigen::Index row = 0; row < rows; ++row) {
    Eigen::Index rem = row, base = 0, stride = M;
    for (int a = n - 2; a >= 0; --a) {
      idx[a] = static_cast<int>(rem % like.dims[a]);
      rem /= like.dims[a];
      int p = (idx[a] + off[a]) % shape[a];
      if (p < 0) p += shape[a];
      base += static_cast<Eigen::Index>(p) * stride;
      stride *= shape[a];
    }
    for (int j = 0; j < last; ++j) {
      int p = (j + off[n - 1]) % M;
      if (p < 0) p += M;
      out.values(row * last + j) = padded(base + p);
    }
  }
  return out;
}

std::vector<double> mollifier_radius_cells(const BumpKit& kit, int ell, const GridFunction& f) {
  std::vector<double> r(f.n);
  for (int a = 0; a < f.n; ++a) r[a] = std::ldexp(kit.support_radius, -ell) / f.cell(a);
  return r;
}

int max_resolvable_ell(const BumpKit& kit, const GridFunction& f) {
  double cmax = 0.0;
  for (int a = 0; a < f.n; ++a) cmax = std::max(cmax, f.cell(a));
  return static_cast<int>(std::floor(std::log2(kit.support_radius / (4.0 * cmax)) + 1e-12));
}

namespace {

void check_resolution(const BumpKit& kit, int ell, const GridFunction& f) {
  if (kit.n != f.n) throw DimensionError("bump kit dimension differs from grid dimension");
  if (ell < 0) throw ResolutionError("negative mollification scale");
  const auto r = mollifier_radius_cells(kit, ell, f);
  if (*std::min_element(r.begin(), r.end()) < 4.0)
    throw ResolutionError("mollifier at scale " + std::to_string(ell) + " spans fewer than 4 cells (max resolvable " +
                          std::to_string(max_resolvable_ell(kit, f)) + ")");
}

// Visits integer offsets in the box [-J, J] per axis.
template <typename Fn>
void for_each_offset(const std::vector<int>& J, Fn&& fn) {
  const int n = static_cast<int>(J.size());
  std::vector<int> o(n);
  for (int a = 0; a < n; ++a) o[a] = -J[a];
  while (true) {
    fn(o);
    int a = n - 1;
    while (a >= 0 && ++o[a] > J[a]) {
      o[a] = -J[a];
      --a;
    }
    if (a < 0) break;
  }
}

struct KernelSamples {
  std::vector<int> J;
  std::vector<std::pair<std::vector<int>, double>> taps;  // offset, normalised weight
};

KernelSamples sample_kernel(const BumpKit& kit, int ell, const GridFunction& f) {
  KernelSamples ks;
  const double scale = std::ldexp(1.0, ell);
  ks.J.resize(f.n);
  for (int a = 0; a < f.n; ++a)
    ks.J[a] = static_cast<int>(std::ceil(std::ldexp(kit.support_radius, -ell) / f.cell(a)));
  double sum = 0.0;
  for_each_offset(ks.J, [&](const std::vector<int>& o) {
    double r2 = 0.0;
    for (int a = 0; a < f.n; ++a) {
      const double x = o[a] * f.cell(a);
      r2 += x * x;
    }
    const double v = kit.rho(scale * std::sqrt(r2));
    if (v > 0.0) {
      ks.taps.emplace_back(o, v);
      sum += v;
    }
  });
  const double inv = 1.0 / (sum * f.cell_volume());
  for (auto& t : ks.taps) t.second *= inv;
  return ks;
}

using SpectrumKey = std::tuple<int, int, std::vector<double>, std::vector<int>>;

struct SpectrumCache {
  std::mutex m;
  std::list<std::pair<SpectrumKey, std::shared_ptr<const Eigen::ArrayXcd>>> entries;
  static constexpr std::size_t kMax = 6;
};

SpectrumCache& spectrum_cache() {
  static SpectrumCache c;
  return c;
}

}  // namespace

Eigen::ArrayXcd mollifier_spectrum(const BumpKit& kit, int ell, const GridFunction& f,
                                   const std::vector<int>& shape) {
  std::vector<double> cells(f.n);
  for (int a = 0; a < f.n; ++a) cells[a] = f.cell(a);
  SpectrumKey key{kit.n, ell, cells, shape};
  auto& cache = spectrum_cache();
  {
    std::lock_guard<std::mutex> lock(cache.m);
    for (auto it = cache.entries.begin(); it != cache.entries.end(); ++it) {
      if (it->first == key) {
        cache.entries.splice(cache.entries.begin(), cache.entries, it);
        return *cache.entries.front().second;
      }
    }
  }
  const KernelSamples ks = sample_kernel(kit, ell, f);
  Eigen::Index total = 1;
  for (int m : shape) total *= m;
  Eigen::ArrayXd k = Eigen::ArrayXd::Zero(total);
  for (const auto& [o, w] : ks.taps) {
    Eigen::Index p = 0;
    for (int a = 0; a < f.n; ++a) p = p * shape[a] + ((o[a] % shape[a]) + shape[a]) % shape[a];
    k(p) += w;
  }
  auto spec = std::make_shared<const Eigen::ArrayXcd>(fft_for(shape).forward(k) * f.cell_volume());
  std::lock_guard<std::mutex> lock(cache.m);
  cache.entries.emplace_front(key, spec);
  if (cache.entries.size() > SpectrumCache::kMax) cache.entries.pop_back();
  return *spec;
}

std::vector<double> kernel_difference_norms(const BumpKit& kit, int ell, const GridFunction& f) {
  const KernelSamples ks = sample_kernel(kit, ell, f);
  std::map<std::vector<int>, double> w;
  for (const auto& [o, v] : ks.taps) w[o] = v;
  std::vector<double> out(f.n, 0.0);
  for (int a = 0; a < f.n; ++a) {
    // sum over all offsets o of |K(o + e_a) - K(o)|
    std::map<std::vector<int>, double> diff;
    for (const auto& [o, v] : w) {
      diff[o] -= v;
      std::vector<int> q = o;
      q[a] -= 1;
      diff[q] += v;
    }
    double s = 0.0;
    for (const auto& [o, v] : diff) s += std::abs(v);
    out[a] = s * f.cell_volume();
  }
  return out;
}

GridFunction mollify(const GridFunction& f, const BumpKit& kit, int ell) {
  check_resolution(kit, ell, f);
  std::vector<int> shape(f.n), J(f.n);
  for (int a = 0; a < f.n; ++a) {
    J[a] = static_cast<int>(std::ceil(std::ldexp(kit.support_radius, -ell) / f.cell(a)));
    shape[a] = next_pow2(static_cast<long long>(f.dims[a]) + 2LL * J[a]);
  }
  const RealFft& fft = fft_for(shape);
  Eigen::ArrayXcd F = fft.forward(embed_padded(f, shape));
  F *= mollifier_spectrum(kit, ell, f, shape);
  std::vector<double> lo(f.n), hi(f.n);
  std::vector<int> off(f.n);
  for (int a = 0; a < f.n; ++a) {
    lo[a] = f.lo[a] - J[a] * f.cell(a);
    hi[a] = lo[a] + shape[a] * f.cell(a);
    off[a] = -J[a];
  }
  return extract_padded(fft.inverse(F), shape, GridFunction::zeros(shape, lo, hi), off);
}

GridFunction crop(const GridFunction& g, const GridFunction& like) {
  if (g.n != like.n) throw DimensionError("crop: dimensions differ");
  GridFunction out = like;
  out.density = false;
  std::vector<int> off(g.n);
  for (int a = 0; a < g.n; ++a) {
    if (std::abs(g.cell(a) - like.cell(a)) > 1e-12 * like.cell(a)) throw DimensionError("crop: cell sizes differ");
    off[a] = static_cast<int>(std::lround((like.lo[a] - g.lo[a]) / g.cell(a)));
  }
  std::vector<int> src(g.n);
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    const auto idx = out.unflat(i);
    bool inside = true;
    for (int a = 0; a < g.n && inside; ++a) {
      src[a] = idx[a] + off[a];
      inside = src[a] >= 0 && src[a] < g.dims[a];
    }
    out.values(i) = inside ? g.values(g.flat(src)) : 0.0;
  }
  return out;
}

GridFunction mollify_direct(const GridFunction& f, const BumpKit& kit, int ell) {
  check_resolution(kit, ell, f);
  const KernelSamples ks = sample_kernel(kit, ell, f);
  GridFunction out = f;
  out.density = false;
  out.values.setZero();
  const double vol = f.cell_volume();
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    const auto idx = f.unflat(i);
    double s = 0.0;
    std::vector<int> src(f.n);
    for (const auto& [o, w] : ks.taps) {
      bool inside = true;
      for (int a = 0; a < f.n && inside; ++a) {
        src[a] = idx[a] - o[a];
        inside = src[a] >= 0 && src[a] < f.dims[a];
      }
      if (inside) s += w * f.values(f.flat(src));
    }
    out.values(i) = s * vol;
  }
  return out;
}

// ---- Littlewood-Paley -----------------------------------------------------

BandDecomposition band_project(const GridFunction& f, int k0, int kmax) {
  if (kmax < k0) throw NyquistError("band_project: kmax below k0");
  const RealFft& fft = fft_for(f.dims);
  std::vector<double> L(f.n);
  for (int a = 0; a < f.n; ++a) L[a] = f.length(a);
  const Eigen::ArrayXd r2 = fft.frequency_radius(L);
  const Eigen::ArrayXd r = r2.sqrt();
  const double top = std::ldexp(1.0, kmax + 1);
  if (kmax > k0 && !((r >= std::ldexp(1.0, kmax)) && (r < top)).any())
    throw NyquistError("band " + std::to_string(kmax) + " holds no discrete frequency at this resolution");

  const Eigen::ArrayXcd F = fft.forward(f.values);
  auto part = [&](double lo, double hi) {
    Eigen::ArrayXcd G = F;
    for (Eigen::Index k = 0; k < G.size(); ++k)
      if (!(r(k) >= lo && r(k) < hi)) G(k) = 0.0;
    GridFunction g = f;
    g.density = false;
    g.values = fft.inverse(G);
    return g;
  };
  BandDecomposition out;
  out.k0 = k0;
  out.kmax = kmax;
  out.low = part(-1.0, std::ldexp(1.0, k0 + 1));
  for (int k = k0 + 1; k <= kmax; ++k) out.bands.push_back(part(std::ldexp(1.0, k), std::ldexp(1.0, k + 1)));
  out.high = part(top, std::numeric_limits<double>::infinity());
  return out;
}

// ---- partial convolution --------------------------------------------------

GridFunction partial_convolve(const GridFunction& f, const Kernel1D& k, int axis) {
  if (f.n != 2) throw DimensionError("partial_convolve needs a two-dimensional grid");
  if (axis != 1 && axis != 2) throw DimensionError("partial_convolve axis must be 1 or 2");
  GridFunction out = f;
  out.density = false;
  out.values.setZero();
  const int nx = f.dims[0], ny = f.dims[1];
  const int taps = static_cast<int>(k.weights.size());
  for (int j = 0; j < taps; ++j) {
    const double w = k.weights[j];
    if (w == 0.0) continue;
    const int u = j - k.center;  // out(x) += w * f(x - u)
    if (axis == 1) {
      for (int x = std::max(0, u); x < std::min(nx, nx + u); ++x)
        out.values.segment(static_cast<Eigen::Index>(x) * ny, ny) +=
            w * f.values.segment(static_cast<Eigen::Index>(x - u) * ny, ny);
    } else {
      const int y0 = std::max(0, u), y1 = std::min(ny, ny + u);
      if (y1 <= y0) continue;
      for (int x = 0; x < nx; ++x) {
        const Eigen::Index row = static_cast<Eigen::Index>(x) * ny;
        out.values.segment(row + y0, y1 - y0) += w * f.values.segment(row + y0 - u, y1 - y0);
      }
    }
  }
  return out;
}

Kernel1D scaled_profile_1d(const BumpKit& kit1, double width, double cell) {
  if (kit1.n != 1) throw DimensionError("scaled_profile_1d needs the one-dimensional kit");
  Kernel1D k;
  const int J = static_cast<int>(std::floor(kit1.support_radius * width / cell));
  if (J < 1) {
    k.weights = {1.0};
    k.center = 0;
    return k;
  }
  k.center = J;
  k.weights.resize(2 * J + 1);
  double s = 0.0;
  for (int j = -J; j <= J; ++j) s += k.weights[j + J] = kit1.rho(j * cell / width);
  for (double& w : k.weights) w /= s;
  return k;
}

}  // namespace curvepat
