#include "curvepat/quadrature.hpp"

#include <cmath>
#include <numbers>

namespace curvepat {

std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n) {
  std::vector<double> x(n), w(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  return {x, w};
}

QuadResult tanh_sinh(const std::function<double(double)>& f, double a, double b, double tol, int max_level) {
  const double half = 0.5 * (b - a);
  const double pi2 = 0.5 * std::numbers::pi;
  double h = 1.0;
  auto term = [&](double t) {
    const double s = pi2 * std::sinh(t);
    const double c = std::cosh(s);
    const double x = std::tanh(s);
    const double w = pi2 * std::cosh(t) / (c * c);
    // distance to the nearer endpoint, computed without cancellation
    const double dist = half / (std::exp(2.0 * std::abs(s)) + 1.0) * 2.0;
    const double xx = x > 0 ? b - dist : a + dist;
    if (!(xx > a && xx < b) || w == 0.0) return 0.0;
    return w * f(xx);
  };
  double sum = term(0.0);
  for (int k = 1; k <= 64; ++k) {
    const double t = k * h;
    const double v = term(t) + term(-t);
    sum += v;
    if (std::abs(v) < 1e-300 && t > 3.0) break;
  }
  double prev = sum * h * half;
  QuadResult r{prev, 0.0};
  for (int level = 1; level <= max_level; ++level) {
    h *= 0.5;
    double add = 0.0;
    for (int k = 1;; k += 2) {
      const double t = k * h;
      const double v = term(t) + term(-t);
      add += v;
      if (t > 3.0 && std::abs(v) < 1e-300) break;
      if (t > 6.0) break;
    }
    sum += add;
    const double cur = sum * h * half;
    r = {cur, std::abs(cur - prev)};
    if (r.error <= tol * std::max(1.0, std::abs(cur)) && level >= 3) break;
    prev = cur;
  }
  return r;
}

}  // namespace curvepat
