#include "curvepat/sampling.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace curvepat {

double radical_inverse(std::uint64_t index, int base) {
  double inv = 1.0 / base, f = inv, r = 0.0;
  while (index > 0) {
    r += f * static_cast<double>(index % base);
    index /= base;
    f *= inv;
  }
  return r;
}

std::vector<Eigen::VectorXd> shell_points(int n, int count, double r0, double r1) {
  if (n < 1 || n > 3) throw std::invalid_argument("shell_points: n must be 1, 2 or 3");
  constexpr double two_pi = 2.0 * std::numbers::pi;
  std::vector<Eigen::VectorXd> pts;
  pts.reserve(count);
  const double a = std::pow(r0, n), b = std::pow(r1, n);
  for (int k = 1; k <= count; ++k) {
    const double u = radical_inverse(k, 2);
    const double v = radical_inverse(k, 3);
    const double w = radical_inverse(k, 5);
    const double r = std::pow(a + u * (b - a), 1.0 / n);
    Eigen::VectorXd x(n);
    if (n == 1) {
      x(0) = v < 0.5 ? r : -r;
    } else if (n == 2) {
      x << r * std::cos(two_pi * v), r * std::sin(two_pi * v);
    } else {
      const double z = 1.0 - 2.0 * v, rho = std::sqrt(std::max(0.0, 1.0 - z * z));
      x << r * rho * std::cos(two_pi * w), r * rho * std::sin(two_pi * w), r * z;
    }
    pts.push_back(std::move(x));
  }
  return pts;
}

double Rng::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = uniform(-1.0, 1.0);
    v = uniform(-1.0, 1.0);
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double m = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * m;
  have_spare_ = true;
  return u * m;
}

}  // namespace curvepat
