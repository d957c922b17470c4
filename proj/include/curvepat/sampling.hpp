#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <vector>

namespace curvepat {

// Radical inverse of index in the given prime base.
double radical_inverse(std::uint64_t index, int base);

// Low-discrepancy points on the annulus r0 <= |xi| <= r1 in R^n (n = 1, 2, 3),
// uniform in volume.
std::vector<Eigen::VectorXd> shell_points(int n, int count, double r0 = 0.5, double r1 = 4.0);

// Deterministic across platforms: std::mt19937_64 output mapped by hand.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }
  std::uint64_t bits() { return eng_(); }
  int below(int n) { return static_cast<int>(eng_() % static_cast<std::uint64_t>(n)); }
  double normal();

 private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace curvepat
