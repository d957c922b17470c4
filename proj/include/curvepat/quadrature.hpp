#pragma once

#include <functional>
#include <utility>
#include <vector>

namespace curvepat {

// Gauss-Legendre nodes and weights on [-1, 1].
std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n);

// Double-exponential (tanh-sinh) quadrature on [a, b]; tolerant of endpoint
// singularities. Returns the integral and an error estimate from level halving.
struct QuadResult {
  double value = 0.0;
  double error = 0.0;
};
QuadResult tanh_sinh(const std::function<double(double)>& f, double a, double b, double tol = 1e-14,
                     int max_level = 8);

}  // namespace curvepat
