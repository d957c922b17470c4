#pragma once

#include "curvepat/counting.hpp"

#include <Eigen/Dense>

#include <vector>

namespace curvepat::detail {

// t-nodes with trapezoid weights (times tau_ell on a scale window) and the
// weights of the same rule at doubled spacing.
struct TNodes {
  std::vector<double> t, w, w_half;
  int N = 0;
  double cells_per_node = 0.0;
};

TNodes make_nodes(const std::vector<const Polynomial*>& comps, const std::vector<double>& cells, TWindow window,
                  const BumpKit& kit, int requested, double cells_per_node);

// Multilinear interpolation of a wrapped correlation array at the cell offset v;
// offsets with |index| > limit count as zero.
double interp_wrapped(const Eigen::ArrayXd& C, const std::vector<int>& shape, const double* v,
                      const std::vector<int>& limit);

struct QuadPair {
  double full = 0.0, half = 0.0;
};

QuadPair integrate_correlation(const Eigen::ArrayXd& C, const std::vector<int>& shape, const TNodes& nodes,
                               const Curve& cs, const std::vector<double>& cells, const std::vector<int>& limit);

std::vector<const Polynomial*> components(const Curve& c);

}  // namespace curvepat::detail
