#pragma once

#include "curvepat/gridfield.hpp"
#include "curvepat/polycurve.hpp"

#include <cstdint>
#include <vector>

namespace curvepat {

// Independent cells switched on with probability p.
GridFunction random_density(const std::vector<int>& dims, double p, std::uint64_t seed,
                            const std::vector<double>& lo = {}, const std::vector<double>& hi = {});

// Union of `count` balls with radii in [r_min, r_max] (box units), centres uniform in the box.
GridFunction union_of_balls(const std::vector<int>& dims, int count, double r_min, double r_max, std::uint64_t seed);

// Product of 1-D sets keeping the outer quarters of every interval, `levels` times.
GridFunction cantor_like(const std::vector<int>& dims, int levels);

struct PlantedPair {
  GridFunction set;
  Eigen::VectorXd x, y;  // y = x + gamma(t), both cell centres' neighbourhood
  double t = 0.0;
};

// Two cells: the one holding x and the one holding x + gamma(t). x is drawn so both fit in the box.
PlantedPair planted_pair(const std::vector<int>& dims, const std::vector<double>& lo, const std::vector<double>& hi,
                         const Curve& c, double t, std::uint64_t seed);

struct PlantedCorner {
  GridFunction set;
  std::vector<Eigen::VectorXd> points;
  double t = 0.0;
};

PlantedCorner planted_corner(const std::vector<int>& dims, double N, const Polynomial& P1, const Polynomial& P2,
                             double t, std::uint64_t seed);

// f * rho_ell cropped back to f's grid.
GridFunction presmoothed(const GridFunction& f, const BumpKit& kit, int ell);

}  // namespace curvepat
