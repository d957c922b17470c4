#include "curvepat/generators.hpp"

#include "curvepat/errors.hpp"
#include "curvepat/sampling.hpp"

#include <cmath>
#include <sstream>

namespace curvepat {

namespace {

GridFunction blank(const std::vector<int>& dims, std::vector<double> lo, std::vector<double> hi) {
  const std::size_t n = dims.size();
  if (n < 1 || n > 3) throw DimensionError("generators support n = 1, 2, 3");
  if (lo.empty()) lo.assign(n, 0.0);
  if (hi.empty()) hi.assign(n, 1.0);
  if (lo.size() != n || hi.size() != n) throw DimensionError("box and dims disagree");
  GridFunction g = GridFunction::zeros(dims, lo, hi);
  g.density = true;
  return g;
}

Eigen::Index cell_of(const GridFunction& g, const Eigen::VectorXd& p) {
  std::vector<int> idx(g.n);
  for (int a = 0; a < g.n; ++a) {
    const double u = (p(a) - g.lo[a]) / g.cell(a);
    if (u < 0.0 || u >= g.dims[a]) throw PreconditionError("planted point falls outside the box");
    idx[a] = static_cast<int>(std::floor(u));
  }
  return g.flat(idx);
}

}  // namespace

GridFunction random_density(const std::vector<int>& dims, double p, std::uint64_t seed, const std::vector<double>& lo,
                            const std::vector<double>& hi) {
  if (!(p >= 0.0 && p <= 1.0)) throw PreconditionError("density must lie in [0, 1]");
  GridFunction g = blank(dims, lo, hi);
  Rng rng(seed);
  for (Eigen::Index k = 0; k < g.size(); ++k) g.values(k) = rng.uniform() < p ? 1.0 : 0.0;
  return g;
}

GridFunction union_of_balls(const std::vector<int>& dims, int count, double r_min, double r_max, std::uint64_t seed) {
  GridFunction g = blank(dims, {}, {});
  Rng rng(seed);
  std::vector<Eigen::VectorXd> centres;
  std::vector<double> radii;
  for (int b = 0; b < count; ++b) {
    Eigen::VectorXd c(g.n);
    for (int a = 0; a < g.n; ++a) c(a) = rng.uniform();
    centres.push_back(c);
    radii.push_back(rng.uniform(r_min, r_max));
  }
  Eigen::VectorXd p(g.n);
  for (Eigen::Index k = 0; k < g.size(); ++k) {
    const auto idx = g.unflat(k);
    for (int a = 0; a < g.n; ++a) p(a) = g.center(a, idx[a]);
    for (int b = 0; b < count; ++b)
      if ((p - centres[b]).norm() <= radii[b]) {
        g.values(k) = 1.0;
        break;
      }
  }
  return g;
}

GridFunction cantor_like(const std::vector<int>& dims, int levels) {
  GridFunction g = blank(dims, {}, {});
  auto keep = [&](double x) {
    for (int l = 0; l < levels; ++l) {
      const double q = x * 4.0;
      if (q >= 1.0 && q < 3.0) return false;
      x = q < 1.0 ? q : q - 3.0;
    }
    return true;
  };
  for (Eigen::Index k = 0; k < g.size(); ++k) {
    const auto idx = g.unflat(k);
    bool on = true;
    for (int a = 0; a < g.n && on; ++a) on = keep((idx[a] + 0.5) / g.dims[a]);
    g.values(k) = on ? 1.0 : 0.0;
  }
  return g;
}

PlantedPair planted_pair(const std::vector<int>& dims, const std::vector<double>& lo, const std::vector<double>& hi,
                         const Curve& c, double t, std::uint64_t seed) {
  PlantedPair out;
  out.set = blank(dims, lo, hi);
  const GridFunction& g = out.set;
  if (g.n != c.n) throw DimensionError("grid and curve dimensions differ");
  const Eigen::VectorXd d = eval_curve(c, t);
  Rng rng(seed);
  Eigen::VectorXd x(g.n);
  for (int a = 0; a < g.n; ++a) {
    // x at a cell centre with x + d_a inside the box
    const double lo_a = g.lo[a] + std::max(0.0, -d(a)), hi_a = g.hi[a] - std::max(0.0, d(a));
    if (hi_a - lo_a < g.cell(a)) {
      std::ostringstream os;
      os << "gamma(" << t << ") does not fit in the box along axis " << a;
      throw PreconditionError(os.str());
    }
    const int first = static_cast<int>(std::ceil((lo_a - g.lo[a]) / g.cell(a)));
    const int last = static_cast<int>(std::floor((hi_a - g.lo[a]) / g.cell(a))) - 1;
    const int j = last > first ? first + rng.below(last - first + 1) : first;
    x(a) = g.center(a, j);
  }
  out.x = x;
  out.y = x + d;
  out.t = t;
  out.set.values(cell_of(g, out.x)) = 1.0;
  out.set.values(cell_of(g, out.y)) = 1.0;
  return out;
}

PlantedCorner planted_corner(const std::vector<int>& dims, double N, const Polynomial& P1, const Polynomial& P2,
                             double t, std::uint64_t seed) {
  if (dims.size() != 2) throw DimensionError("corner sets are two-dimensional");
  PlantedCorner out;
  out.set = blank(dims, {0.0, 0.0}, {N, N});
  const GridFunction& g = out.set;
  const double p1 = eval_polynomial(P1, t), p2 = eval_polynomial(P2, t);
  Rng rng(seed);
  Eigen::Vector2d x;
  const double shift[2] = {p1, p2};
  for (int a = 0; a < 2; ++a) {
    const double lo_a = std::max(0.0, -shift[a]), hi_a = N - std::max(0.0, shift[a]);
    if (hi_a - lo_a < g.cell(a)) throw PreconditionError("corner shape does not fit in the box");
    const int first = static_cast<int>(std::ceil(lo_a / g.cell(a)));
    const int last = static_cast<int>(std::floor(hi_a / g.cell(a))) - 1;
    x(a) = g.center(a, last > first ? first + rng.below(last - first + 1) : first);
  }
  out.t = t;
  out.points = {x, x + Eigen::Vector2d(p1, 0.0), x + Eigen::Vector2d(0.0, p2)};
  for (const auto& p : out.points) out.set.values(cell_of(g, p)) = 1.0;
  return out;
}

GridFunction presmoothed(const GridFunction& f, const BumpKit& kit, int ell) {
  GridFunction g = clamp(crop(mollify(f, kit, ell), f));
  g.density = true;
  return g;
}

}  // namespace curvepat
