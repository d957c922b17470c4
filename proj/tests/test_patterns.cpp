#include "curvepat/errors.hpp"
#include "curvepat/generators.hpp"
#include "curvepat/patterns.hpp"
#include "curvepat/sampling.hpp"

#include <doctest.h>

#include <cmath>

using namespace curvepat;

namespace {

// |E ∩ (E - v)| summed over occupied cell pairs, each an axis-aligned box intersection.
double pairwise_overlap(const GridFunction& E, const Eigen::VectorXd& v) {
  std::vector<Eigen::Index> on;
  for (Eigen::Index k = 0; k < E.size(); ++k)
    if (E.values(k) != 0.0) on.push_back(k);
  double total = 0;
  for (auto i : on) {
    const auto a = E.unflat(i);
    for (auto j : on) {
      const auto b = E.unflat(j);
      double vol = E.values(i) * E.values(j);
      for (int ax = 0; ax < E.n && vol > 0; ++ax) {
        const double lo1 = E.lo[ax] + a[ax] * E.cell(ax), lo2 = E.lo[ax] + b[ax] * E.cell(ax) - v(ax);
        vol *= std::max(0.0, std::min(lo1, lo2) + E.cell(ax) - std::max(lo1, lo2));
      }
      total += vol;
    }
  }
  return total;
}

double displacement_cells(const Curve& c, double t1, double t2, const GridFunction& E) {
  const Eigen::VectorXd d = eval_curve(c, t1) - eval_curve(c, t2);
  double m = 0;
  for (int a = 0; a < c.n; ++a) m = std::max(m, std::abs(d(a)) / E.cell(a));
  return m;
}

const Curve& parabola() {
  static const Curve c = make_curve({{{1, 1.0}}, {{2, 1.0}}});
  return c;
}

}  // namespace

TEST_CASE("overlap equals the pairwise cell intersection") {
  auto E = random_density({16, 16}, 0.3, 2);
  for (double t : {0.05, 0.31, 0.77}) {
    const double ref = pairwise_overlap(E, eval_curve(parabola(), t));
    CHECK(overlap_at(E, parabola(), t) == doctest::Approx(ref).epsilon(1e-10).scale(1e-12));
  }
}

TEST_CASE("refinement preserves overlap and values") {
  auto E = random_density({32, 32}, 0.4, 3);
  auto R = refine(E);
  CHECK(R.dims == std::vector<int>{64, 64});
  CHECK(integral(R) == doctest::Approx(integral(E)));
  CHECK(overlap_at(R, parabola(), 0.4) == doctest::Approx(overlap_at(E, parabola(), 0.4)).epsilon(1e-10));
  Eigen::VectorXd p(2);
  p << 0.51, 0.23;
  CHECK(value_at(R, p) == value_at(E, p));
  p << 1.5, 0.2;
  CHECK(value_at(E, p) == 0.0);
}

TEST_CASE("planted pair in the unit square is recovered") {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const double t = 0.2 + 0.2 * seed;
    auto P = planted_pair({256, 256}, {0, 0}, {1, 1}, parabola(), t, seed);
    SearchConfig cfg;
    cfg.epsilon = integral(P.set);
    auto w = search_unit(P.set, parabola(), cfg);
    CHECK(displacement_cells(parabola(), w.t, t, P.set) <= 2.0);
    CHECK(value_at(P.set, w.x) == 1.0);
    CHECK(value_at(P.set, w.y) == 1.0);
    CHECK(w.overlap_mass > w.threshold);
    CHECK(w.gap_certified <= w.t);
    CHECK(w.residual_cells <= 2.0);
    CHECK_FALSE(w.ledger.empty());
  }
}

TEST_CASE("full square gives the largest parameter") {
  auto full = random_density({128, 128}, 1.0, 1);
  auto w = search_unit(full, parabola());
  CHECK(w.t > 0.99);
  CHECK(w.t < 1.0);
}

TEST_CASE("search preconditions") {
  auto full = random_density({64, 64}, 1.0, 1);
  SearchConfig tiny;
  tiny.epsilon = 1e-9;
  CHECK_THROWS_AS(search_unit(full, parabola(), tiny), PreconditionError);
  auto line = make_curve({{{1, 1.0}}, {{1, 2.0}}});
  CHECK_THROWS_AS(search_unit(full, line), DispatchError);
  CHECK_THROWS_AS(slice_search(full, parabola()), DispatchError);
  auto empty = GridFunction::unit({64, 64});
  CHECK_THROWS_AS(search_unit(empty, parabola()), PreconditionError);
}

TEST_CASE("rectangle reduction") {
  auto E = GridFunction::zeros({256, 256}, {0, 0}, {64, 64});
  // Gamma = 1: s = 2 rounds the box to [0, 16]^2 and cuts it into 4 x 16 rectangles
  E.values(E.flat({20, 30})) = 1.0;
  auto r = reduce_rectangle(E, {1, 2}, ScaleLattice::with_gamma(1), 0.0);
  CHECK(r.s == 2);
  CHECK(r.extents == std::vector<double>{4.0, 16.0});
  CHECK(r.N_rounded == 16.0);
  CHECK(r.offset == std::vector<double>{4.0, 0.0});
  CHECK(r.rect_count == 4);
  CHECK(r.rect_index == 1);
  auto U = rescale_to_unit(E, r);
  CHECK(U.lo == std::vector<double>{0.0, 0.0});
  CHECK(U.hi == std::vector<double>{1.0, 1.0});
  CHECK(integral(U) * 64.0 == doctest::Approx(integral(E)));

  auto odd = GridFunction::zeros({64, 64}, {1, 0}, {65, 64});
  CHECK_THROWS_AS(reduce_rectangle(odd, {1, 2}, ScaleLattice::with_gamma(1), 0.0), PreconditionError);
}

TEST_CASE("scaled search recovers a pair planted inside one rectangle") {
  // N = 4096 with Gamma = 3: s = 6, rectangles 64 x 4096 (16 x 1024 cells)
  auto lat = ScaleLattice::with_gamma(3);
  const double t = 40.0;
  auto local = planted_pair({16, 1024}, {0, 0}, {64, 4096}, parabola(), t, 4);
  auto E = GridFunction::zeros({1024, 1024}, {0, 0}, {4096, 4096});
  const int col = 5 * 16;
  for (Eigen::Index k = 0; k < local.set.size(); ++k) {
    auto id = local.set.unflat(k);
    E.values(E.flat({id[0] + col, id[1]})) = local.set.values(k);
  }
  auto w = search_scaled(E, parabola(), lat);
  REQUIRE(w.rectangle);
  CHECK(w.rectangle->s == 6);
  CHECK(w.rectangle->rect_index == 5);
  CHECK(displacement_cells(parabola(), w.t, t, E) <= 2.0);
  CHECK(value_at(E, w.x) == 1.0);
  CHECK(value_at(E, w.y) == 1.0);
  auto via_dispatch = search(E, parabola(), lat);
  CHECK(via_dispatch.mode == SearchMode::Scaled);
  CHECK(via_dispatch.t == w.t);
}

TEST_CASE("corner search recovers a planted triple") {
  auto P1 = make_polynomial({{1, 1.0}}), P2 = make_polynomial({{2, 1.0}});
  auto C = planted_corner({256, 256}, 1.0, P1, P2, 0.3, 7);
  auto w = corner_search(C.set, P1, P2, ScaleLattice::with_gamma(1));
  CHECK(w.mode == SearchMode::Corner);
  REQUIRE(w.points.size() == 3);
  for (const auto& p : w.points) CHECK(value_at(C.set, p) == 1.0);
  CHECK(std::abs(w.t - 0.3) * 256 <= 2.0);
  CHECK(std::abs(w.t * w.t - 0.09) * 256 <= 2.0);
  CHECK(corner_overlap_at(C.set, P1, P2, w.t) > 0.0);
  CHECK_THROWS_AS(corner_search(C.set, P2, P1, ScaleLattice::with_gamma(1)), HypothesisError);
}

TEST_CASE("slice search on a line curve") {
  auto line = make_curve({{{1, 1.0}}, {{1, 2.0}}});
  auto strip = GridFunction::unit({128, 128});
  for (Eigen::Index k = 0; k < strip.size(); ++k) {
    auto id = strip.unflat(k);
    const double r = strip.center(1, id[1]) - 2 * strip.center(0, id[0]);
    if (r > -0.6 && r < -0.3) strip.values(k) = 1.0;
  }
  auto w = slice_search(strip, line);
  REQUIRE(w.slice);
  CHECK(w.slice->n0 == 1);
  CHECK(w.residual_cells <= 2.0);
  CHECK(w.slice->slice_measure >= w.slice->kappa * integral(strip));
  CHECK(w.slice->jacobian == doctest::Approx(std::sqrt(5.0)));
  CHECK(w.slice->lift_identity_residual < 1e-12);
  auto via_dispatch = search(strip, line, ScaleLattice::with_gamma(1));
  CHECK(via_dispatch.mode == SearchMode::Slice);
}
