#include "curvepat/errors.hpp"
#include "curvepat/polycurve.hpp"
#include "curvepat/sampling.hpp"

#include <doctest.h>

#include <cmath>

using namespace curvepat;

TEST_CASE("polynomial records lowest and highest exponent") {
  auto p = make_polynomial({{2, 3.0}, {5, -1.0}});
  CHECK(p.sigma == 2);
  CHECK(p.deg == 5);
  CHECK(eval_polynomial(p, 2.0) == doctest::Approx(3.0 * 4 - 32));
  CHECK(eval_derivative(p, 2, 2.0) == doctest::Approx(6.0 - 20.0 * 8));
}

TEST_CASE("invalid polynomials are rejected") {
  CHECK_THROWS_AS(make_polynomial({{0, 1.0}}), ConstantTermError);
  CHECK_THROWS_AS(make_polynomial({{1, 0.0}}), ZeroPolynomialError);
  CHECK_THROWS_AS(make_curve({}), ZeroPolynomialError);
}

TEST_CASE("curve coefficient matrix and rank") {
  auto c = make_curve({{{1, 1.0}}, {{2, 1.0}}, {{1, 1.0}, {2, 1.0}}});
  CHECK(c.n == 3);
  CHECK(c.d == 2);
  CHECK(c.rank == 2);
  CHECK_FALSE(c.distinct_degrees);
  CHECK(c.coeff_matrix(2, 0) == 1.0);
  CHECK(c.coeff_matrix(2, 1) == 1.0);

  auto moment = make_curve({{{1, 1.0}}, {{2, 1.0}}, {{3, 1.0}}});
  CHECK(moment.rank == 3);
  CHECK(moment.distinct_degrees);
}

TEST_CASE("numerical rank ignores row scale") {
  Eigen::MatrixXd m(2, 2);
  m << 1e-8, 0, 0, 1e8;
  CHECK(numerical_rank(m) == 2);
  m << 1, 2, 2, 4 + 1e-14;
  CHECK(numerical_rank(m) == 1);
}

TEST_CASE("rescaling normalises the leading coefficient") {
  // 2^{-d s} P(2^s t) computed directly
  auto p = make_polynomial({{1, 3.0}, {3, 2.0}});
  const int s = 4;
  auto q = rescale_polynomial(p, s);
  for (double t : {0.1, 0.7, 1.3}) {
    double direct = std::ldexp(eval_polynomial(p, std::ldexp(t, s)), -3 * s);
    CHECK(eval_polynomial(q, t) == doctest::Approx(direct).epsilon(1e-13));
  }
}

TEST_CASE("dependence analysis of a rank-deficient curve") {
  auto c = make_curve({{{1, 1.0}}, {{2, 1.0}}, {{1, 1.0}, {2, 1.0}}});
  auto dep = analyze_dependence(c);
  CHECK_FALSE(dep.full_rank);
  CHECK(dep.n0 == 2);
  CHECK(dep.basis_idx == std::vector<int>{0, 1});
  CHECK(dep.dependent_idx == std::vector<int>{2});
  CHECK(dep.L(0, 0) == doctest::Approx(1.0));
  CHECK(dep.L(1, 0) == doctest::Approx(1.0));
  CHECK(dep.reconstruction_residual < 1e-12);
  auto r = reduced_curve(c, dep);
  CHECK(r.n == 2);
  CHECK(r.rank == 2);

  auto line = make_curve({{{1, 1.0}}, {{1, 2.0}}});
  auto dl = analyze_dependence(line);
  CHECK(dl.n0 == 1);
  CHECK(dl.L(0, 0) == doctest::Approx(2.0));
}

TEST_CASE("scale lattice parities") {
  auto l = ScaleLattice::with_gamma(3);
  CHECK(l.admissible_s(0));
  CHECK(l.admissible_s(6));
  CHECK_FALSE(l.admissible_s(3));
  CHECK(l.admissible_ell(3));
  CHECK(l.admissible_ell(9));
  CHECK_FALSE(l.admissible_ell(6));
  CHECK(l.admissible_pair(6, 3));
  CHECK(l.admissible_pair(0, 3));
  CHECK(l.round_ell(4.0) == 3);
  CHECK(l.round_ell(7.6) == 9);
  CHECK(l.round_ell(0.0) == 3);
}

TEST_CASE("calibrated lattices for the standard curves") {
  CHECK(calibrate_lattice(make_curve({{{1, 1.0}}, {{3, 1.0}}})).Gamma == 2);
  CHECK(calibrate_lattice(make_curve({{{1, 1.0}}, {{2, 1.0}}})).Gamma == 3);
  CHECK(calibrate_lattice(make_curve({{{1, 1.0}}, {{2, 1.0}}, {{3, 1.0}}})).Gamma == 3);
  // dependent with repeated degree: neither route applies
  CHECK_THROWS_AS(calibrate_lattice(make_curve({{{1, 1.0}}, {{1, 2.0}}})), CalibrationFailed);
}

TEST_CASE("calibrated lattice passes its own derivative floor") {
  auto c = make_curve({{{1, 1.0}}, {{3, 1.0}}});
  auto l = calibrate_lattice(c);
  CHECK(l.min_margin >= 1.0);
  auto shell = shell_points(2, 512);
  for (int s : {0, 2 * l.Gamma})
    for (int ell : {l.Gamma, 3 * l.Gamma})
      if (l.admissible_pair(s, ell)) CHECK(derivative_floor_margin(c, s, ell, shell, 256) >= 1.0);
}

TEST_CASE("shell points fill the annulus") {
  auto pts = shell_points(3, 2000);
  REQUIRE(pts.size() == 2000);
  double rmin = 10, rmax = 0;
  for (const auto& p : pts) {
    rmin = std::min(rmin, p.norm());
    rmax = std::max(rmax, p.norm());
  }
  CHECK(rmin >= 0.5 - 1e-12);
  CHECK(rmax <= 4.0 + 1e-12);
  CHECK(rmax > 3.9);
}

TEST_CASE("radical inverse in base 2") {
  CHECK(radical_inverse(1, 2) == 0.5);
  CHECK(radical_inverse(3, 2) == 0.75);
  CHECK(radical_inverse(1, 3) == doctest::Approx(1.0 / 3));
}

TEST_CASE("seeded generator is reproducible") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.uniform() == b.uniform());
}
