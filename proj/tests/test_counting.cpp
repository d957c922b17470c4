#include "curvepat/counting.hpp"
#include "curvepat/errors.hpp"
#include "curvepat/generators.hpp"
#include "curvepat/sampling.hpp"

#include <doctest.h>

#include <cmath>

using namespace curvepat;

namespace {

// Multilinear interpolation of cell-centred samples, zero outside the box.
double interp1(const GridFunction& f, double x) {
  const double u = x / f.cell(0) - 0.5;
  const int i = static_cast<int>(std::floor(u));
  const double a = u - i;
  double s = 0;
  if (i >= 0 && i < f.dims[0]) s += (1 - a) * f.values(i);
  if (i + 1 >= 0 && i + 1 < f.dims[0]) s += a * f.values(i + 1);
  return s;
}

}  // namespace

TEST_CASE("checks compare with tolerance") {
  CHECK(make_check("a", 1.0, 1.0, 0.0).ok);
  CHECK(make_check("a", 1.0 + 1e-12, 1.0, 1e-9).ok);
  CHECK_FALSE(make_check("a", 2.0, 1.0, 1e-9).ok);
  CHECK_FALSE(all_ok({make_check("a", 0, 1, 0), make_check("b", 2, 1, 0)}));
}

TEST_CASE("two-point form on full boxes") {
  auto line = make_curve({{{1, 1.0}}});
  auto f1 = GridFunction::unit({512});
  f1.values.setOnes();
  CHECK(two_point_form(f1, line, 0, TWindow::unit()).value == doctest::Approx(0.5).epsilon(1e-6));

  auto par = make_curve({{{1, 1.0}}, {{2, 1.0}}});
  auto f2 = GridFunction::unit({128, 128});
  f2.values.setOnes();
  auto r = two_point_form(f2, par, 0, TWindow::unit());
  CHECK(std::abs(r.value - 5.0 / 12) < 5e-3);
  CHECK(r.error < 1e-3);
}

TEST_CASE("two-point form against a brute-force sum in one dimension") {
  auto line = make_curve({{{1, 1.0}, {2, 0.5}}});
  auto f = random_density({64}, 0.5, 8);
  const int N = 64;
  auto r = two_point_form(f, line, 0, TWindow::unit(), N);
  double bf = 0;
  for (int k = 0; k <= N; ++k) {
    const double t = double(k) / N, w = (k == 0 || k == N) ? 0.5 : 1.0;
    const double g = t + 0.5 * t * t;
    double inner_sum = 0;
    for (int i = 0; i < 64; ++i) inner_sum += f.values(i) * interp1(f, f.center(0, i) + g);
    bf += w * inner_sum * f.cell(0);
  }
  bf /= N;
  CHECK(r.value == doctest::Approx(bf).epsilon(1e-10));
}

TEST_CASE("tau-weighted window of a full box") {
  // int_0^1 (1 - g(t)) tau_ell(t) dt for g = t, computed by direct quadrature
  auto line = make_curve({{{1, 1.0}}});
  auto f = GridFunction::unit({2048});
  f.values.setOnes();
  const auto& kit = bump_kit(1);
  const int ell = 3;
  double ref = 0;
  const int M = 20000;
  for (int j = 1; j < M; ++j) {
    const double t = std::ldexp(0.5 + 1.5 * j / M, -ell);
    ref += (1 - t) * tau_scaled(kit, ell, t);
  }
  ref *= std::ldexp(1.5 / M, -ell);
  CHECK(two_point_form(f, line, 0, TWindow::scale(ell)).value == doctest::Approx(ref).epsilon(1e-6));
}

TEST_CASE("corner form on the full square") {
  auto P1 = make_polynomial({{1, 1.0}}), P2 = make_polynomial({{2, 1.0}});
  auto f = GridFunction::unit({128, 128});
  f.values.setOnes();
  CHECK(std::abs(corner_form(f, P1, P2, 0, TWindow::unit()).value - 5.0 / 12) < 5e-3);
}

TEST_CASE("lower bound lemma on a random set") {
  auto f = random_density({128, 128}, 0.3, 4);
  auto lb = lower_bound_lemma(f, bump_kit(2), 4);
  CHECK(lb.rhs == doctest::Approx(integral(f) * integral(f)));
  CHECK(lb.ratio >= 0.5);
}

TEST_CASE("single Bourgain step passes its audit") {
  auto par = make_curve({{{1, 1.0}}, {{2, 1.0}}});
  auto f = random_density({256, 256}, 0.3, 7);
  auto a = bourgain_step(f, par, bump_kit(2), 2, 4, 7);
  for (const auto& ch : a.checks) CHECK_MESSAGE(ch.ok, ch.name << ": " << ch.lhs << " > " << ch.rhs);
  CHECK(a.passed);
  CHECK(a.I1 + a.I2 + a.I3 == doctest::Approx(a.smoothed).epsilon(1e-8));
}

TEST_CASE("substitution reproduces tau for a linear polynomial") {
  auto sub = substitute(make_polynomial({{1, -1.0}}), 3);
  CHECK_FALSE(sub.reflected);
  CHECK(sub.mass == doctest::Approx(1.0).epsilon(1e-6));
  const auto& kit = bump_kit(1);
  double worst = 0;
  for (std::size_t i = 0; i < sub.omega.size(); ++i)
    worst = std::max(worst, std::abs(sub.weight[i] - tau_scaled(kit, 3, sub.omega[i])));
  CHECK(worst < 1e-6 * std::ldexp(kit.tau_max, 3));
  CHECK(substitute(make_polynomial({{1, 1.0}}), 3).reflected);
}

TEST_CASE("corner step needs increasing degrees") {
  auto P1 = make_polynomial({{2, 1.0}}), P2 = make_polynomial({{1, 1.0}});
  auto f = random_density({64, 64}, 0.3, 1);
  CHECK_THROWS_AS(corner_step(f, P1, P2, 0, 1, 3, 5), HypothesisError);
}
