#include "curvepat/errors.hpp"
#include "curvepat/oscillatory.hpp"
#include "curvepat/quadrature.hpp"
#include "curvepat/sampling.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace curvepat;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// psi(|xi|) * int exp(2 pi i 2^k gamma_s(2^{-ell} u) . xi) tau(u) du, straight from the definition.
cplx reference_multiplier(const Curve& c, int k, int s, int ell, const Eigen::VectorXd& xi) {
  const auto& kit = bump_kit(c.n);
  const Curve cs = rescale_curve(c, s);
  auto ph = [&](double u) { return kTwoPi * std::ldexp(eval_curve(cs, std::ldexp(u, -ell)).dot(xi), k); };
  auto re = tanh_sinh([&](double u) { return std::cos(ph(u)) * kit.tau(u); }, 0.5, 2.0, 1e-13, 12);
  auto im = tanh_sinh([&](double u) { return std::sin(ph(u)) * kit.tau(u); }, 0.5, 2.0, 1e-13, 12);
  return kit.psi(xi.norm()) * cplx(re.value, im.value);
}

}  // namespace

TEST_CASE("the two phase routes agree") {
  auto c = make_curve({{{1, 2.0}, {3, 1.0}}, {{2, -1.0}}});
  Eigen::VectorXd xi(2);
  xi << 0.7, -1.9;
  for (int s : {0, 2, 4})
    for (int ell : {1, 3})
      for (double t : {0.6, 1.0, 1.8})
        CHECK(phase(c, s, ell, t, xi) == doctest::Approx(phase_rescaled(c, s, ell, t, xi)).epsilon(1e-12));
}

TEST_CASE("unit phase coefficients reproduce the phase polynomial") {
  auto c = make_curve({{{1, 1.0}}, {{2, 1.0}, {1, 0.5}}});
  Eigen::VectorXd xi(2);
  xi << 1.2, 0.4;
  const int k = 7, s = 2, ell = 3;
  auto theta = unit_phase_coeffs(c, k, s, ell, xi.data());
  const Curve cs = rescale_curve(c, s);
  for (double u : {0.5, 1.1, 2.0}) {
    double p = 0;
    for (std::size_t b = 0; b < theta.size(); ++b) p += theta[b] * std::pow(u, b + 1);
    CHECK(p == doctest::Approx(std::ldexp(eval_curve(cs, std::ldexp(u, -ell)).dot(xi), k)).epsilon(1e-12));
  }
}

TEST_CASE("multiplier matches direct quadrature") {
  auto c = make_curve({{{1, 1.0}}, {{2, 1.0}}});
  const auto& kit = bump_kit(2);
  for (auto [k, s, ell] : {std::tuple{4, 0, 1}, std::tuple{8, 0, 3}, std::tuple{9, 6, 3}}) {
    Eigen::VectorXd xi(2);
    xi << 1.3, -0.8;
    auto m = multiplier(c, k, s, ell, xi, kit);
    auto ref = reference_multiplier(c, k, s, ell, xi);
    CHECK(std::abs(m.value - ref) < 1e-8);
    CHECK(m.quad_error < 1e-8);
  }
}

TEST_CASE("multiplier vanishes off the shell and respects the lattice") {
  auto c = make_curve({{{1, 1.0}}, {{2, 1.0}}});
  Eigen::VectorXd xi(2);
  xi << 0.2, 0.1;
  CHECK(multiplier(c, 6, 0, 3, xi, bump_kit(2)).value == cplx(0.0));
  auto lat = ScaleLattice::with_gamma(3);
  MultiplierOptions opt;
  opt.lattice = &lat;
  xi << 1.0, 1.0;
  CHECK_THROWS_AS(multiplier(c, 6, 0, 2, xi, bump_kit(2), opt), PreconditionError);
  Eigen::VectorXd bad(3);
  bad << 1, 1, 1;
  CHECK_THROWS_AS(multiplier(c, 6, 0, 3, bad, bump_kit(2)), DimensionError);
}

TEST_CASE("zero phase integrates tau to one") {
  auto r = oscillatory_integral({0.0, 0.0}, bump_kit(1));
  CHECK(std::abs(r.value - cplx(1.0)) < 1e-9);
}

TEST_CASE("non-stationary bound dominates the integral") {
  const auto& kit = bump_kit(1);
  for (double a : {5.0, 20.0, 80.0}) {
    std::vector<double> theta{a, 0.1 * a};
    auto r = oscillatory_integral(theta, kit);
    CHECK(std::abs(r.value) <= nonstationary_bound(theta, kit) + r.error);
  }
  // stationary point at u = 1
  CHECK(std::isinf(nonstationary_bound({-20.0, 10.0}, kit)));
}

TEST_CASE("pigeonhole index") {
  Eigen::VectorXd xi(3);
  xi << 0.3, -1.5, 1.5;
  CHECK(pigeonhole_index(xi) == 1);
  xi << 0.01, 0.01, 0.01;
  CHECK_THROWS_AS(pigeonhole_index(xi), ShellError);
}

TEST_CASE("decay hypothesis") {
  CHECK_NOTHROW(check_decay_hypothesis(make_curve({{{1, 1.0}}, {{2, 1.0}}}), 6));
  auto dep = make_curve({{{1, 1.0}, {2, 1.0}}, {{2, 1.0}}});
  CHECK_NOTHROW(check_decay_hypothesis(dep, 0));
  CHECK_THROWS_AS(check_decay_hypothesis(dep, 6), HypothesisError);
}

TEST_CASE("small decay fit for the parabola") {
  auto c = make_curve({{{1, 1.0}}, {{2, 1.0}}});
  auto fit = decay_fit(c, 0, 3, 8, 16, 512, bump_kit(2));
  CHECK(fit.ks.size() == 9);
  CHECK(fit.verdict);
  CHECK(fit.slope < -0.4);
  CHECK_THROWS_AS(decay_fit(c, 0, 3, 8, 12, 512, bump_kit(2)), PreconditionError);
}

TEST_CASE("operator routes agree on a small periodic grid") {
  auto c = make_curve({{{1, 1.0}}, {{2, 1.0}}});
  const auto& kit = bump_kit(2);
  auto g = GridFunction::zeros({256, 256}, {0, 0}, {0.25, 0.25});
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    auto id = g.unflat(i);
    g.values(i) = std::cos(kTwoPi * (id[0] + id[1]) / 256.0) + 0.5 * std::sin(kTwoPi * (-id[0] + 2 * id[1]) / 256.0);
  }
  ApplyTOptions opt;
  opt.boundary = Boundary::Periodic;
  auto sp = apply_T(g, c, 0, 5, kit, TRoute::Spatial, opt);
  auto mu = apply_T(g, c, 0, 5, kit, TRoute::Multiplier, opt);
  // linear interpolation in the spatial route limits agreement on a coarse grid
  CHECK(l2_norm(subtract(sp.out, mu.out)) <= 1e-3 * l2_norm(mu.out));
  CHECK(sp.error_estimate < 1e-4);
  CHECK(l2_norm(mu.out) <= l2_norm(g) * (1 + 1e-12));
}

TEST_CASE("operator symbol at zero frequency is one") {
  auto c = make_curve({{{1, 1.0}}, {{2, 1.0}}});
  double eta[2] = {0.0, 0.0};
  auto r = operator_symbol(c, 0, 3, eta, bump_kit(2));
  CHECK(std::abs(r.value - cplx(1.0)) < 1e-9);
}
