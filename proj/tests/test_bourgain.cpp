#include "curvepat/bourgain.hpp"
#include "curvepat/errors.hpp"
#include "curvepat/generators.hpp"
#include "curvepat/sampling.hpp"

#include <doctest.h>

#include <cmath>

using namespace curvepat;

TEST_CASE("schedule on the odd lattice") {
  auto lat = ScaleLattice::with_gamma(1, 64);
  auto s = make_schedule(0.2, lat, 2.0, 9);
  CHECK(s.ells == std::vector<int>{3, 5, 9});
  CHECK_THROWS_AS(make_schedule(0.2, ScaleLattice::with_gamma(3), 2.0, 9), ScheduleError);
  CHECK_THROWS_AS(make_schedule(0.7, lat, 2.0, 9), PreconditionError);
  CHECK_THROWS_AS(make_schedule(0.2, lat, 1.0, 9), PreconditionError);
}

TEST_CASE("midpoint scales") {
  auto lat = ScaleLattice::with_gamma(1, 64);
  CHECK(midpoint_scale(lat, 3, 5) == 4);
  CHECK(midpoint_scale(lat, 5, 9) == 7);
  CHECK_THROWS_AS(midpoint_scale(lat, 3, 4), ScheduleError);
}

TEST_CASE("refinement cap grows with C_rho and shrinks with c") {
  const long long base = k_cap(0.5, 1.0, 0.2);
  CHECK(base == static_cast<long long>(std::ceil(8.0 / (0.25 * std::pow(0.2, 4)))) + 1);
  CHECK(k_cap(0.5, 2.0, 0.2) > base);
  CHECK(k_cap(1.0, 1.0, 0.2) < base);
  Schedule s = make_schedule(0.2, ScaleLattice::with_gamma(1, 64), 2.0, 9);
  finalize_schedule(s, 0.5, 1.0);
  CHECK(s.K_cap == base);
  CHECK(s.resolution_limited);
}

TEST_CASE("C_rho estimates") {
  const auto& kit = bump_kit(2);
  auto f = GridFunction::unit({128, 128});
  const std::vector<int> ells{1, 3, 5};
  const double an = analytic_C_rho(kit, ells);
  const double di = discrete_C_rho(kit, ells, f);
  CHECK(an > 0.0);
  CHECK(di > 0.0);
  CHECK(di == doctest::Approx(an).epsilon(0.1));
  CHECK(analytic_C_rho(kit, {3}) == 0.0);
}

TEST_CASE("telescope total against spatial mollification") {
  const auto& kit = bump_kit(1);
  auto f = random_density({256}, 0.4, 21);
  auto pad = GridFunction::zeros({1024}, {-1.5}, {2.5});
  for (int i = 0; i < 256; ++i) pad.values(384 + i) = f.values(i);
  auto a = mollify_direct(pad, kit, 1);
  auto b = mollify_direct(pad, kit, 3);
  const double direct = inner(subtract(a, b), subtract(a, b));
  auto audit = telescope_audit(f, kit, {1, 3});
  CHECK(audit.total == doctest::Approx(direct).epsilon(1e-6));
  CHECK(audit.f_l2_sq == doctest::Approx(inner(f, f)).epsilon(1e-12));
}

TEST_CASE("telescope audit passes and its split is exact") {
  auto f = random_density({128, 128}, 0.3, 5);
  auto a = telescope_audit(f, bump_kit(2), {2, 3, 5, 9});
  for (const auto& ch : a.checks) CHECK_MESSAGE(ch.ok, ch.name << ": " << ch.lhs << " > " << ch.rhs);
  CHECK(a.passed);
  CHECK(a.split_residual <= 1e-8 * a.total);
  CHECK(a.total <= a.C_rho_measured * a.f_l2_sq * (1 + 1e-12));
  CHECK_THROWS_AS(telescope_audit(f, bump_kit(2), {3, 3}), PreconditionError);
}

TEST_CASE("calibration of c") {
  std::vector<GridFunction> suite{random_density({128, 128}, 0.2, 1), random_density({128, 128}, 0.2, 2)};
  auto cal = measure_c(suite, bump_kit(2), 4);
  CHECK(cal.ratios.size() == 2);
  CHECK(cal.c == std::min(cal.ratios[0], cal.ratios[1]));
  CHECK_THROWS_AS(measure_c({}, bump_kit(2), 4), PreconditionError);
}

TEST_CASE("iteration on a random set terminates with a certificate") {
  const auto& kit = bump_kit(2);
  auto f = random_density({1024, 1024}, 0.25, 3);
  auto par = make_curve({{{1, 1.0}}, {{2, 1.0}}});
  auto sched = make_schedule(0.2, ScaleLattice::with_gamma(1, 64), 2.0, max_resolvable_ell(kit, f));
  IterationOptions opt;
  opt.c = measure_c({f}, kit, sched.ells.front()).c;
  auto tr = run_iteration(f, par, kit, sched, opt);
  for (const auto& ch : tr.checks) CHECK_MESSAGE(ch.ok, ch.name << ": " << ch.lhs << " > " << ch.rhs);
  CHECK(tr.passed);
  CHECK(tr.delta > 0.0);
  CHECK(tr.k0 >= 1);
  CHECK(tr.k0 <= tr.schedule.K_cap);
  CHECK(tr.increments <= tr.increment_step_bound);
}
