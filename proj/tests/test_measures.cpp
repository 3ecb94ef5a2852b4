#include <doctest.h>

#include <cmath>
#include <sstream>

#include "parcal/cantor.hpp"
#include "parcal/error.hpp"
#include "parcal/grid.hpp"
#include "parcal/kernels.hpp"
#include "parcal/measure.hpp"
#include "parcal/potential.hpp"
#include "parcal/rng.hpp"

using namespace parcal;

namespace {

DiscreteMeasure random_measure(std::size_t count, std::uint64_t seed) {
  SplitMix64 rng(seed);
  DiscreteMeasure mu;
  for (std::size_t i = 0; i < count; ++i) {
    mu.add(ParaPoint({rng.uniform(), rng.uniform()}, rng.uniform()), 0.1 + rng.uniform());
  }
  return mu;
}

}  // namespace

TEST_CASE("growth of a single atom") {
  DiscreteMeasure mu;
  mu.add(ParaPoint({0.2, 0.1}, 0.0), 1.0);
  BallFamily fam;
  fam.radii = {0.25, 0.5, 1.0};
  const GrowthReport r = growth_constant(mu, fam);
  CHECK(r.ratio == doctest::Approx(64.0).epsilon(1e-15));
  CHECK(r.witness_radius == 0.25);
  const DiscreteMeasure pushed = mu.pushforward(Dilation(3.0), 27.0);
  BallFamily scaled;
  scaled.radii = {0.75, 1.5, 3.0};
  CHECK(growth_constant(pushed, scaled).ratio == doctest::Approx(64.0).epsilon(1e-14));
  DiscreteMeasure sgn(2, true);
  sgn.add(ParaPoint({0.0, 0.0}, 0.0), -1.0);
  CHECK_THROWS_AS(growth_constant(sgn), ConfigError);
}

TEST_CASE("Cantor growth constant stabilizes across generations") {
  CantorSpec spec;
  double prev = 0.0;
  for (int k = 3; k <= 5; ++k) {
    BallFamily fam;
    fam.max_centers = 400;
    const double g = growth_constant(cantor_natural_measure(spec, k), fam).ratio;
    CHECK(std::isfinite(g));
    if (k > 3) CHECK(std::abs(g - prev) <= 0.25 * prev);
    prev = g;
  }
}

TEST_CASE("direct potentials") {
  DiscreteMeasure unit;
  unit.add(ParaPoint::origin(2), 1.0);
  const ParaPoint p({1.0, 0.0}, 1.0);
  const SpatialVector k = heat_kernel_grad(p);
  CHECK(potential_T(unit, p)[0] == k[0]);
  const SpatialVector adj = potential_T_adjoint(unit, ParaPoint({-1.0, 0.0}, -1.0));
  CHECK(adj[0] == k[0]);
  CHECK_THROWS_AS(potential_T(unit, ParaPoint::origin(2)), DiagonalError);

  DiscreteMeasure two;
  two.add(ParaPoint::origin(2), 1.0);
  two.add(ParaPoint({1.0, 0.0}, -1.0), 2.0);
  const SpatialVector far = heat_kernel_grad(ParaPoint({-1.0, 0.0}, 1.0));
  const SpatialVector got = potential_T_eps(two, ParaPoint::origin(2), 0.5);
  CHECK(got[0] == doctest::Approx(2.0 * far[0]).epsilon(1e-15));
  CHECK(potential_T_eps(two, ParaPoint({5.0, 5.0}, 3.0), 100.0).norm() == 0.0);
}

TEST_CASE("maximal truncation grows with the grid") {
  const DiscreteMeasure mu = random_measure(50, 2);
  const ParaPoint p({0.5, 0.5}, 1.3);
  const double coarse = maximal_T_star(mu, p, {0.1, 0.4});
  const double fine = maximal_T_star(mu, p, {0.05, 0.1, 0.2, 0.4, 0.8});
  CHECK(fine >= coarse);
}

TEST_CASE("linearity and scaling covariance of the potential") {
  const DiscreteMeasure a = random_measure(40, 7), b = random_measure(30, 8);
  const ParaPoint p({0.3, 0.9}, 1.7);
  const SpatialVector sum = potential_T(a.joined(b), p);
  SpatialVector parts = potential_T(a, p);
  parts += potential_T(b, p);
  CHECK((sum - parts).norm() <= 1e-14 * sum.norm());
  SpatialVector twice = potential_T(a, p);
  twice *= 2.5;
  CHECK((potential_T(a.scaled(2.5), p) - twice).norm() <= 1e-14 * twice.norm());
  const double lam = 1.9;
  const DiscreteMeasure pushed = a.pushforward(Dilation(lam), lam * lam * lam);
  const SpatialVector scaled = potential_T(pushed, Dilation(lam)(p));
  CHECK((scaled - potential_T(a, p)).norm() <= 1e-12 * scaled.norm());
}

TEST_CASE("treecode matches direct summation") {
  const DiscreteMeasure mu = cantor_cloud(20000, 7, 99);
  TreecodeConfig cfg;
  cfg.threads = 1;
  const TreecodeEvaluator ev(mu, cfg);
  SplitMix64 rng(4);
  std::vector<ParaPoint> probes;
  for (int i = 0; i < 25; ++i) probes.emplace_back(ParaPoint({rng.uniform(), rng.uniform()}, 1.0 + 0.2 * rng.uniform()));
  probes.emplace_back(ParaPoint({0.5, 0.5}, 0.5));
  for (bool adjoint : {false, true}) {
    const auto fast = ev.evaluate_many(probes, adjoint);
    for (std::size_t i = 0; i < probes.size(); ++i) {
      const SpatialVector d = adjoint ? potential_T_adjoint(mu, probes[i]) : potential_T(mu, probes[i]);
      CHECK((fast[i].value - d).norm() <= 1e-8 * d.norm() + 1e-300);
    }
  }
  TreecodeConfig centroid = cfg;
  centroid.order = 0;
  const TreecodeEvaluator ev0(mu, centroid);
  const ParaPoint q({0.4, 0.6}, 1.5);
  const TreecodeValue v = ev0.evaluate(q);
  CHECK((v.value - potential_T(mu, q)).norm() <= v.error_bound + 1e-15);
}

TEST_CASE("treecode result does not depend on the thread count") {
  const DiscreteMeasure mu = cantor_cloud(5000, 6, 1);
  std::vector<ParaPoint> probes;
  SplitMix64 rng(9);
  for (int i = 0; i < 40; ++i) probes.emplace_back(ParaPoint({rng.uniform(), rng.uniform()}, 1.05 * rng.uniform()));
  TreecodeConfig one, four;
  one.threads = 1;
  four.threads = 4;
  const auto a = TreecodeEvaluator(mu, one).evaluate_many(probes);
  const auto b = TreecodeEvaluator(mu, four).evaluate_many(probes);
  for (std::size_t i = 0; i < probes.size(); ++i) {
    CHECK(a[i].value[0] == b[i].value[0]);
    CHECK(a[i].value[1] == b[i].value[1]);
  }
}

TEST_CASE("half derivative potential") {
  DiscreteMeasure empty;
  const ParaPoint p({0.7, 0.1}, 0.4);
  CHECK(half_dt_potential(empty, p).value == 0.0);
  DiscreteMeasure unit;
  unit.add(ParaPoint({0.2, 0.1}, 0.1), 1.0);
  CHECK(half_dt_potential(unit, p).value == doctest::Approx(heat_kernel_half_dt(p - unit.point(0)).value).epsilon(1e-12));
  CHECK_THROWS_AS(half_dt_potential(unit, ParaPoint({0.2, 0.1}, 3.0)), DomainError);
  const HalfDerivativeProfile& g = cached_half_profile(2);
  CHECK(g.max_check_error() < 1e-6);
  const DiscreteMeasure mu = cantor_natural_measure(CantorSpec{}, 2);
  const ParaPoint q({0.517, 0.033}, 0.61);
  const double slow = half_dt_potential(mu, q).value;
  CHECK(half_dt_potential_fast(mu, q, g) == doctest::Approx(slow).epsilon(1e-6));
}

TEST_CASE("measure CSV round trip") {
  const DiscreteMeasure mu = random_measure(20, 3);
  std::stringstream s;
  write_measure_csv(mu, s);
  const DiscreteMeasure back = read_measure_csv(s);
  REQUIRE(back.size() == mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) {
    CHECK(back.point(i) == mu.point(i));
    CHECK(back.weight(i) == mu.weight(i));
  }
  const DiscreteMeasure j = measure_from_json(measure_to_json(mu));
  CHECK(j.point(7) == mu.point(7));
}

TEST_CASE("BMO and Lip seminorms") {
  const GridSpec g = make_grid(2, ParaPoint({-3.5, -3.5}, 0.0), 1.0, 8, 16);
  CHECK(bmo_p_norm(GridFunction::sample(g, [](const ParaPoint&) { return 2.0; })).value == 0.0);
  // Indicator of x1 > 0: the balanced cube straddling the interface has
  // mean oscillation exactly 1/2, the largest value a 0/1 function allows.
  const GridFunction ind = GridFunction::sample(g, [](const ParaPoint& p) { return p.x(0) > 0.0 ? 1.0 : 0.0; });
  CHECK(bmo_p_norm(ind).value == 0.5);
  const GridSpec pair = make_grid(1, ParaPoint::origin(1), 1.0, 1, 2);
  CHECK(lip_half_t_seminorm(GridFunction::sample(pair, [](const ParaPoint& p) { return std::sqrt(p.t()); })).value ==
        1.0);
  SplitMix64 rng(12);
  const GridSpec small = make_grid(2, ParaPoint::origin(2), 0.5, 4, 16);
  for (int trial = 0; trial < 5; ++trial) {
    GridFunction a(small), b(small), c(small);
    for (std::size_t i = 0; i < a.values().size(); ++i) {
      a.values()[i] = rng.normal();
      b.values()[i] = rng.normal();
      c.values()[i] = a.values()[i] + b.values()[i];
    }
    CHECK(bmo_p_norm(c).value <= bmo_p_norm(a).value + bmo_p_norm(b).value + 1e-12);
    CHECK(lip_half_t_seminorm(c).value <= lip_half_t_seminorm(a).value + lip_half_t_seminorm(b).value + 1e-12);
    GridFunction shifted = a;
    for (double& v : shifted.values()) v += 11.0;
    CHECK(bmo_p_norm(shifted).value == doctest::Approx(bmo_p_norm(a).value).epsilon(1e-12));
  }
}
