#include <doctest.h>

#include <cmath>
#include <sstream>

#include "parcal/cantor.hpp"
#include "parcal/error.hpp"
#include "parcal/kernels.hpp"
#include "parcal/removability.hpp"

using namespace parcal;

TEST_CASE("corner chain geometry") {
  CornerExperiment e;
  const ParaPoint z = e.corner();
  CHECK(z.x(0) == 0.0);
  CHECK(z.x(1) == 0.0);
  CHECK(z.t() == doctest::Approx(1.0).epsilon(1e-15));
  for (int h = e.k; h < e.k + 4; ++h) {
    const ParaCube q = e.level_cube(h), inner = e.level_cube(h + 1);
    CHECK(q.contains_cube(inner, 1e-15));
    CHECK(q.side() == doctest::Approx(std::pow(cantor_ratio(), h)).epsilon(1e-14));
    const ParaPoint c = corner_point(inner);
    CHECK(std::abs(c.t() - z.t()) <= 1e-15);
  }
}

TEST_CASE("kernel sign near the corner") {
  CornerExperiment e;
  const ParaPoint z = e.corner();
  CHECK(heat_kernel_grad1(z - ParaPoint({0.1, 0.2}, z.t() + 0.01)) == 0.0);
  CHECK(heat_kernel_grad1(z - ParaPoint({0.0, 0.2}, z.t() - 0.3)) == 0.0);
  const PositivityReport r = positivity_check(e, 5);
  CHECK(r.nonnegative);
  CHECK(r.min_value >= 0.0);
  CHECK_THROWS_AS(positivity_check(ParaPoint({0.5, 0.0}, 1.0), e, 5), ConfigError);
}

TEST_CASE("annulus contributions are level invariant") {
  CornerExperiment a;
  a.refine = 4;
  CornerExperiment b = a;
  b.k = 2;
  const double va = annulus_quadrature(a, 1).value, vb = annulus_quadrature(b, 2).value;
  CHECK(va > 0.0);
  CHECK(std::abs(va - vb) <= 1e-13 * va);
  CHECK(std::abs(annulus_quadrature(a, 3).value - va) <= 1e-13 * va);
}

TEST_CASE("corner sum is linear in the number of annuli") {
  CornerExperiment e;
  e.m = 4;
  const CornerTable t = corner_sum(e);
  REQUIRE(t.rows.size() == 4);
  CHECK(t.rows[0].S == t.annuli[0].value);
  CHECK(t.slope > 0.0);
  CHECK(t.relative_residual <= 1e-12);
  CHECK(t.increment_spread <= 1e-12);
  for (const auto& a : t.annuli) CHECK(a.error <= 0.5 * a.value);
  std::ostringstream csv;
  write_corner_csv(t, csv);
  CHECK(csv.str().rfind("m,S,increment,error_estimate\n", 0) == 0);
}

TEST_CASE("coarse quadrature raises RefineRequired") {
  CornerExperiment e;
  e.m = 2;
  e.refine = 2;
  e.max_refine = 3;
  e.theta = 0.5;
  CHECK_THROWS_AS(corner_sum(e), RefineRequired);
  try {
    corner_sum(e);
  } catch (const RefineRequired& err) {
    CHECK(err.best_estimate() > 0.0);
    CHECK(err.error_estimate() > 0.5 * err.best_estimate());
  }
}

TEST_CASE("BMO spot-check of a single smeared cube") {
  BmoSpotSpec s;
  s.k = 0;
  s.nx = 5;
  s.nt = 17;
  const BmoSpotResult r = bmo_spotcheck(s);
  CHECK(std::isfinite(r.bmo.value));
  CHECK(std::isfinite(r.lip.value));
  CHECK(std::isfinite(r.lip_W.value));
  CHECK(r.probes == 5u * 5u * 17u);
  BmoSpotSpec bad = s;
  bad.shift_x1 = 0.0;
  bad.shift_x2 = 0.0;
  CHECK_THROWS_AS(bmo_spotcheck(bad), DomainError);
}
