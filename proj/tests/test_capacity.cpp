#include <doctest.h>

#include <cmath>

#include "parcal/cantor.hpp"
#include "parcal/capacity.hpp"
#include "parcal/error.hpp"
#include "parcal/kernels.hpp"
#include "parcal/lp.hpp"

using namespace parcal;

namespace {

CapacityProblem one_atom(double growth_side, bool adjoint) {
  CapacityProblem prob;
  prob.support = {ParaPoint::origin(2)};
  prob.collocation = {ParaPoint({1.0, 0.0}, 1.0)};
  const double h = growth_side / 2.0;
  prob.growth_cubes = {ParaCube(ParaPoint({-h, -h}, -h * h), growth_side)};
  prob.include_adjoint = adjoint;
  prob.clearance = 0.5;
  return prob;
}

}  // namespace

TEST_CASE("dense simplex on a hand-solved LP") {
  // max 3x + 2y, x + y <= 4, x + 3y <= 6, x <= 3  ->  x = 3, y = 1, value 11.
  DenseSimplex lp({3.0, 2.0});
  lp.add_row({1.0, 1.0}, 4.0);
  lp.add_row({1.0, 3.0}, 6.0);
  lp.add_row({1.0, 0.0}, 3.0);
  REQUIRE(lp.solve() == LpStatus::Optimal);
  CHECK(lp.objective() == doctest::Approx(11.0).epsilon(1e-14));
  // A row added after the solve is handled by the dual simplex.
  lp.add_row({1.0, 0.0}, 2.0);
  REQUIRE(lp.solve() == LpStatus::Optimal);
  // x = 2, y = 4/3.
  CHECK(lp.objective() == doctest::Approx(26.0 / 3.0).epsilon(1e-14));
  DenseSimplex open({1.0});
  CHECK(open.solve() == LpStatus::Unbounded);
}

TEST_CASE("single atom capacity is solved by hand") {
  const double k1 = std::abs(heat_kernel_grad(ParaPoint({1.0, 0.0}, 1.0))[0]);
  CHECK(estimate_S1(one_atom(10.0, false)).objective == doctest::Approx(1.0 / k1).epsilon(1e-10));
  // Growth cap binding: side 2 gives cap 8 < 1/|K_1| = 32.27.
  CHECK(estimate_S1(one_atom(2.0, false)).objective == doctest::Approx(8.0).epsilon(1e-12));
  CHECK(estimate_tilde_gamma_plus(one_atom(10.0, true)).objective == doctest::Approx(1.0 / k1).epsilon(1e-10));
}

TEST_CASE("adjoint constraints lower the optimum") {
  for (PlaneKind kind : {PlaneKind::Graph, PlaneKind::Horizontal}) {
    PatchSpec ps;
    ps.kind = kind;
    ps.level = 2;
    const CapacityProblem prob = plane_patch_problem(ps);
    const CapacitySolution s1 = estimate_S1(prob), g = estimate_tilde_gamma_plus(prob);
    CHECK(s1.status == "optimal");
    CHECK(g.objective <= s1.objective * (1.0 + 1e-12));
    CHECK(s1.max_residual <= 1e-9);
    for (double w : s1.weights) CHECK(w >= 0.0);
  }
}

TEST_CASE("capacity scales like the parabolic volume") {
  PatchSpec ps;
  ps.level = 2;
  const CapacityProblem prob = plane_patch_problem(ps);
  const double base = estimate_S1(prob).objective;
  for (double lam : {0.5, 3.0}) {
    const double scaled = estimate_S1(prob.dilated(Dilation(lam))).objective;
    CHECK(std::abs(scaled - lam * lam * lam * base) <= 1e-10 * lam * lam * lam * base);
  }
}

TEST_CASE("problem validation") {
  CapacityProblem prob = one_atom(10.0, false);
  prob.collocation.push_back(ParaPoint::origin(2));
  CHECK_THROWS_AS(estimate_S1(prob), DiagonalError);
  PatchSpec ps;
  ps.level = 5;
  CHECK_THROWS_AS(plane_patch_problem(ps), ResourceError);
}

TEST_CASE("Frostman content") {
  CHECK(frostman_content_lower(ContentProblem{}).value == 0.0);
  std::vector<ParaPoint> pts;
  for (const auto& n : cantor_generation(CantorSpec{}, 2)) pts.push_back(n.cube.center());
  for (int depth : {1, 2, 3}) {
    ContentProblem prob;
    prob.targets = covering_cubes(pts, 3);
    prob.depth = depth;
    CHECK(frostman_content_lower(prob).value ==
          doctest::Approx(frostman_content_lower_simplex(prob).value).epsilon(1e-10));
  }
}

TEST_CASE("cover content") {
  const std::vector<ParaCube> unit{ParaCube::unit(2)};
  for (int k = 0; k <= 3; ++k) CHECK(cover_content_upper(unit, k) == doctest::Approx(std::ldexp(1.0, k)));
  CHECK(best_cover_content(unit, 0, 3) == doctest::Approx(1.0));
}

TEST_CASE("box dimensions") {
  std::vector<ParaPoint> cube, plane;
  for (int c = 0; c < 64; ++c) {
    for (int b = 0; b < 8; ++b) {
      for (int a = 0; a < 8; ++a) cube.emplace_back(ParaPoint({(a + 0.5) / 8, (b + 0.5) / 8}, (c + 0.5) / 64));
    }
  }
  for (int b = 0; b < 64; ++b) {
    for (int a = 0; a < 64; ++a) plane.emplace_back(ParaPoint({(a + 0.5) / 64, (b + 0.5) / 64}, 0.0));
  }
  CHECK(box_dimension_estimate(cube, 1, 3).slope == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(box_dimension_estimate(plane, 1, 6).slope == doctest::Approx(2.0).epsilon(1e-12));
  CHECK_THROWS_AS(box_dimension_estimate(plane, 1, 2), ConfigError);
}
