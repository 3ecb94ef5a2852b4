#include <doctest.h>

#include <cmath>

#include "parcal/cantor.hpp"
#include "parcal/error.hpp"

using namespace parcal;

namespace {

// Neumaier summation; 12^5 equal terms lose ~1e-11 when added naively.
struct Sum {
  double s = 0.0, c = 0.0;
  void add(double v) {
    const double t = s + v;
    c += std::abs(s) >= std::abs(v) ? (s - t) + v : (v - t) + s;
    s = t;
  }
  double value() const { return s + c; }
};

}  // namespace

TEST_CASE("generation counts and sides") {
  CantorSpec spec;
  for (int k = 0; k <= 5; ++k) {
    const auto nodes = cantor_generation(spec, k);
    CHECK(nodes.size() == static_cast<std::size_t>(std::pow(12, k)));
    Sum sum;
    for (const auto& q : nodes) {
      CHECK(q.cube.side() == doctest::Approx(std::pow(12.0, -k / 3.0)).epsilon(1e-13));
      sum.add(std::pow(q.cube.side(), 3));
    }
    CHECK(std::abs(sum.value() - 1.0) <= 1e-12);
  }
  CHECK_THROWS_AS(cantor_generation(spec, spec.max_generation + 1), ConfigError);
}

TEST_CASE("children are disjoint and inside the parent") {
  const ParaCube unit = ParaCube::unit(2);
  const auto kids = cantor_children(unit);
  for (std::size_t a = 0; a < kids.size(); ++a) {
    CHECK(unit.contains_cube(kids[a], 1e-15));
    for (std::size_t b = a + 1; b < kids.size(); ++b) CHECK(dist_p(kids[a], kids[b]) > 0.0);
  }
  const auto counts = child_projection_counts(unit);
  CHECK(counts.spatial == 4);
  CHECK(counts.x1_t == 6);
  CHECK(counts.x2_t == 6);
}

TEST_CASE("separation ratios are generation independent") {
  CantorSpec spec;
  const SeparationStats s1 = separation_stats(spec, 1), s2 = separation_stats(spec, 2), s3 = separation_stats(spec, 3);
  CHECK(std::abs(s2.min_sibling_ratio - s1.min_sibling_ratio) <= 1e-12 * s1.min_sibling_ratio);
  CHECK(std::abs(s3.max_sibling_ratio - s1.max_sibling_ratio) <= 1e-12 * s1.max_sibling_ratio);
  CHECK(s1.min_sibling_ratio > 0.0);
  CHECK(std::abs(s2.min_pair_ratio - s1.min_pair_ratio) <= 1e-12 * s1.min_pair_ratio);
}

TEST_CASE("natural measure") {
  CantorSpec spec;
  for (int k = 0; k <= 5; ++k) CHECK(std::abs(cantor_natural_measure(spec, k).total_mass() - 1.0) <= 1e-12);
  const DiscreteMeasure cloud = cantor_cloud(1000, 4, 17);
  CHECK(cloud.size() == 1000);
  CHECK(std::abs(cloud.total_mass() - 1.0) <= 1e-12);
  const DiscreteMeasure again = cantor_cloud(1000, 4, 17);
  CHECK(again.point(512) == cloud.point(512));
}

TEST_CASE("corner points") {
  CHECK(corner_point(ParaCube::unit(2)) == ParaPoint({0.0, 0.0}, 1.0));
  const double lam = cantor_ratio();
  const auto kids = cantor_children(ParaCube::unit(2));
  const ParaPoint c = corner_point(kids[4]);
  CHECK(c.x(0) == 0.0);
  CHECK(c.x(1) == 0.0);
  CHECK(c.t() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(cantor_child_offsets()[4][2] == doctest::Approx(1.0 - lam * lam).epsilon(1e-15));
  const Dilation d(2.3);
  const ParaPoint a = corner_point(d(kids[9])), b = d(corner_point(kids[9]));
  CHECK(a.x(0) == doctest::Approx(b.x(0)).epsilon(1e-15));
  CHECK(a.t() == doctest::Approx(b.t()).epsilon(1e-15));
}
