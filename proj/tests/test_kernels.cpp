#include <doctest.h>

#include <cmath>
#include <numbers>

#include "parcal/error.hpp"
#include "parcal/geometry.hpp"
#include "parcal/kernels.hpp"
#include "parcal/rng.hpp"

using namespace parcal;

namespace {

double rel(double got, double want) { return std::abs(got - want) / std::abs(want); }

// Central differences of W, step scaled to the coordinate.
SpatialVector fd_grad(const ParaPoint& p) {
  SpatialVector g(p.dim());
  for (int j = 0; j < p.dim(); ++j) {
    const double h = 1e-5 * std::max(1.0, std::abs(p.x(j)));
    ParaPoint a = p, b = p;
    a.x(j) += h;
    b.x(j) -= h;
    g[j] = (heat_kernel(a) - heat_kernel(b)) / (2.0 * h);
  }
  return g;
}

double fd_dt(const ParaPoint& p) {
  const double h = 1e-5 * p.t();
  ParaPoint a = p, b = p;
  a.t() += h;
  b.t() -= h;
  return (heat_kernel(a) - heat_kernel(b)) / (2.0 * h);
}

}  // namespace

TEST_CASE("parabolic distance examples") {
  CHECK(dist_p(ParaPoint({1.0, 0.0}, 0.0), ParaPoint({0.0, 0.0}, 0.0)) == 1.0);
  CHECK(dist_p(ParaPoint({0.0, 0.0}, 4.0), ParaPoint({0.0, 0.0}, 0.0)) == 2.0);
  CHECK(dist_p(ParaPoint({3.0, 0.0}, 0.0), ParaPoint({0.0, 0.0}, 4.0)) == 3.0);
  CHECK_THROWS_AS(dist_p(ParaPoint({1.0}, 0.0), ParaPoint({1.0, 0.0}, 0.0)), DimensionMismatch);
}

TEST_CASE("dilation and dyadic lattice") {
  CHECK(Dilation(2.0)(ParaPoint({1.0, 1.0}, 1.0)) == ParaPoint({2.0, 2.0}, 4.0));
  const ParaPoint p({0.3, -0.7}, 0.2);
  CHECK(Dilation(1.0)(p) == p);
  const DyadicCubeId o = dyadic_cube_at(ParaPoint::origin(2), 1);
  CHECK(o.i[0] == 0);
  CHECK(o.i_time == 0);
  CHECK(dyadic_geometry(o).side() == 0.5);
  const DyadicCubeId id = dyadic_cube_at(ParaPoint({0.6, 0.1}, 0.3), 1);
  CHECK(id.i[0] == 1);
  CHECK(id.i[1] == 0);
  CHECK(id.i_time == 1);
  SplitMix64 rng(3);
  for (int s = 0; s < 200; ++s) {
    const ParaPoint q({rng.uniform() * 4 - 2, rng.uniform() * 4 - 2}, rng.uniform() * 3 - 1);
    for (int k = 0; k < 6; ++k) {
      CHECK(dyadic_geometry(dyadic_cube_at(q, k)).contains_cube(dyadic_geometry(dyadic_cube_at(q, k + 1))));
    }
  }
}

TEST_CASE("heat kernel values") {
  CHECK(heat_kernel(ParaPoint({1.0, 1.0}, -1.0)) == 0.0);
  CHECK(heat_kernel(ParaPoint({0.0, 0.0}, 0.5)) == doctest::Approx(1.0 / (2.0 * std::numbers::pi)).epsilon(1e-15));
  // e^{-1} / (4 pi), 30-digit evaluation.
  CHECK(rel(heat_kernel(ParaPoint({2.0, 0.0}, 1.0)), 0.029274915762159580345) < 1e-14);
  CHECK_THROWS_AS(heat_kernel(ParaPoint::origin(2)), DomainError);
  const ParaPoint p({0.4, -1.3}, 0.6);
  const double c0 = 1.0 / (8.0 * std::numbers::pi);
  CHECK(rel(heat_kernel_grad1(p), -c0 * 0.4 / (0.36) * std::exp(-(0.16 + 1.69) / 2.4)) < 1e-14);
}

TEST_CASE("gradient and time derivative against finite differences") {
  CHECK(rel(heat_kernel_grad(ParaPoint({1.0, 0.5}, 0.7))[0], fd_grad(ParaPoint({1.0, 0.5}, 0.7))[0]) < 1e-6);
  CHECK(rel(heat_kernel_dt(ParaPoint({1.0, 1.0}, 0.9)), fd_dt(ParaPoint({1.0, 1.0}, 0.9))) < 1e-6);
  SplitMix64 rng(11);
  for (int s = 0; s < 300; ++s) {
    const ParaPoint p({rng.uniform() * 2 - 1, rng.uniform() * 2 - 1}, 0.2 + rng.uniform());
    const SpatialVector g = heat_kernel_grad(p), f = fd_grad(p);
    CHECK((g - f).norm() <= 1e-6 * g.norm() + 1e-12);
    CHECK(std::abs(heat_kernel_dt(p) - fd_dt(p)) <= 1e-6 * std::abs(heat_kernel_dt(p)) + 1e-10);
  }
}

TEST_CASE("homogeneity under parabolic dilations") {
  SplitMix64 rng(5);
  for (int s = 0; s < 200; ++s) {
    const ParaPoint p({rng.uniform() * 2 - 1, rng.uniform() * 2 - 1}, 0.05 + rng.uniform());
    const double lam = std::exp(rng.uniform() * 4 - 2);
    const ParaPoint q = Dilation(lam)(p);
    CHECK(rel(heat_kernel(q), heat_kernel(p) / (lam * lam)) < 1e-12);
    CHECK(rel(heat_kernel_grad(q)[0], heat_kernel_grad(p)[0] / (lam * lam * lam)) < 1e-12);
    CHECK(rel(heat_kernel_dt(q), heat_kernel_dt(p) / std::pow(lam, 4)) < 1e-12);
  }
}

TEST_CASE("half derivative of cos(omega t)") {
  for (double omega : {1.0, 4.0, 25.0}) {
    for (double t : {0.0, 0.3, 1.1}) {
      HalfDerivativeInput in;
      in.f = [omega](double s) { return std::cos(omega * s); };
      in.t = t;
      in.tail_bound = [omega](double r) { return 4.0 / (omega * std::pow(r, 1.5)); };
      in.abs_floor = 1e-9;
      const double want = -2.0 * std::sqrt(2.0 * std::numbers::pi * omega) * std::cos(omega * t);
      // The integrand does not decay, so the quadrature is asked for 1e-6.
      QuadratureConfig q;
      q.rel_tol = 1e-6;
      const QuadResult r = half_time_derivative(in, q);
      CHECK(std::abs(r.value - want) <= 1e-4 * std::abs(want) + 1e-8);
    }
  }
}

TEST_CASE("half derivative of W against high-precision quadrature") {
  // 30-digit mpmath evaluations of the defining integral.
  struct Case {
    ParaPoint p;
    double value;
  };
  const Case cases[] = {{ParaPoint({1.0, 0.0}, 0.5), -0.50765952873451301631},
                        {ParaPoint({1.0, 0.0}, -1.0), 0.072323937559888408368},
                        {ParaPoint({0.5, 0.3}, 2.0), -0.033287776710548872284},
                        {ParaPoint({1.0, 0.0}, 0.25), -0.95244223959405135213}};
  for (const Case& c : cases) {
    const QuadResult r = heat_kernel_half_dt(c.p);
    CHECK(rel(r.value, c.value) < 1e-7);
    CHECK(r.error <= 1e-7 * std::abs(r.value));
  }
  CHECK_THROWS_AS(heat_kernel_half_dt(ParaPoint({0.0, 0.0}, 1.0)), DomainError);
}

TEST_CASE("half derivative homogeneity") {
  const ParaPoint p({0.7, 0.2}, 0.3);
  const double base = heat_kernel_half_dt(p).value;
  for (double lam : {0.1, 2.0, 30.0}) {
    // Rounding of the normalized point can change the adaptive path.
    CHECK(rel(heat_kernel_half_dt(Dilation(lam)(p)).value, base / (lam * lam * lam)) < 1e-10);
  }
}

TEST_CASE("envelope ratios") {
  SamplerSpec spec;
  spec.samples = 2000;
  const auto sample = log_spaced_sample(spec);
  for (Envelope e : all_envelopes()) {
    const BoundReport r = verify_bounds(e, sample);
    CHECK(std::isfinite(r.ratio));
    CHECK(r.ratio > 0.0);
    // Exact homogeneity makes the ratio invariant under dilation of the sample.
    std::vector<ParaPoint> dilated;
    for (const auto& p : sample) dilated.push_back(Dilation(7.0)(p));
    CHECK(rel(verify_bounds(e, dilated).ratio, r.ratio) < 1e-9);
  }
  const BoundReport past = verify_bounds(Envelope::Gradient, std::vector<ParaPoint>{ParaPoint({1.0, 1.0}, -2.0)});
  CHECK(past.ratio == 0.0);
}

TEST_CASE("regularity ratio") {
  const ParaPoint a({0.8, -0.1}, 0.5);
  CHECK(regularity_ratio(a, a) == 0.0);
  const ParaPoint b({0.85, -0.05}, 0.52);
  const double r = regularity_ratio(a, b);
  CHECK(r > 0.0);
  CHECK(rel(regularity_ratio(Dilation(3.0)(a), Dilation(3.0)(b)), r) < 1e-12);
  CHECK_THROWS_AS(regularity_ratio(a, ParaPoint({2.0, 0.0}, 0.0)), ConfigError);
}
