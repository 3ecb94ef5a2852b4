#include "parcal/removability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "parallel.hpp"
#include "parcal/cantor.hpp"
#include "parcal/error.hpp"
#include "parcal/measure.hpp"
#include "parcal/potential.hpp"

namespace parcal {

void CornerExperiment::validate() const {
  if (k < 0) throw ConfigError("base generation must be nonnegative");
  if (m < 1) throw ConfigError("number of annuli must be at least 1");
  if (refine < 2) throw ConfigError("refinement depth must be at least 2");
  if (max_refine < refine) throw ConfigError("max_refine must be at least refine");
  if (k + m + max_refine > kCantorMaxDepth + 8) throw ResourceError("corner experiment too deep");
  if (!(theta > 0.0) || theta > 0.5) throw ConfigError("theta must lie in (0, 1/2]");
  if (!base_path.empty() && static_cast<int>(base_path.size()) != k) {
    throw ConfigError("base path length must equal the base generation");
  }
  for (int c : base_path) {
    if (c < 0 || c >= kCantorBranching) throw ConfigError("base path child index out of range");
  }
}

ParaCube CornerExperiment::base_cube() const {
  ParaCube q = ParaCube::unit(2);
  for (int g = 0; g < k; ++g) {
    const int c = base_path.empty() ? kCornerChild : base_path[static_cast<std::size_t>(g)];
    q = cantor_children(q)[static_cast<std::size_t>(c)];
  }
  return q;
}

ParaPoint CornerExperiment::corner() const { return corner_point(base_cube()); }

ParaCube CornerExperiment::level_cube(int h) const {
  if (h < k) throw ConfigError("annulus level below the base generation");
  ParaCube q = base_cube();
  for (int g = k; g < h; ++g) q = cantor_children(q)[kCornerChild];
  return q;
}

namespace {

void check_corner(const ParaPoint& zbar, const CornerExperiment& exp) {
  const ParaPoint c = exp.corner();
  if (zbar.dim() != c.dim()) throw DimensionMismatch("corner of the wrong dimension");
  const double tol = 1e-14 * std::max(1.0, norm_p(c));
  if (dist_p(zbar, c) > tol) throw ConfigError("point is not the upper-left corner of the base cube");
}

}  // namespace

PositivityReport positivity_check(const ParaPoint& zbar, const CornerExperiment& exp, int samples_per_axis) {
  exp.validate();
  check_corner(zbar, exp);
  if (samples_per_axis < 2) throw ConfigError("positivity scan needs at least 2 samples per axis");
  PositivityReport rep;
  rep.min_value = std::numeric_limits<double>::infinity();
  const int s = samples_per_axis;
  for (int h = exp.k; h < exp.k + exp.m; ++h) {
    const auto kids = cantor_children(exp.level_cube(h));
    for (int c = 0; c < kCantorBranching; ++c) {
      if (c == kCornerChild) continue;
      const ParaCube& q = kids[static_cast<std::size_t>(c)];
      for (int a = 0; a < s; ++a) {
        for (int b = 0; b < s; ++b) {
          for (int e = 0; e < s; ++e) {
            ParaPoint y = q.corner();
            y.x(0) += q.side() * a / (s - 1);
            y.x(1) += q.side() * b / (s - 1);
            y.t() += q.time_extent() * e / (s - 1);
            const double v = heat_kernel_grad1(zbar - y) + 0.0;  // no negative zero
            ++rep.samples;
            if (v == 0.0) ++rep.zero_samples;
            if (v < rep.min_value) {
              rep.min_value = v;
              rep.worst = y;
            }
            if (v < 0.0) rep.nonnegative = false;
          }
        }
      }
    }
  }
  return rep;
}

PositivityReport positivity_check(const CornerExperiment& exp, int samples_per_axis) {
  exp.validate();
  return positivity_check(exp.corner(), exp, samples_per_axis);
}

AnnulusContribution annulus_quadrature(const CornerExperiment& exp, int h) {
  exp.validate();
  if (h < exp.k || h > exp.k + exp.m - 1) throw ConfigError("annulus level outside k..k+m-1");
  const int n = 2;
  // Coordinates centred at zbar: Q^h has corner (0, 0, -l^2), so offsets
  // to zbar carry no cancellation at deep levels.
  const ParaPoint zbar = ParaPoint::origin(n);
  const double side = exp.level_cube(h).side();
  const double creg = cached_regularity_constant(n);
  const auto kids = cantor_children(ParaCube(ParaPoint({0.0, 0.0}, -side * side), side));

  struct Partial {
    detail::CompensatedSum value, error;
    std::size_t leaves = 0;
  };
  std::vector<Partial> parts(kCantorBranching);
  detail::parallel_for(kCantorBranching, 0, [&](std::size_t b, std::size_t e) {
    for (std::size_t c = b; c < e; ++c) {
      if (static_cast<int>(c) == kCornerChild) continue;
      Partial& part = parts[c];
      std::vector<std::pair<ParaCube, int>> stack{{kids[c], h + 1}};
      while (!stack.empty()) {
        const auto [q, g] = stack.back();
        stack.pop_back();
        const ParaPoint center = q.center();
        const double dist = dist_p(zbar, center);
        if (g < h + exp.refine || q.diam_p() > exp.theta * dist) {
          if (g >= kCantorMaxDepth + 8) throw RefineRequired("annulus subdivision too deep", 0.0, 0.0);
          const auto sub = cantor_children(q);
          for (int j = kCantorBranching - 1; j >= 0; --j) stack.emplace_back(sub[static_cast<std::size_t>(j)], g + 1);
          continue;
        }
        const double mass = std::pow(12.0, -g);
        part.value.add(mass * heat_kernel_grad1(zbar - center));
        part.error.add(mass * creg * q.radius_p() / std::pow(dist, n + 2));
        ++part.leaves;
      }
    }
  });
  AnnulusContribution out;
  out.level = h;
  out.refine = exp.refine;
  detail::CompensatedSum v, err;
  for (const auto& p : parts) {
    v.add(p.value.value());
    err.add(p.error.value());
    out.leaves += p.leaves;
  }
  out.value = v.value();
  out.error = err.value();
  return out;
}

AnnulusContribution annulus_contribution(const CornerExperiment& exp, int h) {
  const AnnulusContribution a = annulus_quadrature(exp, h);
  if (!(a.error <= 0.5 * a.value)) {
    throw RefineRequired("annulus quadrature error exceeds half the value; increase the refinement depth", a.value,
                         a.error);
  }
  return a;
}

CornerTable corner_sum(const CornerExperiment& exp) {
  exp.validate();
  CornerTable t;
  double S = 0.0, E = 0.0;
  for (int j = 0; j < exp.m; ++j) {
    CornerExperiment e = exp;
    AnnulusContribution a = annulus_quadrature(e, exp.k + j);
    while (!(a.error <= 0.5 * a.value) && e.refine < e.max_refine) {
      ++e.refine;
      a = annulus_quadrature(e, exp.k + j);
    }
    if (!(a.error <= 0.5 * a.value)) {
      throw RefineRequired("annulus quadrature error exceeds half the value at max_refine", a.value, a.error);
    }
    t.annuli.push_back(a);
    S += a.value;
    E += a.error;
    t.rows.push_back({j + 1, S, a.value, E});
  }
  const double cnt = static_cast<double>(t.rows.size());
  double mx = 0.0, my = 0.0;
  for (const auto& r : t.rows) {
    mx += r.m;
    my += r.S;
  }
  mx /= cnt;
  my /= cnt;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& r : t.rows) {
    sxx += (r.m - mx) * (r.m - mx);
    sxy += (r.m - mx) * (r.S - my);
  }
  t.slope = sxx > 0.0 ? sxy / sxx : t.rows.front().S;
  t.intercept = sxx > 0.0 ? my - t.slope * mx : 0.0;
  double res = 0.0, smax = 0.0;
  for (const auto& r : t.rows) {
    res = std::max(res, std::abs(r.S - (t.slope * r.m + t.intercept)));
    smax = std::max(smax, std::abs(r.S));
  }
  t.relative_residual = smax > 0.0 ? res / smax : 0.0;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& r : t.rows) {
    lo = std::min(lo, r.increment);
    hi = std::max(hi, r.increment);
  }
  t.increment_spread = hi > 0.0 ? (hi - lo) / hi : 0.0;
  return t;
}

void write_corner_csv(const CornerTable& t, std::ostream& out) {
  out << "m,S,increment,error_estimate\n";
  for (const auto& r : t.rows) {
    out << r.m << ',' << format_real(r.S) << ',' << format_real(r.increment) << ',' << format_real(r.error) << '\n';
  }
}

void BmoSpotSpec::validate() const {
  if (k < 0 || k > 5) throw ConfigError("spot-check generation must lie in 0..5");
  if (nx < 2 || nt < 2) throw ConfigError("probe grid needs at least 2 nodes per axis");
  for (double s : {shift_x1, shift_x2, shift_t}) {
    if (!(s >= 0.0 && s < 1.0)) throw ConfigError("grid shifts are fractions of a cell in [0, 1)");
  }
  if (!(theta > 0.0) || theta > 2.0) throw ConfigError("theta must lie in (0, 2]");
  if (max_split < 0 || max_split > 16) throw ConfigError("max_split must lie in 0..16");
}

GridSpec BmoSpotSpec::grid() const {
  const double h = 1.0 / (nx - 1);
  return make_grid(2, ParaPoint({-shift_x1 * h, -shift_x2 * h}, -shift_t * h * h), h, nx, nt);
}

namespace {

// The 16 sub-cubes of a parabolic cube: spatial halves times time quarters.
std::array<ParaCube, 16> split16(const ParaCube& q) {
  std::array<ParaCube, 16> out{ParaCube::unit(2), ParaCube::unit(2), ParaCube::unit(2), ParaCube::unit(2),
                               ParaCube::unit(2), ParaCube::unit(2), ParaCube::unit(2), ParaCube::unit(2),
                               ParaCube::unit(2), ParaCube::unit(2), ParaCube::unit(2), ParaCube::unit(2),
                               ParaCube::unit(2), ParaCube::unit(2), ParaCube::unit(2), ParaCube::unit(2)};
  const double h = 0.5 * q.side();
  for (int c = 0; c < 16; ++c) {
    ParaPoint corner = q.corner();
    corner.x(0) += (c & 1) ? h : 0.0;
    corner.x(1) += (c & 2) ? h : 0.0;
    corner.t() += (c >> 2) * h * h;
    out[static_cast<std::size_t>(c)] = ParaCube(corner, h);
  }
  return out;
}

struct SmearedValues {
  double half_dt = 0.0;
  double w = 0.0;
};

// Both potentials of the uniform measure on `cubes` (mass `mass` each) at p.
SmearedValues smeared_potentials(const std::vector<ParaCube>& cubes, double mass, const ParaPoint& p,
                                 const HalfDerivativeProfile& g, double theta, double min_side) {
  detail::CompensatedSum half, w;
  std::vector<std::pair<ParaCube, double>> stack;
  for (auto it = cubes.rbegin(); it != cubes.rend(); ++it) stack.emplace_back(*it, mass);
  while (!stack.empty()) {
    const auto [q, m] = stack.back();
    stack.pop_back();
    const ParaPoint c = q.center();
    const double d = dist_p(p, c);
    if (q.diam_p() > theta * d) {
      if (q.side() > min_side) {
        const auto sub = split16(q);
        for (int j = 15; j >= 0; --j) stack.emplace_back(sub[static_cast<std::size_t>(j)], m / 16.0);
        continue;
      }
      // Smallest cubes touching the probe are dropped; their share is
      // O(density * side).
      if (dist_p(p, q) == 0.0) continue;
    }
    const ParaPoint off = p - c;
    const double r = off.spatial_norm();
    if (r == 0.0) throw DomainError("probe shares its spatial position with a quadrature node; perturb the grid");
    half.add(m * g(off));
    if (off.t() > 0.0) w.add(m * heat_kernel_raw(off.x().data(), 2, off.t()));
  }
  return {half.value(), w.value()};
}

std::vector<ParaCube> generation_cubes(int k) {
  CantorSpec cs;
  cs.max_generation = std::max(cs.max_generation, k);
  std::vector<ParaCube> out;
  for (const auto& node : cantor_generation(cs, k)) out.push_back(node.cube);
  return out;
}

}  // namespace

double smeared_cantor_growth(int k) {
  const auto cubes = generation_cubes(k);
  DiscreteMeasure mu(2);
  const double mass = std::pow(12.0, -k) / 256.0;
  mu.reserve(cubes.size() * 256);
  for (const auto& q : cubes) {
    for (const auto& a : split16(q)) {
      for (const auto& b : split16(a)) mu.add(b.center(), mass);
    }
  }
  BallFamily fam;
  fam.r_min = 0.25 * std::pow(cantor_ratio(), k);
  fam.max_centers = 4096;
  return growth_constant(mu, fam).ratio;
}

BmoSpotResult bmo_spotcheck(const BmoSpotSpec& spec) {
  spec.validate();
  BmoSpotResult res;
  res.k = spec.k;
  res.growth = smeared_cantor_growth(spec.k);
  const auto cubes = generation_cubes(spec.k);
  const double mass = std::pow(12.0, -spec.k) / res.growth;
  const double min_side = std::pow(cantor_ratio(), spec.k) * std::ldexp(1.0, -spec.max_split);

  const GridSpec g = spec.grid();
  const HalfDerivativeProfile& prof = cached_half_profile(2);
  GridFunction half(g), w(g);
  detail::parallel_for(g.size(), spec.threads, [&](std::size_t b, std::size_t e) {
    const std::size_t sc = g.spatial_count();
    for (std::size_t idx = b; idx < e; ++idx) {
      const std::size_t ix = idx % sc;
      const int it = static_cast<int>(idx / sc);
      const SmearedValues v = smeared_potentials(cubes, mass, g.node(ix, it), prof, spec.theta, min_side);
      half.at(ix, it) = v.half_dt;
      w.at(ix, it) = v.w;
    }
  });
  res.probes = g.size();
  res.bmo = bmo_p_norm(half);
  res.lip = lip_half_t_seminorm(half);
  res.lip_W = lip_half_t_seminorm(w);
  return res;
}

}  // namespace parcal
