#include "parcal/grid.hpp"

#include <cmath>
#include <ostream>

#include "parallel.hpp"
#include "parcal/error.hpp"
#include "parcal/measure.hpp"

namespace parcal {

void GridSpec::validate() const {
  if (n < 1 || n > kMaxSpatialDim) throw ConfigError("grid dimension out of range");
  if (origin.dim() != n) throw DimensionMismatch("grid origin dimension differs from n");
  if (!(h > 0.0) || !std::isfinite(h)) throw ConfigError("grid step must be positive");
  for (int j = 0; j < n; ++j) {
    if (nx[static_cast<std::size_t>(j)] < 1) throw ConfigError("grid needs at least one node per axis");
  }
  if (nt < 1) throw ConfigError("grid needs at least one time slice");
  if (static_cast<double>(spatial_count()) * nt > 5e8) throw ResourceError("grid too large");
}

std::size_t GridSpec::spatial_count() const {
  std::size_t c = 1;
  for (int j = 0; j < n; ++j) c *= static_cast<std::size_t>(nx[static_cast<std::size_t>(j)]);
  return c;
}

ParaPoint GridSpec::node(std::size_t ix, int it) const {
  ParaPoint p = origin;
  for (int j = 0; j < n; ++j) {
    const std::size_t m = static_cast<std::size_t>(nx[static_cast<std::size_t>(j)]);
    p.x(j) += static_cast<double>(ix % m) * h;
    ix /= m;
  }
  p.t() += static_cast<double>(it) * h * h;
  return p;
}

GridSpec make_grid(int n, const ParaPoint& origin, double h, int nx, int nt) {
  GridSpec g;
  g.n = n;
  g.origin = origin;
  g.h = h;
  for (int j = 0; j < n; ++j) g.nx[static_cast<std::size_t>(j)] = nx;
  g.nt = nt;
  g.validate();
  return g;
}

GridFunction::GridFunction(GridSpec spec) : spec_(spec) {
  spec_.validate();
  stride_ = spec_.spatial_count();
  values_.assign(spec_.size(), 0.0);
}

GridFunction::GridFunction(GridSpec spec, std::vector<double> values) : GridFunction(spec) {
  if (values.size() != values_.size()) throw ConfigError("grid values do not match the grid size");
  values_ = std::move(values);
}

GridFunction GridFunction::sample(const GridSpec& spec, const std::function<double(const ParaPoint&)>& f) {
  GridFunction g(spec);
  const std::size_t s = spec.spatial_count();
  detail::parallel_for(g.values_.size(), 0, [&](std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) g.values_[k] = f(spec.node(k % s, static_cast<int>(k / s)));
  });
  return g;
}

namespace {

// Flattened spatial index of a multi-index.
std::size_t flat(const GridSpec& g, const std::array<int, kMaxSpatialDim>& ix) {
  std::size_t k = 0;
  for (int j = g.n - 1; j >= 0; --j) {
    k = k * static_cast<std::size_t>(g.nx[static_cast<std::size_t>(j)]) + static_cast<std::size_t>(ix[static_cast<std::size_t>(j)]);
  }
  return k;
}

// Advances a multi-index over [0, limit_j) with the given step; false at the end.
bool advance(std::array<int, kMaxSpatialDim>& ix, const std::array<int, kMaxSpatialDim>& limit, int step, int n) {
  for (int j = 0; j < n; ++j) {
    ix[static_cast<std::size_t>(j)] += step;
    if (ix[static_cast<std::size_t>(j)] <= limit[static_cast<std::size_t>(j)]) return true;
    ix[static_cast<std::size_t>(j)] = 0;
  }
  return false;
}

}  // namespace

BmoReport bmo_p_norm(const GridFunction& f) {
  const GridSpec& g = f.spec();
  const int n = g.n;
  BmoReport rep;
  int min_nx = g.nx[0];
  for (int j = 1; j < n; ++j) min_nx = std::min(min_nx, g.nx[static_cast<std::size_t>(j)]);

  std::vector<double> cell;
  for (int m = 2; m <= min_nx && m * m <= g.nt; m *= 2) {
    if (rep.min_cells == 0) rep.min_cells = m;
    rep.max_cells = m;
    const int step_x = m / 2;
    const int mt = m * m;
    const int step_t = mt / 2;
    std::array<int, kMaxSpatialDim> limit{};
    for (int j = 0; j < n; ++j) limit[static_cast<std::size_t>(j)] = g.nx[static_cast<std::size_t>(j)] - m;
    std::array<int, kMaxSpatialDim> corner{};
    do {
      for (int t0 = 0; t0 + mt <= g.nt; t0 += step_t) {
        // Gather the cube's values.
        cell.clear();
        std::array<int, kMaxSpatialDim> off{};
        std::array<int, kMaxSpatialDim> span{};
        for (int j = 0; j < n; ++j) span[static_cast<std::size_t>(j)] = m - 1;
        do {
          std::array<int, kMaxSpatialDim> ix{};
          for (int j = 0; j < n; ++j) {
            ix[static_cast<std::size_t>(j)] = corner[static_cast<std::size_t>(j)] + off[static_cast<std::size_t>(j)];
          }
          const std::size_t base = flat(g, ix);
          for (int it = t0; it < t0 + mt; ++it) cell.push_back(f.at(base, it));
        } while (advance(off, span, 1, n));
        detail::CompensatedSum mean;
        for (double v : cell) mean.add(v);
        const double avg = mean.value() / static_cast<double>(cell.size());
        detail::CompensatedSum osc;
        for (double v : cell) osc.add(std::abs(v - avg));
        const double value = osc.value() / static_cast<double>(cell.size());
        ++rep.cubes;
        if (value > rep.value) {
          rep.value = value;
          rep.witness_ix = corner;
          rep.witness_it = t0;
          rep.witness_cells = m;
        }
      }
    } while (advance(corner, limit, step_x, n));
  }
  return rep;
}

LipReport lip_half_t_seminorm(const GridFunction& f) {
  const GridSpec& g = f.spec();
  if (g.nt < 2) throw ConfigError("Lip(1/2) seminorm needs at least two time slices");
  LipReport rep;
  const std::size_t s = g.spatial_count();
  const double h2 = g.h * g.h;
  for (std::size_t ix = 0; ix < s; ++ix) {
    for (int a = 0; a < g.nt; ++a) {
      for (int b = a + 1; b < g.nt; ++b) {
        const double q = std::abs(f.at(ix, a) - f.at(ix, b)) / std::sqrt(static_cast<double>(b - a) * h2);
        rep.value = std::max(rep.value, q);
        ++rep.pairs;
      }
    }
  }
  return rep;
}

void write_grid_csv(const GridFunction& f, std::ostream& out) {
  const GridSpec& g = f.spec();
  out << "# n=" << g.n << " h=" << format_real(g.h) << " origin=";
  for (int j = 0; j < g.n; ++j) out << format_real(g.origin.x(j)) << ",";
  out << format_real(g.origin.t()) << " nx=";
  for (int j = 0; j < g.n; ++j) out << g.nx[static_cast<std::size_t>(j)] << (j + 1 < g.n ? "," : "");
  out << " nt=" << g.nt << "\nvalue\n";
  for (double v : f.values()) out << format_real(v) << "\n";
}

}  // namespace parcal
