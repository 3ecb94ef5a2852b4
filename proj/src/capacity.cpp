#include "parcal/capacity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <set>
#include <tuple>
#include <unordered_set>

#include <json.hpp>

#include "parallel.hpp"
#include "parcal/error.hpp"
#include "parcal/kernels.hpp"

namespace parcal {

namespace {

using Coords = std::array<double, kMaxSpatialDim + 1>;

Coords coords_of(const ParaPoint& p) {
  Coords c{};
  for (int j = 0; j < p.dim(); ++j) c[j] = p.x(j);
  c[p.dim()] = p.t();
  return c;
}

// Gaussian factors below e^{-60} are dropped; relative to the constraint
// level they are far under the violation tolerance.
constexpr double kExponentCutoff = 60.0;

// K(d) for d = (d_x, d_t); zero unless d_t > 0.
bool kernel_at(const double* d, int n, double* out) {
  const double dt = d[n];
  if (dt <= 0.0) return false;
  double r2 = 0.0;
  for (int j = 0; j < n; ++j) r2 += d[j] * d[j];
  const double e = r2 / (4.0 * dt);
  if (e > kExponentCutoff) return false;
  const double w = std::pow(4.0 * std::numbers::pi * dt, -0.5 * n) * std::exp(-e);
  const double c = -w / (2.0 * dt);
  for (int j = 0; j < n; ++j) out[j] = c * d[j];
  return true;
}

struct Direction {
  std::array<double, kMaxSpatialDim> u{};
};

std::vector<Direction> facet_directions(int n, NormMode mode, int facets) {
  std::vector<Direction> dirs;
  if (mode == NormMode::PerComponent) {
    for (int j = 0; j < n; ++j) {
      Direction plus, minus;
      plus.u[j] = 1.0;
      minus.u[j] = -1.0;
      dirs.push_back(plus);
      dirs.push_back(minus);
    }
    return dirs;
  }
  if (n == 2) {
    for (int k = 0; k < facets; ++k) {
      Direction d;
      const double a = 2.0 * std::numbers::pi * k / facets;
      d.u[0] = std::cos(a);
      d.u[1] = std::sin(a);
      dirs.push_back(d);
    }
    return dirs;
  }
  for (int j = 0; j < n; ++j) {
    for (double s : {1.0, -1.0}) {
      Direction d;
      d.u[j] = s;
      dirs.push_back(d);
    }
  }
  const double h = 1.0 / std::sqrt(2.0);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      for (double si : {1.0, -1.0}) {
        for (double sj : {1.0, -1.0}) {
          Direction d;
          d.u[i] = si * h;
          d.u[j] = sj * h;
          dirs.push_back(d);
        }
      }
    }
  }
  return dirs;
}

double cap_of(const ParaCube& q, int n) { return std::pow(q.side(), n + 1); }

// Flat support coordinates, stride n + 1.
struct SupportData {
  int n;
  std::vector<double> c;
  std::size_t size() const { return c.size() / static_cast<std::size_t>(n + 1); }
  const double* at(std::size_t i) const { return c.data() + i * static_cast<std::size_t>(n + 1); }
};

SupportData flatten(const std::vector<ParaPoint>& pts, int n) {
  SupportData s{n, {}};
  s.c.reserve(pts.size() * static_cast<std::size_t>(n + 1));
  for (const auto& p : pts) {
    const Coords c = coords_of(p);
    s.c.insert(s.c.end(), c.begin(), c.begin() + n + 1);
  }
  return s;
}

// Kernel vectors K(p - y_i) (or K(y_i - p) for the adjoint) for every atom;
// entries of atoms outside the causal range are zero.
void kernel_column(const SupportData& s, const double* p, bool adjoint, std::vector<double>& out) {
  const int n = s.n;
  out.assign(s.size() * static_cast<std::size_t>(n), 0.0);
  double d[kMaxSpatialDim + 1];
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double* y = s.at(i);
    for (int j = 0; j <= n; ++j) d[j] = adjoint ? y[j] - p[j] : p[j] - y[j];
    kernel_at(d, n, out.data() + i * static_cast<std::size_t>(n));
  }
}

// Potential (T or T*) of sum w_i delta_{y_i} at p.
void potential_at(const SupportData& s, const std::vector<double>& w, const double* p, bool adjoint, double* out) {
  const int n = s.n;
  detail::CompensatedSum acc[kMaxSpatialDim];
  double d[kMaxSpatialDim + 1];
  double k[kMaxSpatialDim];
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (w[i] == 0.0) continue;
    const double* y = s.at(i);
    for (int j = 0; j <= n; ++j) d[j] = adjoint ? y[j] - p[j] : p[j] - y[j];
    if (!kernel_at(d, n, k)) continue;
    for (int j = 0; j < n; ++j) acc[j].add(w[i] * k[j]);
  }
  for (int j = 0; j < n; ++j) out[j] = acc[j].value();
}

struct RowKey {
  int kind;  // 0: T, 1: T*
  std::size_t point;
  int facet;
  friend bool operator<(const RowKey& a, const RowKey& b) {
    return std::tie(a.kind, a.point, a.facet) < std::tie(b.kind, b.point, b.facet);
  }
};

struct Violation {
  double amount;
  RowKey key;
};

const char* kind_name(int kind) { return kind == 0 ? "T" : "T*"; }

CapacitySolution solve_impl(const CapacityProblem& prob, bool adjoint, const CapacityOptions& opts) {
  prob.validate();
  if (!(opts.violation_tol > 0.0)) throw ConfigError("violation tolerance must be positive");
  const int n = prob.n;
  const std::size_t na = prob.support.size();
  const std::size_t np = prob.collocation.size();
  const SupportData sup = flatten(prob.support, n);
  const SupportData col = flatten(prob.collocation, n);
  const auto dirs = facet_directions(n, prob.mode, prob.facets);
  const int nf = static_cast<int>(dirs.size());
  const int kinds = adjoint ? 2 : 1;

  // Variables y = w / sigma with sigma the smallest growth cap, so that the
  // LP of a dilated problem is the same LP up to rounding.
  double sigma = 1.0;
  if (!prob.growth_cubes.empty()) {
    sigma = std::numeric_limits<double>::infinity();
    for (const auto& q : prob.growth_cubes) sigma = std::min(sigma, cap_of(q, n));
  } else if (prob.clearance > 0.0) {
    sigma = std::pow(prob.clearance, n + 1);
  }

  DenseSimplex lp(std::vector<double>(na, 1.0), opts.lp);
  CapacitySolution sol;

  std::vector<std::vector<std::size_t>> members(prob.growth_cubes.size());
  std::vector<char> covered(na, 0);
  for (std::size_t q = 0; q < prob.growth_cubes.size(); ++q) {
    std::vector<double> row(na, 0.0);
    for (std::size_t i = 0; i < na; ++i) {
      if (prob.growth_cubes[q].contains(prob.support[i])) {
        row[i] = 1.0;
        members[q].push_back(i);
        covered[i] = 1;
      }
    }
    if (members[q].empty()) continue;
    lp.add_row(row, cap_of(prob.growth_cubes[q], n) / sigma);
    ++sol.growth_rows;
  }

  std::set<RowKey> added;
  std::vector<double> column;
  auto add_potential_row = [&](const RowKey& key) {
    kernel_column(sup, col.at(key.point), key.kind == 1, column);
    const auto& u = dirs[static_cast<std::size_t>(key.facet)].u;
    std::vector<double> row(na, 0.0);
    double scale = 0.0;
    for (std::size_t i = 0; i < na; ++i) {
      double v = 0.0;
      for (int j = 0; j < n; ++j) v += u[j] * column[i * static_cast<std::size_t>(n) + j];
      row[i] = v * sigma;
      scale = std::max(scale, std::abs(row[i]));
    }
    if (scale == 0.0) return;
    for (double& a : row) a /= scale;
    lp.add_row(row, 1.0 / scale);
    added.insert(key);
    ++sol.potential_rows_added;
  };

  // Seed: for every atom the potential row with its largest coefficient.
  std::vector<double> best_coef(na, 0.0);
  std::vector<RowKey> best_key(na, RowKey{0, 0, 0});
  detail::parallel_for(na, opts.threads, [&](std::size_t b, std::size_t e) {
    double d[kMaxSpatialDim + 1];
    double k[kMaxSpatialDim];
    for (std::size_t i = b; i < e; ++i) {
      const double* y = sup.at(i);
      for (int kind = 0; kind < kinds; ++kind) {
        for (std::size_t p = 0; p < np; ++p) {
          const double* c = col.at(p);
          for (int j = 0; j <= n; ++j) d[j] = kind == 1 ? y[j] - c[j] : c[j] - y[j];
          if (!kernel_at(d, n, k)) continue;
          for (int f = 0; f < nf; ++f) {
            double v = 0.0;
            for (int j = 0; j < n; ++j) v += dirs[static_cast<std::size_t>(f)].u[j] * k[j];
            if (v > best_coef[i]) {
              best_coef[i] = v;
              best_key[i] = RowKey{kind, p, f};
            }
          }
        }
      }
    }
  });
  for (std::size_t i = 0; i < na; ++i) {
    if (best_coef[i] > 0.0) {
      if (!added.count(best_key[i])) add_potential_row(best_key[i]);
    } else if (!covered[i]) {
      throw ConfigError("atom " + std::to_string(i) + " is not constrained by any growth cube or collocation point");
    }
  }

  std::vector<double> w(na, 0.0);
  std::vector<double> values(np * static_cast<std::size_t>(kinds * n), 0.0);
  auto evaluate_all = [&] {
    detail::parallel_for(np, opts.threads, [&](std::size_t b, std::size_t e) {
      for (std::size_t p = b; p < e; ++p) {
        for (int kind = 0; kind < kinds; ++kind) {
          potential_at(sup, w, col.at(p), kind == 1,
                       values.data() + (p * static_cast<std::size_t>(kinds) + kind) * static_cast<std::size_t>(n));
        }
      }
    });
  };
  auto facet_value = [&](std::size_t p, int kind, int f) {
    const double* v = values.data() + (p * static_cast<std::size_t>(kinds) + kind) * static_cast<std::size_t>(n);
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += dirs[static_cast<std::size_t>(f)].u[j] * v[j];
    return s;
  };

  LpStatus status = LpStatus::Optimal;
  while (true) {
    status = lp.solve();
    ++sol.rounds;
    if (status == LpStatus::Unbounded) throw ConfigError("capacity LP is unbounded; some atom is unconstrained");
    if (status != LpStatus::Optimal) break;
    const auto y = lp.solution();
    for (std::size_t i = 0; i < na; ++i) w[i] = y[i] * sigma;
    evaluate_all();
    std::vector<Violation> viol;
    for (std::size_t p = 0; p < np; ++p) {
      for (int kind = 0; kind < kinds; ++kind) {
        for (int f = 0; f < nf; ++f) {
          const double a = facet_value(p, kind, f) - 1.0;
          if (a > opts.violation_tol) {
            RowKey key{kind, p, f};
            if (!added.count(key)) viol.push_back({a, key});
          }
        }
      }
    }
    if (viol.empty() || sol.rounds >= opts.max_rounds) break;
    std::sort(viol.begin(), viol.end(), [](const Violation& a, const Violation& b) {
      if (a.amount != b.amount) return a.amount > b.amount;
      return a.key < b.key;
    });
    const std::size_t take = std::min(viol.size(), std::max<std::size_t>(1, opts.batch));
    for (std::size_t k = 0; k < take; ++k) add_potential_row(viol[k].key);
  }

  sol.weights = w;
  detail::CompensatedSum total;
  for (double x : w) total.add(x);
  sol.objective = total.value();
  sol.pivots = lp.pivots();
  sol.potential_rows_total = np * static_cast<std::size_t>(kinds * nf);

  // Residuals and active set on the unscaled data.
  double residual = 0.0;
  for (std::size_t q = 0; q < prob.growth_cubes.size(); ++q) {
    if (members[q].empty()) continue;
    detail::CompensatedSum m;
    for (std::size_t i : members[q]) m.add(w[i]);
    const double cap = cap_of(prob.growth_cubes[q], n);
    const double slack = cap - m.value();
    residual = std::max(residual, -slack);
    if (slack <= opts.violation_tol * cap) sol.active.push_back({"growth", q, -1, slack});
  }
  for (std::size_t p = 0; p < np; ++p) {
    for (int kind = 0; kind < kinds; ++kind) {
      for (int f = 0; f < nf; ++f) {
        const double slack = 1.0 - facet_value(p, kind, f);
        residual = std::max(residual, -slack);
        if (slack <= opts.violation_tol) sol.active.push_back({kind_name(kind), p, f, slack});
      }
    }
  }
  sol.max_residual = residual;
  if (status != LpStatus::Optimal) sol.status = lp_status_name(status);
  else if (residual > opts.violation_tol) sol.status = "tolerance_not_met";
  else sol.status = "optimal";
  return sol;
}

bool point_less(const ParaPoint& a, const ParaPoint& b) {
  if (a.t() != b.t()) return a.t() < b.t();
  for (int j = 0; j < a.dim(); ++j) {
    if (a.x(j) != b.x(j)) return a.x(j) < b.x(j);
  }
  return false;
}

DiscreteMeasure unit_measure(const std::vector<ParaPoint>& pts) {
  DiscreteMeasure mu(pts.front().dim());
  mu.reserve(pts.size());
  for (const auto& p : pts) mu.add(p, 1.0);
  return mu;
}

auto id_key(const DyadicCubeId& id) {
  return std::make_tuple(id.k, id.i_time, id.i[0], id.i[1], id.i[2], id.i[3], id.i[4], id.i[5]);
}

struct IdLess {
  bool operator()(const DyadicCubeId& a, const DyadicCubeId& b) const { return id_key(a) < id_key(b); }
};

void require_points(const std::vector<ParaPoint>& pts) {
  if (pts.empty()) throw ConfigError("empty point set");
  for (const auto& p : pts) require_same_dim(pts.front(), p);
}

}  // namespace

std::string norm_mode_name(NormMode m) { return m == NormMode::PerComponent ? "per_component" : "polyhedral"; }

NormMode norm_mode_from_name(const std::string& s) {
  if (s == "per_component") return NormMode::PerComponent;
  if (s == "polyhedral") return NormMode::Polyhedral;
  throw ConfigError("unknown norm mode '" + s + "'");
}

void CapacityProblem::validate() const {
  if (n < 1 || n > kMaxSpatialDim) throw ConfigError("spatial dimension out of range");
  if (support.empty()) throw ConfigError("empty support");
  if (collocation.empty()) throw ConfigError("empty collocation set");
  for (const auto& p : support) {
    if (p.dim() != n) throw DimensionMismatch("support point of the wrong dimension");
  }
  for (const auto& p : collocation) {
    if (p.dim() != n) throw DimensionMismatch("collocation point of the wrong dimension");
  }
  for (const auto& q : growth_cubes) {
    if (q.dim() != n) throw DimensionMismatch("growth cube of the wrong dimension");
  }
  if (mode == NormMode::Polyhedral && n == 2 && (facets < 4 || facets % 2 != 0)) {
    throw ConfigError("polyhedral mode needs an even number of facets >= 4");
  }
  if (!(clearance >= 0.0) || !std::isfinite(clearance)) throw ConfigError("clearance must be finite and >= 0");
  const DiscreteMeasure mu = unit_measure(support);
  const ClusterTree tree(mu, 16);
  for (const auto& p : collocation) {
    const double d = tree.distance_to_support(p);
    if (d == 0.0) throw DiagonalError("collocation point coincides with a support point");
    if (d < clearance * (1.0 - 1e-9)) throw ConfigError("collocation point closer to the support than the clearance");
  }
}

CapacityProblem CapacityProblem::dilated(const Dilation& d) const {
  CapacityProblem out = *this;
  for (auto& p : out.support) p = d(p);
  for (auto& p : out.collocation) p = d(p);
  for (auto& q : out.growth_cubes) q = d(q);
  out.clearance = clearance * d.lambda();
  return out;
}

CapacitySolution estimate_S1(const CapacityProblem& prob, const CapacityOptions& opts) {
  return solve_impl(prob, false, opts);
}

CapacitySolution estimate_tilde_gamma_plus(const CapacityProblem& prob, const CapacityOptions& opts) {
  return solve_impl(prob, true, opts);
}

CapacitySolution solve_capacity(const CapacityProblem& prob, const CapacityOptions& opts) {
  return solve_impl(prob, prob.include_adjoint, opts);
}

std::vector<ParaCube> dyadic_growth_cubes(const std::vector<ParaPoint>& support, int k_min, int k_max) {
  require_points(support);
  if (k_min > k_max) throw ConfigError("k_min exceeds k_max");
  std::vector<ParaCube> out;
  for (int k = k_min; k <= k_max; ++k) {
    std::set<DyadicCubeId, IdLess> seen;
    for (const auto& p : support) {
      const DyadicCubeId id = dyadic_cube_at(p, k);
      if (seen.insert(id).second) out.push_back(dyadic_geometry(id));
    }
  }
  return out;
}

double minimal_spacing(const std::vector<ParaPoint>& support) {
  require_points(support);
  const DiscreteMeasure mu = unit_measure(support);
  const ClusterTree tree(mu, 16);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < mu.size(); ++i) best = std::min(best, tree.nearest_distance(i));
  return best;
}

std::vector<ParaPoint> generate_collocation(const std::vector<ParaPoint>& support, double clearance,
                                            const CollocationOptions& opts) {
  require_points(support);
  if (!(clearance > 0.0)) throw ConfigError("clearance must be positive");
  if (opts.shell_points == 1 || opts.shell_points < 0) throw ConfigError("shell_points must be 0 or >= 2");
  const int n = support.front().dim();
  std::vector<ParaPoint> pts;

  std::vector<std::array<double, kMaxSpatialDim>> dirs;
  for (int j = 0; j < n; ++j) {
    for (double s : {1.0, -1.0}) {
      std::array<double, kMaxSpatialDim> u{};
      u[j] = s;
      dirs.push_back(u);
    }
  }
  const double h = 1.0 / std::sqrt(2.0);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      for (double si : {1.0, -1.0}) {
        for (double sj : {1.0, -1.0}) {
          std::array<double, kMaxSpatialDim> u{};
          u[i] = si * h;
          u[j] = sj * h;
          dirs.push_back(u);
        }
      }
    }
  }
  std::vector<double> lag_set{0.0};
  for (double l : opts.lags) {
    lag_set.push_back(l);
    lag_set.push_back(-l);
  }

  for (const auto& y : support) {
    for (double ring : opts.rings) {
      const double r = ring * clearance;
      for (const auto& u : dirs) {
        for (double l : lag_set) {
          ParaPoint p = y;
          for (int j = 0; j < n; ++j) p.x(j) += r * u[j];
          p.t() += l * r * r;
          pts.push_back(p);
        }
      }
      for (double s : {1.0, -1.0}) {
        ParaPoint p = y;
        p.t() += s * r * r;
        pts.push_back(p);
      }
    }
  }

  const double spacing = support.size() > 1 ? minimal_spacing(support) : 0.0;
  if (opts.pair_factor > 0.0 && support.size() > 1 && support.size() <= 20000) {
    const double reach = opts.pair_factor * spacing;
    for (std::size_t a = 0; a < support.size(); ++a) {
      for (std::size_t b = a + 1; b < support.size(); ++b) {
        const double d = dist_p(support[a], support[b]);
        if (d == 0.0 || d > reach) continue;
        ParaPoint m = support[a];
        for (int j = 0; j < n; ++j) m.x(j) = 0.5 * (support[a].x(j) + support[b].x(j));
        m.t() = 0.5 * (support[a].t() + support[b].t());
        for (double l : lag_set) {
          ParaPoint p = m;
          p.t() += l * 0.25 * d * d;
          pts.push_back(p);
        }
      }
    }
  }

  if (opts.shell_points >= 2) {
    Coords lo, hi;
    lo.fill(std::numeric_limits<double>::infinity());
    hi.fill(-std::numeric_limits<double>::infinity());
    for (const auto& p : support) {
      const Coords c = coords_of(p);
      for (int j = 0; j <= n; ++j) {
        lo[j] = std::min(lo[j], c[j]);
        hi[j] = std::max(hi[j], c[j]);
      }
    }
    double s2 = 0.0;
    for (int j = 0; j < n; ++j) s2 += (hi[j] - lo[j]) * (hi[j] - lo[j]);
    double diam = std::max(std::sqrt(s2), std::sqrt(hi[n] - lo[n]));
    if (diam == 0.0) diam = clearance;
    const double pad = opts.shell_factor * diam;
    for (int j = 0; j < n; ++j) {
      lo[j] -= pad;
      hi[j] += pad;
    }
    lo[n] -= pad * pad;
    hi[n] += pad * pad;
    const int m = opts.shell_points;
    std::array<int, kMaxSpatialDim + 1> idx{};
    while (true) {
      bool boundary = false;
      for (int j = 0; j <= n; ++j) boundary = boundary || idx[j] == 0 || idx[j] == m - 1;
      if (boundary) {
        ParaPoint p = support.front();
        for (int j = 0; j < n; ++j) p.x(j) = lo[j] + (hi[j] - lo[j]) * idx[j] / (m - 1);
        p.t() = lo[n] + (hi[n] - lo[n]) * idx[n] / (m - 1);
        pts.push_back(p);
      }
      int j = 0;
      while (j <= n && ++idx[j] == m) idx[j++] = 0;
      if (j > n) break;
    }
  }

  std::sort(pts.begin(), pts.end(), point_less);
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  const DiscreteMeasure mu = unit_measure(support);
  const ClusterTree tree(mu, 16);
  std::vector<ParaPoint> kept;
  kept.reserve(pts.size());
  for (const auto& p : pts) {
    if (tree.distance_to_support(p) >= clearance * (1.0 - 1e-12)) kept.push_back(p);
  }
  return kept;
}

std::string plane_kind_name(PlaneKind k) { return k == PlaneKind::Graph ? "graph" : "horizontal"; }

PlaneKind plane_kind_from_name(const std::string& s) {
  if (s == "graph") return PlaneKind::Graph;
  if (s == "horizontal") return PlaneKind::Horizontal;
  throw ConfigError("unknown plane '" + s + "'");
}

CapacityProblem plane_patch_problem(const PatchSpec& spec) {
  if (spec.level < 0) throw ConfigError("patch level must be nonnegative");
  if (spec.level > 4) throw ResourceError("patch level above 4 exceeds the dense LP budget");
  if (!(spec.clearance_factor > 0.0) || spec.clearance_factor >= 0.5) {
    throw ConfigError("clearance factor must lie in (0, 0.5)");
  }
  const int L = spec.level;
  const double s = std::ldexp(1.0, -L);
  CapacityProblem prob;
  prob.n = 2;
  prob.mode = spec.mode;
  prob.facets = spec.facets;
  prob.include_adjoint = spec.include_adjoint;
  const int nx = 1 << L;
  if (spec.kind == PlaneKind::Graph) {
    const int nt = 1 << (2 * L);
    for (int b = 0; b < nt; ++b) {
      for (int a = 0; a < nx; ++a) {
        const double t = (b + 0.5) * s * s;
        prob.support.push_back(ParaPoint({t, (a + 0.5) * s}, t));
      }
    }
  } else {
    for (int b = 0; b < nx; ++b) {
      for (int a = 0; a < nx; ++a) prob.support.push_back(ParaPoint({(a + 0.5) * s, (b + 0.5) * s}, 0.0));
    }
  }
  const double spacing = prob.support.size() > 1 ? minimal_spacing(prob.support) : s;
  prob.clearance = spec.clearance_factor * spacing;
  prob.growth_cubes = dyadic_growth_cubes(prob.support, 0, L);
  prob.collocation = generate_collocation(prob.support, prob.clearance, spec.collocation);
  return prob;
}

// Content -------------------------------------------------------------------

void ContentProblem::validate() const {
  if (depth < 0) throw ConfigError("depth must be nonnegative");
  std::set<DyadicCubeId, IdLess> seen;
  for (const auto& id : targets) {
    if (id.k != targets.front().k) throw ConfigError("target cubes of different scales");
    if (id.n != targets.front().n) throw DimensionMismatch("target cubes of different dimension");
    if (!seen.insert(id).second) throw ConfigError("duplicate target cube");
  }
}

std::vector<DyadicCubeId> covering_cubes(const std::vector<ParaPoint>& points, int k) {
  require_points(points);
  std::vector<DyadicCubeId> out;
  std::set<DyadicCubeId, IdLess> seen;
  for (const auto& p : points) {
    const DyadicCubeId id = dyadic_cube_at(p, k);
    if (seen.insert(id).second) out.push_back(id);
  }
  return out;
}

ContentSolution frostman_content_lower(const ContentProblem& prob) {
  prob.validate();
  if (prob.targets.empty()) return {};
  const int n = prob.targets.front().n;
  const int k = prob.targets.front().k;
  auto cap = [&](int scale) { return std::ldexp(1.0, -(n + 1) * scale); };

  // level[d]: cube -> (v, sum of children v) at scale k - d.
  std::vector<std::map<DyadicCubeId, std::pair<double, double>, IdLess>> level(static_cast<std::size_t>(prob.depth) + 1);
  for (const auto& id : prob.targets) level[0][id] = {cap(k), cap(k)};
  for (int d = 1; d <= prob.depth; ++d) {
    auto& up = level[static_cast<std::size_t>(d)];
    for (const auto& [id, v] : level[static_cast<std::size_t>(d) - 1]) up[id.parent()].second += v.first;
    for (auto& [id, v] : up) v.first = std::min(cap(k - d), v.second);
  }
  ContentSolution sol;
  for (const auto& lv : level) sol.constraints += lv.size();
  detail::CompensatedSum total;
  for (const auto& [id, v] : level.back()) total.add(v.first);
  sol.value = total.value();
  sol.weights.reserve(prob.targets.size());
  for (const auto& id : prob.targets) {
    double w = cap(k);
    DyadicCubeId a = id;
    for (int d = 1; d <= prob.depth; ++d) {
      a = a.parent();
      const auto& v = level[static_cast<std::size_t>(d)].at(a);
      w *= v.first / v.second;
    }
    sol.weights.push_back(w);
  }
  return sol;
}

ContentSolution frostman_content_lower_simplex(const ContentProblem& prob, const LpOptions& opts) {
  prob.validate();
  if (prob.targets.empty()) return {};
  const int n = prob.targets.front().n;
  const int k = prob.targets.front().k;
  const std::size_t m = prob.targets.size();
  const double unit = std::ldexp(1.0, -(n + 1) * k);
  DenseSimplex lp(std::vector<double>(m, 1.0), opts);
  ContentSolution sol;
  std::vector<DyadicCubeId> anc = prob.targets;
  for (int d = 0; d <= prob.depth; ++d) {
    std::map<DyadicCubeId, std::vector<std::size_t>, IdLess> groups;
    for (std::size_t i = 0; i < m; ++i) groups[anc[i]].push_back(i);
    for (const auto& [id, idx] : groups) {
      std::vector<double> row(m, 0.0);
      for (std::size_t i : idx) row[i] = 1.0;
      lp.add_row(row, std::ldexp(1.0, -(n + 1) * (k - d)) / unit);
      ++sol.constraints;
    }
    for (auto& a : anc) a = a.parent();
  }
  const LpStatus st = lp.solve();
  if (st != LpStatus::Optimal) throw ConfigError("content LP ended with status " + lp_status_name(st));
  sol.value = lp.objective() * unit;
  for (double x : lp.solution()) sol.weights.push_back(x * unit);
  return sol;
}

double cover_content_upper(const std::vector<ParaCube>& cubes, int k) {
  if (cubes.empty()) throw ConfigError("no cubes to cover");
  const int n = cubes.front().dim();
  const double s = std::ldexp(1.0, k);
  constexpr std::size_t kBudget = 50'000'000;
  std::unordered_set<DyadicCubeId, DyadicCubeIdHash> ids;
  for (const auto& q : cubes) {
    if (q.dim() != n) throw DimensionMismatch("cubes of different dimension");
    std::array<std::int64_t, kMaxSpatialDim + 1> lo{}, hi{};
    for (int j = 0; j < n; ++j) {
      lo[j] = static_cast<std::int64_t>(std::floor(q.corner().x(j) * s));
      hi[j] = static_cast<std::int64_t>(std::ceil((q.corner().x(j) + q.side()) * s)) - 1;
    }
    lo[n] = static_cast<std::int64_t>(std::floor(q.corner().t() * s * s));
    hi[n] = static_cast<std::int64_t>(std::ceil((q.corner().t() + q.time_extent()) * s * s)) - 1;
    double count = 1.0;
    for (int j = 0; j <= n; ++j) count *= static_cast<double>(hi[j] - lo[j] + 1);
    if (count + static_cast<double>(ids.size()) > static_cast<double>(kBudget)) {
      throw ResourceError("covering at this scale needs too many cubes");
    }
    std::array<std::int64_t, kMaxSpatialDim + 1> idx = lo;
    while (true) {
      DyadicCubeId id;
      id.k = k;
      id.n = n;
      for (int j = 0; j < n; ++j) id.i[j] = idx[j];
      id.i_time = idx[n];
      ids.insert(id);
      int j = 0;
      while (j <= n && ++idx[j] > hi[j]) {
        idx[j] = lo[j];
        ++j;
      }
      if (j > n) break;
    }
  }
  return static_cast<double>(ids.size()) * std::ldexp(1.0, -(n + 1) * k);
}

double best_cover_content(const std::vector<ParaCube>& cubes, int k_min, int k_max) {
  if (k_min > k_max) throw ConfigError("k_min exceeds k_max");
  double best = std::numeric_limits<double>::infinity();
  for (int k = k_min; k <= k_max; ++k) best = std::min(best, cover_content_upper(cubes, k));
  return best;
}

BoxDimensionFit box_dimension_estimate(const std::vector<ParaPoint>& points, int k_min, int k_max) {
  require_points(points);
  if (k_max - k_min < 2) throw ConfigError("box dimension needs at least three scales");
  BoxDimensionFit fit;
  for (int k = k_min; k <= k_max; ++k) {
    std::unordered_set<DyadicCubeId, DyadicCubeIdHash> ids;
    for (const auto& p : points) ids.insert(dyadic_cube_at(p, k));
    fit.scales.push_back(k);
    fit.counts.push_back(ids.size());
  }
  const double m = static_cast<double>(fit.scales.size());
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < fit.scales.size(); ++i) {
    sx += fit.scales[i];
    sy += std::log2(static_cast<double>(fit.counts[i]));
  }
  const double mx = sx / m, my = sy / m;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < fit.scales.size(); ++i) {
    const double dx = fit.scales[i] - mx;
    const double dy = std::log2(static_cast<double>(fit.counts[i])) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  const double res = std::max(0.0, syy - fit.slope * sxy);
  fit.r_squared = syy > 0.0 ? 1.0 - res / syy : 1.0;
  return fit;
}

// Serialization ---------------------------------------------------------------

namespace {

nlohmann::json point_json(const ParaPoint& p) {
  nlohmann::json a = nlohmann::json::array();
  for (int j = 0; j < p.dim(); ++j) a.push_back(p.x(j));
  a.push_back(p.t());
  return a;
}

}  // namespace

std::string capacity_problem_to_json(const CapacityProblem& prob) {
  nlohmann::json j;
  j["n"] = prob.n;
  j["mode"] = norm_mode_name(prob.mode);
  j["facets"] = prob.facets;
  j["include_adjoint"] = prob.include_adjoint;
  j["clearance"] = prob.clearance;
  j["support"] = nlohmann::json::array();
  for (const auto& p : prob.support) j["support"].push_back(point_json(p));
  j["collocation"] = nlohmann::json::array();
  for (const auto& p : prob.collocation) j["collocation"].push_back(point_json(p));
  j["growth_cubes"] = nlohmann::json::array();
  for (const auto& q : prob.growth_cubes) {
    j["growth_cubes"].push_back({{"corner", point_json(q.corner())}, {"side", q.side()}});
  }
  return j.dump();
}

std::string capacity_solution_to_json(const CapacitySolution& sol) {
  nlohmann::json j;
  j["objective"] = sol.objective;
  j["status"] = sol.status;
  j["weights"] = sol.weights;
  j["growth_rows"] = sol.growth_rows;
  j["potential_rows_added"] = sol.potential_rows_added;
  j["potential_rows_total"] = sol.potential_rows_total;
  j["rounds"] = sol.rounds;
  j["pivots"] = sol.pivots;
  j["max_residual"] = sol.max_residual;
  j["active"] = nlohmann::json::array();
  for (const auto& a : sol.active) {
    j["active"].push_back({{"kind", a.kind}, {"index", a.index}, {"facet", a.facet}, {"slack", a.slack}});
  }
  return j.dump();
}

void write_constraint_matrix_csv(const CapacityProblem& prob, bool adjoint, std::ostream& out) {
  prob.validate();
  const int n = prob.n;
  const std::size_t na = prob.support.size();
  out << "kind,index,facet,rhs";
  for (std::size_t i = 0; i < na; ++i) out << ",a_" << (i + 1);
  out << '\n';
  for (std::size_t q = 0; q < prob.growth_cubes.size(); ++q) {
    out << "growth," << q << ",-1," << format_real(cap_of(prob.growth_cubes[q], n));
    for (std::size_t i = 0; i < na; ++i) out << ',' << (prob.growth_cubes[q].contains(prob.support[i]) ? "1" : "0");
    out << '\n';
  }
  const SupportData sup = flatten(prob.support, n);
  const auto dirs = facet_directions(n, prob.mode, prob.facets);
  std::vector<double> column;
  for (int kind = 0; kind < (adjoint ? 2 : 1); ++kind) {
    for (std::size_t p = 0; p < prob.collocation.size(); ++p) {
      const Coords c = coords_of(prob.collocation[p]);
      kernel_column(sup, c.data(), kind == 1, column);
      for (std::size_t f = 0; f < dirs.size(); ++f) {
        out << kind_name(kind) << ',' << p << ',' << f << ',' << format_real(1.0);
        for (std::size_t i = 0; i < na; ++i) {
          double v = 0.0;
          for (int j = 0; j < n; ++j) v += dirs[f].u[j] * column[i * static_cast<std::size_t>(n) + j];
          out << ',' << format_real(v);
        }
        out << '\n';
      }
    }
  }
}

}  // namespace parcal
