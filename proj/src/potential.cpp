#include "parcal/potential.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>

#include "parallel.hpp"
#include "parcal/error.hpp"

namespace parcal {

namespace {

using Coords = std::array<double, kMaxSpatialDim + 1>;

Coords coords_of(const ParaPoint& p) {
  Coords c{};
  for (int j = 0; j < p.dim(); ++j) c[j] = p.x(j);
  c[p.dim()] = p.t();
  return c;
}

// Adds w K(d) to acc where d = (d_x, d_t); the caller has excluded d = 0.
void accumulate_kernel(const double* d, int n, double w, detail::CompensatedSum* acc) {
  const double dt = d[n];
  if (dt <= 0.0) return;
  const double c = -w * heat_kernel_raw(d, n, dt) / (2.0 * dt);
  if (c == 0.0) return;
  for (int j = 0; j < n; ++j) acc[j].add(c * d[j]);
}

bool is_zero(const double* d, int n) {
  for (int j = 0; j <= n; ++j) {
    if (d[j] != 0.0) return false;
  }
  return true;
}

// Offset of the kernel argument: p - y for T, y - p for the adjoint.
void offset(const double* p, const double* y, int n, bool adjoint, double* d) {
  for (int j = 0; j <= n; ++j) d[j] = adjoint ? y[j] - p[j] : p[j] - y[j];
}

SpatialVector to_vector(const detail::CompensatedSum* acc, int n) {
  SpatialVector v(n);
  for (int j = 0; j < n; ++j) v[j] = acc[j].value();
  return v;
}

SpatialVector direct_sum(const DiscreteMeasure& mu, const ParaPoint& p, bool adjoint, double eps, bool truncate) {
  if (p.dim() != mu.dim()) throw DimensionMismatch("probe dimension differs from the measure's");
  const int n = mu.dim();
  const Coords pc = coords_of(p);
  detail::CompensatedSum acc[kMaxSpatialDim];
  double d[kMaxSpatialDim + 1];
  for (std::size_t i = 0; i < mu.size(); ++i) {
    offset(pc.data(), mu.coords(i), n, adjoint, d);
    if (truncate) {
      if (dist_p(p, mu.point(i)) <= eps) continue;
    } else if (is_zero(d, n)) {
      throw DiagonalError("potential evaluated at an atom of the measure; use the truncated form");
    }
    accumulate_kernel(d, n, mu.weight(i), acc);
  }
  return to_vector(acc, n);
}

void check_eps(double eps) {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw ConfigError("truncation radius must be positive and finite");
}

}  // namespace

SpatialVector potential_T(const DiscreteMeasure& mu, const ParaPoint& p) { return direct_sum(mu, p, false, 0.0, false); }

SpatialVector potential_T_adjoint(const DiscreteMeasure& mu, const ParaPoint& p) {
  return direct_sum(mu, p, true, 0.0, false);
}

SpatialVector potential_T_eps(const DiscreteMeasure& mu, const ParaPoint& p, double eps) {
  check_eps(eps);
  return direct_sum(mu, p, false, eps, true);
}

SpatialVector potential_T_adjoint_eps(const DiscreteMeasure& mu, const ParaPoint& p, double eps) {
  check_eps(eps);
  return direct_sum(mu, p, true, eps, true);
}

double maximal_T_star(const DiscreteMeasure& mu, const ParaPoint& p, const std::vector<double>& eps_grid) {
  if (eps_grid.empty()) throw ConfigError("maximal operator needs a nonempty truncation grid");
  double best = 0.0;
  for (double eps : eps_grid) best = std::max(best, potential_T_eps(mu, p, eps).norm());
  return best;
}

// ---------------------------------------------------------------------------
// Treecode

void TreecodeConfig::validate() const {
  if (order < 0 || order > 32) throw ConfigError("treecode order must lie in [0, 32]");
  if (!(theta > 0.0) || theta > 0.5) throw ConfigError("centroid admissibility theta must lie in (0, 1/2]");
  if (!(variation > 0.0)) throw ConfigError("proxy admissibility bound must be positive");
  if (leaf_capacity < 1) throw ConfigError("leaf capacity must be positive");
}

struct TreecodeEvaluator::Impl {
  const DiscreteMeasure* mu;
  TreecodeConfig cfg;
  ClusterTree tree;
  int n;
  std::size_t proxy_count;
  double reg_constant = 0.0;
  // Per node: proxy points per axis and proxy weights (empty when unused).
  struct Proxy {
    std::array<std::vector<double>, kMaxSpatialDim + 1> axis;
    std::vector<double> weights;
  };
  std::vector<Proxy> proxies;

  Impl(const DiscreteMeasure& m, const TreecodeConfig& c)
      : mu(&m), cfg(c), tree(m, c.leaf_capacity), n(m.dim()) {
    proxy_count = 1;
    for (int j = 0; j <= n; ++j) proxy_count *= static_cast<std::size_t>(cfg.order + 1);
    if (cfg.order == 0) {
      reg_constant = cached_regularity_constant(n);
      return;
    }
    proxies.resize(tree.nodes().size());
    for (std::size_t k = 0; k < tree.nodes().size(); ++k) {
      if (tree.nodes()[k].count() > proxy_count) build_proxy(k);
    }
  }

  void build_proxy(std::size_t k) {
    const ClusterNode& node = tree.nodes()[k];
    Proxy& px = proxies[k];
    const int P = cfg.order;
    std::array<std::vector<double>, kMaxSpatialDim + 1> bary;
    std::size_t total = 1;
    for (int j = 0; j <= n; ++j) {
      const double lo = node.lo[j], hi = node.hi[j];
      if (hi > lo) {
        for (int i = 0; i <= P; ++i) {
          px.axis[j].push_back(0.5 * (lo + hi) + 0.5 * (hi - lo) * std::cos(std::numbers::pi * i / P));
          double w = (i % 2 == 0) ? 1.0 : -1.0;
          if (i == 0 || i == P) w *= 0.5;
          bary[j].push_back(w);
        }
      } else {
        px.axis[j].push_back(lo);
        bary[j].push_back(1.0);
      }
      total *= px.axis[j].size();
    }
    px.weights.assign(total, 0.0);
    std::array<std::vector<double>, kMaxSpatialDim + 1> basis;
    for (int j = 0; j <= n; ++j) basis[j].resize(px.axis[j].size());
    std::vector<double> tensor(total);
    for (std::uint32_t q = node.begin; q < node.end; ++q) {
      const std::uint32_t i = tree.order()[q];
      const double* y = mu->coords(i);
      for (int j = 0; j <= n; ++j) lagrange(px.axis[j], bary[j], y[j], basis[j]);
      // Tensor product, last axis fastest.
      const double w = mu->weight(i);
      std::size_t len = 1;
      tensor[0] = w;
      for (int j = 0; j <= n; ++j) {
        const std::size_t m = basis[j].size();
        for (std::size_t a = len; a-- > 0;) {
          const double v = tensor[a];
          for (std::size_t b = 0; b < m; ++b) tensor[a * m + b] = v * basis[j][b];
        }
        len *= m;
      }
      for (std::size_t a = 0; a < total; ++a) px.weights[a] += tensor[a];
    }
  }

  static void lagrange(const std::vector<double>& z, const std::vector<double>& w, double y, std::vector<double>& out) {
    const std::size_t m = z.size();
    for (std::size_t k = 0; k < m; ++k) {
      if (y == z[k]) {
        std::fill(out.begin(), out.end(), 0.0);
        out[k] = 1.0;
        return;
      }
    }
    double denom = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      out[k] = w[k] / (y - z[k]);
      denom += out[k];
    }
    for (std::size_t k = 0; k < m; ++k) out[k] /= denom;
  }

  // Kernel variation indicator over the node as seen from p at positive lag.
  double variation(const ClusterNode& node, const double* p, double lag) const {
    double far2 = 0.0, diag2 = 0.0;
    for (int j = 0; j < n; ++j) {
      far2 += std::max((p[j] - node.lo[j]) * (p[j] - node.lo[j]), (node.hi[j] - p[j]) * (node.hi[j] - p[j]));
      diag2 += (node.hi[j] - node.lo[j]) * (node.hi[j] - node.lo[j]);
    }
    const double extent_t = node.hi[n] - node.lo[n];
    return std::sqrt(diag2 * far2) / (2.0 * lag) + extent_t * (far2 / (4.0 * lag * lag) + (0.5 * n + 1.0) / lag);
  }

  TreecodeValue evaluate(const ParaPoint& pp, bool adjoint) const {
    if (pp.dim() != n) throw DimensionMismatch("probe dimension differs from the measure's");
    const Coords pc = coords_of(pp);
    const double* p = pc.data();
    TreecodeValue out;
    out.value = SpatialVector(n);
    if (mu->empty()) return out;
    detail::CompensatedSum acc[kMaxSpatialDim];
    detail::CompensatedSum bound;
    double d[kMaxSpatialDim + 1];
    const auto& nodes = tree.nodes();
    std::vector<std::int32_t> stack{0};
    while (!stack.empty()) {
      const ClusterNode& node = nodes[static_cast<std::size_t>(stack.back())];
      const std::size_t idx = static_cast<std::size_t>(stack.back());
      stack.pop_back();
      // Entirely on the zero side of the kernel's time cutoff.
      if (!adjoint && p[n] < node.lo[n]) continue;
      if (adjoint && p[n] > node.hi[n]) continue;

      if (cfg.order == 0) {
        const double dist = box_distance(node, p, n);
        double diag2 = 0.0;
        for (int j = 0; j < n; ++j) diag2 += (node.hi[j] - node.lo[j]) * (node.hi[j] - node.lo[j]);
        const double diam = std::max(std::sqrt(diag2), std::sqrt(node.hi[n] - node.lo[n]));
        if (node.count() > 1 && dist > 0.0 && diam <= cfg.theta * dist) {
          offset(p, node.centroid.data(), n, adjoint, d);
          accumulate_kernel(d, n, node.weight, acc);
          bound.add(node.abs_weight * reg_constant * diam / std::pow(dist, n + 2));
          ++out.cluster_terms;
          continue;
        }
      } else if (!proxies[idx].weights.empty()) {
        const double lag = adjoint ? node.lo[n] - p[n] : p[n] - node.hi[n];
        if (lag > 0.0 && variation(node, p, lag) <= cfg.variation) {
          apply_proxy(proxies[idx], p, adjoint, acc);
          ++out.cluster_terms;
          continue;
        }
      }
      if (node.leaf() || (cfg.order > 0 && node.count() <= proxy_count)) {
        for (std::uint32_t q = node.begin; q < node.end; ++q) {
          const std::uint32_t i = tree.order()[q];
          offset(p, mu->coords(i), n, adjoint, d);
          if (is_zero(d, n)) throw DiagonalError("potential evaluated at an atom of the measure");
          accumulate_kernel(d, n, mu->weight(i), acc);
          ++out.direct_terms;
        }
        continue;
      }
      for (std::int32_t c = node.child_count - 1; c >= 0; --c) stack.push_back(node.first_child + c);
    }
    out.value = to_vector(acc, n);
    out.error_bound = cfg.order == 0 ? bound.value() : std::numeric_limits<double>::quiet_NaN();
    return out;
  }

  void apply_proxy(const Proxy& px, const double* p, bool adjoint, detail::CompensatedSum* acc) const {
    std::array<std::size_t, kMaxSpatialDim + 1> idx{};
    double z[kMaxSpatialDim + 1];
    double d[kMaxSpatialDim + 1];
    detail::CompensatedSum local[kMaxSpatialDim];
    for (std::size_t a = 0; a < px.weights.size(); ++a) {
      for (int j = 0; j <= n; ++j) z[j] = px.axis[j][idx[j]];
      offset(p, z, n, adjoint, d);
      accumulate_kernel(d, n, px.weights[a], local);
      for (int j = n; j >= 0; --j) {
        if (++idx[j] < px.axis[j].size()) break;
        idx[j] = 0;
      }
    }
    for (int j = 0; j < n; ++j) acc[j].add(local[j].value());
  }
};

TreecodeEvaluator::TreecodeEvaluator(const DiscreteMeasure& mu, const TreecodeConfig& cfg) {
  cfg.validate();
  impl_ = std::make_unique<Impl>(mu, cfg);
}

TreecodeEvaluator::~TreecodeEvaluator() = default;

TreecodeValue TreecodeEvaluator::evaluate(const ParaPoint& p, bool adjoint) const { return impl_->evaluate(p, adjoint); }

std::vector<TreecodeValue> TreecodeEvaluator::evaluate_many(const std::vector<ParaPoint>& probes, bool adjoint) const {
  std::vector<TreecodeValue> out(probes.size());
  detail::parallel_for(probes.size(), impl_->cfg.threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) out[k] = impl_->evaluate(probes[k], adjoint);
  });
  return out;
}

const ClusterTree& TreecodeEvaluator::tree() const { return impl_->tree; }

// ---------------------------------------------------------------------------
// Half time derivative potentials

HalfPotentialValue half_dt_potential(const DiscreteMeasure& mu, const ParaPoint& p, const QuadratureConfig& cfg) {
  if (p.dim() != mu.dim()) throw DimensionMismatch("probe dimension differs from the measure's");
  detail::CompensatedSum value, error;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const ParaPoint d = p - mu.point(i);
    if (d.spatial_norm() == 0.0) {
      throw DomainError("half derivative potential probe shares its spatial coordinates with an atom");
    }
    const QuadResult q = heat_kernel_half_dt(d, cfg);
    value.add(mu.weight(i) * q.value);
    error.add(std::abs(mu.weight(i)) * q.error);
  }
  return {value.value(), error.value()};
}

namespace {
constexpr int kProfileDegree = 16;
constexpr int kProfileMaxDepth = 24;
}  // namespace

HalfDerivativeProfile::HalfDerivativeProfile(int n, const QuadratureConfig& cfg, double accuracy)
    : n_(n), cfg_(cfg), accuracy_(accuracy), tau_max_(std::ldexp(1.0, 40)) {
  KernelParams{n}.validate();
  cfg.validate();
  if (!(accuracy > 0.0)) throw ConfigError("profile accuracy must be positive");
  std::vector<double> cuts{0.0};
  for (int j = -4; j <= 40; ++j) {
    cuts.push_back(std::ldexp(1.0, j));
    cuts.push_back(-std::ldexp(1.0, j));
  }
  std::sort(cuts.begin(), cuts.end());
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) build_panel(cuts[k], cuts[k + 1], 0);
}

double HalfDerivativeProfile::direct(double tau) const {
  ParaPoint p = ParaPoint::origin(n_);
  p.x(0) = 1.0;
  p.t() = tau;
  try {
    return heat_kernel_half_dt(p, cfg_).value;
  } catch (const ToleranceNotMet& e) {
    return e.best_estimate();
  }
}

double HalfDerivativeProfile::interpolate(const Panel& pan, double tau) const {
  static const auto nodes = [] {
    std::array<double, kProfileDegree + 1> c{};
    for (int k = 0; k <= kProfileDegree; ++k) c[static_cast<std::size_t>(k)] = std::cos(std::numbers::pi * k / kProfileDegree);
    return c;
  }();
  const double mid = 0.5 * (pan.a + pan.b), half = 0.5 * (pan.b - pan.a);
  const double s = (tau - mid) / half;
  double num = 0.0, den = 0.0;
  for (int k = 0; k <= kProfileDegree; ++k) {
    const double diff = s - nodes[static_cast<std::size_t>(k)];
    if (diff == 0.0) return pan.values[static_cast<std::size_t>(k)];
    double w = (k % 2 == 0) ? 1.0 : -1.0;
    if (k == 0 || k == kProfileDegree) w *= 0.5;
    w /= diff;
    num += w * pan.values[static_cast<std::size_t>(k)];
    den += w;
  }
  return num / den;
}

void HalfDerivativeProfile::build_panel(double a, double b, int depth) {
  Panel pan{a, b, {}};
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  double scale = 0.0;
  for (int k = 0; k <= kProfileDegree; ++k) {
    pan.values.push_back(direct(mid + half * std::cos(std::numbers::pi * k / kProfileDegree)));
    scale = std::max(scale, std::abs(pan.values.back()));
  }
  double worst = 0.0;
  for (int k = 0; k < kProfileDegree; ++k) {
    const double s = std::cos(std::numbers::pi * (k + 0.5) / kProfileDegree);
    const double tau = mid + half * s;
    worst = std::max(worst, std::abs(interpolate(pan, tau) - direct(tau)));
  }
  const double rel = scale > 0.0 ? worst / scale : worst;
  if (rel > accuracy_ && depth < kProfileMaxDepth) {
    build_panel(a, mid, depth + 1);
    build_panel(mid, b, depth + 1);
    return;
  }
  check_error_ = std::max(check_error_, rel);
  panels_.push_back(std::move(pan));
}

double HalfDerivativeProfile::profile(double tau) const {
  if (!std::isfinite(tau)) throw ConfigError("non-finite profile argument");
  if (tau < -tau_max_ || tau > tau_max_) return direct(tau);
  auto it = std::upper_bound(panels_.begin(), panels_.end(), tau, [](double v, const Panel& p) { return v < p.a; });
  if (it != panels_.begin()) --it;
  return interpolate(*it, tau);
}

double HalfDerivativeProfile::operator()(const ParaPoint& p) const {
  if (p.dim() != n_) throw DimensionMismatch("profile dimension differs from the point's");
  const double r = p.spatial_norm();
  if (r == 0.0) throw DomainError("half time derivative of W needs a nonzero spatial offset");
  return std::pow(r, -(n_ + 1)) * profile(p.t() / (r * r));
}

const HalfDerivativeProfile& cached_half_profile(int n) {
  static std::mutex mu;
  static std::map<int, std::unique_ptr<HalfDerivativeProfile>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<HalfDerivativeProfile>(n);
  return *slot;
}

double half_dt_potential_fast(const DiscreteMeasure& mu, const ParaPoint& p, const HalfDerivativeProfile& g) {
  if (p.dim() != mu.dim() || g.dim() != mu.dim()) throw DimensionMismatch("dimension mismatch in half potential");
  const int n = mu.dim();
  detail::CompensatedSum value;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double* y = mu.coords(i);
    double r2 = 0.0;
    for (int j = 0; j < n; ++j) r2 += (p.x(j) - y[j]) * (p.x(j) - y[j]);
    if (r2 == 0.0) throw DomainError("half derivative potential probe shares its spatial coordinates with an atom");
    const double r = std::sqrt(r2);
    value.add(mu.weight(i) * std::pow(r, -(n + 1)) * g.profile((p.t() - y[n]) / r2));
  }
  return value.value();
}

}  // namespace parcal
