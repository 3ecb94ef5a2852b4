#include "parcal/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include "parcal/error.hpp"
#include "parcal/rng.hpp"

namespace parcal {

namespace {

constexpr double kPi = std::numbers::pi;

// (4 pi t)^{-n/2}
double heat_normalization(double t, int n) {
  const double base = 4.0 * kPi * t;
  double p = 1.0;
  for (int j = 0; j < n / 2; ++j) p *= base;
  if (n % 2 != 0) p *= std::sqrt(base);
  return 1.0 / p;
}

double squared_norm(const double* x, int n) {
  double s = 0.0;
  for (int j = 0; j < n; ++j) s += x[j] * x[j];
  return s;
}

}  // namespace

void KernelParams::validate() const {
  if (n < 1 || n > kMaxSpatialDim) throw ConfigError("spatial dimension out of range");
}

double heat_kernel_raw(const double* x, int n, double t) {
  if (t <= 0.0) return 0.0;
  return heat_normalization(t, n) * std::exp(-squared_norm(x, n) / (4.0 * t));
}

void heat_kernel_grad_raw(const double* x, int n, double t, double* out) {
  if (t <= 0.0) {
    for (int j = 0; j < n; ++j) out[j] = 0.0;
    return;
  }
  const double c = -heat_kernel_raw(x, n, t) / (2.0 * t);
  for (int j = 0; j < n; ++j) out[j] = c * x[j];
}

double heat_kernel(const ParaPoint& p) {
  if (p.is_origin()) throw DomainError("heat kernel evaluated at the origin");
  return heat_kernel_raw(p.x().data(), p.dim(), p.t());
}

SpatialVector heat_kernel_grad(const ParaPoint& p) {
  if (p.is_origin()) throw DomainError("gradient kernel evaluated at the origin");
  SpatialVector g(p.dim());
  heat_kernel_grad_raw(p.x().data(), p.dim(), p.t(), g.v.data());
  return g;
}

double heat_kernel_grad1(const ParaPoint& p) {
  if (p.is_origin()) throw DomainError("gradient kernel evaluated at the origin");
  const double t = p.t();
  if (t <= 0.0) return 0.0;
  return -p.x(0) / (2.0 * t) * heat_kernel_raw(p.x().data(), p.dim(), t);
}

double heat_kernel_dt(const ParaPoint& p) {
  if (p.is_origin()) throw DomainError("time derivative of the heat kernel at the origin");
  const double t = p.t();
  if (t <= 0.0) return 0.0;
  const double r2 = squared_norm(p.x().data(), p.dim());
  const double w = heat_kernel_raw(p.x().data(), p.dim(), t);
  return (-static_cast<double>(p.dim()) / (2.0 * t) + r2 / (4.0 * t * t)) * w;
}

QuadResult heat_kernel_half_dt(const ParaPoint& p, const QuadratureConfig& cfg) {
  cfg.validate();
  const int n = p.dim();
  const double r = p.spatial_norm();
  if (r == 0.0) throw DomainError("half time derivative of W needs a nonzero spatial offset");

  // Evaluate at (x/|x|, t/|x|^2) and rescale by |x|^{-(n+1)}.
  const double tau = p.t() / (r * r);
  const double scale = std::pow(r, -(n + 1));
  const double s_peak = 1.0 / (2.0 * n);
  const double w_max = heat_normalization(s_peak, n) * std::exp(-1.0 / (4.0 * s_peak));

  HalfDerivativeInput in;
  in.t = tau;
  in.support_begin = 0.0;
  in.f = [n](double s) {
    if (s <= 0.0) return 0.0;
    return heat_normalization(s, n) * std::exp(-1.0 / (4.0 * s));
  };
  for (int j = -10; j <= 10; ++j) in.breakpoints.push_back(std::ldexp(1.0, j));
  in.tail_bound = [tau, n, w_max](double radius) {
    double bound = 0.0;
    const double upper = tau + radius;
    if (upper > 0.0) bound += heat_normalization(upper, n) * 2.0 / std::sqrt(radius);
    else bound += w_max * 2.0 / std::sqrt(radius);
    if (tau - radius > 0.0) bound += w_max * 2.0 / std::sqrt(radius);
    return bound;
  };
  in.abs_floor = cfg.abs_tol / std::max(1.0, std::abs(tau));

  // Far from the spatial scale the integrand varies on the scale |tau|.
  const double time_scale = std::max(1.0, std::abs(tau));
  QuadratureConfig local = cfg;
  local.split_radius = cfg.split_radius * time_scale;
  local.truncation_radius = std::max(cfg.truncation_radius * time_scale, 2.0 * std::abs(tau) + 1.0);
  try {
    QuadResult q = half_time_derivative(in, local);
    q.value *= scale;
    q.error *= scale;
    return q;
  } catch (const ToleranceNotMet& e) {
    throw ToleranceNotMet(e.what(), e.best_estimate() * scale, e.error_estimate() * scale);
  }
}

std::string envelope_name(Envelope e) {
  switch (e) {
    case Envelope::Heat: return "W";
    case Envelope::Gradient: return "grad_W";
    case Envelope::TimeDerivative: return "dt_W";
    case Envelope::HalfTimeDerivative: return "half_dt_W";
  }
  return "?";
}

Envelope envelope_from_name(const std::string& name) {
  for (Envelope e : all_envelopes()) {
    if (envelope_name(e) == name) return e;
  }
  throw ConfigError("unknown envelope '" + name + "' (expected W, grad_W, dt_W or half_dt_W)");
}

std::vector<Envelope> all_envelopes() {
  return {Envelope::Heat, Envelope::Gradient, Envelope::TimeDerivative, Envelope::HalfTimeDerivative};
}

std::vector<ParaPoint> log_spaced_sample(const SamplerSpec& spec) {
  KernelParams{spec.n}.validate();
  if (!(spec.r_min > 0.0) || !(spec.r_max >= spec.r_min)) throw ConfigError("bad sampler radii");
  SplitMix64 rng(spec.seed);
  std::vector<ParaPoint> out;
  out.reserve(spec.samples);
  const double log_span = std::log(spec.r_max / spec.r_min);
  for (std::size_t i = 0; i < spec.samples; ++i) {
    const double frac = (static_cast<double>(i) + 0.5) / static_cast<double>(spec.samples);
    const double r = spec.r_min * std::exp(frac * log_span);
    const auto dir = rng.unit_vector(spec.n);
    const double a = rng.uniform();
    const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
    ParaPoint p = ParaPoint::origin(spec.n);
    if (rng.uniform() < 0.5) {
      for (int j = 0; j < spec.n; ++j) p.x(j) = r * dir[j];
      p.t() = sign * (a * r) * (a * r);
    } else {
      const double a_pos = std::max(a, 1e-12);
      for (int j = 0; j < spec.n; ++j) p.x(j) = a_pos * r * dir[j];
      p.t() = sign * r * r;
    }
    out.push_back(p);
  }
  return out;
}

double envelope_weight(Envelope e, const ParaPoint& p) {
  const int n = p.dim();
  const double rp = norm_p(p);
  switch (e) {
    case Envelope::Heat: return std::pow(rp, n);
    case Envelope::Gradient: return std::pow(rp, n + 1);
    case Envelope::TimeDerivative: return std::pow(rp, n + 2);
    case Envelope::HalfTimeDerivative: return std::pow(p.spatial_norm(), n - 1) * rp * rp;
  }
  return 0.0;
}

double kernel_magnitude(Envelope e, const ParaPoint& p, const QuadratureConfig& cfg) {
  switch (e) {
    case Envelope::Heat: return heat_kernel(p);
    case Envelope::Gradient: return heat_kernel_grad(p).norm();
    case Envelope::TimeDerivative: return std::abs(heat_kernel_dt(p));
    case Envelope::HalfTimeDerivative: return std::abs(heat_kernel_half_dt(p, cfg).value);
  }
  return 0.0;
}

BoundReport verify_bounds(Envelope e, const std::vector<ParaPoint>& sample, const QuadratureConfig& cfg) {
  BoundReport rep;
  rep.envelope = envelope_name(e);
  for (const auto& p : sample) {
    if (p.is_origin()) continue;
    if (e == Envelope::HalfTimeDerivative && p.spatial_norm() == 0.0) continue;
    const double ratio = kernel_magnitude(e, p, cfg) * envelope_weight(e, p);
    if (rep.samples == 0 || ratio > rep.ratio) {
      rep.ratio = ratio;
      rep.worst = p;
    }
    ++rep.samples;
  }
  return rep;
}

BoundReport verify_bounds(Envelope e, const SamplerSpec& spec, const QuadratureConfig& cfg) {
  return verify_bounds(e, log_spaced_sample(spec), cfg);
}

double regularity_ratio(const ParaPoint& a, const ParaPoint& b) {
  require_same_dim(a, b);
  if (a.is_origin()) throw ConfigError("regularity ratio needs a nonzero base point");
  const double d = dist_p(a, b);
  const double na = norm_p(a);
  if (d > 0.5 * na) throw ConfigError("regularity ratio needs dist_p(a, b) <= |a|_p / 2");
  if (d == 0.0) return 0.0;
  const SpatialVector diff = heat_kernel_grad(a) - heat_kernel_grad(b);
  return diff.norm() * std::pow(na, a.dim() + 2) / d;
}

std::vector<std::pair<ParaPoint, ParaPoint>> regularity_pairs(const SamplerSpec& spec) {
  const auto bases = log_spaced_sample(spec);
  SplitMix64 rng(spec.seed ^ 0x5DEECE66Dull);
  std::vector<std::pair<ParaPoint, ParaPoint>> out;
  out.reserve(bases.size());
  for (const auto& a : bases) {
    const double rho = 0.5 * norm_p(a) * std::max(rng.uniform(), 1e-6);
    const auto dir = rng.unit_vector(spec.n);
    const double b_frac = rng.uniform();
    const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
    ParaPoint b = a;
    if (rng.uniform() < 0.5) {
      for (int j = 0; j < spec.n; ++j) b.x(j) += rho * dir[j];
      b.t() += sign * (b_frac * rho) * (b_frac * rho);
    } else {
      for (int j = 0; j < spec.n; ++j) b.x(j) += b_frac * rho * dir[j];
      b.t() += sign * rho * rho;
    }
    // rounding may push the pair just outside the admissible region
    if (dist_p(a, b) > 0.5 * norm_p(a)) continue;
    out.emplace_back(a, b);
  }
  return out;
}

BoundReport regularity_constant(const SamplerSpec& spec) {
  BoundReport rep;
  rep.envelope = "regularity";
  for (const auto& [a, b] : regularity_pairs(spec)) {
    const double r = regularity_ratio(a, b);
    if (rep.samples == 0 || r > rep.ratio) {
      rep.ratio = r;
      rep.worst = a;
    }
    ++rep.samples;
  }
  return rep;
}

double cached_regularity_constant(int n) {
  static std::mutex mu;
  static std::map<int, double> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  SamplerSpec spec;
  spec.n = n;
  const double c = regularity_constant(spec).ratio;
  cache.emplace(n, c);
  return c;
}

}  // namespace parcal
