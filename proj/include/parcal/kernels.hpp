#pragma once

// The heat kernel W(x,t) = (4 pi t)^{-n/2} exp(-|x|^2 / 4t) for t > 0, zero for
// t <= 0, its spatial gradient K = grad_x W, its time derivative, and the half
// order time derivative
//
//     d_t^{1/2} f(x,t) = \int (f(x,s) - f(x,t)) / |s - t|^{3/2} ds.
//
// Constants come from differentiating W exactly:
//     grad_x W = -x / (2t) W,    d_t W = (-n / (2t) + |x|^2 / (4t^2)) W.
// For n = 2 the first component of K is -x_1 / (8 pi t^2) exp(-|x|^2 / 4t).

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "parcal/geometry.hpp"

namespace parcal {

struct KernelParams {
  int n = kDefaultSpatialDim;
  void validate() const;
};

/// Settings for the half time derivative quadrature.
///
/// For kernel evaluations the split radius and the truncation radius are
/// measured in the time units of the normalized point (x/|x|, t/|x|^2); the
/// half derivative of W is homogeneous of degree -(n+1) so the result is
/// rescaled afterwards.  For a generic integrand they are absolute.
struct QuadratureConfig {
  double rel_tol = 1e-8;
  double abs_tol = 1e-12;
  double split_radius = 0.0625;
  double truncation_radius = 64.0;
  unsigned max_depth = 18;

  void validate() const;
};

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
  std::size_t evaluations = 0;
  /// False when no tail bound was available for the truncated far field.
  bool tail_controlled = true;
};

/// Integrand description for half_time_derivative.
struct HalfDerivativeInput {
  std::function<double(double)> f;
  double t = 0.0;
  /// f vanishes for s < support_begin.
  double support_begin = -std::numeric_limits<double>::infinity();
  /// Extra subdivision points in s where f has structure.
  std::vector<double> breakpoints;
  /// Bound on |\int_{|u| > R} f(t+u) |u|^{-3/2} du|; empty means uncontrolled.
  std::function<double(double)> tail_bound;
  /// Absolute accuracy floor (added to rel_tol * |value|).
  double abs_floor = 0.0;
};

/// Split singular quadrature: the near field |s - t| < delta is paired
/// symmetrically and mapped with s = t +- v^2, the far field is integrated on
/// geometric shells, and the -f(t) part of the far field is done in closed form.
/// Throws ToleranceNotMet (with the best estimate) when the error estimate
/// exceeds the requested accuracy.
QuadResult half_time_derivative(const HalfDerivativeInput& in, const QuadratureConfig& cfg);

/// W.  Throws DomainError at the origin.
double heat_kernel(const ParaPoint& p);
/// K = grad_x W.  Zero vector for t <= 0; throws DomainError at the origin.
SpatialVector heat_kernel_grad(const ParaPoint& p);
/// First component of K, the hot path of the corner experiments.
double heat_kernel_grad1(const ParaPoint& p);
/// d_t W.  Zero for t < 0; throws DomainError at x = 0, t = 0.
double heat_kernel_dt(const ParaPoint& p);
/// d_t^{1/2} W.  Requires x != 0 (DomainError otherwise).
QuadResult heat_kernel_half_dt(const ParaPoint& p, const QuadratureConfig& cfg = {});

// Raw-coordinate forms used in summation loops (no validation).
double heat_kernel_raw(const double* x, int n, double t);
void heat_kernel_grad_raw(const double* x, int n, double t, double* out);

enum class Envelope { Heat, Gradient, TimeDerivative, HalfTimeDerivative };

std::string envelope_name(Envelope e);
Envelope envelope_from_name(const std::string& name);
std::vector<Envelope> all_envelopes();

struct SamplerSpec {
  int n = kDefaultSpatialDim;
  std::size_t samples = 10000;
  double r_min = 1e-3;
  double r_max = 1e3;
  std::uint64_t seed = 20240611;
};

/// Points with |p|_p log-spaced over [r_min, r_max] and pseudo-random
/// directions, half of them dominated by the spatial part and half by time.
std::vector<ParaPoint> log_spaced_sample(const SamplerSpec& spec);

struct BoundReport {
  std::string envelope;
  std::size_t samples = 0;
  double ratio = 0.0;
  ParaPoint worst;
};

/// Envelope value at p: |p|^n, |p|^{n+1}, |p|^{n+2}, |x|^{n-1} |p|^2.
double envelope_weight(Envelope e, const ParaPoint& p);
double kernel_magnitude(Envelope e, const ParaPoint& p, const QuadratureConfig& cfg = {});

/// sup over the sample of |kernel| * envelope weight.
BoundReport verify_bounds(Envelope e, const std::vector<ParaPoint>& sample,
                          const QuadratureConfig& cfg = {});
BoundReport verify_bounds(Envelope e, const SamplerSpec& spec, const QuadratureConfig& cfg = {});

/// |K(a) - K(b)| |a|_p^{n+2} / dist_p(a, b); requires dist_p(a, b) <= |a|_p / 2.
double regularity_ratio(const ParaPoint& a, const ParaPoint& b);

/// Admissible pairs (a, b) for regularity_ratio, deterministic in the seed.
std::vector<std::pair<ParaPoint, ParaPoint>> regularity_pairs(const SamplerSpec& spec);
BoundReport regularity_constant(const SamplerSpec& spec);

/// regularity_constant for the default sampler of dimension n, computed once.
double cached_regularity_constant(int n);

}  // namespace parcal
