#include <algorithm>
#include <cmath>
#include <queue>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "parcal/error.hpp"
#include "parcal/kernels.hpp"

namespace parcal {

namespace {

using Rule = boost::math::quadrature::gauss_kronrod<double, 15>;

constexpr std::size_t kMaxSubdivisions = 400000;
constexpr int kTailDoublings = 80;
constexpr int kNearCutoffLevels = 12;

struct Piece {
  double a;
  double b;
  double value;
  double error;
  unsigned depth;
};

struct ByError {
  bool operator()(const Piece& l, const Piece& r) const {
    if (l.error != r.error) return l.error < r.error;
    return l.a > r.a;
  }
};

// Globally adaptive Gauss-Kronrod over a list of intervals: the interval
// with the largest error estimate is bisected until the summed error meets
// an absolute target.
class AdaptiveIntegrator {
 public:
  template <class F>
  AdaptiveIntegrator(F&& f, const QuadratureConfig& cfg) : f_(std::forward<F>(f)), cfg_(cfg) {}

  void add(double a, double b) {
    if (!(b > a)) return;
    push(evaluate(a, b, 0));
  }

  // Bisects the worst interval until the summed error (plus extra_error)
  // drops below abs_target; returns whether the target was met.
  bool refine(double abs_target, double extra_error) {
    std::size_t splits = 0;
    while (running_error_ + extra_error > abs_target) {
      if (queue_.empty() || splits >= kMaxSubdivisions) return false;
      Piece worst = queue_.top();
      if (worst.depth >= cfg_.max_depth) return false;
      queue_.pop();
      running_error_ -= worst.error;
      const double mid = 0.5 * (worst.a + worst.b);
      push(evaluate(worst.a, mid, worst.depth + 1));
      push(evaluate(mid, worst.b, worst.depth + 1));
      ++splits;
    }
    return true;
  }

  // Compensated sum in interval order, independent of refinement history.
  double sum_value() const {
    std::vector<Piece> all = pieces();
    std::sort(all.begin(), all.end(), [](const Piece& l, const Piece& r) { return l.a < r.a; });
    double s = 0.0, c = 0.0;
    for (const auto& p : all) {
      const double y = p.value;
      const double tsum = s + y;
      c += std::abs(s) >= std::abs(y) ? (s - tsum) + y : (y - tsum) + s;
      s = tsum;
    }
    return s + c;
  }

  double sum_error() const {
    double e = 0.0;
    for (const auto& p : pieces()) e += p.error;
    return e;
  }

  std::size_t evaluations() const { return evals_; }

 private:
  void push(const Piece& p) {
    running_error_ += p.error;
    queue_.push(p);
  }

  Piece evaluate(double a, double b, unsigned depth) {
    // Apply the rule on [-1, 1] and scale both the value and the error
    // estimate ourselves.
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    auto mapped = [&](double x) { return f_(mid + half * x); };
    double err = 0.0;
    const double v = Rule::integrate(mapped, -1.0, 1.0, 0, 0.0, &err);
    evals_ += 15;
    return Piece{a, b, half * v, half * err, depth};
  }

  std::vector<Piece> pieces() const {
    auto copy = queue_;
    std::vector<Piece> out;
    out.reserve(copy.size());
    while (!copy.empty()) {
      out.push_back(copy.top());
      copy.pop();
    }
    return out;
  }

  std::function<double(double)> f_;
  QuadratureConfig cfg_;
  std::priority_queue<Piece, std::vector<Piece>, ByError> queue_;
  double running_error_ = 0.0;
  std::size_t evals_ = 0;
};

std::vector<double> sorted_unique(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

// Adds the subintervals of [lo, hi] cut at the given sorted breakpoints.
void add_cut(AdaptiveIntegrator& integ, double lo, double hi, const std::vector<double>& cuts) {
  if (!(hi > lo)) return;
  double prev = lo;
  for (double c : cuts) {
    if (c <= prev || c >= hi) continue;
    integ.add(prev, c);
    prev = c;
  }
  integ.add(prev, hi);
}

}  // namespace

void QuadratureConfig::validate() const {
  if (!(rel_tol > 0.0)) throw ConfigError("quadrature tolerance must be positive");
  if (!(abs_tol >= 0.0)) throw ConfigError("quadrature absolute tolerance must be nonnegative");
  if (!(split_radius > 0.0)) throw ConfigError("split radius must be positive");
  if (!(truncation_radius > split_radius)) {
    throw ConfigError("truncation radius must exceed the split radius");
  }
  if (max_depth < 1) throw ConfigError("maximum subdivision depth must be at least 1");
}

QuadResult half_time_derivative(const HalfDerivativeInput& in, const QuadratureConfig& cfg) {
  cfg.validate();
  if (!in.f) throw ConfigError("half derivative needs an integrand");
  const double t = in.t;
  const double delta = cfg.split_radius;
  const double sb = in.support_begin;
  const double ft = in.f(t);

  // Near field: s = t +- v^2, v in (0, sqrt(delta)).  The paired difference
  // quotient g(v) behaves like f''(t) v^2 as v -> 0 but is dominated by
  // rounding there, so [0, v0] is replaced by g(v0) v0 / 3.
  const double root = std::sqrt(delta);
  auto near = [&](double v) {
    const double u = v * v;
    const double plus = in.f(t + u);
    const double minus = (t - u < sb) ? 0.0 : in.f(t - u);
    return 2.0 * (plus + minus - 2.0 * ft) / u;
  };
  const double v0 = std::ldexp(root, -kNearCutoffLevels);
  const double near_origin = near(v0) * v0 / 3.0;
  AdaptiveIntegrator near_integ(near, cfg);
  {
    std::vector<double> cuts;
    for (int j = 1; j < kNearCutoffLevels; ++j) cuts.push_back(std::ldexp(root, -j));
    if (t - sb > 0.0 && t - sb < delta) cuts.push_back(std::sqrt(t - sb));
    add_cut(near_integ, v0, root, sorted_unique(cuts));
  }

  // Far field: \int_{|s-t| > delta} f(s) |s-t|^{-3/2} ds - 4 f(t) / sqrt(delta).
  auto far = [&](double s) {
    if (s < sb) return 0.0;
    const double u = std::abs(s - t);
    return in.f(s) / (u * std::sqrt(u));
  };
  AdaptiveIntegrator far_integ(far, cfg);
  double radius = cfg.truncation_radius;
  std::vector<double> shell_cuts;
  for (double r = 2.0 * delta; r < radius; r *= 2.0) {
    shell_cuts.push_back(t - r);
    shell_cuts.push_back(t + r);
  }
  for (double b : in.breakpoints) shell_cuts.push_back(b);
  if (std::isfinite(sb)) shell_cuts.push_back(sb);
  shell_cuts = sorted_unique(shell_cuts);
  add_cut(far_integ, std::max(sb, t - radius), t - delta, shell_cuts);
  add_cut(far_integ, std::max(sb, t + delta), t + radius, shell_cuts);
  const double closed_form = -4.0 * ft / root;

  // Extend the far field until the analytic tail bound is negligible.
  double tail = 0.0;
  bool tail_controlled = static_cast<bool>(in.tail_bound);
  if (tail_controlled) {
    const double provisional = std::abs(near_integ.sum_value() + far_integ.sum_value() + closed_form);
    const double budget = 0.1 * std::max(cfg.rel_tol * provisional, in.abs_floor);
    tail = in.tail_bound(radius);
    for (int it = 0; it < kTailDoublings && tail > budget; ++it) {
      const double next = 2.0 * radius;
      std::vector<double> cuts = in.breakpoints;
      if (std::isfinite(sb)) cuts.push_back(sb);
      cuts = sorted_unique(cuts);
      add_cut(far_integ, std::max(sb, t - next), std::max(sb, t - radius), cuts);
      add_cut(far_integ, t + radius, t + next, cuts);
      radius = next;
      tail = in.tail_bound(radius);
    }
  }

  // Split the accuracy budget between near and far fields.
  const double provisional =
      near_origin + near_integ.sum_value() + far_integ.sum_value() + closed_form;
  const double abs_target = std::max(in.abs_floor, cfg.rel_tol * std::abs(provisional));
  const bool near_ok = near_integ.refine(0.5 * abs_target, std::abs(near_origin));
  const bool far_ok = far_integ.refine(0.5 * abs_target, tail);

  QuadResult r;
  r.value = near_origin + near_integ.sum_value() + far_integ.sum_value() + closed_form;
  r.error = std::abs(near_origin) + near_integ.sum_error() + far_integ.sum_error() + tail;
  r.evaluations = near_integ.evaluations() + far_integ.evaluations() + 2;
  r.tail_controlled = tail_controlled;
  const double target = std::max(cfg.rel_tol * std::abs(r.value), in.abs_floor);
  if (!(near_ok && far_ok) && r.error > target) {
    throw ToleranceNotMet("half time derivative quadrature did not reach the requested tolerance",
                          r.value, r.error);
  }
  return r;
}

}  // namespace parcal
