#pragma once

// Caloric potentials of discrete measures:
//     T mu(p)  = sum_i w_i K(p - y_i),      T* mu(p) = sum_i w_i K(y_i - p),
// with K = grad_x W, their truncations, and the half time derivative
// potential sum_i w_i d_t^{1/2} W(p - y_i).

#include <memory>
#include <vector>

#include "parcal/kernels.hpp"
#include "parcal/measure.hpp"

namespace parcal {

/// Direct summation.  DiagonalError when p is an atom.
SpatialVector potential_T(const DiscreteMeasure& mu, const ParaPoint& p);
SpatialVector potential_T_adjoint(const DiscreteMeasure& mu, const ParaPoint& p);

/// Sum over atoms with dist_p(p, y) > eps.
SpatialVector potential_T_eps(const DiscreteMeasure& mu, const ParaPoint& p, double eps);
SpatialVector potential_T_adjoint_eps(const DiscreteMeasure& mu, const ParaPoint& p, double eps);

/// max over the grid of |T_eps mu(p)|; a lower bound for T_* mu(p).
double maximal_T_star(const DiscreteMeasure& mu, const ParaPoint& p, const std::vector<double>& eps_grid);

struct TreecodeConfig {
  /// Order of the tensor Chebyshev proxies; 0 summarizes a cluster by its
  /// weighted centroid.
  int order = 10;
  /// Centroid admissibility (order 0): diam_p(cluster) <= theta dist_p(p, cluster).
  double theta = 0.25;
  /// Proxy admissibility (order > 0): bound on the variation of the kernel's
  /// logarithm over the cluster, seen from a probe strictly after it in time.
  double variation = 4.0;
  std::size_t leaf_capacity = 64;
  /// 0 means hardware concurrency.
  unsigned threads = 0;

  void validate() const;
};

struct TreecodeValue {
  SpatialVector value;
  /// Bound on |value - direct sum| from the kernel regularity constant; only
  /// available for order 0 (NaN otherwise).
  double error_bound = 0.0;
  std::size_t direct_terms = 0;
  std::size_t cluster_terms = 0;
};

/// Hierarchical evaluation of T mu and T* mu.  Immutable after construction.
class TreecodeEvaluator {
 public:
  TreecodeEvaluator(const DiscreteMeasure& mu, const TreecodeConfig& cfg = {});
  ~TreecodeEvaluator();
  TreecodeEvaluator(const TreecodeEvaluator&) = delete;
  TreecodeEvaluator& operator=(const TreecodeEvaluator&) = delete;

  TreecodeValue evaluate(const ParaPoint& p, bool adjoint = false) const;
  /// Evaluation over many probes, parallel over probes; the result does not
  /// depend on the thread count.
  std::vector<TreecodeValue> evaluate_many(const std::vector<ParaPoint>& probes, bool adjoint = false) const;

  const ClusterTree& tree() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct HalfPotentialValue {
  double value = 0.0;
  double error = 0.0;
};

/// sum_i w_i d_t^{1/2} W(p - y_i) by per-atom quadrature.  DomainError when
/// p shares its spatial coordinates with an atom.
HalfPotentialValue half_dt_potential(const DiscreteMeasure& mu, const ParaPoint& p,
                                     const QuadratureConfig& cfg = {});

/// Tabulated profile g(tau) = d_t^{1/2} W(e_1, tau), so that
/// d_t^{1/2} W(x, t) = |x|^{-(n+1)} g(t / |x|^2).  Piecewise Chebyshev panels
/// are refined at construction until they match the quadrature to `accuracy`
/// (relative to the local profile magnitude); outside the tabulated range the
/// quadrature is called directly.
class HalfDerivativeProfile {
 public:
  HalfDerivativeProfile(int n, const QuadratureConfig& cfg = {}, double accuracy = 1e-7);
  int dim() const { return n_; }
  double profile(double tau) const;
  double operator()(const ParaPoint& p) const;
  std::size_t panels() const { return panels_.size(); }
  /// Largest relative mismatch against the quadrature seen at the check points.
  double max_check_error() const { return check_error_; }

 private:
  struct Panel {
    double a, b;
    std::vector<double> values;  // at Chebyshev points of the second kind
  };
  double interpolate(const Panel& p, double tau) const;
  double direct(double tau) const;
  void build_panel(double a, double b, int depth);

  int n_;
  QuadratureConfig cfg_;
  double accuracy_;
  double tau_max_;
  std::vector<Panel> panels_;  // sorted by a, covering [-tau_max, tau_max]
  double check_error_ = 0.0;
};

/// Shared profile for dimension n and default quadrature settings.
const HalfDerivativeProfile& cached_half_profile(int n);

/// Same sum as half_dt_potential with the tabulated profile.
double half_dt_potential_fast(const DiscreteMeasure& mu, const ParaPoint& p, const HalfDerivativeProfile& g);

}  // namespace parcal
