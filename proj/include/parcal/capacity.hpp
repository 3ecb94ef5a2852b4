#pragma once

// Linear-programming estimators for the positive Lipschitz caloric
// capacities, Frostman-type content bounds and box-counting dimension.
//
// Capacity LP: maximize sum_i w_i over w >= 0 with
//     mu(Q) <= l(Q)^{n+1}                for every growth cube Q,
//     |(T mu)(p)| <= 1                   at every collocation point p,
//     |(T* mu)(p)| <= 1                  (adjoint, when requested),
// where mu = sum_i w_i delta_{y_i}.  The potential constraints are imposed
// in the chosen norm mode and added lazily: the LP is re-solved (dual
// simplex, warm start) with the most violated ones until none is violated.

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "parcal/geometry.hpp"
#include "parcal/lp.hpp"
#include "parcal/measure.hpp"

namespace parcal {

enum class NormMode {
  PerComponent,  // |(T mu)_j| <= 1 for each j
  Polyhedral,    // u . T mu <= 1 over the outward normals of a polytope around the unit ball
};

std::string norm_mode_name(NormMode m);
NormMode norm_mode_from_name(const std::string& s);

struct CapacityProblem {
  int n = kDefaultSpatialDim;
  std::vector<ParaPoint> support;
  std::vector<ParaPoint> collocation;
  std::vector<ParaCube> growth_cubes;
  NormMode mode = NormMode::PerComponent;
  /// Number of facets of the polygon for Polyhedral mode with n = 2 (even,
  /// >= 4).  Other n use the directions +-e_i and (+-e_i +- e_j)/sqrt 2.
  int facets = 8;
  bool include_adjoint = false;
  /// Minimal parabolic distance between collocation and support points.
  double clearance = 0.0;

  void validate() const;
  /// Image of the whole discretization under a dilation.
  CapacityProblem dilated(const Dilation& d) const;
};

struct CapacityOptions {
  LpOptions lp;
  /// Residual allowed on the potential constraints.
  double violation_tol = 1e-9;
  /// Violated constraints added per round.
  std::size_t batch = 256;
  std::size_t max_rounds = 500;
  unsigned threads = 0;
};

struct ActiveConstraint {
  std::string kind;   // "growth", "T" or "T*"
  std::size_t index;  // cube or collocation index
  int facet;          // component (PerComponent: 2j for +, 2j+1 for -) or facet
  double slack;
};

struct CapacitySolution {
  std::vector<double> weights;
  double objective = 0.0;
  std::vector<ActiveConstraint> active;
  std::string status;
  std::size_t growth_rows = 0;
  std::size_t potential_rows_added = 0;
  std::size_t potential_rows_total = 0;
  std::size_t rounds = 0;
  std::size_t pivots = 0;
  /// Largest constraint violation of the returned weights, evaluated on the
  /// unscaled data (growth: mu(Q) - l^{n+1}; potential: facet value - 1).
  double max_residual = 0.0;
};

/// T constraints only.
CapacitySolution estimate_S1(const CapacityProblem& prob, const CapacityOptions& opts = {});
/// T and T* constraints.
CapacitySolution estimate_tilde_gamma_plus(const CapacityProblem& prob, const CapacityOptions& opts = {});
/// Dispatches on prob.include_adjoint.
CapacitySolution solve_capacity(const CapacityProblem& prob, const CapacityOptions& opts = {});

/// Distinct dyadic cubes of scales k_min..k_max containing at least one point.
std::vector<ParaCube> dyadic_growth_cubes(const std::vector<ParaPoint>& support, int k_min, int k_max);

struct CollocationOptions {
  /// Stencil radii as multiples of the clearance.
  std::vector<double> rings{1.0, 2.0};
  /// Time lags (forward and backward) as multiples of radius^2.
  std::vector<double> lags{0.125, 0.5, 1.0};
  /// Midpoints of atom pairs closer than this multiple of the minimal spacing.
  double pair_factor = 1.5;
  /// Far shell: lattice points on the boundary of the support's bounding box
  /// enlarged by this multiple of its parabolic diameter, per axis count.
  double shell_factor = 1.0;
  int shell_points = 4;
};

/// Collocation set: ring stencils around every atom, midpoints of near
/// pairs shifted by the ring lags, and a far shell; points closer than the
/// clearance to the support are dropped.  Deterministic.
std::vector<ParaPoint> generate_collocation(const std::vector<ParaPoint>& support, double clearance,
                                            const CollocationOptions& opts = {});

/// Smallest parabolic distance between two distinct support points.
double minimal_spacing(const std::vector<ParaPoint>& support);

enum class PlaneKind {
  Graph,       // {x_1 = t}, parametrized by (x_2, t) in [0,1]^2
  Horizontal,  // {t = 0}, parametrized by (x_1, x_2) in [0,1]^2
};

std::string plane_kind_name(PlaneKind k);
PlaneKind plane_kind_from_name(const std::string& s);

struct PatchSpec {
  PlaneKind kind = PlaneKind::Graph;
  int level = 1;
  /// Clearance as a fraction of the minimal support spacing.
  double clearance_factor = 0.25;
  NormMode mode = NormMode::PerComponent;
  int facets = 8;
  bool include_adjoint = false;
  CollocationOptions collocation;
};

/// Level-L discretization of a unit patch of the plane (n = 2): atoms at the
/// centers of the parabolic cells of side 2^{-L} met by the plane, growth
/// cubes of dyadic scales 0..L, collocation from generate_collocation.
CapacityProblem plane_patch_problem(const PatchSpec& spec);

// Content and dimension -------------------------------------------------------

struct ContentProblem {
  /// Target cubes, all of the same dyadic scale (the deepest scale).
  std::vector<DyadicCubeId> targets;
  /// Number of coarser scales whose cubes carry constraints.
  int depth = 1;

  void validate() const;
};

/// Distinct dyadic cubes of scale k containing the points.
std::vector<DyadicCubeId> covering_cubes(const std::vector<ParaPoint>& points, int k);

struct ContentSolution {
  double value = 0.0;
  /// Weights on the target cubes (in input order).
  std::vector<double> weights;
  std::size_t constraints = 0;
};

/// maximize sum w over atoms at the target cube centers subject to
/// mu(Q) <= l(Q)^{n+1} for the targets and their ancestors up to depth
/// scales up (0 for no targets).  The constraint family is laminar, so the LP is solved exactly
/// bottom-up: v(Q) = min(l(Q)^{n+1}, sum over children v).
ContentSolution frostman_content_lower(const ContentProblem& prob);

/// Same LP through DenseSimplex; used to cross-check on small instances.
ContentSolution frostman_content_lower_simplex(const ContentProblem& prob, const LpOptions& opts = {});

/// sum of l^{n+1} over the dyadic cubes of scale k meeting the cubes
/// (half-open intersection).
double cover_content_upper(const std::vector<ParaCube>& cubes, int k);
/// Minimum of cover_content_upper over scales k_min..k_max.
double best_cover_content(const std::vector<ParaCube>& cubes, int k_min, int k_max);

struct BoxDimensionFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::vector<int> scales;
  std::vector<std::size_t> counts;
};

/// Least-squares slope of log2 N(k) against k, N(k) the number of dyadic
/// cubes of scale k containing points.  ConfigError for fewer than three
/// scales or a degenerate fit.
BoxDimensionFit box_dimension_estimate(const std::vector<ParaPoint>& points, int k_min, int k_max);

// Serialization ----------------------------------------------------------------

std::string capacity_problem_to_json(const CapacityProblem& prob);
std::string capacity_solution_to_json(const CapacitySolution& sol);
/// Dense constraint matrix (growth rows then all potential rows) as CSV:
/// kind,index,facet,rhs,a_1..a_N.
void write_constraint_matrix_csv(const CapacityProblem& prob, bool adjoint, std::ostream& out);

}  // namespace parcal
