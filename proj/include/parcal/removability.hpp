#pragma once

// Corner blow-up of the first kernel component on the Cantor set and the
// half-derivative BMO spot-check for growth-normalized Cantor measures.
//
// The nested cubes Q^h (h >= k) share the corner zbar = (x_1 min, x_2 min,
// t max) of Q^k: Q^{h+1} is the child of Q^h at offset (0, 0, 1 - lambda^2).
// The annulus Q^h \ Q^{h+1} is the union of the other eleven children.

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "parcal/geometry.hpp"
#include "parcal/grid.hpp"
#include "parcal/kernels.hpp"

namespace parcal {

/// Child index of the corner-preserving child.
inline constexpr int kCornerChild = 4;

struct CornerExperiment {
  int k = 1;        // base generation
  int m = 6;        // number of annuli
  int refine = 5;   // minimal descendant depth below the annulus level
  /// corner_sum raises the depth of an annulus up to this value while its
  /// error bound exceeds half its value.
  int max_refine = 7;
  double theta = 0.25;
  /// Child indices from the unit cube to Q^k; empty means the corner chain
  /// (every index kCornerChild).
  std::vector<int> base_path;

  void validate() const;
  ParaCube base_cube() const;
  ParaPoint corner() const;
  /// Q^h for h >= k.
  ParaCube level_cube(int h) const;
};

struct PositivityReport {
  bool nonnegative = true;
  double min_value = 0.0;
  ParaPoint worst;
  std::size_t samples = 0;
  std::size_t zero_samples = 0;
};

/// Scans K_1(zbar - y) over the closures of the annulus children of Q^h,
/// h = k..k+m-1, on a samples_per_axis^{n+1} grid per cube (vertices
/// included).  ConfigError unless zbar is the corner of the base cube.
PositivityReport positivity_check(const ParaPoint& zbar, const CornerExperiment& exp, int samples_per_axis = 9);
PositivityReport positivity_check(const CornerExperiment& exp, int samples_per_axis = 9);

struct AnnulusContribution {
  int level = 0;
  int refine = 0;
  double value = 0.0;
  double error = 0.0;
  std::size_t leaves = 0;
};

/// integral over Q^h \ Q^{h+1} of K_1(zbar - y) d mu(y), mu the natural
/// Cantor measure.  Descendants are split until they are at least `refine`
/// generations below h and diam_p <= theta * dist_p(zbar, center); each
/// leaf contributes its mass times the kernel at its center.  The error is
/// sum of mass * C_reg * radius / dist^{n+2}.  RefineRequired when the error
/// exceeds half the value.
AnnulusContribution annulus_contribution(const CornerExperiment& exp, int h);
/// Same sum without the error check.
AnnulusContribution annulus_quadrature(const CornerExperiment& exp, int h);

struct CornerRow {
  int m = 0;
  double S = 0.0;
  double increment = 0.0;
  double error = 0.0;
};

struct CornerTable {
  std::vector<AnnulusContribution> annuli;
  std::vector<CornerRow> rows;
  /// Least-squares fit S(m) = slope m + intercept over the rows.
  double slope = 0.0;
  double intercept = 0.0;
  /// max |S - fit| / max |S|.
  double relative_residual = 0.0;
  /// (max - min) / max of the increments.
  double increment_spread = 0.0;
};

/// Annuli h = k..k+m-1, each at the smallest depth in refine..max_refine
/// whose error bound is at most half its value; RefineRequired otherwise.
CornerTable corner_sum(const CornerExperiment& exp);
/// columns m,S,increment,error_estimate.
void write_corner_csv(const CornerTable& t, std::ostream& out);

struct BmoSpotSpec {
  int k = 2;
  /// Probe grid: nx spatial nodes per axis with step h = 1 / (nx - 1) and nt
  /// time nodes with step h^2, shifted by the fractions below of a cell.
  int nx = 9;
  int nt = 65;
  double shift_x1 = 0.37;
  double shift_x2 = 0.29;
  double shift_t = 0.41;
  /// Cubes of the smeared measure are split while diam_p > theta * dist_p
  /// to the probe, down to side l_k 2^{-max_split}.
  double theta = 1.0;
  int max_split = 6;
  unsigned threads = 0;

  void validate() const;
  GridSpec grid() const;
};

struct BmoSpotResult {
  int k = 0;
  double growth = 0.0;  // growth constant divided out of the measure
  BmoReport bmo;
  LipReport lip;        // of the half-derivative potential
  LipReport lip_W;      // of W * mu
  std::size_t probes = 0;
};

/// The generation-k Cantor measure spread uniformly over the generation-k
/// cubes (mass 12^{-k} each) and divided by its growth constant; its
/// half-derivative potential and W * mu are sampled on the probe grid by
/// adaptive cube splitting.  DomainError when a probe shares its spatial
/// position with a quadrature node.
BmoSpotResult bmo_spotcheck(const BmoSpotSpec& spec);

/// Growth constant of the smeared generation-k measure, estimated on its
/// atoms at the centers of the 16^2 sub-cubes two dyadic splits down, over
/// balls of radius >= l_k / 4.
double smeared_cantor_growth(int k);

}  // namespace parcal
