#pragma once

// Functions sampled on a parabolic grid (spatial step h, time step h^2) and
// the two seminorms estimated on them: parabolic BMO and Lip(1/2) in time.

#include <array>
#include <functional>
#include <iosfwd>
#include <vector>

#include "parcal/geometry.hpp"

namespace parcal {

struct GridSpec {
  int n = kDefaultSpatialDim;
  ParaPoint origin = ParaPoint::origin(kDefaultSpatialDim);
  double h = 1.0;
  std::array<int, kMaxSpatialDim> nx{};
  int nt = 1;

  void validate() const;
  std::size_t spatial_count() const;
  std::size_t size() const { return spatial_count() * static_cast<std::size_t>(nt); }
  /// Node (ix, it) with ix the flattened spatial index, first axis fastest.
  ParaPoint node(std::size_t ix, int it) const;
};

/// Uniform grid with the same number of spatial nodes on every axis.
GridSpec make_grid(int n, const ParaPoint& origin, double h, int nx, int nt);

class GridFunction {
 public:
  explicit GridFunction(GridSpec spec);
  GridFunction(GridSpec spec, std::vector<double> values);

  const GridSpec& spec() const { return spec_; }
  double& at(std::size_t ix, int it) { return values_[static_cast<std::size_t>(it) * stride_ + ix]; }
  double at(std::size_t ix, int it) const { return values_[static_cast<std::size_t>(it) * stride_ + ix]; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

  /// Samples f at every node.
  static GridFunction sample(const GridSpec& spec, const std::function<double(const ParaPoint&)>& f);

 private:
  GridSpec spec_;
  std::size_t stride_;
  std::vector<double> values_;
};

struct BmoReport {
  double value = 0.0;
  std::size_t cubes = 0;
  /// Spatial side (in grid cells) of the largest and smallest cubes scanned.
  int min_cells = 0;
  int max_cells = 0;
  /// Corner node and spatial size of the cube attaining the maximum.
  std::array<int, kMaxSpatialDim> witness_ix{};
  int witness_it = 0;
  int witness_cells = 0;
};

/// max over scanned cubes of the mean of |f - mean_Q f|.  A cube of m cells
/// covers m nodes per spatial axis and m^2 time nodes; m runs over the powers
/// of two that fit and the cube corners step by m/2 in space and m^2/2 in
/// time (dyadic cubes plus their half-shifted translates).  Lower bound for
/// the continuum norm.
BmoReport bmo_p_norm(const GridFunction& f);

struct LipReport {
  double value = 0.0;
  std::size_t pairs = 0;
};

/// max over same-x node pairs of |f(x,t) - f(x,u)| / |t - u|^{1/2}.
LipReport lip_half_t_seminorm(const GridFunction& f);

/// CSV: "# n=.., h=.., origin=.., nx=.., nt=.." header then one value per line
/// in storage order.
void write_grid_csv(const GridFunction& f, std::ostream& out);

}  // namespace parcal
