#pragma once

// Discrete measures on R^{n+1}, the dyadic cluster tree built over them, and
// growth (upper density) scans.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "parcal/geometry.hpp"

namespace parcal {

/// Weighted point masses stored as a flat array of (x_1..x_n, t) rows.
class DiscreteMeasure {
 public:
  explicit DiscreteMeasure(int n = kDefaultSpatialDim, bool is_signed = false);
  DiscreteMeasure(const std::vector<ParaPoint>& points, const std::vector<double>& weights,
                  bool is_signed = false);

  void add(const ParaPoint& p, double w);
  void reserve(std::size_t atoms);

  int dim() const { return n_; }
  std::size_t size() const { return weights_.size(); }
  bool empty() const { return weights_.empty(); }
  bool is_signed() const { return signed_; }

  ParaPoint point(std::size_t i) const;
  /// Row i: n spatial coordinates followed by the time coordinate.
  const double* coords(std::size_t i) const { return coords_.data() + i * stride(); }
  double weight(std::size_t i) const { return weights_[i]; }
  std::span<const double> weights() const { return weights_; }
  int stride() const { return n_ + 1; }

  double total_mass() const;
  double total_variation() const;

  /// Image under the dilation, weights multiplied by weight_factor.
  DiscreteMeasure pushforward(const Dilation& d, double weight_factor = 1.0) const;
  DiscreteMeasure translated(const ParaPoint& shift) const;
  DiscreteMeasure scaled(double factor) const;
  /// Union of the atoms of both measures (no merging of coincident atoms).
  DiscreteMeasure joined(const DiscreteMeasure& other) const;

 private:
  int n_;
  bool signed_;
  std::vector<double> coords_;
  std::vector<double> weights_;
};

/// Node of a ClusterTree: a dyadic parabolic cube of the root cube, with the
/// tight bounding box of the atoms it holds.
struct ClusterNode {
  std::array<double, kMaxSpatialDim + 1> lo{};
  std::array<double, kMaxSpatialDim + 1> hi{};
  std::array<double, kMaxSpatialDim + 1> centroid{};
  double weight = 0.0;
  double abs_weight = 0.0;
  std::uint32_t begin = 0;  // range in ClusterTree::order()
  std::uint32_t end = 0;
  std::int32_t first_child = -1;
  std::int32_t child_count = 0;
  int level = 0;

  std::size_t count() const { return end - begin; }
  bool leaf() const { return child_count == 0; }
};

class ClusterTree {
 public:
  ClusterTree(const DiscreteMeasure& mu, std::size_t leaf_capacity = 32);

  const DiscreteMeasure& measure() const { return *mu_; }
  const std::vector<ClusterNode>& nodes() const { return nodes_; }
  /// Atom indices grouped so that every node owns a contiguous range.
  const std::vector<std::uint32_t>& order() const { return order_; }
  std::size_t leaf_capacity() const { return leaf_capacity_; }

  /// mu of the closed ball B_p(center, r).
  double mass_in_ball(const ParaPoint& center, double r) const;
  /// Parabolic distance from atom i to the nearest other atom at a different
  /// location; +inf when there is none.
  double nearest_distance(std::size_t atom) const;
  /// Parabolic distance from p to the nearest atom (zero if p is an atom).
  double distance_to_support(const ParaPoint& p) const;

 private:
  void build(std::int32_t node, const std::array<double, kMaxSpatialDim + 1>& cube_corner, double side,
             int depth);
  void finalize(ClusterNode& node) const;

  const DiscreteMeasure* mu_;
  std::size_t leaf_capacity_;
  std::vector<ClusterNode> nodes_;
  std::vector<std::uint32_t> order_;
};

/// Parabolic distance from a point (raw coordinates) to a node's bounding box.
double box_distance(const ClusterNode& node, const double* p, int n);

/// Balls used by growth_constant.
struct BallFamily {
  /// Explicit radii; when empty the radii are r_max 2^{-j / radii_per_octave}
  /// down to r_min, with r_max the support diameter and r_min the smallest
  /// distance between distinct atoms unless set.
  std::vector<double> radii;
  int radii_per_octave = 4;
  double r_min = 0.0;
  /// Centers are support points; 0 means all of them, otherwise an evenly
  /// strided subset of this size.
  std::size_t max_centers = 0;
};

struct GrowthReport {
  std::string family;
  std::size_t balls = 0;
  double ratio = 0.0;
  ParaPoint witness_center;
  double witness_radius = 0.0;
  double witness_mass = 0.0;
};

/// sup over the family of mu(B) / r^{n+1}.  ConfigError for signed measures.
GrowthReport growth_constant(const DiscreteMeasure& mu, const BallFamily& family = {});

/// Parabolic diameter of the bounding box of the support.
double support_diameter(const DiscreteMeasure& mu);

// CSV: header line "x1,...,xn,t,w", one atom per row.  JSON:
// {"n": n, "signed": bool, "points": [[x..., t], ...], "weights": [...]}.
void write_measure_csv(const DiscreteMeasure& mu, std::ostream& out);
DiscreteMeasure read_measure_csv(std::istream& in, bool is_signed = false);
std::string measure_to_json(const DiscreteMeasure& mu);
DiscreteMeasure measure_from_json(const std::string& text);

/// "%.16e" formatting shared by every CSV writer.
std::string format_real(double v);

}  // namespace parcal
