#pragma once

// Self-similar parabolic Cantor set in R^3 (n = 2).
//
// The unit cube [0,1]^2 x [0,1] is replaced by 12 cubes of side
// lambda = 12^{-1/3}: eight at its vertices and four mid cubes, one on each
// vertical (time) edge, centered in time.  Normalized offsets:
//     corner children   x in {0, 1-lambda}^2,  t in {0, 1-lambda^2}
//     mid children      x in {0, 1-lambda}^2,  t = (1-lambda^2)/2.
// Since lambda < 1/2 and 3 lambda^2 < 1 the children are pairwise disjoint.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "parcal/geometry.hpp"
#include "parcal/measure.hpp"

namespace parcal {

inline constexpr int kCantorBranching = 12;
inline constexpr int kCantorMaxDepth = 16;  // paths are packed 4 bits per level

/// 12^{-1/3}.
double cantor_ratio();

struct CantorSpec {
  int max_generation = 7;
  /// Largest number of cubes a single generation may materialize.
  std::size_t max_atoms = 3'000'000;

  void validate() const;
};

struct CantorNode {
  int generation = 0;
  /// Child index of level j (1-based) in bits [4(j-1), 4j).
  std::uint64_t path = 0;
  ParaCube cube = ParaCube::unit(2);

  int child_index(int level) const { return static_cast<int>((path >> (4 * (level - 1))) & 0xF); }
};

/// Normalized corner offsets (x1, x2, t) of the 12 children.  Indices 0..7
/// are vertex children with bits (x1, x2, t); 8..11 are mid children with
/// bits (x1, x2).
const std::array<std::array<double, 3>, kCantorBranching>& cantor_child_offsets();
bool is_mid_child(int index);

std::array<ParaCube, kCantorBranching> cantor_children(const ParaCube& parent);

/// All 12^k cubes of generation k, in lexicographic path order.
std::vector<CantorNode> cantor_generation(const CantorSpec& spec, int k);

/// One atom of mass 12^{-k} at the center of each generation-k cube.
DiscreteMeasure cantor_natural_measure(const CantorSpec& spec, int k);

/// count atoms of equal mass at centers of generation-depth cubes chosen by
/// independent uniform paths (a sample of the natural measure).
DiscreteMeasure cantor_cloud(std::size_t count, int depth, std::uint64_t seed);

struct SeparationStats {
  int generation = 0;
  /// min / max of dist_p over pairs of distinct children of the same parent,
  /// divided by the generation side 12^{-k/3}.
  double min_sibling_ratio = 0.0;
  double max_sibling_ratio = 0.0;
  /// min of dist_p over all pairs of distinct generation-k cubes divided by
  /// the side; computed when 12^k <= 1728, NaN otherwise.
  double min_pair_ratio = 0.0;
};

SeparationStats separation_stats(const CantorSpec& spec, int k);

/// Upper leftmost corner of the closure: x1 minimal, x2 minimal, t maximal.
ParaPoint corner_point(const ParaCube& q);

struct ProjectionCounts {
  int spatial = 0;  // distinct squares in the (x1, x2) projection
  int x1_t = 0;     // distinct rectangles in the (x1, t) projection
  int x2_t = 0;     // distinct rectangles in the (x2, t) projection
};

ProjectionCounts child_projection_counts(const ParaCube& parent);

/// CSV with columns generation, path, x1, x2, t (corner), side.
void write_generation_csv(const std::vector<CantorNode>& nodes, std::ostream& out);

}  // namespace parcal
