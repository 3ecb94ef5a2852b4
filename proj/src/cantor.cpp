#include "parcal/cantor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <set>
#include <tuple>

#include "parcal/error.hpp"
#include "parcal/rng.hpp"

namespace parcal {

double cantor_ratio() {
  static const double lambda = std::cbrt(1.0 / 12.0);
  return lambda;
}

void CantorSpec::validate() const {
  if (max_generation < 0) throw ConfigError("maximum generation must be nonnegative");
  if (max_generation > kCantorMaxDepth) throw ConfigError("maximum generation exceeds the path capacity");
  if (max_atoms < 1) throw ConfigError("atom budget must be positive");
}

const std::array<std::array<double, 3>, kCantorBranching>& cantor_child_offsets() {
  static const auto table = [] {
    const double l = cantor_ratio();
    const double far_x = 1.0 - l;
    const double far_t = 1.0 - l * l;
    std::array<std::array<double, 3>, kCantorBranching> o{};
    for (int i = 0; i < 8; ++i) {
      o[static_cast<std::size_t>(i)] = {(i & 1) ? far_x : 0.0, (i & 2) ? far_x : 0.0, (i & 4) ? far_t : 0.0};
    }
    for (int i = 0; i < 4; ++i) {
      o[static_cast<std::size_t>(8 + i)] = {(i & 1) ? far_x : 0.0, (i & 2) ? far_x : 0.0, 0.5 * far_t};
    }
    return o;
  }();
  return table;
}

bool is_mid_child(int index) { return index >= 8; }

std::array<ParaCube, kCantorBranching> cantor_children(const ParaCube& parent) {
  if (parent.dim() != 2) throw DimensionMismatch("the Cantor construction lives in R^3 (n = 2)");
  const double side = parent.side();
  const double extent = parent.time_extent();
  const double child_side = side * cantor_ratio();
  const auto& off = cantor_child_offsets();
  std::array<ParaCube, kCantorBranching> out{
      ParaCube::unit(2), ParaCube::unit(2), ParaCube::unit(2), ParaCube::unit(2),
      ParaCube::unit(2), ParaCube::unit(2), ParaCube::unit(2), ParaCube::unit(2),
      ParaCube::unit(2), ParaCube::unit(2), ParaCube::unit(2), ParaCube::unit(2)};
  for (std::size_t i = 0; i < off.size(); ++i) {
    ParaPoint c = parent.corner();
    c.x(0) += off[i][0] * side;
    c.x(1) += off[i][1] * side;
    c.t() += off[i][2] * extent;
    out[i] = ParaCube(c, child_side);
  }
  return out;
}

namespace {

void check_generation(const CantorSpec& spec, int k) {
  spec.validate();
  if (k < 0 || k > spec.max_generation) throw ConfigError("generation outside [0, max_generation]");
  const double count = std::pow(static_cast<double>(kCantorBranching), k);
  if (count > static_cast<double>(spec.max_atoms)) {
    throw ResourceError("generation " + std::to_string(k) + " needs " + std::to_string(static_cast<long long>(count)) +
                        " cubes, above the budget of " + std::to_string(spec.max_atoms));
  }
}

}  // namespace

std::vector<CantorNode> cantor_generation(const CantorSpec& spec, int k) {
  check_generation(spec, k);
  std::vector<CantorNode> level{CantorNode{0, 0, ParaCube::unit(2)}};
  for (int g = 1; g <= k; ++g) {
    std::vector<CantorNode> next;
    next.reserve(level.size() * kCantorBranching);
    for (const auto& node : level) {
      const auto kids = cantor_children(node.cube);
      for (int i = 0; i < kCantorBranching; ++i) {
        next.push_back(CantorNode{g, node.path | (static_cast<std::uint64_t>(i) << (4 * (g - 1))),
                                  kids[static_cast<std::size_t>(i)]});
      }
    }
    level = std::move(next);
  }
  return level;
}

DiscreteMeasure cantor_natural_measure(const CantorSpec& spec, int k) {
  const auto nodes = cantor_generation(spec, k);
  const double w = std::pow(static_cast<double>(kCantorBranching), -k);
  DiscreteMeasure mu(2);
  mu.reserve(nodes.size());
  for (const auto& node : nodes) mu.add(node.cube.center(), w);
  return mu;
}

DiscreteMeasure cantor_cloud(std::size_t count, int depth, std::uint64_t seed) {
  if (depth < 0 || depth > 40) throw ConfigError("cloud depth must lie in [0, 40]");
  SplitMix64 rng(seed);
  DiscreteMeasure mu(2);
  mu.reserve(count);
  const double w = count > 0 ? 1.0 / static_cast<double>(count) : 0.0;
  for (std::size_t a = 0; a < count; ++a) {
    ParaCube q = ParaCube::unit(2);
    for (int g = 0; g < depth; ++g) {
      const auto kids = cantor_children(q);
      q = kids[static_cast<std::size_t>(rng.next() % kCantorBranching)];
    }
    mu.add(q.center(), w);
  }
  return mu;
}

SeparationStats separation_stats(const CantorSpec& spec, int k) {
  if (k < 1) throw ConfigError("separation needs generation k >= 1");
  const auto parents = cantor_generation(spec, k - 1);
  const double side = std::pow(cantor_ratio(), k);
  SeparationStats s;
  s.generation = k;
  s.min_sibling_ratio = std::numeric_limits<double>::infinity();
  s.max_sibling_ratio = 0.0;
  for (const auto& parent : parents) {
    const auto kids = cantor_children(parent.cube);
    for (std::size_t i = 0; i < kids.size(); ++i) {
      for (std::size_t j = i + 1; j < kids.size(); ++j) {
        const double d = dist_p(kids[i], kids[j]) / side;
        s.min_sibling_ratio = std::min(s.min_sibling_ratio, d);
        s.max_sibling_ratio = std::max(s.max_sibling_ratio, d);
      }
    }
  }
  s.min_pair_ratio = std::numeric_limits<double>::quiet_NaN();
  if (std::pow(12.0, k) <= 1728.0) {
    const auto all = cantor_generation(spec, k);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < all.size(); ++i) {
      for (std::size_t j = i + 1; j < all.size(); ++j) best = std::min(best, dist_p(all[i].cube, all[j].cube));
    }
    s.min_pair_ratio = best / side;
  }
  return s;
}

ParaPoint corner_point(const ParaCube& q) {
  ParaPoint p = q.corner();
  p.t() += q.time_extent();
  return p;
}

ProjectionCounts child_projection_counts(const ParaCube& parent) {
  const auto kids = cantor_children(parent);
  std::set<std::tuple<double, double>> spatial, x1t, x2t;
  for (const auto& q : kids) {
    spatial.emplace(q.corner().x(0), q.corner().x(1));
    x1t.emplace(q.corner().x(0), q.corner().t());
    x2t.emplace(q.corner().x(1), q.corner().t());
  }
  return {static_cast<int>(spatial.size()), static_cast<int>(x1t.size()), static_cast<int>(x2t.size())};
}

void write_generation_csv(const std::vector<CantorNode>& nodes, std::ostream& out) {
  out << "generation,path,x1,x2,t,side\n";
  for (const auto& node : nodes) {
    std::string path;
    for (int g = 1; g <= node.generation; ++g) {
      if (g > 1) path += '.';
      path += std::to_string(node.child_index(g));
    }
    if (path.empty()) path = "-";
    out << node.generation << "," << path << "," << format_real(node.cube.corner().x(0)) << ","
        << format_real(node.cube.corner().x(1)) << "," << format_real(node.cube.corner().t()) << ","
        << format_real(node.cube.side()) << "\n";
  }
}

}  // namespace parcal
