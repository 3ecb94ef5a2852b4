#include "parcal/measure.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "parallel.hpp"
#include "parcal/error.hpp"

namespace parcal {

namespace {

constexpr int kMaxTreeDepth = 48;

double sq(double v) { return v * v; }

double raw_dist(const double* a, const double* b, int n) {
  double s = 0.0;
  for (int j = 0; j < n; ++j) s += sq(a[j] - b[j]);
  return std::max(std::sqrt(s), std::sqrt(std::abs(a[n] - b[n])));
}

}  // namespace

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

DiscreteMeasure::DiscreteMeasure(int n, bool is_signed) : n_(n), signed_(is_signed) {
  if (n < 1 || n > kMaxSpatialDim) throw ConfigError("spatial dimension out of range");
}

DiscreteMeasure::DiscreteMeasure(const std::vector<ParaPoint>& points, const std::vector<double>& weights,
                                 bool is_signed)
    : DiscreteMeasure(points.empty() ? kDefaultSpatialDim : points.front().dim(), is_signed) {
  if (points.size() != weights.size()) throw ConfigError("points and weights differ in length");
  reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) add(points[i], weights[i]);
}

void DiscreteMeasure::reserve(std::size_t atoms) {
  coords_.reserve(atoms * static_cast<std::size_t>(stride()));
  weights_.reserve(atoms);
}

void DiscreteMeasure::add(const ParaPoint& p, double w) {
  if (p.dim() != n_) throw DimensionMismatch("atom dimension differs from the measure's");
  if (!std::isfinite(w)) throw ConfigError("non-finite weight");
  if (!signed_ && w < 0.0) throw ConfigError("negative weight in an unsigned measure");
  for (int j = 0; j < n_; ++j) coords_.push_back(p.x(j));
  coords_.push_back(p.t());
  weights_.push_back(w);
}

ParaPoint DiscreteMeasure::point(std::size_t i) const {
  const double* c = coords(i);
  return ParaPoint(std::span<const double>(c, static_cast<std::size_t>(n_)), c[n_]);
}

double DiscreteMeasure::total_mass() const {
  detail::CompensatedSum s;
  for (double w : weights_) s.add(w);
  return s.value();
}

double DiscreteMeasure::total_variation() const {
  detail::CompensatedSum s;
  for (double w : weights_) s.add(std::abs(w));
  return s.value();
}

DiscreteMeasure DiscreteMeasure::pushforward(const Dilation& d, double weight_factor) const {
  DiscreteMeasure out(n_, signed_);
  out.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) out.add(d(point(i)), weights_[i] * weight_factor);
  return out;
}

DiscreteMeasure DiscreteMeasure::translated(const ParaPoint& shift) const {
  DiscreteMeasure out(n_, signed_);
  out.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) out.add(point(i) + shift, weights_[i]);
  return out;
}

DiscreteMeasure DiscreteMeasure::scaled(double factor) const {
  DiscreteMeasure out(n_, signed_ || factor < 0.0);
  out.coords_ = coords_;
  out.weights_ = weights_;
  for (double& w : out.weights_) w *= factor;
  return out;
}

DiscreteMeasure DiscreteMeasure::joined(const DiscreteMeasure& other) const {
  if (other.n_ != n_) throw DimensionMismatch("measures of different dimension");
  DiscreteMeasure out(n_, signed_ || other.signed_);
  out.coords_ = coords_;
  out.coords_.insert(out.coords_.end(), other.coords_.begin(), other.coords_.end());
  out.weights_ = weights_;
  out.weights_.insert(out.weights_.end(), other.weights_.begin(), other.weights_.end());
  return out;
}

// ---------------------------------------------------------------------------

double box_distance(const ClusterNode& node, const double* p, int n) {
  double s = 0.0;
  for (int j = 0; j < n; ++j) {
    const double g = std::max({0.0, node.lo[j] - p[j], p[j] - node.hi[j]});
    s += g * g;
  }
  const double gt = std::max({0.0, node.lo[n] - p[n], p[n] - node.hi[n]});
  return std::max(std::sqrt(s), std::sqrt(gt));
}

ClusterTree::ClusterTree(const DiscreteMeasure& mu, std::size_t leaf_capacity)
    : mu_(&mu), leaf_capacity_(std::max<std::size_t>(1, leaf_capacity)) {
  if (mu.size() > std::numeric_limits<std::uint32_t>::max()) throw ResourceError("too many atoms for a cluster tree");
  const int n = mu.dim();
  order_.resize(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) order_[i] = static_cast<std::uint32_t>(i);
  nodes_.emplace_back();
  nodes_[0].begin = 0;
  nodes_[0].end = static_cast<std::uint32_t>(mu.size());
  finalize(nodes_[0]);
  if (mu.empty()) return;

  // Root: the smallest parabolic cube with corner at the low corner of the
  // bounding box that contains every atom.
  std::array<double, kMaxSpatialDim + 1> corner = nodes_[0].lo;
  double side = std::sqrt(nodes_[0].hi[n] - nodes_[0].lo[n]);
  for (int j = 0; j < n; ++j) side = std::max(side, nodes_[0].hi[j] - nodes_[0].lo[j]);
  side = side > 0.0 ? side * (1.0 + 1e-12) + 1e-300 : 1.0;
  build(0, corner, side, 0);
}

void ClusterTree::finalize(ClusterNode& node) const {
  const int n = mu_->dim();
  for (int j = 0; j <= n; ++j) {
    node.lo[j] = std::numeric_limits<double>::infinity();
    node.hi[j] = -std::numeric_limits<double>::infinity();
    node.centroid[j] = 0.0;
  }
  detail::CompensatedSum w, aw;
  for (std::uint32_t k = node.begin; k < node.end; ++k) {
    const std::uint32_t i = order_[k];
    const double* c = mu_->coords(i);
    const double wi = mu_->weight(i);
    for (int j = 0; j <= n; ++j) {
      node.lo[j] = std::min(node.lo[j], c[j]);
      node.hi[j] = std::max(node.hi[j], c[j]);
    }
    w.add(wi);
    aw.add(std::abs(wi));
  }
  node.weight = w.value();
  node.abs_weight = aw.value();
  if (node.count() == 0) return;
  // Centroid weighted by |w|; for a zero-weight cluster use the box center.
  for (int j = 0; j <= n; ++j) {
    if (node.abs_weight > 0.0) {
      detail::CompensatedSum s;
      for (std::uint32_t k = node.begin; k < node.end; ++k) {
        const std::uint32_t i = order_[k];
        s.add(std::abs(mu_->weight(i)) * mu_->coords(i)[j]);
      }
      node.centroid[j] = std::clamp(s.value() / node.abs_weight, node.lo[j], node.hi[j]);
    } else {
      node.centroid[j] = 0.5 * (node.lo[j] + node.hi[j]);
    }
  }
}

void ClusterTree::build(std::int32_t idx, const std::array<double, kMaxSpatialDim + 1>& corner, double side,
                        int depth) {
  const int n = mu_->dim();
  const std::uint32_t begin = nodes_[static_cast<std::size_t>(idx)].begin;
  const std::uint32_t end = nodes_[static_cast<std::size_t>(idx)].end;
  if (end - begin <= leaf_capacity_ || depth >= kMaxTreeDepth) return;

  const int spatial = 1 << n;
  const int nkeys = spatial * 4;
  const double half = 0.5 * side;
  const double quarter_t = 0.25 * side * side;
  auto key_of = [&](std::uint32_t i) {
    const double* c = mu_->coords(i);
    int key = 0;
    for (int j = 0; j < n; ++j) {
      if (c[j] >= corner[j] + half) key |= 1 << j;
    }
    const int tq = std::clamp(static_cast<int>(std::floor((c[n] - corner[n]) / quarter_t)), 0, 3);
    return key + spatial * tq;
  };

  // Counting sort of the range by child key keeps the order deterministic.
  std::vector<std::uint32_t> counts(static_cast<std::size_t>(nkeys) + 1, 0);
  std::vector<int> keys(end - begin);
  for (std::uint32_t k = begin; k < end; ++k) {
    keys[k - begin] = key_of(order_[k]);
    ++counts[static_cast<std::size_t>(keys[k - begin]) + 1];
  }
  for (int k = 0; k < nkeys; ++k) counts[static_cast<std::size_t>(k) + 1] += counts[static_cast<std::size_t>(k)];
  std::vector<std::uint32_t> sorted(end - begin);
  {
    std::vector<std::uint32_t> pos(counts.begin(), counts.end() - 1);
    for (std::uint32_t k = begin; k < end; ++k) {
      sorted[pos[static_cast<std::size_t>(keys[k - begin])]++] = order_[k];
    }
  }
  std::copy(sorted.begin(), sorted.end(), order_.begin() + begin);

  int nonempty = 0;
  for (int k = 0; k < nkeys; ++k) {
    if (counts[static_cast<std::size_t>(k) + 1] > counts[static_cast<std::size_t>(k)]) ++nonempty;
  }
  if (nonempty <= 1 && depth + 1 >= kMaxTreeDepth) return;

  const std::int32_t first = static_cast<std::int32_t>(nodes_.size());
  nodes_[static_cast<std::size_t>(idx)].first_child = first;
  nodes_[static_cast<std::size_t>(idx)].child_count = nonempty;
  std::vector<std::pair<int, std::int32_t>> made;
  for (int k = 0; k < nkeys; ++k) {
    const std::uint32_t b = begin + counts[static_cast<std::size_t>(k)];
    const std::uint32_t e = begin + counts[static_cast<std::size_t>(k) + 1];
    if (e == b) continue;
    ClusterNode child;
    child.begin = b;
    child.end = e;
    child.level = depth + 1;
    finalize(child);
    made.emplace_back(k, static_cast<std::int32_t>(nodes_.size()));
    nodes_.push_back(child);
  }
  for (const auto& [k, id] : made) {
    std::array<double, kMaxSpatialDim + 1> c = corner;
    for (int j = 0; j < n; ++j) {
      if ((k % spatial) & (1 << j)) c[j] += half;
    }
    c[n] += quarter_t * (k / spatial);
    build(id, c, half, depth + 1);
  }
}

double ClusterTree::mass_in_ball(const ParaPoint& center, double r) const {
  const int n = mu_->dim();
  if (center.dim() != n) throw DimensionMismatch("ball center dimension differs from the measure's");
  if (mu_->empty()) return 0.0;
  double cbuf[kMaxSpatialDim + 1];
  for (int j = 0; j < n; ++j) cbuf[j] = center.x(j);
  cbuf[n] = center.t();
  const double r2 = r * r;
  detail::CompensatedSum acc;
  std::vector<std::int32_t> stack{0};
  while (!stack.empty()) {
    const ClusterNode& node = nodes_[static_cast<std::size_t>(stack.back())];
    stack.pop_back();
    if (box_distance(node, cbuf, n) > r) continue;
    double far_s = 0.0;
    for (int j = 0; j < n; ++j) far_s += std::max(sq(cbuf[j] - node.lo[j]), sq(node.hi[j] - cbuf[j]));
    const double far_t = std::max(std::abs(cbuf[n] - node.lo[n]), std::abs(node.hi[n] - cbuf[n]));
    if (far_s <= r2 && far_t <= r2) {
      acc.add(node.weight);
      continue;
    }
    if (node.leaf()) {
      for (std::uint32_t k = node.begin; k < node.end; ++k) {
        const std::uint32_t i = order_[k];
        if (raw_dist(mu_->coords(i), cbuf, n) <= r) acc.add(mu_->weight(i));
      }
      continue;
    }
    for (std::int32_t c = node.child_count - 1; c >= 0; --c) stack.push_back(node.first_child + c);
  }
  return acc.value();
}

double ClusterTree::nearest_distance(std::size_t atom) const {
  const int n = mu_->dim();
  const double* p = mu_->coords(atom);
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::int32_t> stack{0};
  while (!stack.empty()) {
    const ClusterNode& node = nodes_[static_cast<std::size_t>(stack.back())];
    stack.pop_back();
    if (node.count() == 0 || box_distance(node, p, n) >= best) continue;
    if (node.leaf()) {
      for (std::uint32_t k = node.begin; k < node.end; ++k) {
        const double d = raw_dist(mu_->coords(order_[k]), p, n);
        if (d > 0.0 && d < best) best = d;
      }
      continue;
    }
    for (std::int32_t c = node.child_count - 1; c >= 0; --c) stack.push_back(node.first_child + c);
  }
  return best;
}

double ClusterTree::distance_to_support(const ParaPoint& pt) const {
  const int n = mu_->dim();
  if (pt.dim() != n) throw DimensionMismatch("point dimension differs from the measure's");
  double p[kMaxSpatialDim + 1];
  for (int j = 0; j < n; ++j) p[j] = pt.x(j);
  p[n] = pt.t();
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::int32_t> stack{0};
  while (!stack.empty()) {
    const ClusterNode& node = nodes_[static_cast<std::size_t>(stack.back())];
    stack.pop_back();
    if (node.count() == 0 || box_distance(node, p, n) >= best) continue;
    if (node.leaf()) {
      for (std::uint32_t k = node.begin; k < node.end; ++k) best = std::min(best, raw_dist(mu_->coords(order_[k]), p, n));
      continue;
    }
    for (std::int32_t c = node.child_count - 1; c >= 0; --c) stack.push_back(node.first_child + c);
  }
  return best;
}

// ---------------------------------------------------------------------------

double support_diameter(const DiscreteMeasure& mu) {
  if (mu.empty()) return 0.0;
  const int n = mu.dim();
  std::array<double, kMaxSpatialDim + 1> lo, hi;
  lo.fill(std::numeric_limits<double>::infinity());
  hi.fill(-std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < mu.size(); ++i) {
    for (int j = 0; j <= n; ++j) {
      lo[j] = std::min(lo[j], mu.coords(i)[j]);
      hi[j] = std::max(hi[j], mu.coords(i)[j]);
    }
  }
  double s = 0.0;
  for (int j = 0; j < n; ++j) s += sq(hi[j] - lo[j]);
  return std::max(std::sqrt(s), std::sqrt(hi[n] - lo[n]));
}

GrowthReport growth_constant(const DiscreteMeasure& mu, const BallFamily& family) {
  if (mu.is_signed()) throw ConfigError("growth constant needs an unsigned measure");
  if (family.radii_per_octave < 1) throw ConfigError("radii_per_octave must be positive");
  for (double r : family.radii) {
    if (!(r > 0.0)) throw ConfigError("ball radii must be positive");
  }
  GrowthReport rep;
  if (mu.empty()) {
    rep.family = "empty measure";
    return rep;
  }
  const int n = mu.dim();
  const ClusterTree tree(mu, 32);

  std::vector<std::size_t> centers;
  const std::size_t want = family.max_centers == 0 ? mu.size() : std::min(family.max_centers, mu.size());
  for (std::size_t k = 0; k < want; ++k) centers.push_back(k * mu.size() / want);

  std::vector<double> radii = family.radii;
  if (radii.empty()) {
    const double r_max = support_diameter(mu);
    double r_min = family.r_min;
    if (!(r_min > 0.0)) {
      r_min = std::numeric_limits<double>::infinity();
      for (std::size_t c : centers) r_min = std::min(r_min, tree.nearest_distance(c));
    }
    if (!(r_max > 0.0)) {
      radii.push_back(std::isfinite(r_min) && r_min > 0.0 ? r_min : 1.0);
    } else {
      if (!std::isfinite(r_min)) r_min = r_max;
      for (int j = 0;; ++j) {
        const double r = r_max * std::exp2(-static_cast<double>(j) / family.radii_per_octave);
        if (r < r_min * (1.0 - 1e-12)) break;
        radii.push_back(r);
      }
    }
  }

  struct Best {
    double ratio = -1.0;
    std::size_t center = 0;
    double radius = 0.0;
    double mass = 0.0;
  };
  std::vector<Best> per_center(centers.size());
  detail::parallel_for(centers.size(), 0, [&](std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) {
      const ParaPoint c = mu.point(centers[k]);
      Best best;
      for (double r : radii) {
        const double m = tree.mass_in_ball(c, r);
        const double ratio = m / std::pow(r, n + 1);
        if (ratio > best.ratio) best = {ratio, centers[k], r, m};
      }
      per_center[k] = best;
    }
  });
  Best best;
  for (const auto& b : per_center) {
    if (b.ratio > best.ratio) best = b;
  }
  std::ostringstream desc;
  desc << "closed balls centered at " << centers.size() << " support points, " << radii.size()
       << " radii in [" << format_real(*std::min_element(radii.begin(), radii.end())) << ", "
       << format_real(*std::max_element(radii.begin(), radii.end())) << "]";
  rep.family = desc.str();
  rep.balls = centers.size() * radii.size();
  rep.ratio = std::max(0.0, best.ratio);
  rep.witness_center = mu.point(best.center);
  rep.witness_radius = best.radius;
  rep.witness_mass = best.mass;
  return rep;
}

// ---------------------------------------------------------------------------

void write_measure_csv(const DiscreteMeasure& mu, std::ostream& out) {
  const int n = mu.dim();
  for (int j = 0; j < n; ++j) out << "x" << (j + 1) << ",";
  out << "t,w\n";
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double* c = mu.coords(i);
    for (int j = 0; j <= n; ++j) out << format_real(c[j]) << ",";
    out << format_real(mu.weight(i)) << "\n";
  }
}

DiscreteMeasure read_measure_csv(std::istream& in, bool is_signed) {
  std::string line;
  std::vector<std::vector<double>> rows;
  int columns = -1;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (std::isalpha(static_cast<unsigned char>(line[0]))) continue;  // header
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        throw ConfigError("bad number in measure CSV: '" + cell + "'");
      }
    }
    if (columns < 0) columns = static_cast<int>(row.size());
    if (static_cast<int>(row.size()) != columns) throw ConfigError("ragged measure CSV");
    rows.push_back(std::move(row));
  }
  if (columns < 0) return DiscreteMeasure(kDefaultSpatialDim, is_signed);
  const int n = columns - 2;
  DiscreteMeasure mu(n, is_signed);
  for (const auto& r : rows) {
    mu.add(ParaPoint(std::span<const double>(r.data(), static_cast<std::size_t>(n)), r[static_cast<std::size_t>(n)]),
           r.back());
  }
  return mu;
}

std::string measure_to_json(const DiscreteMeasure& mu) {
  nlohmann::json j;
  j["n"] = mu.dim();
  j["signed"] = mu.is_signed();
  nlohmann::json pts = nlohmann::json::array();
  for (std::size_t i = 0; i < mu.size(); ++i) {
    pts.push_back(std::vector<double>(mu.coords(i), mu.coords(i) + mu.stride()));
  }
  j["points"] = pts;
  j["weights"] = std::vector<double>(mu.weights().begin(), mu.weights().end());
  return j.dump();
}

DiscreteMeasure measure_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
    const int n = j.at("n").get<int>();
    DiscreteMeasure mu(n, j.value("signed", false));
    const auto& pts = j.at("points");
    const auto& ws = j.at("weights");
    if (pts.size() != ws.size()) throw ConfigError("points and weights differ in length");
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const auto row = pts[i].get<std::vector<double>>();
      if (static_cast<int>(row.size()) != n + 1) throw DimensionMismatch("point row has the wrong length");
      mu.add(ParaPoint(std::span<const double>(row.data(), static_cast<std::size_t>(n)), row.back()),
             ws[i].get<double>());
    }
    return mu;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad measure JSON: ") + e.what());
  }
}

}  // namespace parcal
