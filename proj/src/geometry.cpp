#include "parcal/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "parcal/error.hpp"

namespace parcal {

namespace {

void check_dim(int n) {
  if (n < 1 || n > kMaxSpatialDim) {
    throw ConfigError("spatial dimension must lie in [1, " + std::to_string(kMaxSpatialDim) +
                      "], got " + std::to_string(n));
  }
}

void check_finite(const ParaPoint& p) {
  for (int j = 0; j < p.dim(); ++j) {
    if (!std::isfinite(p.x(j))) throw ConfigError("non-finite spatial coordinate");
  }
  if (!std::isfinite(p.t())) throw ConfigError("non-finite time coordinate");
}

// Distance between [a0, a1] and [b0, b1], zero when they overlap.
double interval_gap(double a0, double a1, double b0, double b1) {
  return std::max({0.0, b0 - a1, a0 - b1});
}

}  // namespace

ParaPoint::ParaPoint(std::span<const double> x, double t) : n_(static_cast<int>(x.size())), t_(t) {
  check_dim(n_);
  std::copy(x.begin(), x.end(), x_.begin());
  check_finite(*this);
}

ParaPoint::ParaPoint(std::initializer_list<double> x, double t)
    : ParaPoint(std::span<const double>(x.begin(), x.size()), t) {}

ParaPoint ParaPoint::origin(int n) {
  check_dim(n);
  ParaPoint p;
  p.n_ = n;
  return p;
}

double ParaPoint::spatial_norm() const {
  double s = 0.0;
  for (int j = 0; j < n_; ++j) s += x_[j] * x_[j];
  return std::sqrt(s);
}

bool ParaPoint::is_origin() const {
  if (t_ != 0.0) return false;
  for (int j = 0; j < n_; ++j) {
    if (x_[j] != 0.0) return false;
  }
  return true;
}

ParaPoint operator-(const ParaPoint& a, const ParaPoint& b) {
  require_same_dim(a, b);
  ParaPoint r = a;
  for (int j = 0; j < a.n_; ++j) r.x_[j] -= b.x_[j];
  r.t_ -= b.t_;
  return r;
}

ParaPoint operator+(const ParaPoint& a, const ParaPoint& b) {
  require_same_dim(a, b);
  ParaPoint r = a;
  for (int j = 0; j < a.n_; ++j) r.x_[j] += b.x_[j];
  r.t_ += b.t_;
  return r;
}

bool operator==(const ParaPoint& a, const ParaPoint& b) {
  if (a.n_ != b.n_ || a.t_ != b.t_) return false;
  for (int j = 0; j < a.n_; ++j) {
    if (a.x_[j] != b.x_[j]) return false;
  }
  return true;
}

double SpatialVector::norm() const {
  double s = 0.0;
  for (int j = 0; j < n; ++j) s += v[j] * v[j];
  return std::sqrt(s);
}

SpatialVector& SpatialVector::operator+=(const SpatialVector& o) {
  for (int j = 0; j < n; ++j) v[j] += o.v[j];
  return *this;
}

SpatialVector& SpatialVector::operator*=(double s) {
  for (int j = 0; j < n; ++j) v[j] *= s;
  return *this;
}

SpatialVector operator-(const SpatialVector& a, const SpatialVector& b) {
  SpatialVector r = a;
  for (int j = 0; j < a.n; ++j) r.v[j] -= b.v[j];
  return r;
}

void require_same_dim(const ParaPoint& a, const ParaPoint& b) {
  if (a.dim() != b.dim()) {
    throw DimensionMismatch("spatial dimensions differ: " + std::to_string(a.dim()) + " vs " +
                            std::to_string(b.dim()));
  }
}

double dist_p(const ParaPoint& a, const ParaPoint& b) {
  require_same_dim(a, b);
  double s = 0.0;
  for (int j = 0; j < a.dim(); ++j) {
    const double d = a.x(j) - b.x(j);
    s += d * d;
  }
  return std::max(std::sqrt(s), std::sqrt(std::abs(a.t() - b.t())));
}

double norm_p(const ParaPoint& p) {
  return std::max(p.spatial_norm(), std::sqrt(std::abs(p.t())));
}

ParaBall::ParaBall(ParaPoint center, double radius) : center_(center), radius_(radius) {
  if (!(radius > 0.0) || !std::isfinite(radius)) throw ConfigError("ball radius must be positive");
}

bool ParaBall::contains(const ParaPoint& p) const { return dist_p(center_, p) <= radius_; }

ParaCube::ParaCube(ParaPoint corner, double side) : corner_(corner), side_(side) {
  if (!(side > 0.0) || !std::isfinite(side)) throw ConfigError("cube side must be positive");
}

ParaCube ParaCube::unit(int n) { return ParaCube(ParaPoint::origin(n), 1.0); }

ParaPoint ParaCube::center() const {
  ParaPoint c = corner_;
  for (int j = 0; j < c.dim(); ++j) c.x(j) += 0.5 * side_;
  c.t() += 0.5 * time_extent();
  return c;
}

double ParaCube::radius_p() const {
  const double spatial = 0.5 * side_ * std::sqrt(static_cast<double>(dim()));
  const double temporal = std::sqrt(0.5 * time_extent());
  return std::max(spatial, temporal);
}

bool ParaCube::contains(const ParaPoint& p) const {
  require_same_dim(corner_, p);
  for (int j = 0; j < dim(); ++j) {
    if (p.x(j) < corner_.x(j) || p.x(j) >= corner_.x(j) + side_) return false;
  }
  return p.t() >= corner_.t() && p.t() < corner_.t() + time_extent();
}

bool ParaCube::contains_closed(const ParaPoint& p) const {
  require_same_dim(corner_, p);
  for (int j = 0; j < dim(); ++j) {
    if (p.x(j) < corner_.x(j) || p.x(j) > corner_.x(j) + side_) return false;
  }
  return p.t() >= corner_.t() && p.t() <= corner_.t() + time_extent();
}

bool ParaCube::contains_cube(const ParaCube& inner, double slack) const {
  require_same_dim(corner_, inner.corner_);
  for (int j = 0; j < dim(); ++j) {
    if (inner.corner_.x(j) < corner_.x(j) - slack) return false;
    if (inner.corner_.x(j) + inner.side_ > corner_.x(j) + side_ + slack) return false;
  }
  return inner.corner_.t() >= corner_.t() - slack &&
         inner.corner_.t() + inner.time_extent() <= corner_.t() + time_extent() + slack;
}

double dist_p(const ParaCube& a, const ParaCube& b) {
  require_same_dim(a.corner(), b.corner());
  double s = 0.0;
  for (int j = 0; j < a.dim(); ++j) {
    const double g = interval_gap(a.corner().x(j), a.corner().x(j) + a.side(), b.corner().x(j),
                                  b.corner().x(j) + b.side());
    s += g * g;
  }
  const double gt = interval_gap(a.corner().t(), a.corner().t() + a.time_extent(), b.corner().t(),
                                 b.corner().t() + b.time_extent());
  return std::max(std::sqrt(s), std::sqrt(gt));
}

double dist_p(const ParaPoint& p, const ParaCube& q) {
  require_same_dim(p, q.corner());
  double s = 0.0;
  for (int j = 0; j < p.dim(); ++j) {
    const double g = interval_gap(p.x(j), p.x(j), q.corner().x(j), q.corner().x(j) + q.side());
    s += g * g;
  }
  const double gt = interval_gap(p.t(), p.t(), q.corner().t(), q.corner().t() + q.time_extent());
  return std::max(std::sqrt(s), std::sqrt(gt));
}

ParaCube concentric_scale(const ParaCube& q, double a) {
  if (!(a > 0.0)) throw ConfigError("concentric scale factor must be positive");
  const ParaPoint c = q.center();
  const double side = a * q.side();
  ParaPoint corner = c;
  for (int j = 0; j < c.dim(); ++j) corner.x(j) -= 0.5 * side;
  corner.t() -= 0.5 * side * side;
  return ParaCube(corner, side);
}

Dilation::Dilation(double lambda) : lambda_(lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ConfigError("dilation factor must be positive");
}

ParaPoint Dilation::operator()(const ParaPoint& p) const {
  ParaPoint r = p;
  for (int j = 0; j < p.dim(); ++j) r.x(j) *= lambda_;
  r.t() *= lambda_ * lambda_;
  return r;
}

ParaCube Dilation::operator()(const ParaCube& q) const {
  return ParaCube((*this)(q.corner()), lambda_ * q.side());
}

namespace {

std::int64_t floor_div_pow2(std::int64_t v, int shift) {
  // arithmetic shift floors toward -inf for two's complement
  return v >> shift;
}

}  // namespace

DyadicCubeId DyadicCubeId::parent() const {
  DyadicCubeId p = *this;
  p.k = k - 1;
  for (int j = 0; j < n; ++j) p.i[j] = floor_div_pow2(i[j], 1);
  p.i_time = floor_div_pow2(i_time, 2);
  return p;
}

std::vector<DyadicCubeId> DyadicCubeId::children() const {
  std::vector<DyadicCubeId> out;
  const int spatial = 1 << n;
  out.reserve(static_cast<std::size_t>(spatial) * 4);
  for (int tq = 0; tq < 4; ++tq) {
    for (int mask = 0; mask < spatial; ++mask) {
      DyadicCubeId c = *this;
      c.k = k + 1;
      for (int j = 0; j < n; ++j) c.i[j] = 2 * i[j] + ((mask >> j) & 1);
      c.i_time = 4 * i_time + tq;
      out.push_back(c);
    }
  }
  return out;
}

bool operator==(const DyadicCubeId& a, const DyadicCubeId& b) {
  if (a.k != b.k || a.n != b.n || a.i_time != b.i_time) return false;
  for (int j = 0; j < a.n; ++j) {
    if (a.i[j] != b.i[j]) return false;
  }
  return true;
}

std::size_t DyadicCubeIdHash::operator()(const DyadicCubeId& id) const noexcept {
  std::uint64_t h = 0x9E3779B97F4A7C15ull ^ static_cast<std::uint64_t>(id.k);
  auto mix = [&h](std::uint64_t v) {
    h ^= v + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
  };
  for (int j = 0; j < id.n; ++j) mix(static_cast<std::uint64_t>(id.i[j]));
  mix(static_cast<std::uint64_t>(id.i_time));
  return static_cast<std::size_t>(h);
}

DyadicCubeId dyadic_cube_at(const ParaPoint& p, int k) {
  DyadicCubeId id;
  id.k = k;
  id.n = p.dim();
  const double scale = std::ldexp(1.0, k);
  for (int j = 0; j < p.dim(); ++j) id.i[j] = static_cast<std::int64_t>(std::floor(p.x(j) * scale));
  id.i_time = static_cast<std::int64_t>(std::floor(p.t() * scale * scale));
  return id;
}

ParaCube dyadic_geometry(const DyadicCubeId& id) {
  const double side = std::ldexp(1.0, -id.k);
  ParaPoint corner = ParaPoint::origin(id.n);
  for (int j = 0; j < id.n; ++j) corner.x(j) = static_cast<double>(id.i[j]) * side;
  corner.t() = static_cast<double>(id.i_time) * side * side;
  return ParaCube(corner, side);
}

}  // namespace parcal
