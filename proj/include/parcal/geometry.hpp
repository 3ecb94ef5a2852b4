#pragma once

// Parabolic metric geometry on R^{n+1} = R^n_x x R_t.
//
// Time scales like length squared: the distance is max(|x - y|, |t - u|^{1/2})
// and a cube of spatial side l has time extent l^2.  Cubes are half-open so
// that the dyadic lattice is a partition; balls are closed.

#include <array>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

namespace parcal {

inline constexpr int kMaxSpatialDim = 6;
inline constexpr int kDefaultSpatialDim = 2;

class ParaPoint {
 public:
  ParaPoint() = default;
  ParaPoint(std::span<const double> x, double t);
  ParaPoint(std::initializer_list<double> x, double t);
  static ParaPoint origin(int n);

  int dim() const { return n_; }
  std::span<const double> x() const { return {x_.data(), static_cast<std::size_t>(n_)}; }
  std::span<double> x() { return {x_.data(), static_cast<std::size_t>(n_)}; }
  double x(int j) const { return x_[static_cast<std::size_t>(j)]; }
  double& x(int j) { return x_[static_cast<std::size_t>(j)]; }
  double t() const { return t_; }
  double& t() { return t_; }

  /// Euclidean norm of the spatial part.
  double spatial_norm() const;
  bool is_origin() const;

  friend ParaPoint operator-(const ParaPoint& a, const ParaPoint& b);
  friend ParaPoint operator+(const ParaPoint& a, const ParaPoint& b);
  friend bool operator==(const ParaPoint& a, const ParaPoint& b);

 private:
  int n_ = 0;
  std::array<double, kMaxSpatialDim> x_{};
  double t_ = 0.0;
};

/// Spatial vector, the value type of the gradient kernel.
struct SpatialVector {
  int n = 0;
  std::array<double, kMaxSpatialDim> v{};

  explicit SpatialVector(int dim = 0) : n(dim) {}
  double operator[](int j) const { return v[static_cast<std::size_t>(j)]; }
  double& operator[](int j) { return v[static_cast<std::size_t>(j)]; }
  double norm() const;
  SpatialVector& operator+=(const SpatialVector& o);
  SpatialVector& operator*=(double s);
};

SpatialVector operator-(const SpatialVector& a, const SpatialVector& b);

void require_same_dim(const ParaPoint& a, const ParaPoint& b);

/// max(|x - y|, |t - u|^{1/2}).
double dist_p(const ParaPoint& a, const ParaPoint& b);
/// |p|_p, the parabolic distance to the origin.
double norm_p(const ParaPoint& p);

class ParaBall {
 public:
  ParaBall(ParaPoint center, double radius);
  const ParaPoint& center() const { return center_; }
  double radius() const { return radius_; }
  bool contains(const ParaPoint& p) const;  // closed ball

 private:
  ParaPoint center_;
  double radius_;
};

class ParaCube {
 public:
  ParaCube(ParaPoint corner, double side);
  static ParaCube unit(int n);

  const ParaPoint& corner() const { return corner_; }
  double side() const { return side_; }
  double time_extent() const { return side_ * side_; }
  int dim() const { return corner_.dim(); }
  ParaPoint center() const;
  /// Largest parabolic distance from the center to a point of the closure.
  double radius_p() const;
  double diam_p() const { return 2.0 * radius_p(); }

  bool contains(const ParaPoint& p) const;         // half-open
  bool contains_closed(const ParaPoint& p) const;  // closure
  /// Closure of `inner` lies in the closure of *this.
  bool contains_cube(const ParaCube& inner, double slack = 0.0) const;

 private:
  ParaPoint corner_;
  double side_;
};

/// Parabolic distance between the closures of two cubes.
double dist_p(const ParaCube& a, const ParaCube& b);
double dist_p(const ParaPoint& p, const ParaCube& q);

/// Same center, side a * side.
ParaCube concentric_scale(const ParaCube& q, double a);

class Dilation {
 public:
  explicit Dilation(double lambda);
  double lambda() const { return lambda_; }
  ParaPoint operator()(const ParaPoint& p) const;
  ParaCube operator()(const ParaCube& q) const;

 private:
  double lambda_;
};

/// Cube of the parabolic dyadic lattice D_{p,k}:
/// [i_j 2^-k, (i_j+1) 2^-k) in space, [i_t 4^-k, (i_t+1) 4^-k) in time.
struct DyadicCubeId {
  int k = 0;
  int n = 0;
  std::array<std::int64_t, kMaxSpatialDim> i{};
  std::int64_t i_time = 0;

  DyadicCubeId parent() const;
  /// Children of the next finer scale: 2^n spatial halves times 4 time quarters.
  std::vector<DyadicCubeId> children() const;
  friend bool operator==(const DyadicCubeId& a, const DyadicCubeId& b);
};

struct DyadicCubeIdHash {
  std::size_t operator()(const DyadicCubeId& id) const noexcept;
};

DyadicCubeId dyadic_cube_at(const ParaPoint& p, int k);
ParaCube dyadic_geometry(const DyadicCubeId& id);

}  // namespace parcal
