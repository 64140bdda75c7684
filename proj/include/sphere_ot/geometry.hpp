#pragma once

// Primitives on the unit sphere S^2 embedded in R^3.

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace sphere_ot {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;

/// A point on the unit sphere. Construction normalizes; the zero vector is rejected.
class SpherePoint {
 public:
  SpherePoint() : coords_(0.0, 0.0, 1.0) {}
  explicit SpherePoint(const Vec3& v);
  SpherePoint(double x, double y, double z) : SpherePoint(Vec3(x, y, z)) {}

  const Vec3& coords() const noexcept { return coords_; }
  double operator[](int i) const { return coords_[i]; }
  SpherePoint antipode() const;

 private:
  Vec3 coords_;
};

/// Tangent vector at a base point. The normal component of the input is removed.
class TangentVector {
 public:
  TangentVector(const SpherePoint& base, const Vec3& vec);

  const SpherePoint& base() const noexcept { return base_; }
  const Vec3& vec() const noexcept { return vec_; }
  double norm() const { return vec_.norm(); }

 private:
  SpherePoint base_;
  Vec3 vec_;
};

/// Right-handed orthonormal triple {base, e1, e2}.
struct TangentFrame {
  SpherePoint base;
  Vec3 e1;
  Vec3 e2;

  Vec2 to_local(const Vec3& tangent) const { return {tangent.dot(e1), tangent.dot(e2)}; }
  Vec3 to_ambient(const Vec2& local) const { return local.x() * e1 + local.y() * e2; }
};

/// Great-circle distance in [0, pi].
double geodesic_distance(const SpherePoint& x, const SpherePoint& y);

/// Point reached by travelling |p| along the geodesic leaving p.base() in direction p.
SpherePoint exp_map(const TangentVector& p);

/// Deterministic frame: e1 is built from the coordinate axis least aligned with x.
TangentFrame tangent_frame(const SpherePoint& x);

/// Geodesic normal coordinates of x about x0, as a point of the affine tangent plane
/// through x0: |v - x0| equals the geodesic distance and v - x0 points along the
/// tangential part of x - x0. Throws AntipodalPoint when d >= pi - 1e-8.
Vec3 normal_coords(const SpherePoint& x0, const SpherePoint& x);

/// Inverse of normal_coords. Throws OutOfChart when |v - x0| >= pi.
SpherePoint inverse_normal_coords(const SpherePoint& x0, const Vec3& v);

/// Radial projection z / |z|. Throws ZeroVector for z = 0.
SpherePoint closest_point(const Vec3& z);

/// Factors (d cot d, d csc d) used by the closed-form normal coordinates.
/// A 4th-order series is used below d = 1e-4.
struct NormalCoordFactors {
  double d_cot_d;
  double d_csc_d;
};
NormalCoordFactors normal_coord_factors(double d);

inline constexpr double kAntipodalCutoff = 1e-8;

}  // namespace sphere_ot
