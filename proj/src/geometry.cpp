#include "sphere_ot/geometry.hpp"

#include <cmath>
#include <numbers>

#include "sphere_ot/error.hpp"

namespace sphere_ot {

SpherePoint::SpherePoint(const Vec3& v) {
  const double n = v.norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw Error(ErrorCode::ZeroVector, "cannot normalize a zero or non-finite vector");
  coords_ = v / n;
}

SpherePoint SpherePoint::antipode() const { return SpherePoint(-coords_); }

TangentVector::TangentVector(const SpherePoint& base, const Vec3& vec)
    : base_(base), vec_(vec - vec.dot(base.coords()) * base.coords()) {}

double geodesic_distance(const SpherePoint& x, const SpherePoint& y) {
  // atan2 form of 2 asin(|x - y| / 2); well conditioned near 0 and near pi.
  const Vec3& a = x.coords();
  const Vec3& b = y.coords();
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

SpherePoint exp_map(const TangentVector& p) {
  const double len = p.norm();
  const Vec3& x = p.base().coords();
  if (len == 0.0) return p.base();
  return SpherePoint(std::cos(len) * x + std::sin(len) * (p.vec() / len));
}

TangentFrame tangent_frame(const SpherePoint& x) {
  const Vec3& n = x.coords();
  int axis = 0;
  for (int i = 1; i < 3; ++i) {
    if (std::abs(n[i]) < std::abs(n[axis])) axis = i;
  }
  Vec3 a = Vec3::Zero();
  a[axis] = 1.0;
  Vec3 e1 = (a - a.dot(n) * n).normalized();
  Vec3 e2 = n.cross(e1);
  return {x, e1, e2};
}

NormalCoordFactors normal_coord_factors(double d) {
  if (d < 1e-4) {
    const double d2 = d * d;
    return {1.0 - d2 / 3.0 - d2 * d2 / 45.0, 1.0 + d2 / 6.0 + 7.0 * d2 * d2 / 360.0};
  }
  return {d * std::cos(d) / std::sin(d), d / std::sin(d)};
}

Vec3 normal_coords(const SpherePoint& x0, const SpherePoint& x) {
  const double d = geodesic_distance(x0, x);
  if (d >= std::numbers::pi - kAntipodalCutoff) {
    throw Error(ErrorCode::AntipodalPoint, "normal coordinates are singular at the antipode");
  }
  const Vec3& c = x0.coords();
  // x0 (1 - d cot d) + x d csc d, written as x0 + d * t / |t| with t the tangential part of x,
  // which keeps v - x0 exactly tangent and of length d in floating point.
  const Vec3 t = x.coords() - x.coords().dot(c) * c;
  const double tn = t.norm();
  if (tn == 0.0) return c;
  return c + (d / tn) * t;
}

SpherePoint inverse_normal_coords(const SpherePoint& x0, const Vec3& v) {
  const Vec3 disp = v - x0.coords();
  if (disp.norm() >= std::numbers::pi) {
    throw Error(ErrorCode::OutOfChart, "normal coordinate chart has radius pi");
  }
  return exp_map(TangentVector(x0, disp));
}

SpherePoint closest_point(const Vec3& z) { return SpherePoint(z); }

}  // namespace sphere_ot
