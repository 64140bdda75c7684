#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "../oracles.hpp"
#include "sphere_ot/error.hpp"
#include "sphere_ot/geometry.hpp"

using namespace sphere_ot;

namespace {

// x0 (1 - d cot d) + x d csc d with d from acos, evaluated in long double.
Vec3 normal_coords_reference(const SpherePoint& x0, const SpherePoint& x) {
  long double t = 0;
  for (int i = 0; i < 3; ++i) t += static_cast<long double>(x0[i]) * x[i];
  t = std::clamp(t, -1.0L, 1.0L);
  const long double d = std::acos(t);
  const long double a = d < 1e-9L ? 1.0L : d / std::sin(d);
  Vec3 out;
  for (int i = 0; i < 3; ++i) out[i] = static_cast<double>(x0[i] * (1.0L - a * t) + x[i] * a);
  return out;
}

}  // namespace

TEST(SpherePoint, NormalizesOnConstruction) {
  const SpherePoint p(3.0, -4.0, 12.0);
  EXPECT_NEAR(p.coords().norm(), 1.0, 1e-15);
  EXPECT_NEAR(p[2], 12.0 / 13.0, 1e-15);
  EXPECT_THROW(SpherePoint(0.0, 0.0, 0.0), Error);
  EXPECT_NEAR(p.antipode().coords().dot(p.coords()), -1.0, 1e-15);
}

TEST(TangentVector, DropsNormalComponent) {
  const SpherePoint x(1.0, 2.0, 2.0);
  const TangentVector v(x, Vec3(1.0, 1.0, 1.0));
  EXPECT_NEAR(v.vec().dot(x.coords()), 0.0, 1e-15);
}

TEST(GeodesicDistance, KnownAngles) {
  const SpherePoint n(0, 0, 1);
  EXPECT_DOUBLE_EQ(geodesic_distance(n, n), 0.0);
  EXPECT_NEAR(geodesic_distance(n, SpherePoint(1, 0, 0)), std::numbers::pi / 2, 1e-15);
  EXPECT_NEAR(geodesic_distance(n, SpherePoint(0, 0, -1)), std::numbers::pi, 1e-15);
  // Tiny separations are resolved where acos(x . y) would return 0.
  const SpherePoint m(1e-9, 0, 1);
  EXPECT_NEAR(geodesic_distance(n, m), 1e-9, 1e-22);
}

TEST(TangentFrame, RightHandedOrthonormal) {
  std::mt19937_64 rng(1);
  for (int k = 0; k < 1000; ++k) {
    const SpherePoint x = oracle::random_point(rng);
    const TangentFrame f = tangent_frame(x);
    EXPECT_NEAR(f.e1.norm(), 1.0, 1e-14);
    EXPECT_NEAR(f.e2.norm(), 1.0, 1e-14);
    EXPECT_NEAR(f.e1.dot(x.coords()), 0.0, 1e-14);
    EXPECT_NEAR(f.e1.dot(f.e2), 0.0, 1e-14);
    EXPECT_NEAR(x.coords().cross(f.e1).dot(f.e2), 1.0, 1e-14);
  }
}

TEST(ExpMap, TravelsTheTangentLength) {
  std::mt19937_64 rng(2);
  for (int k = 0; k < 1000; ++k) {
    const SpherePoint x = oracle::random_point(rng);
    const TangentVector p = oracle::random_tangent(rng, x, 3.0);
    const SpherePoint y = exp_map(p);
    EXPECT_NEAR(y.coords().norm(), 1.0, 1e-15);
    EXPECT_NEAR(geodesic_distance(x, y), p.norm(), 1e-12);
  }
}

TEST(NormalCoords, MatchesClosedFormAndIsometric) {
  std::mt19937_64 rng(3);
  for (int k = 0; k < 10000; ++k) {
    const SpherePoint x0 = oracle::random_point(rng);
    const SpherePoint x = oracle::random_point(rng);
    const double d = geodesic_distance(x0, x);
    if (d > std::numbers::pi - 1e-3 || d < 1e-3) continue;
    const Vec3 v = normal_coords(x0, x);
    EXPECT_NEAR((v - x0.coords()).norm(), d, 1e-12);
    EXPECT_NEAR((v - x0.coords()).dot(x0.coords()), 0.0, 1e-12);
    EXPECT_LT((v - normal_coords_reference(x0, x)).norm(), 1e-9);
  }
}

TEST(NormalCoords, InverseRoundTrip) {
  std::mt19937_64 rng(4);
  for (int k = 0; k < 1000; ++k) {
    const SpherePoint x0 = oracle::random_point(rng);
    const SpherePoint x = oracle::random_point(rng);
    if (geodesic_distance(x0, x) > std::numbers::pi - 1e-4) continue;
    const SpherePoint back = inverse_normal_coords(x0, normal_coords(x0, x));
    EXPECT_LT((back.coords() - x.coords()).norm(), 1e-11);
  }
}

TEST(NormalCoords, CentreMapsToItself) {
  const SpherePoint x0(0.3, -0.2, 0.9);
  EXPECT_LT((normal_coords(x0, x0) - x0.coords()).norm(), 1e-16);
}

TEST(NormalCoords, AntipodeAndChartErrors) {
  const SpherePoint x0(0, 0, 1);
  try {
    normal_coords(x0, SpherePoint(0, 0, -1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::AntipodalPoint);
  }
  try {
    inverse_normal_coords(x0, x0.coords() + Vec3(4.0, 0, 0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::OutOfChart);
  }
}

TEST(NormalCoordFactors, SeriesJoinsClosedForm) {
  const auto below = normal_coord_factors(0.99999e-4);
  const auto above = normal_coord_factors(1.00001e-4);
  EXPECT_NEAR(below.d_cot_d, above.d_cot_d, 1e-12);
  EXPECT_NEAR(below.d_csc_d, above.d_csc_d, 1e-12);
  const auto zero = normal_coord_factors(0.0);
  EXPECT_DOUBLE_EQ(zero.d_cot_d, 1.0);
  EXPECT_DOUBLE_EQ(zero.d_csc_d, 1.0);
}

TEST(ClosestPoint, Radial) {
  EXPECT_NEAR(closest_point(Vec3(0, 0, 5))[2], 1.0, 1e-16);
  EXPECT_THROW(closest_point(Vec3::Zero()), Error);
}
