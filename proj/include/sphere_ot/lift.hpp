#pragma once

// Extension of grid functions to the whole sphere: linear interpolation on the
// flat triangles composed with the inverse of the radial projection.

#include <array>
#include <span>
#include <vector>

#include "sphere_ot/cloud.hpp"

namespace sphere_ot {

/// Throws BijectionFailure unless every flat triangle faces away from the
/// origin, i.e. radial projection is one-to-one from the triangulated surface.
void check_projection_bijective(const PointCloud& cloud);

/// Point location by walking the triangulation from the triangle fan of the
/// nearest node. Holds a pointer to the cloud, which must outlive it.
class Interpolator {
 public:
  explicit Interpolator(const PointCloud& cloud);

  struct Location {
    int triangle = -1;
    std::array<double, 3> weights{};  // barycentric on the flat triangle
  };

  Location locate(const SpherePoint& x) const;
  double operator()(std::span<const double> values, const SpherePoint& x) const;

 private:
  const PointCloud* cloud_;
  NeighborGrid grid_;
  std::vector<std::vector<int>> node_triangles_;
  std::vector<std::array<int, 3>> across_;  // triangle across the edge opposite vertex k
};

/// Interpolated value at x; builds a throwaway Interpolator.
double interpolate(const PointCloud& cloud, std::span<const double> values, const SpherePoint& x);

/// max over triangles of the planar gradient norm of the linear interpolant.
double lipschitz_estimate(const PointCloud& cloud, std::span<const double> values);

/// Planar gradient of the linear interpolant on one triangle.
Vec3 triangle_gradient(const PointCloud& cloud, int triangle, std::span<const double> values);

}  // namespace sphere_ot
