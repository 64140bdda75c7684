#pragma once

// Point clouds on S^2: generation, convex-hull triangulation, resolution and
// projected neighbour stencils.

#include <array>
#include <string>
#include <unordered_map>
#include <vector>

#include "sphere_ot/geometry.hpp"

namespace sphere_ot {

using Triangle = std::array<int, 3>;

enum class CloudKind { Fibonacci, Icosahedral, File };

CloudKind parse_cloud_kind(const std::string& name);
const char* to_string(CloudKind kind);

/// Generated kinds need n >= 12; icosahedral needs n = 10 * 4^k + 2.
/// The file kind reads one "x y z" triple per line and normalizes each row.
std::vector<SpherePoint> generate_cloud(CloudKind kind, int n, const std::string& path = {});

std::vector<SpherePoint> fibonacci_points(int n);
std::vector<SpherePoint> icosahedral_points(int subdivisions);
std::vector<SpherePoint> read_node_file(const std::string& path);
void write_node_file(const std::string& path, const std::vector<SpherePoint>& nodes);

/// Convex hull of the nodes, faces oriented outward. Every node must appear.
std::vector<Triangle> triangulate(const std::vector<SpherePoint>& nodes);

/// sup over S^2 of the distance to the nearest node, evaluated at the spherical
/// circumcentres of the hull faces (the Voronoi vertices of the node set).
double resolution(const std::vector<SpherePoint>& nodes, const std::vector<Triangle>& triangles);

/// r = scale * h^exponent.
double search_radius(double h, double exponent, double scale);

/// Longest geodesic edge over all triangles.
double triangulation_diameter(const std::vector<SpherePoint>& nodes, const std::vector<Triangle>& triangles);

/// Largest planar interior angle over all triangles, in radians.
double max_interior_angle(const std::vector<SpherePoint>& nodes, const std::vector<Triangle>& triangles);

/// Spherical (geodesic) area of the triangle with the given unit vertices.
double spherical_triangle_area(const Vec3& a, const Vec3& b, const Vec3& c);

/// Ratio of largest to smallest nearest-neighbour distance.
double quasi_uniformity_ratio(const std::vector<SpherePoint>& nodes);

struct CloudParams {
  double radius_exponent = 0.5;
  double radius_scale = 2.0;
  double max_angle_bound = 170.0 * 3.14159265358979323846 / 180.0;
};

struct PointCloud {
  std::vector<SpherePoint> nodes;
  std::vector<Triangle> triangles;
  double h = 0.0;
  double r = 0.0;
  double max_angle = 0.0;
  double diameter = 0.0;
  std::vector<std::string> warnings;

  int size() const { return static_cast<int>(nodes.size()); }
};

/// Triangulates, measures h, picks r and validates the angle bound. If r does not
/// exceed the triangulation diameter it is raised and a warning is recorded.
PointCloud build_cloud(std::vector<SpherePoint> nodes, const CloudParams& params = {});

/// Uniform subdivision (each triangle into four) followed by radial projection.
PointCloud refine(const PointCloud& cloud, const CloudParams& params = {});

void write_obj(const std::string& path, const PointCloud& cloud);

/// Uniform 3D cell hash over the node coordinates.
class NeighborGrid {
 public:
  NeighborGrid(const std::vector<SpherePoint>& nodes, double cell);

  /// Indices of nodes with chord distance <= chord from p.
  std::vector<int> within(const Vec3& p, double chord) const;
  int nearest(const Vec3& p) const;

 private:
  long key(int i, int j, int k) const;
  void cell_of(const Vec3& p, int& i, int& j, int& k) const;

  const std::vector<SpherePoint>* nodes_;
  double cell_;
  long dim_;
  std::unordered_map<long, std::vector<int>> buckets_;
};

struct Stencil {
  int center_index = -1;
  TangentFrame frame;
  std::vector<int> neighbor_indices;
  std::vector<Vec2> projected;
  std::vector<double> distances;
  std::vector<Vec2> directions;
  std::vector<double> angles;  // atan2 of directions, in (-pi, pi]
  double dtheta = 0.0;          // largest angular gap between consecutive directions

  int size() const { return static_cast<int>(neighbor_indices.size()); }
};

/// Neighbours within geodesic distance r projected through normal coordinates.
/// Throws EmptyStencil when no node lies within r.
Stencil build_stencil(const PointCloud& cloud, int node_index, const NeighborGrid& grid);
Stencil build_stencil(const PointCloud& cloud, int node_index);
std::vector<Stencil> build_stencils(const PointCloud& cloud);

/// Node adjacency of the triangulation, sorted.
std::vector<std::vector<int>> adjacency(const PointCloud& cloud);

}  // namespace sphere_ot
