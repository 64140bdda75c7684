#include "sphere_ot/lift.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <utility>

#include "sphere_ot/error.hpp"

namespace sphere_ot {

namespace {

double triple(const Vec3& a, const Vec3& b, const Vec3& c) { return a.dot(b.cross(c)); }

}  // namespace

void check_projection_bijective(const PointCloud& cloud) {
  for (std::size_t k = 0; k < cloud.triangles.size(); ++k) {
    const Triangle& t = cloud.triangles[k];
    const Vec3& a = cloud.nodes[t[0]].coords();
    const Vec3& b = cloud.nodes[t[1]].coords();
    const Vec3& c = cloud.nodes[t[2]].coords();
    const Vec3 n = (b - a).cross(c - a);
    if (!(n.dot(a + b + c) > 0.0)) {
      throw Error(ErrorCode::BijectionFailure, "triangle " + std::to_string(k) + " does not face away from the origin");
    }
  }
}

Interpolator::Interpolator(const PointCloud& cloud)
    : cloud_(&cloud), grid_(cloud.nodes, std::max(cloud.h, 1e-3)) {
  check_projection_bijective(cloud);
  node_triangles_.resize(cloud.size());
  std::map<std::pair<int, int>, std::vector<std::pair<int, int>>> edges;  // edge -> (triangle, opposite slot)
  for (int k = 0; k < static_cast<int>(cloud.triangles.size()); ++k) {
    const Triangle& t = cloud.triangles[k];
    for (int j = 0; j < 3; ++j) {
      node_triangles_[t[j]].push_back(k);
      const int a = t[(j + 1) % 3];
      const int b = t[(j + 2) % 3];
      edges[{std::min(a, b), std::max(a, b)}].emplace_back(k, j);
    }
  }
  across_.assign(cloud.triangles.size(), {-1, -1, -1});
  for (const auto& [edge, owners] : edges) {
    if (owners.size() != 2) continue;
    across_[owners[0].first][owners[0].second] = owners[1].first;
    across_[owners[1].first][owners[1].second] = owners[0].first;
  }
}

Interpolator::Location Interpolator::locate(const SpherePoint& x) const {
  const Vec3& p = x.coords();
  const auto& tris = cloud_->triangles;
  const auto barycentric = [&](int k, std::array<double, 3>& w) {
    const Triangle& t = tris[k];
    const Vec3& a = cloud_->nodes[t[0]].coords();
    const Vec3& b = cloud_->nodes[t[1]].coords();
    const Vec3& c = cloud_->nodes[t[2]].coords();
    const double full = triple(a, b, c);
    w = {triple(p, b, c) / full, triple(a, p, c) / full, triple(a, b, p) / full};
    const double s = w[0] + w[1] + w[2];
    if (s > 0.0) {
      for (double& wi : w) wi /= s;
    }
    return s;
  };

  int k = node_triangles_[grid_.nearest(p)].front();
  std::array<double, 3> w{};
  const int limit = 4 * static_cast<int>(std::sqrt(static_cast<double>(tris.size()))) + 16;
  for (int step = 0; step < limit; ++step) {
    const double s = barycentric(k, w);
    int worst = 0;
    for (int j = 1; j < 3; ++j)
      if (w[j] < w[worst]) worst = j;
    if (s > 0.0 && w[worst] >= -1e-14) return {k, w};
    const int next = across_[k][worst];
    if (next < 0 || s <= 0.0) break;
    k = next;
  }
  // Walk failed (should not happen on a valid hull); scan everything.
  Location best;
  double best_min = -std::numeric_limits<double>::infinity();
  for (int t = 0; t < static_cast<int>(tris.size()); ++t) {
    if (barycentric(t, w) <= 0.0) continue;
    const double m = std::min({w[0], w[1], w[2]});
    if (m > best_min) best_min = m, best = {t, w};
  }
  return best;
}

double Interpolator::operator()(std::span<const double> values, const SpherePoint& x) const {
  const Location loc = locate(x);
  const Triangle& t = cloud_->triangles[loc.triangle];
  return loc.weights[0] * values[t[0]] + loc.weights[1] * values[t[1]] + loc.weights[2] * values[t[2]];
}

double interpolate(const PointCloud& cloud, std::span<const double> values, const SpherePoint& x) {
  return Interpolator(cloud)(values, x);
}

Vec3 triangle_gradient(const PointCloud& cloud, int triangle, std::span<const double> values) {
  const Triangle& t = cloud.triangles[triangle];
  const Vec3& a = cloud.nodes[t[0]].coords();
  const Vec3& b = cloud.nodes[t[1]].coords();
  const Vec3& c = cloud.nodes[t[2]].coords();
  const Vec3 N = (b - a).cross(c - a);
  const double area2 = N.squaredNorm();
  // grad lambda_b = N x (a - c) / |N|^2, grad lambda_c = N x (b - a) / |N|^2; the
  // gradients sum to zero, so differences against vertex a suffice.
  const double u0 = values[t[0]];
  return ((values[t[1]] - u0) * N.cross(a - c) + (values[t[2]] - u0) * N.cross(b - a)) / area2;
}

double lipschitz_estimate(const PointCloud& cloud, std::span<const double> values) {
  double best = 0.0;
  for (int k = 0; k < static_cast<int>(cloud.triangles.size()); ++k)
    best = std::max(best, triangle_gradient(cloud, k, values).norm());
  return best;
}

}  // namespace sphere_ot
