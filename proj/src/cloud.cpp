#include "sphere_ot/cloud.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <unordered_map>

#include "sphere_ot/error.hpp"

namespace sphere_ot {

CloudKind parse_cloud_kind(const std::string& name) {
  if (name == "fibonacci") return CloudKind::Fibonacci;
  if (name == "icosahedral") return CloudKind::Icosahedral;
  if (name == "file") return CloudKind::File;
  throw Error(ErrorCode::ConfigError, "unknown cloud kind '" + name + "' (valid kinds: fibonacci, icosahedral, file)");
}

const char* to_string(CloudKind kind) {
  switch (kind) {
    case CloudKind::Fibonacci: return "fibonacci";
    case CloudKind::Icosahedral: return "icosahedral";
    case CloudKind::File: return "file";
  }
  return "unknown";
}

std::vector<SpherePoint> fibonacci_points(int n) {
  std::vector<SpherePoint> out;
  out.reserve(n);
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < n; ++i) {
    const double z = 1.0 - (2.0 * i + 1.0) / n;
    const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden * i;
    out.emplace_back(rho * std::cos(phi), rho * std::sin(phi), z);
  }
  return out;
}

namespace {

struct IcoMesh {
  std::vector<Vec3> verts;
  std::vector<Triangle> faces;
};

IcoMesh icosahedron() {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  IcoMesh m;
  m.verts = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
             {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  for (auto& v : m.verts) v.normalize();
  m.faces = {{0, 11, 5}, {0, 5, 1}, {0, 1, 7}, {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
             {11, 10, 2}, {10, 7, 6}, {7, 1, 8}, {3, 9, 4}, {3, 4, 2}, {3, 2, 6}, {3, 6, 8},
             {3, 8, 9}, {4, 9, 5}, {2, 4, 11}, {6, 2, 10}, {8, 6, 7}, {9, 8, 1}};
  return m;
}

// Splits every triangle into four, projecting edge midpoints to the sphere.
void subdivide(std::vector<Vec3>& verts, std::vector<Triangle>& faces) {
  std::map<std::pair<int, int>, int> midpoint;
  auto mid = [&](int a, int b) {
    const auto key = std::minmax(a, b);
    auto it = midpoint.find(key);
    if (it != midpoint.end()) return it->second;
    verts.push_back((verts[a] + verts[b]).normalized());
    const int id = static_cast<int>(verts.size()) - 1;
    midpoint.emplace(key, id);
    return id;
  };
  std::vector<Triangle> next;
  next.reserve(faces.size() * 4);
  for (const auto& f : faces) {
    const int ab = mid(f[0], f[1]);
    const int bc = mid(f[1], f[2]);
    const int ca = mid(f[2], f[0]);
    next.push_back({f[0], ab, ca});
    next.push_back({f[1], bc, ab});
    next.push_back({f[2], ca, bc});
    next.push_back({ab, bc, ca});
  }
  faces = std::move(next);
}

}  // namespace

std::vector<SpherePoint> icosahedral_points(int subdivisions) {
  IcoMesh m = icosahedron();
  for (int k = 0; k < subdivisions; ++k) subdivide(m.verts, m.faces);
  std::vector<SpherePoint> out;
  out.reserve(m.verts.size());
  for (const auto& v : m.verts) out.emplace_back(v);
  return out;
}

std::vector<SpherePoint> read_node_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::FileParse, "cannot open node file '" + path + "'");
  std::vector<SpherePoint> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ss(line);
    double x, y, z;
    if (!(ss >> x >> y >> z)) {
      throw Error(ErrorCode::FileParse, path + ":" + std::to_string(lineno) + ": expected 'x y z'");
    }
    std::string rest;
    if (ss >> rest) throw Error(ErrorCode::FileParse, path + ":" + std::to_string(lineno) + ": trailing data");
    const Vec3 v(x, y, z);
    if (!(v.norm() > 0.0) || !v.allFinite()) {
      throw Error(ErrorCode::FileParse, path + ":" + std::to_string(lineno) + ": zero or non-finite row");
    }
    out.emplace_back(v);
  }
  return out;
}

void write_node_file(const std::string& path, const std::vector<SpherePoint>& nodes) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::ConfigError, "cannot write '" + path + "'");
  out.precision(17);
  for (const auto& p : nodes) out << p[0] << ' ' << p[1] << ' ' << p[2] << '\n';
}

std::vector<SpherePoint> generate_cloud(CloudKind kind, int n, const std::string& path) {
  switch (kind) {
    case CloudKind::Fibonacci:
      if (n < 12) throw Error(ErrorCode::BadCount, "fibonacci clouds need n >= 12");
      return fibonacci_points(n);
    case CloudKind::Icosahedral: {
      long count = 12;
      for (int k = 0; k < 12; ++k) {
        if (count == n) return icosahedral_points(k);
        count = 4 * (count - 2) + 2;
      }
      throw Error(ErrorCode::BadCount, "icosahedral clouds need n = 10*4^k + 2 (12, 42, 162, 642, 2562, ...)");
    }
    case CloudKind::File:
      return read_node_file(path);
  }
  throw Error(ErrorCode::ConfigError, "unknown cloud kind");
}

// ---------------------------------------------------------------------------
// Convex hull

namespace {

class IncrementalHull {
 public:
  explicit IncrementalHull(const std::vector<Vec3>& pts) : p_(pts) {}

  std::vector<Triangle> run() {
    const int n = static_cast<int>(p_.size());
    if (n < 4) throw Error(ErrorCode::DegenerateCloud, "need at least 4 nodes");
    init_simplex();
    std::vector<int> work;
    for (int f = 0; f < static_cast<int>(faces_.size()); ++f) work.push_back(f);
    while (!work.empty()) {
      const int f = work.back();
      work.pop_back();
      if (!faces_[f].alive || faces_[f].outside.empty()) continue;
      add_point(f, work);
    }
    std::vector<Triangle> out;
    for (const auto& f : faces_) {
      if (f.alive) out.push_back(f.v);
    }
    return out;
  }

 private:
  struct Face {
    Triangle v;
    Vec3 normal;
    double offset;
    bool alive = true;
    std::vector<int> outside;
  };

  static std::uint64_t edge_key(int a, int b) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) | static_cast<std::uint32_t>(b);
  }

  double dist(const Face& f, int q) const { return f.normal.dot(p_[q]) - f.offset; }

  int make_face(int a, int b, int c) {
    Face f;
    f.v = {a, b, c};
    Vec3 nrm = (p_[b] - p_[a]).cross(p_[c] - p_[a]);
    const double len = nrm.norm();
    if (!(len > 0.0)) throw Error(ErrorCode::DegenerateCloud, "collinear or duplicate nodes in hull");
    f.normal = nrm / len;
    f.offset = f.normal.dot(p_[a]);
    faces_.push_back(std::move(f));
    const int id = static_cast<int>(faces_.size()) - 1;
    edges_[edge_key(a, b)] = id;
    edges_[edge_key(b, c)] = id;
    edges_[edge_key(c, a)] = id;
    return id;
  }

  void kill_face(int id) {
    Face& f = faces_[id];
    f.alive = false;
    for (int e = 0; e < 3; ++e) {
      auto it = edges_.find(edge_key(f.v[e], f.v[(e + 1) % 3]));
      if (it != edges_.end() && it->second == id) edges_.erase(it);
    }
  }

  void init_simplex() {
    const int n = static_cast<int>(p_.size());
    int i0 = 0, i1 = 0, i2 = -1, i3 = -1;
    double best = 0.0;
    for (int i = 1; i < n; ++i) {
      const double d = (p_[i] - p_[i0]).squaredNorm();
      if (d > best) best = d, i1 = i;
    }
    if (best <= kEps) throw Error(ErrorCode::DegenerateCloud, "all nodes coincide");
    best = 0.0;
    const Vec3 dir = (p_[i1] - p_[i0]).normalized();
    for (int i = 0; i < n; ++i) {
      const Vec3 w = p_[i] - p_[i0];
      const double d = (w - w.dot(dir) * dir).squaredNorm();
      if (d > best) best = d, i2 = i;
    }
    if (i2 < 0 || best <= kEps) throw Error(ErrorCode::DegenerateCloud, "all nodes are collinear");
    const Vec3 nrm = (p_[i1] - p_[i0]).cross(p_[i2] - p_[i0]).normalized();
    best = 0.0;
    for (int i = 0; i < n; ++i) {
      const double d = std::abs(nrm.dot(p_[i] - p_[i0]));
      if (d > best) best = d, i3 = i;
    }
    if (i3 < 0 || best <= kEps) throw Error(ErrorCode::DegenerateCloud, "all nodes are coplanar");

    const Vec3 centroid = (p_[i0] + p_[i1] + p_[i2] + p_[i3]) / 4.0;
    const std::array<Triangle, 4> tet = {{{i0, i1, i2}, {i0, i1, i3}, {i0, i2, i3}, {i1, i2, i3}}};
    for (auto t : tet) {
      const Vec3 nn = (p_[t[1]] - p_[t[0]]).cross(p_[t[2]] - p_[t[0]]);
      if (nn.dot(centroid - p_[t[0]]) > 0.0) std::swap(t[1], t[2]);
      make_face(t[0], t[1], t[2]);
    }
    for (int i = 0; i < n; ++i) {
      if (i == i0 || i == i1 || i == i2 || i == i3) continue;
      assign(i, 0, 4);
    }
  }

  // Attaches point q to the first face in [begin, end) that sees it.
  void assign(int q, int begin, int end) {
    for (int f = begin; f < end; ++f) {
      if (faces_[f].alive && dist(faces_[f], q) > kEps) {
        faces_[f].outside.push_back(q);
        return;
      }
    }
  }

  void add_point(int seed, std::vector<int>& work) {
    const Face& sf = faces_[seed];
    int apex = sf.outside.front();
    double far = dist(sf, apex);
    for (int q : sf.outside) {
      const double d = dist(sf, q);
      if (d > far) far = d, apex = q;
    }

    ++stamp_;
    visited_.resize(faces_.size(), 0);
    std::vector<int> visible{seed};
    visited_[seed] = stamp_;
    std::vector<std::pair<int, int>> horizon;
    for (std::size_t k = 0; k < visible.size(); ++k) {
      const Face& f = faces_[visible[k]];
      for (int e = 0; e < 3; ++e) {
        const int a = f.v[e];
        const int b = f.v[(e + 1) % 3];
        auto it = edges_.find(edge_key(b, a));
        if (it == edges_.end()) throw Error(ErrorCode::DegenerateCloud, "hull lost manifold structure");
        const int g = it->second;
        if (visited_[g] == stamp_) continue;
        if (dist(faces_[g], apex) > kEps) {
          visited_[g] = stamp_;
          visible.push_back(g);
        } else {
          horizon.emplace_back(a, b);
        }
      }
    }
    // Horizon edges of faces visited later may now border visible faces; keep only true ones.
    std::vector<std::pair<int, int>> rim;
    for (const auto& [a, b] : horizon) {
      const int g = edges_.at(edge_key(b, a));
      if (visited_[g] != stamp_) rim.emplace_back(a, b);
    }

    std::vector<int> orphans;
    for (int f : visible) {
      for (int q : faces_[f].outside) {
        if (q != apex) orphans.push_back(q);
      }
      faces_[f].outside.clear();
      kill_face(f);
    }
    const int first = static_cast<int>(faces_.size());
    for (const auto& [a, b] : rim) make_face(a, b, apex);
    const int last = static_cast<int>(faces_.size());
    visited_.resize(faces_.size(), 0);
    for (int q : orphans) assign(q, first, last);
    for (int f = first; f < last; ++f) {
      if (!faces_[f].outside.empty()) work.push_back(f);
    }
  }

  static constexpr double kEps = 1e-13;
  const std::vector<Vec3>& p_;
  std::vector<Face> faces_;
  std::unordered_map<std::uint64_t, int> edges_;
  std::vector<int> visited_;
  int stamp_ = 0;
};

}  // namespace

std::vector<Triangle> triangulate(const std::vector<SpherePoint>& nodes) {
  std::vector<Vec3> pts;
  pts.reserve(nodes.size());
  for (const auto& n : nodes) pts.push_back(n.coords());
  std::vector<Triangle> tris = IncrementalHull(pts).run();

  std::vector<char> used(nodes.size(), 0);
  for (const auto& t : tris) {
    for (int v : t) used[v] = 1;
  }
  for (std::size_t i = 0; i < used.size(); ++i) {
    if (!used[i]) {
      throw Error(ErrorCode::DegenerateCloud, "node " + std::to_string(i) + " is not a hull vertex (duplicate node?)");
    }
  }
  std::set<std::pair<int, int>> edges;
  for (const auto& t : tris) {
    for (int e = 0; e < 3; ++e) edges.insert(std::minmax(t[e], t[(e + 1) % 3]));
  }
  const long euler = static_cast<long>(nodes.size()) - static_cast<long>(edges.size()) + static_cast<long>(tris.size());
  if (euler != 2) throw Error(ErrorCode::DegenerateCloud, "triangulation is not a topological sphere");
  return tris;
}

double spherical_triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
  // Van Oosterom-Strackee solid angle.
  const double num = std::abs(a.dot(b.cross(c)));
  const double den = 1.0 + a.dot(b) + b.dot(c) + c.dot(a);
  return 2.0 * std::atan2(num, den);
}

double resolution(const std::vector<SpherePoint>& nodes, const std::vector<Triangle>& triangles) {
  if (nodes.size() < 4 || triangles.empty()) throw Error(ErrorCode::DegenerateCloud, "resolution needs a triangulated cloud");
  double h = 0.0;
  for (const auto& t : triangles) {
    const Vec3& a = nodes[t[0]].coords();
    const Vec3& b = nodes[t[1]].coords();
    const Vec3& c = nodes[t[2]].coords();
    Vec3 center = (b - a).cross(c - a);
    if (center.norm() < 1e-300) center = a + b + c;
    const SpherePoint cc(center);
    h = std::max(h, geodesic_distance(cc, nodes[t[0]]));
  }
  return h;
}

double search_radius(double h, double exponent, double scale) {
  if (!(h > 0.0)) throw Error(ErrorCode::ConfigError, "search radius needs h > 0");
  return scale * std::pow(h, exponent);
}

double triangulation_diameter(const std::vector<SpherePoint>& nodes, const std::vector<Triangle>& triangles) {
  double diam = 0.0;
  for (const auto& t : triangles) {
    for (int e = 0; e < 3; ++e) diam = std::max(diam, geodesic_distance(nodes[t[e]], nodes[t[(e + 1) % 3]]));
  }
  return diam;
}

double max_interior_angle(const std::vector<SpherePoint>& nodes, const std::vector<Triangle>& triangles) {
  double worst = 0.0;
  for (const auto& t : triangles) {
    for (int e = 0; e < 3; ++e) {
      const Vec3& p = nodes[t[e]].coords();
      const Vec3 u = nodes[t[(e + 1) % 3]].coords() - p;
      const Vec3 w = nodes[t[(e + 2) % 3]].coords() - p;
      worst = std::max(worst, std::atan2(u.cross(w).norm(), u.dot(w)));
    }
  }
  return worst;
}

namespace {

double nearest_other_chord(const NeighborGrid& grid, const std::vector<SpherePoint>& nodes, int i, double start) {
  for (double chord = start;; chord *= 2.0) {
    double best = std::numeric_limits<double>::infinity();
    for (int j : grid.within(nodes[i].coords(), chord)) {
      if (j != i) best = std::min(best, (nodes[j].coords() - nodes[i].coords()).norm());
    }
    if (std::isfinite(best) || chord > 2.0) return best;
  }
}

}  // namespace

double quasi_uniformity_ratio(const std::vector<SpherePoint>& nodes) {
  const double spacing = std::sqrt(4.0 * std::numbers::pi / static_cast<double>(nodes.size()));
  const NeighborGrid grid(nodes, spacing);
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (int i = 0; i < static_cast<int>(nodes.size()); ++i) {
    const double d = nearest_other_chord(grid, nodes, i, spacing);
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  return hi / lo;
}

PointCloud build_cloud(std::vector<SpherePoint> nodes, const CloudParams& params) {
  if (!(params.radius_exponent > 0.0 && params.radius_exponent < 1.0)) {
    throw Error(ErrorCode::ConfigError, "radius exponent must lie in (0, 1)");
  }
  if (!(params.radius_scale > 0.0)) throw Error(ErrorCode::ConfigError, "radius scale must be positive");
  PointCloud cloud;
  cloud.nodes = std::move(nodes);
  cloud.triangles = triangulate(cloud.nodes);

  double area = 0.0;
  for (const auto& t : cloud.triangles) {
    area += spherical_triangle_area(cloud.nodes[t[0]].coords(), cloud.nodes[t[1]].coords(), cloud.nodes[t[2]].coords());
  }
  if (std::abs(area - 4.0 * std::numbers::pi) > 0.01 * 4.0 * std::numbers::pi) {
    throw Error(ErrorCode::DegenerateCloud, "triangles do not cover the sphere");
  }

  cloud.h = resolution(cloud.nodes, cloud.triangles);
  cloud.diameter = triangulation_diameter(cloud.nodes, cloud.triangles);
  cloud.max_angle = max_interior_angle(cloud.nodes, cloud.triangles);
  if (cloud.max_angle > params.max_angle_bound) {
    throw Error(ErrorCode::DegenerateCloud, "triangle interior angle " + std::to_string(cloud.max_angle) +
                                                " exceeds the configured bound");
  }
  cloud.r = search_radius(cloud.h, params.radius_exponent, params.radius_scale);
  if (cloud.r <= cloud.diameter) {
    const double raised = 1.05 * cloud.diameter / std::pow(cloud.h, params.radius_exponent);
    cloud.warnings.push_back("search radius " + std::to_string(cloud.r) + " does not exceed diam(T^h) = " +
                             std::to_string(cloud.diameter) + "; radius scale raised to " + std::to_string(raised));
    cloud.r = search_radius(cloud.h, params.radius_exponent, raised);
  }
  return cloud;
}

PointCloud refine(const PointCloud& cloud, const CloudParams& params) {
  std::vector<Vec3> verts;
  verts.reserve(cloud.nodes.size() * 4);
  for (const auto& p : cloud.nodes) verts.push_back(p.coords());
  std::vector<Triangle> faces = cloud.triangles;
  subdivide(verts, faces);
  std::vector<SpherePoint> nodes;
  nodes.reserve(verts.size());
  for (const auto& v : verts) nodes.emplace_back(v);
  return build_cloud(std::move(nodes), params);
}

void write_obj(const std::string& path, const PointCloud& cloud) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::ConfigError, "cannot write '" + path + "'");
  out.precision(17);
  for (const auto& p : cloud.nodes) out << "v " << p[0] << ' ' << p[1] << ' ' << p[2] << '\n';
  for (const auto& t : cloud.triangles) out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
}

// ---------------------------------------------------------------------------
// Neighbour search

NeighborGrid::NeighborGrid(const std::vector<SpherePoint>& nodes, double cell)
    : nodes_(&nodes), cell_(std::max(cell, 1e-6)), dim_(static_cast<long>(std::ceil(2.0002 / cell_)) + 1) {
  for (int n = 0; n < static_cast<int>(nodes.size()); ++n) {
    int i, j, k;
    cell_of(nodes[n].coords(), i, j, k);
    buckets_[key(i, j, k)].push_back(n);
  }
}

long NeighborGrid::key(int i, int j, int k) const { return (static_cast<long>(i) * dim_ + j) * dim_ + k; }

void NeighborGrid::cell_of(const Vec3& p, int& i, int& j, int& k) const {
  auto idx = [&](double c) {
    const long v = static_cast<long>(std::floor((c + 1.0001) / cell_));
    return static_cast<int>(std::clamp(v, 0L, dim_ - 1));
  };
  i = idx(p.x());
  j = idx(p.y());
  k = idx(p.z());
}

std::vector<int> NeighborGrid::within(const Vec3& p, double chord) const {
  int lo[3], hi[3];
  cell_of(p - Vec3::Constant(chord), lo[0], lo[1], lo[2]);
  cell_of(p + Vec3::Constant(chord), hi[0], hi[1], hi[2]);
  std::vector<int> out;
  const double c2 = chord * chord;
  for (int i = lo[0]; i <= hi[0]; ++i) {
    for (int j = lo[1]; j <= hi[1]; ++j) {
      for (int k = lo[2]; k <= hi[2]; ++k) {
        auto it = buckets_.find(key(i, j, k));
        if (it == buckets_.end()) continue;
        for (int n : it->second) {
          if (((*nodes_)[n].coords() - p).squaredNorm() <= c2) out.push_back(n);
        }
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

int NeighborGrid::nearest(const Vec3& p) const {
  for (double chord = cell_;; chord *= 2.0) {
    const auto cand = within(p, chord);
    if (!cand.empty()) {
      int best = cand.front();
      double bd = ((*nodes_)[best].coords() - p).squaredNorm();
      for (int n : cand) {
        const double d = ((*nodes_)[n].coords() - p).squaredNorm();
        if (d < bd) bd = d, best = n;
      }
      return best;
    }
    if (chord > 4.0) throw Error(ErrorCode::DegenerateCloud, "empty node set");
  }
}

namespace {

double chord_of(double geodesic) {
  return geodesic >= std::numbers::pi ? 2.0 : 2.0 * std::sin(geodesic / 2.0);
}

}  // namespace

Stencil build_stencil(const PointCloud& cloud, int node_index, const NeighborGrid& grid) {
  const SpherePoint& x0 = cloud.nodes.at(node_index);
  Stencil s;
  s.center_index = node_index;
  s.frame = tangent_frame(x0);
  // Slight chord inflation so boundary neighbours are not lost to rounding; the
  // geodesic test below is authoritative.
  for (int j : grid.within(x0.coords(), chord_of(cloud.r) * (1.0 + 1e-12) + 1e-15)) {
    if (j == node_index) continue;
    const double d = geodesic_distance(x0, cloud.nodes[j]);
    if (d > cloud.r || d == 0.0) continue;
    const Vec3 v = normal_coords(x0, cloud.nodes[j]);
    const Vec2 z = s.frame.to_local(v - x0.coords());
    s.neighbor_indices.push_back(j);
    s.projected.push_back(z);
    s.distances.push_back(z.norm());
    s.directions.push_back(z / z.norm());
    s.angles.push_back(std::atan2(z.y(), z.x()));
  }
  if (s.neighbor_indices.empty()) {
    throw Error(ErrorCode::EmptyStencil, "no neighbours within r of node " + std::to_string(node_index));
  }
  std::vector<double> sorted = s.angles;
  std::sort(sorted.begin(), sorted.end());
  double gap = sorted.front() + 2.0 * std::numbers::pi - sorted.back();
  for (std::size_t k = 1; k < sorted.size(); ++k) gap = std::max(gap, sorted[k] - sorted[k - 1]);
  s.dtheta = gap;
  return s;
}

Stencil build_stencil(const PointCloud& cloud, int node_index) {
  const NeighborGrid grid(cloud.nodes, chord_of(cloud.r));
  return build_stencil(cloud, node_index, grid);
}

std::vector<Stencil> build_stencils(const PointCloud& cloud) {
  const NeighborGrid grid(cloud.nodes, chord_of(cloud.r));
  std::vector<Stencil> out(cloud.nodes.size());
#pragma omp parallel for schedule(static)
  for (int i = 0; i < cloud.size(); ++i) out[i] = build_stencil(cloud, i, grid);
  return out;
}

std::vector<std::vector<int>> adjacency(const PointCloud& cloud) {
  std::vector<std::set<int>> adj(cloud.nodes.size());
  for (const auto& t : cloud.triangles) {
    for (int e = 0; e < 3; ++e) {
      adj[t[e]].insert(t[(e + 1) % 3]);
      adj[t[e]].insert(t[(e + 2) % 3]);
    }
  }
  std::vector<std::vector<int>> out(adj.size());
  for (std::size_t i = 0; i < adj.size(); ++i) out[i].assign(adj[i].begin(), adj[i].end());
  return out;
}

}  // namespace sphere_ot
