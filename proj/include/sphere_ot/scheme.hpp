#pragma once

// Monotone wide-stencil discretization on the projected tangent-plane stencils:
// second directional differences, the convexified Monge-Ampere operator F^h,
// the Eikonal operator E^h, G^h = max(F^h, E^h - R), the area-weighted
// average A^h and the truncation scale tau(h).

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "sphere_ot/cloud.hpp"
#include "sphere_ot/cost.hpp"

namespace sphere_ot {

/// A point on the ray from the stencil centre, obtained by linear interpolation
/// between two stencil neighbours (local indices into the stencil). When
/// first == second the endpoint is that neighbour itself.
struct RayEndpoint {
  int first = -1;
  int second = -1;
  double weight = 1.0;  // weight on `first`; `second` gets 1 - weight
  double distance = 0.0;
  double spread = 0.0;  // weight (1 - weight) |z_first - z_second|^2, zero on the ray
};

/// Endpoints on the ray in `direction` from neighbours whose directions lie
/// within `window` radians of it: neighbours on the ray and interpolation
/// points of pairs straddling it, best first by spread / t^2, at most max_count.
std::vector<RayEndpoint> ray_candidates(const Stencil& stencil, const Vec2& direction, double window,
                                       std::size_t max_count);

/// The first of ray_candidates.
std::optional<RayEndpoint> ray_endpoint(const Stencil& stencil, const Vec2& direction, double window);

/// Error proxy of the second difference built on two endpoints, for unit bounds
/// on the second to fourth derivatives: interpolation error, the first-order
/// term from unequal arms |t+ - t-| / 3, and the truncation term.
double endpoint_pair_error(const RayEndpoint& forward, const RayEndpoint& backward);

inline constexpr std::size_t kEndpointCandidates = 24;
/// Candidate endpoints come from neighbours within this many dtheta of the ray.
inline constexpr double kEndpointWindow = 3.0;

/// 2 [ (u+ - u0) / (t+ (t+ + t-)) + (u- - u0) / (t- (t+ + t-)) ], with u+- read at
/// the endpoints and u0 at the stencil centre. `values` is indexed by node id.
double second_directional_difference(const Stencil& stencil, std::span<const double> values,
                                     const RayEndpoint& forward, const RayEndpoint& backward);

/// Compiled second difference: sum_k weights[k] (u[nodes[k]] - u[centre]), weights >= 0.
struct DifferenceRow {
  Vec2 direction = Vec2::UnitX();
  int count = 0;
  std::array<int, 4> nodes{};
  std::array<double, 4> weights{};

  double apply(std::span<const double> values, int center) const {
    double s = 0.0;
    for (int k = 0; k < count; ++k) s += weights[k] * (values[nodes[k]] - values[center]);
    return s;
  }
};

/// Forward and backward endpoints chosen jointly by endpoint_pair_error.
/// Throws NoAntipodalNeighbor when either side of the line has no usable endpoint.
DifferenceRow compile_difference(const Stencil& stencil, const Vec2& direction);

struct DirectionPair {
  DifferenceRow first;
  DifferenceRow second;
};

/// Exactly orthogonal pairs (nu, nu_perp) at angles k pi / (2 count), k < count.
std::vector<DirectionPair> direction_pairs(const Stencil& stencil, int count);

/// A and H at one node, A in the node's tangent frame.
struct NodeCoefficients {
  Mat2 A = Mat2::Identity();
  double H = 1.0;
};

/// prod_j max(d_j, delta) + sum_j min(d_j - delta, 0): equals d1 d2 when both
/// exceed delta and is nondecreasing in each argument.
double det_plus(double d1, double d2, double delta);

/// tau = constant * (r^2 + h / r + dtheta).
double truncation_scale(double h, double r, double dtheta, double constant = 1.0);

/// One third of the spherical area of each incident triangle, normalized to sum to 1.
std::vector<double> area_weights(const PointCloud& cloud);
double discrete_average(std::span<const double> weights, std::span<const double> values);
double discrete_average(const PointCloud& cloud, std::span<const double> values);

/// max over neighbours of (u(x) - u(y)) / |z_y|.
double eikonal(const Stencil& stencil, std::span<const double> values);

/// F^h = -min over pairs of det_plus(D_1 u + nu_1' A nu_1, D_2 u + nu_2' A nu_2, delta) + H.
double ma_operator(const Stencil& stencil, std::span<const double> values, std::span<const DirectionPair> pairs,
                   const NodeCoefficients& coeff, double delta);

struct SchemeConfig {
  double tau_constant = 1.0;
  std::string delta_mode = "tau";  // "tau": delta = delta_scale * tau; "fixed": delta = delta_value
  double delta_scale = 0.1;
  double delta_value = 0.0;
  int pair_count = 8;
  bool flip_eikonal_sign = false;  // mutation hook for the property suite
  /// F^h is lowered by underestimation * tau so that it stays <= 0 on exact
  /// solutions whose consistency error is below that. Negative selects the cost
  /// default: kSquaredUnderestimation for the squared cost, 0 for the log cost.
  double underestimation = -1.0;
};

inline constexpr double kSquaredUnderestimation = 0.1;

struct SchemeParams {
  double tau = 0.0;
  double delta = 0.0;
  double R = 0.0;
  double dtheta = 0.0;
  int pair_count = 8;
  bool flip_eikonal_sign = false;
  double offset = 0.0;  // underestimation * tau, subtracted from F^h
};

/// Per-node linearization of G^h + tau u: sparse row entries (node, derivative).
struct RowLinearization {
  double value = 0.0;
  bool eikonal_active = false;
  std::vector<std::pair<int, double>> entries;
};

/// Precomputed discretization over a whole cloud.
class Scheme {
 public:
  /// R and the underestimation default come from the cost model.
  Scheme(const PointCloud& cloud, const SchemeConfig& config, const CostModel& model);

  const PointCloud& cloud() const { return *cloud_; }
  const SchemeParams& params() const { return params_; }
  const std::vector<Stencil>& stencils() const { return stencils_; }
  const std::vector<std::vector<DirectionPair>>& pairs() const { return pairs_; }
  const std::vector<double>& weights() const { return weights_; }
  int size() const { return static_cast<int>(stencils_.size()); }

  double eikonal_at(int node, std::span<const double> values) const;
  /// ma_operator minus the underestimation offset.
  double ma_at(int node, std::span<const double> values, const NodeCoefficients& coeff) const;
  /// G^h = max(F^h, E^h - R).
  double combined_at(int node, std::span<const double> values, const NodeCoefficients& coeff) const;

  /// G^h(u) + tau u at every node.
  Eigen::VectorXd residual(std::span<const double> values, std::span<const NodeCoefficients> coeffs) const;
  /// G^h(u) at every node.
  Eigen::VectorXd operator_values(std::span<const double> values, std::span<const NodeCoefficients> coeffs) const;

  RowLinearization linearize(int node, std::span<const double> values, const NodeCoefficients& coeff) const;

  double average(std::span<const double> values) const { return discrete_average(weights_, values); }

 private:
  const PointCloud* cloud_;
  SchemeParams params_;
  std::vector<Stencil> stencils_;
  std::vector<std::vector<DirectionPair>> pairs_;
  std::vector<double> weights_;
};

/// Largest stencil dtheta over the cloud.
double max_dtheta(const std::vector<Stencil>& stencils);

}  // namespace sphere_ot
