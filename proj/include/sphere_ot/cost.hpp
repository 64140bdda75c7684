#pragma once

// Transport costs on S^2, their exact maps T(x, p) and the Monge-Ampere
// coefficients A(x, p), H(x, p), in closed form or by finite differences.

#include <functional>
#include <optional>
#include <string>

#include "sphere_ot/geometry.hpp"

namespace sphere_ot {

enum class CostKind { SquaredGeodesic, Logarithmic };

CostKind parse_cost_kind(const std::string& name);
const char* to_string(CostKind kind);

/// Squared-geodesic map convention. FullAngle travels |p| along the geodesic
/// (the exponential map); HalfAngle travels |p| / 2. Only FullAngle satisfies
/// grad_x c(x, T(x, p)) = -p; HalfAngle is kept for the map-condition oracle.
enum class MapConvention { FullAngle, HalfAngle };

/// Closed-form coefficients are smooth in p; finite-difference ones carry
/// roundoff of order eps / step^2 that changes erratically with p.
enum class CoefficientMethod { Analytic, FiniteDifference };

CoefficientMethod parse_coefficient_method(const std::string& name);
const char* to_string(CoefficientMethod method);

struct CostModel {
  CostKind kind = CostKind::SquaredGeodesic;
  double R = 1.1 * 3.14159265358979323846;  // gradient bound
  double derivative_step = 1e-5;              // first differences (map Jacobian)
  double hessian_step = 1e-4;                 // second differences (cost Hessian)
  MapConvention convention = MapConvention::FullAngle;
  CoefficientMethod method = CoefficientMethod::Analytic;
};

/// Validated model. R defaults to 1.1 pi (squared) or 5.0 (log); the squared
/// cost requires R > pi.
CostModel make_cost_model(CostKind kind, std::optional<double> R = std::nullopt);

/// Configured R after validation. Throws ConfigError for an invalid bound.
double gradient_bound(const CostModel& model);

/// 1/2 d(x, y)^2 or -log|x - y|. The log cost throws SingularCost at x = y.
double cost(const CostModel& model, const SpherePoint& x, const SpherePoint& y);

SpherePoint transport_map(const CostModel& model, const TangentVector& p);

/// D_p T in the frames tangent_frame(x) and tangent_frame(T(x, p)), by central
/// differences with step derivative_step * max(1, |p|). A non-positive step
/// override selects the model default.
Mat2 map_jacobian(const CostModel& model, const TangentVector& p, double step = 0.0);

/// Hessian of x' -> c(x', y) at x' = x in geodesic normal coordinates about x,
/// expressed in tangent_frame(x).
Mat2 cost_hessian(const CostModel& model, const SpherePoint& x, const SpherePoint& y, double step = 0.0);

/// Surface gradient of x' -> c(x', y) at x by central differences in normal
/// coordinates, in tangent_frame(x).
Vec2 cost_gradient(const CostModel& model, const SpherePoint& x, const SpherePoint& y, double step);

/// Closed-form Riemannian Hessian of x' -> c(x', y) at x, in tangent_frame(x).
Mat2 cost_hessian_exact(const CostModel& model, const SpherePoint& x, const SpherePoint& y);

/// Closed-form |det D_p T|. HalfAngle falls back to finite differences.
double map_jacobian_det_exact(const CostModel& model, const TangentVector& p);

using DensityFn = std::function<double(const SpherePoint&)>;

struct CoefficientPair {
  Mat2 A;
  double H = 0.0;
  SpherePoint target;
  double jacobian_det = 0.0;  // |det D_p T|
};

struct CoefficientSteps {
  double derivative = 0.0;  // 0 selects the model default
  double hessian = 0.0;
};

/// A = D^2_xx c(x, T(x, p)); H = f1(x) / (|det D_p T| f2(T(x, p))), using
/// model.method. Steps only apply to the finite-difference method.
/// Throws ZeroDensity when f2 < min_density at the target.
CoefficientPair coefficients(const CostModel& model, const SpherePoint& x, const TangentVector& p, double f1_at_x,
                             const DensityFn& f2, double min_density = 1e-12, CoefficientSteps steps = {});

}  // namespace sphere_ot
