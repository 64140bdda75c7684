#include "sphere_ot/cost.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "sphere_ot/error.hpp"

namespace sphere_ot {

CostKind parse_cost_kind(const std::string& name) {
  if (name == "squared_geodesic" || name == "squared") return CostKind::SquaredGeodesic;
  if (name == "logarithmic" || name == "log") return CostKind::Logarithmic;
  throw Error(ErrorCode::ConfigError, "unknown cost '" + name + "' (valid: squared_geodesic, logarithmic)");
}

const char* to_string(CostKind kind) {
  return kind == CostKind::SquaredGeodesic ? "squared_geodesic" : "logarithmic";
}

CoefficientMethod parse_coefficient_method(const std::string& name) {
  if (name == "analytic") return CoefficientMethod::Analytic;
  if (name == "finite_difference" || name == "fd") return CoefficientMethod::FiniteDifference;
  throw Error(ErrorCode::ConfigError, "unknown coefficient method '" + name + "' (valid: analytic, finite_difference)");
}

const char* to_string(CoefficientMethod method) {
  return method == CoefficientMethod::Analytic ? "analytic" : "finite_difference";
}

CostModel make_cost_model(CostKind kind, std::optional<double> R) {
  CostModel m;
  m.kind = kind;
  m.R = R.value_or(kind == CostKind::SquaredGeodesic ? 1.1 * std::numbers::pi : 5.0);
  gradient_bound(m);
  return m;
}

double gradient_bound(const CostModel& model) {
  if (model.kind == CostKind::SquaredGeodesic && !(model.R > std::numbers::pi)) {
    throw Error(ErrorCode::ConfigError, "squared-geodesic cost needs R > pi, got " + std::to_string(model.R));
  }
  if (!(model.R > 0.0)) throw Error(ErrorCode::ConfigError, "gradient bound R must be positive");
  return model.R;
}

double cost(const CostModel& model, const SpherePoint& x, const SpherePoint& y) {
  if (model.kind == CostKind::SquaredGeodesic) {
    const double d = geodesic_distance(x, y);
    return 0.5 * d * d;
  }
  const double chord = (x.coords() - y.coords()).norm();
  if (chord == 0.0) throw Error(ErrorCode::SingularCost, "log cost is singular at x = y");
  return -std::log(chord);
}

SpherePoint transport_map(const CostModel& model, const TangentVector& p) {
  const Vec3& x = p.base().coords();
  const double len = p.norm();
  if (model.kind == CostKind::SquaredGeodesic) {
    if (len == 0.0) return p.base();
    const double angle = model.convention == MapConvention::FullAngle ? len : 0.5 * len;
    return SpherePoint(std::cos(angle) * x + std::sin(angle) * (p.vec() / len));
  }
  const double s = len * len;
  return SpherePoint(x * ((s - 0.25) / (s + 0.25)) - p.vec() / (s + 0.25));
}

Mat2 map_jacobian(const CostModel& model, const TangentVector& p, double step) {
  const SpherePoint& x = p.base();
  const TangentFrame fx = tangent_frame(x);
  const SpherePoint center = transport_map(model, p);
  const TangentFrame fy = tangent_frame(center);
  const double h = (step > 0.0 ? step : model.derivative_step) * std::max(1.0, p.norm());
  Mat2 J;
  for (int i = 0; i < 2; ++i) {
    const Vec3 dir = i == 0 ? fx.e1 : fx.e2;
    const SpherePoint plus = transport_map(model, TangentVector(x, p.vec() + h * dir));
    const SpherePoint minus = transport_map(model, TangentVector(x, p.vec() - h * dir));
    J.col(i) = fy.to_local((plus.coords() - minus.coords()) / (2.0 * h));
  }
  return J;
}

namespace {

// c(exp_x(a e1 + b e2), y).
double cost_in_chart(const CostModel& model, const TangentFrame& f, double a, double b, const SpherePoint& y) {
  return cost(model, exp_map(TangentVector(f.base, a * f.e1 + b * f.e2)), y);
}

}  // namespace

Mat2 cost_hessian(const CostModel& model, const SpherePoint& x, const SpherePoint& y, double step) {
  const TangentFrame f = tangent_frame(x);
  const double s = step > 0.0 ? step : model.hessian_step;
  const double c0 = cost_in_chart(model, f, 0, 0, y);
  Mat2 A;
  A(0, 0) = (cost_in_chart(model, f, s, 0, y) - 2.0 * c0 + cost_in_chart(model, f, -s, 0, y)) / (s * s);
  A(1, 1) = (cost_in_chart(model, f, 0, s, y) - 2.0 * c0 + cost_in_chart(model, f, 0, -s, y)) / (s * s);
  A(0, 1) = (cost_in_chart(model, f, s, s, y) - cost_in_chart(model, f, s, -s, y) - cost_in_chart(model, f, -s, s, y) +
             cost_in_chart(model, f, -s, -s, y)) /
            (4.0 * s * s);
  A(1, 0) = A(0, 1);
  return A;
}

Vec2 cost_gradient(const CostModel& model, const SpherePoint& x, const SpherePoint& y, double step) {
  const TangentFrame f = tangent_frame(x);
  return {(cost_in_chart(model, f, step, 0, y) - cost_in_chart(model, f, -step, 0, y)) / (2.0 * step),
          (cost_in_chart(model, f, 0, step, y) - cost_in_chart(model, f, 0, -step, y)) / (2.0 * step)};
}

Mat2 cost_hessian_exact(const CostModel& model, const SpherePoint& x, const SpherePoint& y) {
  // c = phi(x . y); the sphere Hessian is phi'' y_T y_T' - phi' (x . y) I.
  const TangentFrame f = tangent_frame(x);
  const double t = std::clamp(x.coords().dot(y.coords()), -1.0, 1.0);
  const Vec2 yt = f.to_local(y.coords() - t * x.coords());
  double dphi = 0.0;
  double d2phi = 0.0;
  if (model.kind == CostKind::SquaredGeodesic) {
    const double d = geodesic_distance(x, y);
    if (d >= std::numbers::pi - kAntipodalCutoff) throw Error(ErrorCode::AntipodalPoint, "squared cost Hessian at the cut locus");
    if (d < 1e-4) {
      // Series of the along/transverse eigenvalues 1 and d cot d.
      const double d2 = d * d;
      const double dcot = 1.0 - d2 / 3.0 - d2 * d2 / 45.0;
      const double s2 = yt.squaredNorm();
      const Vec2 e = s2 > 0.0 ? Vec2(yt / std::sqrt(s2)) : Vec2(1.0, 0.0);
      return dcot * Mat2::Identity() + (1.0 - dcot) * e * e.transpose();
    }
    const double s = std::sin(d);
    dphi = -d / s;
    d2phi = (1.0 - d * std::cos(d) / s) / (s * s);
  } else {
    const double q = 1.0 - t;
    if (q <= 0.0) throw Error(ErrorCode::SingularCost, "log cost is singular at x = y");
    dphi = 0.5 / q;
    d2phi = 0.5 / (q * q);
  }
  return d2phi * yt * yt.transpose() - dphi * t * Mat2::Identity();
}

double map_jacobian_det_exact(const CostModel& model, const TangentVector& p) {
  const double len = p.norm();
  if (model.kind == CostKind::Logarithmic) {
    const double q = 1.0 + 4.0 * len * len;
    return 16.0 / (q * q);
  }
  if (model.convention == MapConvention::HalfAngle) return std::abs(map_jacobian(model, p).determinant());
  if (len < 1e-4) return 1.0 - len * len / 6.0 + len * len * len * len / 120.0;
  return std::sin(len) / len;
}

CoefficientPair coefficients(const CostModel& model, const SpherePoint& x, const TangentVector& p, double f1_at_x,
                             const DensityFn& f2, double min_density, CoefficientSteps steps) {
  CoefficientPair out;
  out.target = transport_map(model, p);
  const double f2y = f2(out.target);
  if (!(f2y >= min_density)) {
    throw Error(ErrorCode::ZeroDensity, "target density " + std::to_string(f2y) + " below the floor");
  }
  if (model.method == CoefficientMethod::Analytic) {
    out.A = cost_hessian_exact(model, x, out.target);
    out.jacobian_det = map_jacobian_det_exact(model, p);
  } else {
    out.A = cost_hessian(model, x, out.target, steps.hessian);
    out.jacobian_det = std::abs(map_jacobian(model, p, steps.derivative).determinant());
  }
  out.H = f1_at_x / (out.jacobian_det * f2y);
  return out;
}

}  // namespace sphere_ot
