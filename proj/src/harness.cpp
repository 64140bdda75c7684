#include "sphere_ot/harness.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include "sphere_ot/density.hpp"
#include "sphere_ot/error.hpp"
#include "sphere_ot/lift.hpp"

namespace sphere_ot {

PotentialKind parse_potential_kind(const std::string& name) {
  if (name == "zonal_linear") return PotentialKind::ZonalLinear;
  if (name == "zonal_bump") return PotentialKind::ZonalBump;
  throw Error(ErrorCode::ConfigError, "unknown potential '" + name + "' (valid: zonal_linear, zonal_bump)");
}

const char* to_string(PotentialKind kind) {
  return kind == PotentialKind::ZonalLinear ? "zonal_linear" : "zonal_bump";
}

double Potential::value(const SpherePoint& x) const {
  const double z = x[2];
  return kind == PotentialKind::ZonalLinear ? amplitude * z : amplitude * (z * z - 1.0 / 3.0);
}

Vec3 Potential::gradient(const SpherePoint& x) const {
  const double z = x[2];
  const Vec3 tangential = Vec3::UnitZ() - z * x.coords();
  return (kind == PotentialKind::ZonalLinear ? amplitude : 2.0 * amplitude * z) * tangential;
}

namespace {

SpherePoint image(const CostModel& model, const Potential& u, const SpherePoint& x) {
  return transport_map(model, TangentVector(x, u.gradient(x)));
}

}  // namespace

Mat2 pushforward_jacobian(const CostModel& model, const Potential& u, const SpherePoint& x, double step) {
  const TangentFrame fx = tangent_frame(x);
  const TangentFrame fy = tangent_frame(image(model, u, x));
  Mat2 J;
  for (int i = 0; i < 2; ++i) {
    const Vec3 dir = i == 0 ? fx.e1 : fx.e2;
    const SpherePoint plus = image(model, u, exp_map(TangentVector(x, step * dir)));
    const SpherePoint minus = image(model, u, exp_map(TangentVector(x, -step * dir)));
    J.col(i) = fy.to_local((plus.coords() - minus.coords()) / (2.0 * step));
  }
  return J;
}

double pushforward_det(const CostModel& model, const Potential& u, const SpherePoint& x, double step) {
  const double coarse = pushforward_jacobian(model, u, x, step).determinant();
  const double fine = pushforward_jacobian(model, u, x, 0.5 * step).determinant();
  return (4.0 * fine - coarse) / 3.0;
}

ManufacturedProblem manufacture(const CostModel& model, PotentialKind kind, double amplitude, DensityFn f2,
                                const PointCloud& cloud) {
  ManufacturedProblem mp;
  mp.model = model;
  mp.potential = {kind, amplitude};
  mp.f2 = f2;
  mp.f1 = [model, pot = mp.potential, f2](const SpherePoint& x) {
    return std::abs(pushforward_det(model, pot, x)) * f2(image(model, pot, x));
  };
  const double orientation = model.kind == CostKind::Logarithmic ? -1.0 : 1.0;
  const int n = cloud.size();
  const double cap = default_gradient_cap(model);
  mp.f1_nodes.resize(n);
  mp.u_nodes.resize(n);
  for (int i = 0; i < n; ++i) {
    const SpherePoint& x = cloud.nodes[i];
    const double g = mp.potential.gradient(x).norm();
    if (g > cap) {
      throw Error(ErrorCode::AmplitudeTooLarge,
                  "potential gradient " + std::to_string(g) + " exceeds the gradient cap " + std::to_string(cap));
    }
    // The log-cost map at p = 0 is the antipodal map, which reverses orientation;
    // a fold is a sign change relative to the zero potential.
    const double det = orientation * pushforward_det(model, mp.potential, x);
    if (!(det > 0.0)) {
      throw Error(ErrorCode::AmplitudeTooLarge, "pushforward folds at node " + std::to_string(i) +
                                                    " (det " + std::to_string(det) + "); lower the amplitude");
    }
    mp.f1_nodes[i] = det * f2(image(model, mp.potential, x));
    mp.u_nodes[i] = mp.potential.value(x);
  }
  return mp;
}

std::vector<int> icosahedral_sizes(int first_subdivision, int levels) {
  std::vector<int> out;
  for (int k = first_subdivision; k < first_subdivision + levels; ++k) out.push_back(10 * (1 << (2 * k)) + 2);
  return out;
}

std::vector<SpherePoint> sample_points(int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<SpherePoint> out;
  out.reserve(count);
  while (static_cast<int>(out.size()) < count) {
    const Vec3 v(normal(rng), normal(rng), normal(rng));
    if (v.norm() > 1e-8) out.emplace_back(v);
  }
  return out;
}

std::vector<StudyRow> convergence_study(const StudyConfig& config) {
  if (config.sizes.size() < 3) throw Error(ErrorCode::ConfigError, "a convergence study needs at least 3 levels");
  const DensityFn f2 = parse_density(config.f2);
  const auto samples = sample_points(config.offnode_samples, config.seed);
  std::vector<StudyRow> rows;
  for (const int n : config.sizes) {
    const auto start = std::chrono::steady_clock::now();
    const PointCloud cloud = build_cloud(generate_cloud(config.cloud_kind, n), config.cloud_params);
    const Scheme scheme(cloud, config.scheme, config.model);
    const ManufacturedProblem mp = manufacture(config.model, config.potential, config.amplitude, f2, cloud);
    const SolveResult sol = solve(scheme, mp.transport(), config.solver);

    // Reference normalized to discrete mean zero on this cloud.
    const double shift = scheme.average(view(mp.u_nodes));
    StudyRow row;
    row.n = n;
    row.h = cloud.h;
    row.tau = scheme.params().tau;
    row.linf_error = (sol.u - (mp.u_nodes.array() - shift).matrix()).cwiseAbs().maxCoeff();
    const Interpolator lift(cloud);
    for (const auto& x : samples)
      row.offnode_error = std::max(row.offnode_error, std::abs(lift(view(sol.u), x) - (mp.potential.value(x) - shift)));
    row.eikonal_max = sol.report.eikonal_max;
    row.lipschitz = lipschitz_estimate(cloud, view(sol.u));
    row.sigma = sol.report.uh_scheme_residual_inf;
    row.v_norm = sol.v.cwiseAbs().maxCoeff();
    row.u_norm = sol.u.cwiseAbs().maxCoeff();
    row.v_residual = sol.report.v_residual_inf;
    row.iterations = sol.report.iterations;
    row.outer_iterations = sol.report.outer_iterations;
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    rows.push_back(row);
  }
  return rows;
}

void write_study_csv(std::ostream& out, const std::vector<StudyRow>& rows) {
  out << "n,h,tau,linf_error,offnode_error,eikonal_max,lipschitz,sigma,v_norm,u_norm,v_residual,iterations,"
         "outer_iterations,seconds\n";
  for (const auto& r : rows) {
    out << r.n << std::setprecision(10) << ',' << r.h << ',' << r.tau << ',' << r.linf_error << ',' << r.offnode_error
        << ',' << r.eikonal_max << ',' << r.lipschitz << ',' << r.sigma << ',' << r.v_norm << ',' << r.u_norm << ','
        << r.v_residual << ',' << r.iterations << ',' << r.outer_iterations << ',' << std::setprecision(4)
        << r.seconds << '\n';
  }
}

namespace {

using Rng = std::mt19937_64;

Mat2 random_symmetric(Rng& rng, double lo, double hi) {
  std::uniform_real_distribution<double> eig(lo, hi);
  std::uniform_real_distribution<double> ang(0.0, std::numbers::pi);
  const double a = ang(rng);
  Mat2 Q;
  Q << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
  return Q * Vec2(eig(rng), eig(rng)).asDiagonal() * Q.transpose();
}

GridFunction random_grid(Rng& rng, const PointCloud& cloud, double smooth, double noise) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Vec3 a(u(rng), u(rng), u(rng));
  GridFunction g(cloud.size());
  for (int i = 0; i < cloud.size(); ++i) g[i] = smooth * a.dot(cloud.nodes[i].coords()) + noise * u(rng);
  return g;
}

std::string fmt(const char* label, double value) {
  std::ostringstream s;
  s << label << '=' << std::setprecision(4) << value;
  return s.str();
}

PropertyResult monotonicity(const Scheme& scheme, const PropertyConfig& cfg, Rng& rng) {
  const PointCloud& cloud = scheme.cloud();
  std::uniform_int_distribution<int> node(0, cloud.size() - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int violations = 0;
  int eikonal_trials = 0;
  GridFunction u = random_grid(rng, cloud, 1.0, 0.05);
  for (int t = 0; t < cfg.trials; ++t) {
    if (t % 100 == 0) u = random_grid(rng, cloud, 1.0 + 4.0 * unit(rng), 0.1 * unit(rng));
    const int i = node(rng);
    const Stencil& s = scheme.stencils()[i];
    const int j = s.neighbor_indices[std::uniform_int_distribution<int>(0, s.size() - 1)(rng)];
    // Frozen coefficients are arbitrary; a very negative H hands the max to the Eikonal branch.
    NodeCoefficients c{random_symmetric(rng, -1.0, 2.0), t % 2 ? 2.0 * unit(rng) : -1e3};
    if (t % 2 == 0) ++eikonal_trials;
    const double before = scheme.combined_at(i, view(u), c);
    const double saved = u[j];
    u[j] += 1e-3 + unit(rng);
    const double after = scheme.combined_at(i, view(u), c);
    u[j] = saved;
    if (after > before) ++violations;
  }
  return {"monotonicity", violations == 0, false,
          "trials=" + std::to_string(cfg.trials) + " eikonal_branch_trials=" + std::to_string(eikonal_trials) +
              " violations=" + std::to_string(violations)};
}

PropertyResult properness(const Scheme& scheme, const PropertyConfig& cfg, Rng& rng) {
  const PointCloud& cloud = scheme.cloud();
  std::uniform_int_distribution<int> node(0, cloud.size() - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double tau = scheme.params().tau;
  double worst = std::numeric_limits<double>::infinity();
  GridFunction u = random_grid(rng, cloud, 1.0, 0.05);
  const int trials = std::max(1, cfg.trials / 10);
  for (int t = 0; t < trials; ++t) {
    const int i = node(rng);
    NodeCoefficients c{random_symmetric(rng, -1.0, 2.0), t % 2 ? 2.0 * unit(rng) : -1e3};
    const double dc = 1e-3 + unit(rng);
    const double before = scheme.combined_at(i, view(u), c) + tau * u[i];
    u[i] += dc;
    const double after = scheme.combined_at(i, view(u), c) + tau * u[i];
    u[i] -= dc;
    worst = std::min(worst, (after - before) / dc);
  }
  return {"properness", worst >= tau * (1.0 - 1e-12), false, fmt("min_slope", worst) + " " + fmt("tau", tau)};
}

PropertyResult comparison(const PropertyConfig& cfg, Rng& rng) {
  const PointCloud small = build_cloud(icosahedral_points(2));
  const Scheme scheme(small, cfg.scheme, cfg.model);
  const int n = small.size();
  TransportProblem tp{cfg.model, GridFunction::Constant(n, 1.0 / (4.0 * std::numbers::pi)), uniform_density()};
  const GradientFit fit(small);
  const auto coeffs = node_coefficients(small, tp, fit.all(view(GridFunction::Zero(n).eval())),
                                        default_gradient_cap(cfg.model));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  GridFunction phi = random_grid(rng, small, 0.5, 0.2);
  GridFunction psi = phi;
  for (int i = 0; i < n; ++i) psi[i] += unit(rng) < 0.5 ? 0.0 : 0.3 * unit(rng);
  double worst = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 100; ++k) {
    const double dt = 0.5 * std::min(euler_step_bound(scheme, coeffs, phi), euler_step_bound(scheme, coeffs, psi));
    phi = euler_step(scheme, coeffs, phi, dt);
    psi = euler_step(scheme, coeffs, psi, dt);
    worst = std::min(worst, (psi - phi).minCoeff());
  }
  return {"comparison", worst >= -1e-12, false, "n=" + std::to_string(n) + " " + fmt("min_gap", worst)};
}

PropertyResult mean_zero(const Scheme& scheme, Rng& rng) {
  const PointCloud& cloud = scheme.cloud();
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const GridFunction v = random_grid(rng, cloud, 3.0, 1.0);
    const GridFunction w = random_grid(rng, cloud, 1.0, 2.0);
    worst = std::max(worst, std::abs(scheme.average(view(shift_u(scheme, v)))));
    const double c = 5.0 * (t + 1);
    worst = std::max(worst, std::abs(scheme.average(view(GridFunction::Constant(cloud.size(), c).eval())) - c) / c);
    const GridFunction combo = 2.5 * v - 1.5 * w;
    worst = std::max(worst, std::abs(scheme.average(view(combo)) -
                                     (2.5 * scheme.average(view(v)) - 1.5 * scheme.average(view(w)))));
  }
  return {"mean_zero", worst <= 1e-12, false, fmt("max_deviation", worst)};
}

double amplitude_for(const PropertyConfig& cfg) {
  return cfg.model.kind == CostKind::SquaredGeodesic ? cfg.amplitude : std::min(cfg.amplitude, 0.05);
}

PropertyResult lipschitz_bound(const PointCloud& cloud, const PropertyConfig& cfg) {
  const double eps = amplitude_for(cfg);
  std::ostringstream d;
  bool ok = true;
  const PointCloud fine = refine(cloud);
  double worst_eik = 0.0;
  for (const PointCloud* c : {&cloud, &fine}) {
    const Scheme scheme(*c, cfg.scheme, cfg.model);
    const ManufacturedProblem mp = manufacture(cfg.model, PotentialKind::ZonalLinear, eps, uniform_density(), *c);
    const SolveResult sol = solve(scheme, mp.transport(), cfg.solver);
    const double L = lipschitz_estimate(*c, view(sol.u));
    // |grad(eps x3)| <= eps; the flat interpolant may exceed it by the projection distortion.
    ok = ok && L <= 1.2 * eps;
    const double eik_limit = scheme.params().R + sol.report.tol / scheme.params().tau;
    ok = ok && sol.report.eikonal_max <= eik_limit;
    worst_eik = std::max(worst_eik, sol.report.eikonal_max);
    d << "n=" << c->size() << ' ' << fmt("L", L) << ' ';
  }
  d << fmt("bound", 1.2 * eps) << ' ' << fmt("eikonal_max", worst_eik);
  return {"lipschitz_bound", ok, false, d.str()};
}

PropertyResult map_condition(const PropertyConfig& cfg, Rng& rng) {
  const CostModel& m = cfg.model;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto pts = sample_points(1000, rng());
  double worst = 0.0;
  double norm_dev = 0.0;
  for (const auto& x : pts) {
    const TangentFrame f = tangent_frame(x);
    const double a = 2.0 * std::numbers::pi * unit(rng);
    const double len = std::min(m.R, 2.0) * unit(rng);
    const TangentVector p(x, len * (std::cos(a) * f.e1 + std::sin(a) * f.e2));
    const SpherePoint y = transport_map(m, p);
    norm_dev = std::max(norm_dev, std::abs(y.coords().norm() - 1.0));
    const Vec2 g = cost_gradient(m, x, y, 1e-5);
    worst = std::max(worst, (g + f.to_local(p.vec())).norm());
  }
  return {"map_condition", worst <= 1e-6 && norm_dev <= 1e-12, false,
          fmt("max_residual", worst) + " " + fmt("max_norm_deviation", norm_dev)};
}

PropertyResult a_symmetry(const PropertyConfig& cfg, Rng& rng) {
  const CostModel& m = cfg.model;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto pts = sample_points(500, rng());
  double asym = 0.0;
  double route = 0.0;
  for (const auto& x : pts) {
    const TangentFrame f = tangent_frame(x);
    const double a = 2.0 * std::numbers::pi * unit(rng);
    const TangentVector p(x, std::min(2.0, 0.8 * m.R) * unit(rng) * (std::cos(a) * f.e1 + std::sin(a) * f.e2));
    const SpherePoint y = transport_map(m, p);
    const Mat2 A = cost_hessian_exact(m, x, y);
    const Mat2 Afd = cost_hessian(m, x, y);
    asym = std::max({asym, std::abs(A(0, 1) - A(1, 0)), std::abs(Afd(0, 1) - Afd(1, 0))});
    route = std::max(route, (A - Afd).cwiseAbs().maxCoeff());
  }
  return {"a_symmetry", asym <= 1e-9 && route <= 1e-5, false,
          fmt("max_asymmetry", asym) + " " + fmt("closed_form_vs_differences", route)};
}

}  // namespace

double coefficient_oracle_error(const CostModel& model, const PointCloud& cloud, const Potential& potential,
                                std::span<const double> f1, const DensityFn& f2) {
  CostModel fd = model;
  fd.method = CoefficientMethod::FiniteDifference;
  CostModel an = model;
  an.method = CoefficientMethod::Analytic;
  double err = 0.0;
  for (int i = 0; i < cloud.size(); ++i) {
    const SpherePoint& x = cloud.nodes[i];
    const TangentVector p(x, potential.gradient(x));
    const CoefficientPair a = coefficients(an, x, p, f1[i], f2);
    const CoefficientPair b = coefficients(fd, x, p, f1[i], f2);
    err = std::max({err, (a.A - b.A).cwiseAbs().maxCoeff(), std::abs(a.H - b.H)});
  }
  return err;
}

UnderestimationMeasure underestimation_measure(const Scheme& scheme, const ManufacturedProblem& mp) {
  const PointCloud& cloud = scheme.cloud();
  UnderestimationMeasure m;
  m.max_scheme = -std::numeric_limits<double>::infinity();
  m.max_raw = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < cloud.size(); ++i) {
    const SpherePoint& x = cloud.nodes[i];
    const CoefficientPair c = coefficients(mp.model, x, TangentVector(x, mp.potential.gradient(x)), mp.f1_nodes[i], mp.f2);
    const NodeCoefficients nc{c.A, c.H};
    const double F = scheme.ma_at(i, view(mp.u_nodes), nc);
    m.max_scheme = std::max(m.max_scheme, F);
    m.max_raw = std::max(m.max_raw, F + scheme.params().offset);
  }
  m.oracle_error = coefficient_oracle_error(mp.model, cloud, mp.potential, view(mp.f1_nodes), mp.f2);
  return m;
}

std::vector<PropertyResult> property_suite(const PointCloud& cloud, const PropertyConfig& cfg) {
  Rng rng(cfg.seed);
  const Scheme scheme(cloud, cfg.scheme, cfg.model);
  std::vector<PropertyResult> out;
  out.push_back(monotonicity(scheme, cfg, rng));
  out.push_back(properness(scheme, cfg, rng));
  out.push_back(comparison(cfg, rng));
  out.push_back(mean_zero(scheme, rng));
  out.push_back(lipschitz_bound(cloud, cfg));
  out.push_back(map_condition(cfg, rng));
  out.push_back(a_symmetry(cfg, rng));
  if (cfg.model.kind == CostKind::SquaredGeodesic) {
    const ManufacturedProblem mp =
        manufacture(cfg.model, PotentialKind::ZonalLinear, cfg.amplitude, uniform_density(), cloud);
    const UnderestimationMeasure m = underestimation_measure(scheme, mp);
    out.push_back({"underestimation", m.max_scheme <= 10.0 * m.oracle_error, false,
                   fmt("max_F", m.max_scheme) + " " + fmt("max_F_without_offset", m.max_raw) + " " +
                       fmt("tolerance", 10.0 * m.oracle_error)});
  } else {
    out.push_back({"underestimation", true, true, "not claimed for the log cost"});
  }
  return out;
}

void write_property_report(std::ostream& out, const std::vector<PropertyResult>& results) {
  for (const auto& r : results) {
    out << "PROP " << r.name << ' ' << (r.skipped ? "SKIP" : r.passed ? "PASS" : "FAIL") << ' ' << r.details << '\n';
  }
}

}  // namespace sphere_ot
