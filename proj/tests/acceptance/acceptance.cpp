// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "sphere_ot/cloud.hpp"
#include "sphere_ot/cost.hpp"
#include "sphere_ot/density.hpp"
#include "sphere_ot/geometry.hpp"
#include "sphere_ot/harness.hpp"
#include "sphere_ot/lift.hpp"
#include "sphere_ot/scheme.hpp"
#include "sphere_ot/solver.hpp"

using namespace sphere_ot;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool passed = false;
  std::string details;
};

double seconds_since(Clock::time_point start) { return std::chrono::duration<double>(Clock::now() - start).count(); }

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

SpherePoint random_point(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vec3 v;
  do {
    v = Vec3(n(rng), n(rng), n(rng));
  } while (v.norm() < 1e-8);
  return SpherePoint(v);
}

TangentVector random_tangent(std::mt19937_64& rng, const SpherePoint& x, double max_norm) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const TangentFrame f = tangent_frame(x);
  const double a = 2.0 * std::numbers::pi * u(rng);
  return TangentVector(x, max_norm * u(rng) * (std::cos(a) * f.e1 + std::sin(a) * f.e2));
}

// Great-circle distance in extended precision.
double reference_distance(const SpherePoint& a, const SpherePoint& b) {
  long double c[3], dot = 0;
  for (int i = 0; i < 3; ++i) dot += static_cast<long double>(a[i]) * b[i];
  c[0] = static_cast<long double>(a[1]) * b[2] - static_cast<long double>(a[2]) * b[1];
  c[1] = static_cast<long double>(a[2]) * b[0] - static_cast<long double>(a[0]) * b[2];
  c[2] = static_cast<long double>(a[0]) * b[1] - static_cast<long double>(a[1]) * b[0];
  return static_cast<double>(std::atan2(std::sqrt(c[0] * c[0] + c[1] * c[1] + c[2] * c[2]), dot));
}

Outcome geometry_identities() {
  std::mt19937_64 rng(101);
  double worst_len = 0.0, worst_orth = 0.0;
  int pairs = 0;
  while (pairs < 100000) {
    const SpherePoint x0 = random_point(rng);
    const SpherePoint x = random_point(rng);
    const double d = reference_distance(x0, x);
    if (d >= std::numbers::pi - 1e-6) continue;
    const Vec3 disp = normal_coords(x0, x) - x0.coords();
    worst_len = std::max(worst_len, std::abs(disp.norm() - d));
    worst_orth = std::max(worst_orth, std::abs(disp.dot(x0.coords())));
    ++pairs;
  }
  return {worst_len <= 1e-10 && worst_orth <= 1e-10,
          "pairs=" + std::to_string(pairs) + " max_length_error=" + num(worst_len) + " max_normal_component=" + num(worst_orth)};
}

Outcome map_condition() {
  std::mt19937_64 rng(102);
  std::ostringstream out;
  bool ok = true;
  double worst_unit = 0.0;
  auto run = [&](CostModel m, const char* label) {
    const double bound = std::min(m.R, 2.0);
    int pass = 0;
    double worst = 0.0;
    for (int k = 0; k < 10000; ++k) {
      const SpherePoint x = random_point(rng);
      const TangentVector p = random_tangent(rng, x, bound);
      const SpherePoint y = transport_map(m, p);
      worst_unit = std::max(worst_unit, std::abs(y.coords().norm() - 1.0));
      const Vec3 g = tangent_frame(x).to_ambient(cost_gradient(m, x, y, 1e-5));
      const double res = (g + p.vec()).norm();
      worst = std::max(worst, res);
      pass += res <= 1e-6;
    }
    out << label << "_pass=" << pass << "/10000 " << label << "_max=" << num(worst) << ' ';
    return pass;
  };
  CostModel sq = make_cost_model(CostKind::SquaredGeodesic);
  ok &= run(sq, "squared_full_angle") == 10000;
  ok &= run(make_cost_model(CostKind::Logarithmic), "log") == 10000;
  sq.convention = MapConvention::HalfAngle;
  run(sq, "squared_half_angle");  // recorded, not required
  ok &= worst_unit <= 1e-12;
  out << "max_unit_deviation=" << num(worst_unit) << " passing_convention=full_angle";
  return {ok, out.str()};
}

Outcome scheme_gate() {
  const PointCloud cloud = build_cloud(fibonacci_points(2000));
  PropertyConfig cfg;
  cfg.model = make_cost_model(CostKind::SquaredGeodesic);
  cfg.trials = 10000;
  cfg.amplitude = 0.2;
  const auto results = property_suite(cloud, cfg);
  bool ok = true;
  std::ostringstream out;
  for (const auto& r : results) {
    if (r.name == "monotonicity" || r.name == "properness" || r.name == "mean_zero" || r.name == "underestimation") {
      ok &= r.passed && !r.skipped;
      out << r.name << "{" << (r.passed ? "PASS" : "FAIL") << ' ' << r.details << "} ";
    }
  }

  // A^h on constants and linear functions. Linear functions average to zero
  // exactly only on centrally symmetric clouds.
  const PointCloud ico = build_cloud(icosahedral_points(4));
  const auto lin_error = [](const PointCloud& c) {
    const std::vector<double> w = area_weights(c);
    std::vector<double> ones(c.size(), 1.0), lin(c.size());
    double worst = std::abs(discrete_average(w, ones) - 1.0);
    for (const Vec3 a : {Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1), Vec3(0.3, -0.7, 0.2)}) {
      for (int i = 0; i < c.size(); ++i) lin[i] = a.dot(c.nodes[i].coords());
      worst = std::max(worst, std::abs(discrete_average(w, lin)));
    }
    return worst;
  };
  const double ico_err = lin_error(ico);
  ok &= ico_err <= 1e-12;
  out << "average_on_constants_and_linear(icosahedral n=" << ico.size() << ")=" << num(ico_err)
      << " linear_average(fibonacci n=2000, quadrature)=" << num(lin_error(cloud));
  return {ok, out.str()};
}

Outcome identity_transport() {
  const CostModel m = make_cost_model(CostKind::SquaredGeodesic);
  bool ok = true;
  std::ostringstream out;
  for (const int k : {2, 3, 4}) {
    const PointCloud c = build_cloud(icosahedral_points(k));
    const Scheme s(c, SchemeConfig{}, m);
    const TransportProblem p{m, GridFunction::Constant(c.size(), 1.0 / (4.0 * std::numbers::pi)), uniform_density()};
    const SolveResult r = solve(s, p);
    const double umax = r.u.cwiseAbs().maxCoeff();
    const double avg = std::abs(s.average(view(r.u)));
    ok &= umax <= 1e-6 && avg <= 1e-12 && r.report.converged;
    out << "n=" << c.size() << ":max|u|=" << num(umax) << ",|A(u)|=" << num(avg) << ' ';
  }
  return {ok, out.str()};
}

struct StudyOutcome {
  Outcome convergence;
  Outcome sigma;
  std::vector<double> v_norms, u_norms;
  double seconds = 0.0;
};

double median3(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

StudyOutcome study() {
  const auto start = Clock::now();
  StudyConfig cfg;
  cfg.model = make_cost_model(CostKind::SquaredGeodesic);
  cfg.potential = PotentialKind::ZonalLinear;
  cfg.amplitude = 0.2;
  cfg.sizes = icosahedral_sizes(3, 3);
  const auto rows = convergence_study(cfg);
  StudyOutcome o;
  o.seconds = seconds_since(start);

  std::ostringstream out, sig;
  bool decreasing = true, eikonal_ok = true, sigma_down = true;
  std::vector<double> lips;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto& r = rows[k];
    if (k > 0) {
      decreasing &= r.linf_error < rows[k - 1].linf_error;
      sigma_down &= r.sigma < rows[k - 1].sigma;
    }
    eikonal_ok &= r.eikonal_max <= cfg.model.R;
    lips.push_back(r.lipschitz);
    o.v_norms.push_back(r.v_norm);
    o.u_norms.push_back(r.u_norm);
    out << "n=" << r.n << ":err=" << num(r.linf_error) << ",offnode=" << num(r.offnode_error)
        << ",eik=" << num(r.eikonal_max) << ",L=" << num(r.lipschitz) << ' ';
    sig << "n=" << r.n << ":sigma=" << num(r.sigma) << " ";
  }
  const double ratio = rows.back().linf_error / rows.front().linf_error;
  const double lip_spread = *std::max_element(lips.begin(), lips.end()) / median3(lips);
  out << "finest/coarsest=" << num(ratio) << " L_max/L_median=" << num(lip_spread) << " R=" << num(cfg.model.R);
  o.convergence = {decreasing && ratio <= 0.5 && eikonal_ok && lip_spread <= 1.2, out.str()};
  o.sigma = {sigma_down, sig.str()};
  return o;
}

Outcome uniqueness(const StudyOutcome& st) {
  const CostModel m = make_cost_model(CostKind::SquaredGeodesic);
  const PointCloud c = build_cloud(icosahedral_points(4));
  const Scheme s(c, SchemeConfig{}, m);
  const auto mp = manufacture(m, PotentialKind::ZonalLinear, 0.2, uniform_density(), c);
  const SolveResult a = solve(s, mp.transport());
  std::mt19937_64 rng(103);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  GridFunction start(c.size());
  for (auto& x : start) x = u(rng);
  const SolveResult b = solve(s, mp.transport(), {}, &start);
  const double dv = (a.v - b.v).cwiseAbs().maxCoeff();
  const double du = (a.u - b.u).cwiseAbs().maxCoeff();
  const double tol = a.report.tol;
  const double vr = *std::max_element(st.v_norms.begin(), st.v_norms.end()) / median3(st.v_norms);
  const double ur = *std::max_element(st.u_norms.begin(), st.u_norms.end()) / median3(st.u_norms);
  const bool ok = dv <= 10.0 * tol && du <= 10.0 * tol && vr <= 1.1 && ur <= 1.1;
  return {ok, "n=" + std::to_string(c.size()) + " max|v0-v_rand|=" + num(dv) + " max|u0-u_rand|=" + num(du) +
                  " 10*tol=" + num(10.0 * tol) + " |v|_max/median=" + num(vr) + " |u|_max/median=" + num(ur)};
}

Outcome log_smoke() {
  const CostModel m = make_cost_model(CostKind::Logarithmic);
  const PointCloud c = build_cloud(icosahedral_points(3));
  const Scheme s(c, SchemeConfig{}, m);
  const TransportProblem p{m, GridFunction::Constant(c.size(), 1.0 / (4.0 * std::numbers::pi)), uniform_density()};
  const std::vector<Vec2> zero(c.size(), Vec2::Zero());
  const auto coeffs = node_coefficients(c, p, zero, default_gradient_cap(m));
  const GridFunction v0 = GridFunction::Zero(c.size());
  const double r0 = s.residual(view(v0), coeffs).cwiseAbs().maxCoeff();
  const double oracle = coefficient_oracle_error(m, c, Potential{PotentialKind::ZonalLinear, 0.0}, view(p.f1), p.f2);
  const SolveResult r = solve(s, p);
  const bool ok = r0 <= 10.0 * oracle && r.report.converged && r.report.v_residual_inf <= r.report.tol;
  return {ok, "n=" + std::to_string(c.size()) + " residual_at_zero=" + num(r0) + " 10*oracle_error=" + num(10.0 * oracle) +
                  " final_residual=" + num(r.report.v_residual_inf) + " tol=" + num(r.report.tol) +
                  " eikonal_max=" + num(r.report.eikonal_max) + " R=" + num(m.R)};
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int id, const char* name, const Outcome& o, double seconds, double limit) {
    const bool ok = o.passed && seconds <= limit;
    failures += !ok;
    std::printf("CRITERION %d %s %s time=%.1fs/limit=%.0fs %s\n", id, ok ? "PASS" : "FAIL", name, seconds, limit,
                o.details.c_str());
    std::fflush(stdout);
  };
  auto timed = [&](int id, const char* name, double limit, const std::function<Outcome()>& fn) {
    const auto start = Clock::now();
    const Outcome o = fn();
    report(id, name, o, seconds_since(start), limit);
  };

  timed(1, "geometry_identities", 5, geometry_identities);
  timed(2, "map_condition", 30, map_condition);
  timed(3, "scheme_properties", 120, scheme_gate);
  timed(4, "identity_transport", 60, identity_transport);
  const StudyOutcome st = study();
  report(5, "manufactured_convergence", st.convergence, st.seconds, 600);
  timed(6, "uniqueness_stability", 300, [&] { return uniqueness(st); });
  report(7, "sigma_trend", st.sigma, st.seconds, 600);
  timed(8, "log_cost_smoke", 120, log_smoke);
  std::printf("%d of 8 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
