#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "../oracles.hpp"
#include "sphere_ot/density.hpp"
#include "sphere_ot/error.hpp"
#include "sphere_ot/harness.hpp"

using namespace sphere_ot;

namespace {

const PointCloud& fib500() {
  static const PointCloud c = build_cloud(fibonacci_points(500));
  return c;
}

StudyConfig small_study(double amplitude) {
  StudyConfig cfg;
  cfg.model = make_cost_model(CostKind::SquaredGeodesic);
  cfg.amplitude = amplitude;
  cfg.sizes = icosahedral_sizes(1, 3);
  cfg.offnode_samples = 200;
  return cfg;
}

}  // namespace

TEST(Potential, GradientMatchesDifferences) {
  std::mt19937_64 rng(51);
  for (const PotentialKind kind : {PotentialKind::ZonalLinear, PotentialKind::ZonalBump}) {
    const Potential u{kind, 0.3};
    for (int k = 0; k < 200; ++k) {
      const SpherePoint x = oracle::random_point(rng);
      const TangentFrame f = tangent_frame(x);
      const double s = 1e-5;
      Vec3 g = Vec3::Zero();
      for (const Vec3& e : {f.e1, f.e2}) {
        const double d = (u.value(exp_map(TangentVector(x, s * e))) - u.value(exp_map(TangentVector(x, -s * e)))) / (2 * s);
        g += d * e;
      }
      EXPECT_LT((g - u.gradient(x)).norm(), 1e-9);
    }
  }
  EXPECT_EQ(parse_potential_kind("zonal_bump"), PotentialKind::ZonalBump);
  EXPECT_THROW(parse_potential_kind("zonal_wave"), Error);
}

TEST(Manufacture, ZeroAmplitudeIsIdentity) {
  const auto m = make_cost_model(CostKind::SquaredGeodesic);
  const DensityFn f2 = vmf_density(Vec3(1, 0, 1), 1.5, 0.2);
  const auto mp = manufacture(m, PotentialKind::ZonalLinear, 0.0, f2, fib500());
  for (int i = 0; i < fib500().size(); ++i) {
    EXPECT_NEAR(mp.f1_nodes[i], f2(fib500().nodes[i]), 1e-10);
    EXPECT_DOUBLE_EQ(mp.u_nodes[i], 0.0);
  }
}

TEST(Manufacture, JacobianRichardsonRatio) {
  std::mt19937_64 rng(52);
  for (const CostKind kind : {CostKind::SquaredGeodesic, CostKind::Logarithmic}) {
    const auto m = make_cost_model(kind);
    const Potential u{PotentialKind::ZonalBump, kind == CostKind::SquaredGeodesic ? 0.2 : 0.05};
    for (int k = 0; k < 50; ++k) {
      const SpherePoint x = oracle::random_point(rng);
      const double h = 2e-2;
      const double d1 = pushforward_jacobian(m, u, x, h).determinant();
      const double d2 = pushforward_jacobian(m, u, x, h / 2).determinant();
      const double d3 = pushforward_jacobian(m, u, x, h / 4).determinant();
      if (std::abs(d2 - d3) < 1e-9) continue;
      const double ratio = (d1 - d2) / (d2 - d3);
      EXPECT_GE(ratio, 3.5);
      EXPECT_LE(ratio, 4.5);
    }
  }
}

TEST(Manufacture, MassBalanced) {
  const PointCloud c = build_cloud(icosahedral_points(4));
  const std::vector<double> w = area_weights(c);
  for (const CostKind kind : {CostKind::SquaredGeodesic, CostKind::Logarithmic}) {
    const auto m = make_cost_model(kind);
    const double eps = kind == CostKind::SquaredGeodesic ? 0.2 : 0.05;
    const auto mp = manufacture(m, PotentialKind::ZonalLinear, eps, uniform_density(), c);
    const double m1 = discrete_average(w, view(mp.f1_nodes));
    EXPECT_NEAR(m1, 1.0 / (4.0 * std::numbers::pi), 1e-4);
    EXPECT_GT(mp.f1_nodes.minCoeff(), 0.0);
    // u_exact is mean zero by symmetry.
    EXPECT_NEAR(discrete_average(w, view(mp.u_nodes)), 0.0, 1e-12);
  }
}

TEST(Manufacture, AmplitudeTooLarge) {
  const auto m = make_cost_model(CostKind::SquaredGeodesic);
  try {
    manufacture(m, PotentialKind::ZonalLinear, 3.0, uniform_density(), fib500());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::AmplitudeTooLarge);
  }
  // A steep bump folds the map before the gradient cap is reached.
  EXPECT_THROW(manufacture(m, PotentialKind::ZonalBump, 1.2, uniform_density(), fib500()), Error);
}

TEST(Study, ZeroAmplitudeErrorsAtSolverTolerance) {
  const auto rows = convergence_study(small_study(0.0));
  ASSERT_EQ(rows.size(), 3u);
  for (const auto& r : rows) {
    EXPECT_LE(r.linf_error, 10.0 * 1e-10 / r.tau);
    EXPECT_LE(r.offnode_error, 10.0 * 1e-10 / r.tau);
  }
}

TEST(Study, ErrorDecreasesAndIsDeterministic) {
  const auto a = convergence_study(small_study(0.2));
  const auto b = convergence_study(small_study(0.2));
  ASSERT_EQ(a.size(), 3u);
  EXPECT_GT(a[0].linf_error, a[1].linf_error);
  EXPECT_GT(a[1].linf_error, a[2].linf_error);
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a[k].linf_error, b[k].linf_error);
    EXPECT_EQ(a[k].offnode_error, b[k].offnode_error);
    EXPECT_EQ(a[k].sigma, b[k].sigma);
    EXPECT_EQ(a[k].iterations, b[k].iterations);
  }
  std::ostringstream csv;
  write_study_csv(csv, a);
  std::istringstream in(csv.str());
  std::string header, line;
  std::getline(in, header);
  EXPECT_EQ(header.rfind("n,h,tau,linf_error,offnode_error,eikonal_max,lipschitz", 0), 0u);
  int count = 0;
  while (std::getline(in, line)) ++count;
  EXPECT_EQ(count, 3);
}

TEST(Study, NeedsThreeLevels) {
  StudyConfig cfg = small_study(0.2);
  cfg.sizes.pop_back();
  EXPECT_THROW(convergence_study(cfg), Error);
}

TEST(Study, SamplePointsReproducible) {
  const auto a = sample_points(100, 9);
  const auto b = sample_points(100, 9);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a[i].coords(), b[i].coords());
  EXPECT_NE(sample_points(1, 10)[0].coords(), a[0].coords());
}

TEST(Properties, SquaredAllPass) {
  PropertyConfig cfg;
  cfg.model = make_cost_model(CostKind::SquaredGeodesic);
  const auto results = property_suite(fib500(), cfg);
  EXPECT_EQ(results.size(), 8u);
  for (const auto& r : results) {
    EXPECT_TRUE(r.passed) << r.name << ": " << r.details;
    EXPECT_FALSE(r.skipped) << r.name;
  }
}

TEST(Properties, LogSkipsUnderestimation) {
  PropertyConfig cfg;
  cfg.model = make_cost_model(CostKind::Logarithmic);
  cfg.trials = 2000;
  const auto results = property_suite(fib500(), cfg);
  for (const auto& r : results) {
    EXPECT_TRUE(r.passed) << r.name << ": " << r.details;
    EXPECT_EQ(r.skipped, r.name == "underestimation");
  }
  std::ostringstream out;
  write_property_report(out, results);
  EXPECT_NE(out.str().find("PROP underestimation SKIP"), std::string::npos);
  EXPECT_NE(out.str().find("PROP monotonicity PASS"), std::string::npos);
}

TEST(Properties, MutationIsCaught) {
  PropertyConfig cfg;
  cfg.model = make_cost_model(CostKind::SquaredGeodesic);
  cfg.scheme.flip_eikonal_sign = true;
  cfg.trials = 2000;
  const auto results = property_suite(fib500(), cfg);
  ASSERT_EQ(results.front().name, "monotonicity");
  EXPECT_FALSE(results.front().passed);
}

TEST(Underestimation, OracleErrorAndOffset) {
  const auto m = make_cost_model(CostKind::SquaredGeodesic);
  const Scheme s(fib500(), SchemeConfig{}, m);
  const auto mp = manufacture(m, PotentialKind::ZonalLinear, 0.2, uniform_density(), fib500());
  const auto u = underestimation_measure(s, mp);
  EXPECT_GT(u.oracle_error, 0.0);
  EXPECT_LT(u.oracle_error, 1e-6);
  EXPECT_NEAR(u.max_raw - u.max_scheme, s.params().offset, 1e-12);
  EXPECT_LE(u.max_scheme, 10.0 * u.oracle_error);
}
