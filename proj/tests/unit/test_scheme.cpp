#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "sphere_ot/cloud.hpp"
#include "sphere_ot/error.hpp"
#include "sphere_ot/scheme.hpp"

using namespace sphere_ot;

namespace {

const PointCloud& cloud642() {
  static const PointCloud c = build_cloud(icosahedral_points(3));
  return c;
}

const Scheme& scheme642() {
  static const Scheme s(cloud642(), SchemeConfig{}, make_cost_model(CostKind::SquaredGeodesic));
  return s;
}

std::vector<double> random_values(std::mt19937_64& rng, int n, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

std::vector<NodeCoefficients> random_coefficients(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<NodeCoefficients> c(n);
  for (auto& k : c) {
    k.A << 1.0 + 0.3 * u(rng), 0.2 * u(rng), 0.0, 1.0 + 0.3 * u(rng);
    k.A(1, 0) = k.A(0, 1);
    k.H = 1.0 + 0.5 * u(rng);
  }
  return c;
}

// Values of a function of the projected coordinates about node i, written on the stencil only.
template <class F>
std::vector<double> on_stencil(const Stencil& s, int n, F f) {
  std::vector<double> v(n, 0.0);
  v[s.center_index] = f(Vec2::Zero());
  for (int k = 0; k < s.size(); ++k) v[s.neighbor_indices[k]] = f(s.projected[k]);
  return v;
}

}  // namespace

TEST(DetPlus, ProductAboveDeltaAndMonotone) {
  EXPECT_DOUBLE_EQ(det_plus(2.0, 3.0, 0.1), 6.0);
  EXPECT_DOUBLE_EQ(det_plus(0.05, 3.0, 0.1), 0.1 * 3.0 - 0.05);
  EXPECT_LT(det_plus(-1.0, 2.0, 0.1), 0.0);
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int k = 0; k < 100000; ++k) {
    const double a = u(rng), b = u(rng), e = std::abs(u(rng)) * 0.1;
    EXPECT_GE(det_plus(a + e, b, 0.1), det_plus(a, b, 0.1));
    EXPECT_GE(det_plus(a, b + e, 0.1), det_plus(a, b, 0.1));
    EXPECT_DOUBLE_EQ(det_plus(a, b, 0.1), det_plus(b, a, 0.1));
  }
}

TEST(TruncationScale, Formula) {
  EXPECT_DOUBLE_EQ(truncation_scale(0.04, 0.4, 0.1), 0.16 + 0.1 + 0.1);
  EXPECT_DOUBLE_EQ(truncation_scale(0.04, 0.4, 0.1, 2.0), 2.0 * (0.16 + 0.1 + 0.1));
}

TEST(SecondDifference, ExactOnLinearFunctions) {
  const PointCloud& c = cloud642();
  const Scheme& s = scheme642();
  const Vec2 a(0.7, -1.3);
  for (int i = 0; i < c.size(); i += 11) {
    const Stencil& st = s.stencils()[i];
    const auto v = on_stencil(st, c.size(), [&](const Vec2& z) { return 2.0 + a.dot(z); });
    for (const auto& p : s.pairs()[i]) {
      EXPECT_NEAR(p.first.apply(v, i), 0.0, 1e-12);
      EXPECT_NEAR(p.second.apply(v, i), 0.0, 1e-12);
    }
  }
}

TEST(SecondDifference, ConsistentOnQuadraticsUnderRefinement) {
  Mat2 M;
  M << 1.0, 0.4, 0.4, -0.5;
  double previous = 1e9;
  for (const int k : {3, 4}) {
    const PointCloud c = build_cloud(icosahedral_points(k));
    const Scheme s(c, SchemeConfig{}, make_cost_model(CostKind::SquaredGeodesic));
    double worst = 0.0;
    for (int i = 0; i < c.size(); i += 7) {
      const auto v = on_stencil(s.stencils()[i], c.size(), [&](const Vec2& z) { return z.dot(M * z); });
      for (const auto& p : s.pairs()[i]) {
        for (const DifferenceRow* row : {&p.first, &p.second}) {
          worst = std::max(worst, std::abs(row->apply(v, i) - 2.0 * row->direction.dot(M * row->direction)));
        }
      }
    }
    EXPECT_LT(worst, previous);
    previous = worst;
  }
  EXPECT_LT(previous, 0.5);
}

TEST(SecondDifference, RowsAreMonotone) {
  const Scheme& s = scheme642();
  for (int i = 0; i < s.size(); ++i) {
    for (const auto& p : s.pairs()[i]) {
      for (const DifferenceRow* row : {&p.first, &p.second}) {
        for (int k = 0; k < row->count; ++k) EXPECT_GE(row->weights[k], 0.0);
      }
      EXPECT_NEAR(p.first.direction.dot(p.second.direction), 0.0, 1e-15);
    }
    EXPECT_EQ(static_cast<int>(s.pairs()[i].size()), 8);
  }
}

TEST(SecondDifference, CompiledRowMatchesEndpointFormula) {
  const PointCloud& c = cloud642();
  const Scheme& s = scheme642();
  std::mt19937_64 rng(22);
  const auto v = random_values(rng, c.size(), 1.0);
  const Stencil& st = s.stencils()[5];
  const Vec2 dir(std::cos(0.3), std::sin(0.3));
  const auto fwd = ray_candidates(st, dir, kEndpointWindow * st.dtheta, kEndpointCandidates);
  const auto bwd = ray_candidates(st, -dir, kEndpointWindow * st.dtheta, kEndpointCandidates);
  ASSERT_FALSE(fwd.empty());
  ASSERT_FALSE(bwd.empty());
  const RayEndpoint* bf = nullptr;
  const RayEndpoint* bb = nullptr;
  double best = 1e300;
  for (const auto& f : fwd) {
    for (const auto& b : bwd) {
      const double e = endpoint_pair_error(f, b);
      if (e < best) best = e, bf = &f, bb = &b;
    }
  }
  EXPECT_NEAR(compile_difference(st, dir).apply(v, 5), second_directional_difference(st, v, *bf, *bb), 1e-12);
}

TEST(SecondDifference, OneSidedStencilThrows) {
  Stencil st;
  st.center_index = 0;
  for (int k = 0; k < 5; ++k) {
    const double a = -0.5 + 0.25 * k;
    const Vec2 z(0.1 * std::cos(a), 0.1 * std::sin(a));
    st.neighbor_indices.push_back(k + 1);
    st.projected.push_back(z);
    st.distances.push_back(z.norm());
    st.directions.push_back(z.normalized());
    st.angles.push_back(a);
  }
  st.dtheta = 2.0 * std::numbers::pi - 1.0;
  try {
    compile_difference(st, Vec2(1.0, 0.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoAntipodalNeighbor);
  }
}

TEST(AreaWeights, ExactOnConstantsAndLinear) {
  const PointCloud& c = cloud642();
  const auto w = area_weights(c);
  double sum = 0.0;
  for (double x : w) {
    EXPECT_GT(x, 0.0);
    sum += x;
  }
  EXPECT_NEAR(sum, 1.0, 1e-13);
  std::vector<double> ones(c.size(), 3.5), lin(c.size());
  for (int i = 0; i < c.size(); ++i) lin[i] = 0.3 * c.nodes[i][0] - 1.2 * c.nodes[i][1] + 0.7 * c.nodes[i][2];
  EXPECT_NEAR(discrete_average(c, ones), 3.5, 1e-12);
  EXPECT_NEAR(discrete_average(c, lin), 0.0, 1e-12);
}

TEST(Eikonal, ConstantAndLinear) {
  const PointCloud& c = cloud642();
  const Scheme& s = scheme642();
  std::vector<double> ones(c.size(), 1.0), lin(c.size());
  for (int i = 0; i < c.size(); ++i) lin[i] = 0.5 * c.nodes[i][2];
  double top = 0.0;
  for (int i = 0; i < c.size(); ++i) {
    EXPECT_DOUBLE_EQ(s.eikonal_at(i, ones), 0.0);
    // Chords are shorter than arcs, so difference quotients of a 0.5-Lipschitz
    // function stay below 0.5.
    const double e = s.eikonal_at(i, lin);
    EXPECT_LE(e, 0.5 + 1e-12);
    top = std::max(top, e);
  }
  EXPECT_GT(top, 0.45);
}

TEST(Scheme, ParamsAndOffset) {
  const Scheme& s = scheme642();
  const PointCloud& c = cloud642();
  EXPECT_DOUBLE_EQ(s.params().tau, truncation_scale(c.h, c.r, s.params().dtheta));
  EXPECT_DOUBLE_EQ(s.params().delta, 0.1 * s.params().tau);
  EXPECT_DOUBLE_EQ(s.params().offset, kSquaredUnderestimation * s.params().tau);
  const Scheme log_scheme(c, SchemeConfig{}, make_cost_model(CostKind::Logarithmic));
  EXPECT_DOUBLE_EQ(log_scheme.params().offset, 0.0);
  EXPECT_DOUBLE_EQ(log_scheme.params().R, 5.0);

  SchemeConfig fixed;
  fixed.delta_mode = "fixed";
  fixed.delta_value = 0.25;
  EXPECT_DOUBLE_EQ(Scheme(c, fixed, make_cost_model(CostKind::SquaredGeodesic)).params().delta, 0.25);
  SchemeConfig bad;
  bad.delta_mode = "adaptive";
  EXPECT_THROW(Scheme(c, bad, make_cost_model(CostKind::SquaredGeodesic)), Error);
}

TEST(Scheme, MonotoneUnderNeighbourIncrease) {
  const Scheme& s = scheme642();
  std::mt19937_64 rng(23);
  const auto coeffs = random_coefficients(rng, s.size());
  std::uniform_int_distribution<int> pick(0, s.size() - 1);
  std::uniform_real_distribution<double> bump(0.0, 0.5);
  for (int t = 0; t < 2000; ++t) {
    auto v = random_values(rng, s.size(), 0.05);
    const int i = pick(rng);
    const Stencil& st = s.stencils()[i];
    const int j = st.neighbor_indices[std::uniform_int_distribution<int>(0, st.size() - 1)(rng)];
    const double before = s.combined_at(i, v, coeffs[i]);
    v[j] += bump(rng);
    EXPECT_LE(s.combined_at(i, v, coeffs[i]), before);
  }
}

TEST(Scheme, ProperWithSlopeTau) {
  const Scheme& s = scheme642();
  std::mt19937_64 rng(24);
  const auto coeffs = random_coefficients(rng, s.size());
  auto v = random_values(rng, s.size(), 0.05);
  const Eigen::VectorXd r0 = s.residual(v, coeffs);
  for (auto& x : v) x += 0.3;
  const Eigen::VectorXd r1 = s.residual(v, coeffs);
  for (int i = 0; i < s.size(); ++i) EXPECT_GE(r1[i] - r0[i], 0.3 * s.params().tau - 1e-12);
}

TEST(Scheme, MutatedEikonalSignBreaksMonotonicity) {
  SchemeConfig cfg;
  cfg.flip_eikonal_sign = true;
  const Scheme s(cloud642(), cfg, make_cost_model(CostKind::SquaredGeodesic));
  NodeCoefficients k;
  k.H = -1e3;  // keeps the eikonal branch active
  std::vector<double> v(s.size(), 0.0);
  const int j = s.stencils()[0].neighbor_indices[0];
  const double before = s.combined_at(0, v, k);
  v[j] += 10.0;
  EXPECT_GT(s.combined_at(0, v, k), before);
}

TEST(Scheme, LinearizationMatchesResidual) {
  const Scheme& s = scheme642();
  std::mt19937_64 rng(25);
  const auto coeffs = random_coefficients(rng, s.size());
  std::vector<double> v(s.size());
  for (int i = 0; i < s.size(); ++i) v[i] = 0.1 * cloud642().nodes[i][2] + 0.01 * std::sin(7.0 * i);
  const Eigen::VectorXd r = s.residual(v, coeffs);
  const auto dir = random_values(rng, s.size(), 1.0);
  const double eps = 1e-7;
  std::vector<double> moved = v;
  for (int i = 0; i < s.size(); ++i) moved[i] += eps * dir[i];
  const Eigen::VectorXd r2 = s.residual(moved, coeffs);
  int mismatches = 0;
  for (int i = 0; i < s.size(); ++i) {
    const RowLinearization row = s.linearize(i, v, coeffs[i]);
    EXPECT_NEAR(row.value, r[i], 1e-13);
    double jd = 0.0;
    for (const auto& [j, d] : row.entries) jd += d * dir[j];
    mismatches += std::abs(jd - (r2[i] - r[i]) / eps) > 1e-4 * (1.0 + std::abs(jd));
  }
  EXPECT_LE(mismatches, s.size() / 50);
}
