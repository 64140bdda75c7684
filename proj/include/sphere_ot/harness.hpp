#pragma once

// Manufactured problems, convergence studies and the scheme property suite.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "sphere_ot/cloud.hpp"
#include "sphere_ot/cost.hpp"
#include "sphere_ot/scheme.hpp"
#include "sphere_ot/solver.hpp"

namespace sphere_ot {

enum class PotentialKind { ZonalLinear, ZonalBump };

PotentialKind parse_potential_kind(const std::string& name);
const char* to_string(PotentialKind kind);

/// Mean-zero zonal potential: eps x3 (linear) or eps (x3^2 - 1/3) (bump).
struct Potential {
  PotentialKind kind = PotentialKind::ZonalLinear;
  double amplitude = 0.0;

  double value(const SpherePoint& x) const;
  /// Surface gradient as an ambient tangent vector at x.
  Vec3 gradient(const SpherePoint& x) const;
};

/// Jacobian of x -> T(x, grad u(x)) by central differences along the geodesics
/// leaving x in the directions of tangent_frame(x), expressed in the frames at
/// x and at the image point.
Mat2 pushforward_jacobian(const CostModel& model, const Potential& u, const SpherePoint& x, double step);

/// Signed det of the pushforward Jacobian, Richardson-extrapolated from steps
/// `step` and `step / 2`.
double pushforward_det(const CostModel& model, const Potential& u, const SpherePoint& x, double step = 1e-3);

struct ManufacturedProblem {
  CostModel model;
  Potential potential;
  DensityFn f2;
  /// f1(x) = |det D T_u(x)| f2(T_u(x)), evaluable anywhere.
  std::function<double(const SpherePoint&)> f1;
  GridFunction f1_nodes;
  GridFunction u_nodes;

  TransportProblem transport() const { return {model, f1_nodes, f2}; }
};

/// Throws AmplitudeTooLarge when the pushforward folds (det <= 0) or the
/// gradient exceeds the model's gradient cap at some node.
ManufacturedProblem manufacture(const CostModel& model, PotentialKind kind, double amplitude, DensityFn f2,
                                const PointCloud& cloud);

struct StudyRow {
  int n = 0;
  double h = 0.0;
  double tau = 0.0;
  double linf_error = 0.0;
  double offnode_error = 0.0;
  double eikonal_max = 0.0;
  double lipschitz = 0.0;
  double sigma = 0.0;  // max |G^h(u^h) + tau u^h|
  double v_norm = 0.0;
  double u_norm = 0.0;
  double v_residual = 0.0;
  int iterations = 0;
  int outer_iterations = 0;
  double seconds = 0.0;
};

struct StudyConfig {
  CostModel model;
  PotentialKind potential = PotentialKind::ZonalLinear;
  double amplitude = 0.2;
  std::string f2 = "uniform";
  CloudKind cloud_kind = CloudKind::Icosahedral;
  std::vector<int> sizes;  // node counts, one per level
  CloudParams cloud_params;
  SchemeConfig scheme;
  SolverConfig solver;
  int offnode_samples = 1000;
  std::uint64_t seed = 12345;
};

/// Icosahedral node counts 10 * 4^k + 2 for k = first, ..., first + levels - 1.
std::vector<int> icosahedral_sizes(int first_subdivision, int levels);

/// One solve per level, in order. Requires at least 3 levels.
std::vector<StudyRow> convergence_study(const StudyConfig& config);

void write_study_csv(std::ostream& out, const std::vector<StudyRow>& rows);

/// Fixed-seed uniform sample points on the sphere.
std::vector<SpherePoint> sample_points(int count, std::uint64_t seed);

struct PropertyResult {
  std::string name;
  bool passed = false;
  bool skipped = false;
  std::string details;
};

struct PropertyConfig {
  CostModel model;
  SchemeConfig scheme;
  SolverConfig solver;
  int trials = 10000;
  double amplitude = 0.2;
  std::uint64_t seed = 2024;
};

/// Largest difference between closed-form and finite-difference A and H at
/// the exact gradients of `potential` over the nodes.
double coefficient_oracle_error(const CostModel& model, const PointCloud& cloud, const Potential& potential,
                                std::span<const double> f1, const DensityFn& f2);

struct UnderestimationMeasure {
  double max_scheme = 0.0;    // max over nodes of F^h(u_exact), offset included
  double max_raw = 0.0;       // the same without the underestimation offset
  double oracle_error = 0.0;  // coefficient_oracle_error
};

/// F^h evaluated on the exact solution with coefficients at the exact gradient.
UnderestimationMeasure underestimation_measure(const Scheme& scheme, const ManufacturedProblem& mp);

/// Runs every property on one cloud.
std::vector<PropertyResult> property_suite(const PointCloud& cloud, const PropertyConfig& config);

/// "PROP name PASS|FAIL|SKIP details" per line.
void write_property_report(std::ostream& out, const std::vector<PropertyResult>& results);

}  // namespace sphere_ot
