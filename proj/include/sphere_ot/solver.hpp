#pragma once

// Two-step solve: v^h from G^h(v) + tau v = 0 with the gradient in A and H
// lagged one outer iteration behind, then u^h = v^h - A^h(v^h).

#include <span>
#include <vector>

#include <Eigen/Core>

#include "sphere_ot/cost.hpp"
#include "sphere_ot/scheme.hpp"

namespace sphere_ot {

using GridFunction = Eigen::VectorXd;

inline std::span<const double> view(const GridFunction& g) { return {g.data(), static_cast<std::size_t>(g.size())}; }

struct TransportProblem {
  CostModel model;
  GridFunction f1;  // source density at the nodes
  DensityFn f2;     // target density, evaluated at T(x, p)
  double min_density = 1e-12;
};

struct SolverConfig {
  double tol = 0.0;  // 0 selects 1e-10 max(1, |H|_inf)
  int max_iters = 500;
  long max_euler = 100000;
  double damping = 1.0;  // first Newton step length tried
  int max_outer = 50;
  double outer_tol = 1e-8;  // max-norm change of the lagged gradient
  bool renormalize_f2 = false;
  double mass_factor = 10.0;  // allowed relative mass mismatch, in units of tau
  double gradient_cap = 0.0;  // 0 selects min(R, 2.5) for the squared cost and R for the log cost
};

struct SolveReport {
  int iterations = 0;  // Newton steps, all outer iterations
  int outer_iterations = 0;
  long euler_steps = 0;
  double final_update_norm = 0.0;
  double gradient_change = 0.0;  // last max-norm change of the lagged gradient
  double v_residual_inf = 0.0;
  double uh_scheme_residual_inf = 0.0;
  double eikonal_max = 0.0;
  double discrete_average_of_uh = 0.0;
  double lipschitz_estimate = 0.0;
  double tol = 0.0;
  double tau = 0.0;
  double delta = 0.0;
  double mass_source = 0.0;
  double mass_target = 0.0;
  double f2_scale = 1.0;
  bool converged = false;
};

struct SolveResult {
  GridFunction v;
  GridFunction u;
  std::vector<Vec2> gradients;  // lagged fit, in tangent_frame(node)
  std::vector<NodeCoefficients> coefficients;
  SolveReport report;
};

/// Least-squares quadratic fit of u - u(x) over the two-ring of each node in
/// normal coordinates; only the gradient rows of the pseudo-inverse are kept.
class GradientFit {
 public:
  explicit GradientFit(const PointCloud& cloud);

  Vec2 at(int node, std::span<const double> values) const;
  std::vector<Vec2> all(std::span<const double> values) const;

 private:
  std::vector<std::vector<int>> neighbors_;
  std::vector<Eigen::Matrix<double, 2, Eigen::Dynamic>> rows_;
};

/// A and H at every node for the gradients `p`, each capped to length `cap`.
std::vector<NodeCoefficients> node_coefficients(const PointCloud& cloud, const TransportProblem& problem,
                                                std::span<const Vec2> p, double cap);

/// Default gradient cap for a cost model.
double default_gradient_cap(const CostModel& model);

/// u = v - A^h(v).
GridFunction shift_u(const Scheme& scheme, const GridFunction& v);

struct ResidualMeasures {
  double scheme_residual_inf = 0.0;  // max |G^h(u) + tau u|
  double eikonal_max = 0.0;
  double lipschitz_ratio = 0.0;  // max |u(x) - u(y)| / |z_y| over stencil pairs
};

ResidualMeasures residual_report(const Scheme& scheme, const GridFunction& u, std::span<const NodeCoefficients> coeffs);

/// Solves for v^h and u^h. Throws MassImbalance when the discrete masses of f1
/// and f2 differ by more than mass_factor * tau relative to the target mass
/// (unless renormalize_f2), and NonConvergence with the best residual reached.
SolveResult solve(const Scheme& scheme, const TransportProblem& problem, const SolverConfig& config = {},
                  const GridFunction* initial = nullptr);

/// Inner solve with frozen coefficients: damped Newton with an explicit Euler
/// fallback. Returns the final max-norm residual; `v` is updated in place.
struct InnerStats {
  int newton = 0;
  long euler = 0;
  double residual = 0.0;
  double update = 0.0;
};
InnerStats solve_frozen(const Scheme& scheme, std::span<const NodeCoefficients> coeffs, GridFunction& v, double tol,
                        const SolverConfig& config);

/// One explicit Euler step v - dt (G^h(v) + tau v).
GridFunction euler_step(const Scheme& scheme, std::span<const NodeCoefficients> coeffs, const GridFunction& v,
                        double dt);

/// Step size bound 1 / max_i sum_j |J_ij| over the generalized Jacobian at v.
double euler_step_bound(const Scheme& scheme, std::span<const NodeCoefficients> coeffs, const GridFunction& v);

}  // namespace sphere_ot
