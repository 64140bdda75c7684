#include "sphere_ot/solver.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "sphere_ot/error.hpp"

namespace sphere_ot {

namespace {

double inf_norm(const Eigen::VectorXd& r) { return r.size() ? r.cwiseAbs().maxCoeff() : 0.0; }

struct Assembly {
  Eigen::VectorXd residual;
  Eigen::SparseMatrix<double> jacobian;
};

Assembly assemble(const Scheme& scheme, std::span<const NodeCoefficients> coeffs, const GridFunction& v) {
  const int n = scheme.size();
  std::vector<RowLinearization> rows(n);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) rows[i] = scheme.linearize(i, view(v), coeffs[i]);
  Assembly a;
  a.residual.resize(n);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(n) * 10);
  for (int i = 0; i < n; ++i) {
    a.residual[i] = rows[i].value;
    for (const auto& [j, w] : rows[i].entries) trip.emplace_back(i, j, w);
  }
  a.jacobian.resize(n, n);
  a.jacobian.setFromTriplets(trip.begin(), trip.end());
  return a;
}

double max_row_sum(const Eigen::SparseMatrix<double>& J) {
  Eigen::VectorXd sums = Eigen::VectorXd::Zero(J.rows());
  for (int k = 0; k < J.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(J, k); it; ++it) sums[it.row()] += std::abs(it.value());
  return sums.maxCoeff();
}

// Rethrows the first exception raised inside an OpenMP loop body.
class ErrorSlot {
 public:
  template <class F>
  void run(F&& f) {
    try {
      f();
    } catch (...) {
#pragma omp critical(sphere_ot_error_slot)
      if (!error_) error_ = std::current_exception();
    }
  }
  void rethrow() const {
    if (error_) std::rethrow_exception(error_);
  }

 private:
  std::exception_ptr error_;
};

using SparseMatrix = Eigen::SparseMatrix<double>;

// Newton direction J d = -r. The Jacobian is a strictly diagonally dominant
// M-matrix, so Jacobi-preconditioned BiCGSTAB normally converges in tens of
// iterations; the wide stencils make direct factorization fill in badly, so
// it is only the last resort.
std::optional<Eigen::VectorXd> newton_direction(const SparseMatrix& J, const Eigen::VectorXd& r) {
  const auto accept = [&](const Eigen::VectorXd& d) {
    return d.allFinite() && (J * d + r).norm() <= 1e-10 * std::max(r.norm(), 1e-300);
  };
  {
    Eigen::BiCGSTAB<SparseMatrix> it;
    it.setTolerance(1e-13);
    it.setMaxIterations(2000);
    it.compute(J);
    const Eigen::VectorXd d = it.solve(-r);
    if (it.info() == Eigen::Success && accept(d)) return d;
  }
  {
    Eigen::BiCGSTAB<SparseMatrix, Eigen::IncompleteLUT<double>> it;
    it.setTolerance(1e-13);
    it.compute(J);
    if (it.info() == Eigen::Success) {
      const Eigen::VectorXd d = it.solve(-r);
      if (it.info() == Eigen::Success && accept(d)) return d;
    }
  }
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
  lu.compute(J);
  if (lu.info() != Eigen::Success) return std::nullopt;
  Eigen::VectorXd d = lu.solve(-r);
  if (lu.info() != Eigen::Success || !d.allFinite()) return std::nullopt;
  return d;
}

}  // namespace

GradientFit::GradientFit(const PointCloud& cloud) {
  const int n = cloud.size();
  const auto adj = adjacency(cloud);
  neighbors_.resize(n);
  rows_.resize(n);
  for (int i = 0; i < n; ++i) {
    std::set<int> ring(adj[i].begin(), adj[i].end());
    for (int j : adj[i]) ring.insert(adj[j].begin(), adj[j].end());
    ring.erase(i);
    neighbors_[i].assign(ring.begin(), ring.end());

    const SpherePoint& x0 = cloud.nodes[i];
    const TangentFrame f = tangent_frame(x0);
    const int m = static_cast<int>(neighbors_[i].size());
    const bool quadratic = m >= 8;
    Eigen::MatrixXd M(m, quadratic ? 5 : 2);
    for (int k = 0; k < m; ++k) {
      const Vec2 z = f.to_local(normal_coords(x0, cloud.nodes[neighbors_[i][k]]) - x0.coords());
      M(k, 0) = z.x();
      M(k, 1) = z.y();
      if (quadratic) {
        M(k, 2) = 0.5 * z.x() * z.x();
        M(k, 3) = z.x() * z.y();
        M(k, 4) = 0.5 * z.y() * z.y();
      }
    }
    const Eigen::MatrixXd pinv = M.completeOrthogonalDecomposition().pseudoInverse();
    rows_[i] = pinv.topRows(2);
  }
}

Vec2 GradientFit::at(int node, std::span<const double> values) const {
  const auto& nb = neighbors_[node];
  Eigen::VectorXd rhs(nb.size());
  for (std::size_t k = 0; k < nb.size(); ++k) rhs[k] = values[nb[k]] - values[node];
  return rows_[node] * rhs;
}

std::vector<Vec2> GradientFit::all(std::span<const double> values) const {
  std::vector<Vec2> out(neighbors_.size());
#pragma omp parallel for schedule(static)
  for (int i = 0; i < static_cast<int>(out.size()); ++i) out[i] = at(i, values);
  return out;
}

double default_gradient_cap(const CostModel& model) {
  return model.kind == CostKind::SquaredGeodesic ? std::min(model.R, 2.5) : model.R;
}

std::vector<NodeCoefficients> node_coefficients(const PointCloud& cloud, const TransportProblem& problem,
                                                std::span<const Vec2> p, double cap) {
  const int n = cloud.size();
  std::vector<NodeCoefficients> out(n);
  ErrorSlot slot;
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    slot.run([&] {
      const SpherePoint& x = cloud.nodes[i];
      Vec2 q = p[i];
      const double len = q.norm();
      if (len > cap) q *= cap / len;
      const TangentVector tv(x, tangent_frame(x).to_ambient(q));
      const CoefficientPair c = coefficients(problem.model, x, tv, problem.f1[i], problem.f2, problem.min_density);
      out[i].A = c.A;
      out[i].H = c.H;
    });
  }
  slot.rethrow();
  return out;
}

GridFunction shift_u(const Scheme& scheme, const GridFunction& v) {
  return (v.array() - scheme.average(view(v))).matrix();
}

ResidualMeasures residual_report(const Scheme& scheme, const GridFunction& u,
                                 std::span<const NodeCoefficients> coeffs) {
  ResidualMeasures m;
  m.scheme_residual_inf = inf_norm(scheme.residual(view(u), coeffs));
  const int n = scheme.size();
  double emax = -std::numeric_limits<double>::infinity();
  double lip = 0.0;
#pragma omp parallel for schedule(static) reduction(max : emax, lip)
  for (int i = 0; i < n; ++i) {
    emax = std::max(emax, scheme.eikonal_at(i, view(u)));
    const Stencil& s = scheme.stencils()[i];
    for (int k = 0; k < s.size(); ++k) lip = std::max(lip, std::abs(u[s.neighbor_indices[k]] - u[i]) / s.distances[k]);
  }
  m.eikonal_max = emax;
  m.lipschitz_ratio = lip;
  return m;
}

GridFunction euler_step(const Scheme& scheme, std::span<const NodeCoefficients> coeffs, const GridFunction& v,
                        double dt) {
  return v - dt * scheme.residual(view(v), coeffs);
}

double euler_step_bound(const Scheme& scheme, std::span<const NodeCoefficients> coeffs, const GridFunction& v) {
  return 1.0 / max_row_sum(assemble(scheme, coeffs, v).jacobian);
}

InnerStats solve_frozen(const Scheme& scheme, std::span<const NodeCoefficients> coeffs, GridFunction& v, double tol,
                        const SolverConfig& config) {
  InnerStats st;
  Assembly a = assemble(scheme, coeffs, v);
  st.residual = inf_norm(a.residual);
  while (st.residual > tol) {
    if (st.newton >= config.max_iters) break;
    ++st.newton;

    bool progressed = false;
    if (const auto step = newton_direction(a.jacobian, a.residual)) {
      const double merit = a.residual.squaredNorm();
      for (double alpha = config.damping; alpha >= 1.0 / 1024.0; alpha *= 0.5) {
        GridFunction trial = v + alpha * *step;
        Assembly b = assemble(scheme, coeffs, trial);
        const double rn = inf_norm(b.residual);
        if (b.residual.squaredNorm() <= (1.0 - 1e-4 * alpha) * merit || rn <= tol) {
          st.update = inf_norm(trial - v);
          v = std::move(trial);
          a = std::move(b);
          st.residual = rn;
          progressed = true;
          break;
        }
      }
    }
    if (progressed) continue;

    // Euler fallback: contraction toward the fixed point with factor 1 - dt tau.
    const long batch = std::min<long>(200, config.max_euler - st.euler);
    if (batch <= 0) break;
    const double before = st.residual;
    for (long k = 0; k < batch && st.residual > tol; ++k) {
      const double dt = 0.5 / max_row_sum(a.jacobian);
      GridFunction next = v - dt * a.residual;
      st.update = inf_norm(next - v);
      v = std::move(next);
      a = assemble(scheme, coeffs, v);
      st.residual = inf_norm(a.residual);
      ++st.euler;
    }
    if (!(st.residual < before) && st.euler >= config.max_euler) break;
  }
  return st;
}

SolveResult solve(const Scheme& scheme, const TransportProblem& problem_in, const SolverConfig& config,
                  const GridFunction* initial) {
  const PointCloud& cloud = scheme.cloud();
  const int n = scheme.size();
  if (problem_in.f1.size() != n) throw Error(ErrorCode::ConfigError, "f1 has the wrong length");
  if (!(problem_in.f1.array() >= 0.0).all() || !problem_in.f1.allFinite()) {
    throw Error(ErrorCode::ConfigError, "f1 must be finite and nonnegative");
  }
  gradient_bound(problem_in.model);

  SolveResult res;
  SolveReport& rep = res.report;
  rep.tau = scheme.params().tau;
  rep.delta = scheme.params().delta;

  // Discrete mass balance.
  std::vector<double> f2_nodes(n);
  for (int i = 0; i < n; ++i) f2_nodes[i] = problem_in.f2(cloud.nodes[i]);
  rep.mass_source = scheme.average(view(problem_in.f1));
  rep.mass_target = discrete_average(scheme.weights(), f2_nodes);
  TransportProblem problem = problem_in;
  if (config.renormalize_f2) {
    if (!(rep.mass_target > 0.0)) throw Error(ErrorCode::MassImbalance, "target density has zero mass");
    rep.f2_scale = rep.mass_source / rep.mass_target;
    problem.f2 = [f2 = problem_in.f2, s = rep.f2_scale](const SpherePoint& y) { return s * f2(y); };
  } else if (std::abs(rep.mass_source - rep.mass_target) > config.mass_factor * rep.tau * rep.mass_target) {
    std::ostringstream msg;
    msg << "source mass " << rep.mass_source << " and target mass " << rep.mass_target << " differ by more than "
        << config.mass_factor << " tau (tau = " << rep.tau << "); use renormalize_f2 to rescale";
    throw Error(ErrorCode::MassImbalance, msg.str());
  }

  const double cap = config.gradient_cap > 0.0 ? config.gradient_cap : default_gradient_cap(problem.model);
  const GradientFit fit(cloud);

  GridFunction v = initial ? *initial : GridFunction::Zero(n);
  if (v.size() != n) throw Error(ErrorCode::ConfigError, "initial guess has the wrong length");

  std::vector<Vec2> p = fit.all(view(v));
  std::vector<NodeCoefficients> coeffs = node_coefficients(cloud, problem, p, cap);
  double Hmax = 0.0;
  for (const auto& c : coeffs) Hmax = std::max(Hmax, std::abs(c.H));
  rep.tol = config.tol > 0.0 ? config.tol : 1e-10 * std::max(1.0, Hmax);

  // Merit of an iterate: residual with coefficients from its own gradient.
  struct Evaluated {
    std::vector<Vec2> p;
    std::vector<NodeCoefficients> coeffs;
    double merit = 0.0;
  };
  const auto evaluate = [&](const GridFunction& w) {
    Evaluated e;
    e.p = fit.all(view(w));
    e.coeffs = node_coefficients(cloud, problem, e.p, cap);
    e.merit = inf_norm(scheme.residual(view(w), e.coeffs));
    return e;
  };

  double merit = inf_norm(scheme.residual(view(v), coeffs));
  double best = merit;
  for (int outer = 1;; ++outer) {
    rep.outer_iterations = outer;
    GridFunction target = v;
    const InnerStats st = solve_frozen(scheme, coeffs, target, rep.tol, config);
    rep.iterations += st.newton;
    rep.euler_steps += st.euler;
    if (st.residual > rep.tol) {
      std::ostringstream msg;
      msg << "inner solve stalled at residual " << st.residual << " (tol " << rep.tol << ") after " << st.newton
          << " Newton and " << st.euler << " Euler steps";
      throw Error(ErrorCode::NonConvergence, msg.str());
    }

    // Relaxed lag update v + omega (target - v), backtracking on the merit. Far
    // from the solution the full update can cycle through large-gradient states.
    const GridFunction dir = target - v;
    double omega = 1.0;
    Evaluated next = evaluate(target);
    while (next.merit >= merit && omega > 1.0 / 64.0) {
      omega *= 0.5;
      next = evaluate(v + omega * dir);
    }
    if (next.merit >= merit && omega <= 1.0 / 64.0) {
      omega = 1.0;  // no decrease found: take the full step and let the lag proceed
      next = evaluate(target);
    }
    v += omega * dir;
    rep.final_update_norm = omega * inf_norm(dir);

    double dp = 0.0;
    for (int i = 0; i < n; ++i) dp = std::max(dp, (next.p[i] - p[i]).cwiseAbs().maxCoeff());
    rep.gradient_change = dp;
    p = std::move(next.p);
    coeffs = std::move(next.coeffs);
    merit = next.merit;
    best = std::min(best, merit);
    rep.v_residual_inf = merit;
    if (merit <= rep.tol || (dp < config.outer_tol && omega == 1.0)) {
      // Either v already solves the system with its own gradient, or the lag has
      // settled; one more frozen solve removes the last coefficient update.
      if (merit > rep.tol) {
        const InnerStats fin = solve_frozen(scheme, coeffs, v, rep.tol, config);
        rep.iterations += fin.newton;
        rep.euler_steps += fin.euler;
        rep.v_residual_inf = fin.residual;
      }
      rep.converged = rep.v_residual_inf <= rep.tol;
      break;
    }
    if (outer >= config.max_outer) {
      std::ostringstream msg;
      msg << "gradient lag did not settle after " << outer << " outer iterations (last change " << dp
          << ", best residual " << best << ")";
      throw Error(ErrorCode::NonConvergence, msg.str());
    }
  }

  res.v = v;
  res.u = shift_u(scheme, v);
  res.gradients = p;
  res.coefficients = coeffs;
  const ResidualMeasures m = residual_report(scheme, res.u, coeffs);
  rep.uh_scheme_residual_inf = m.scheme_residual_inf;
  rep.eikonal_max = m.eikonal_max;
  rep.lipschitz_estimate = m.lipschitz_ratio;
  rep.discrete_average_of_uh = scheme.average(view(res.u));
  return res;
}

}  // namespace sphere_ot
