#include "sphere_ot/scheme.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "sphere_ot/error.hpp"

namespace sphere_ot {

namespace {

double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

double angle_between(const Vec2& a, const Vec2& b) { return std::atan2(std::abs(cross2(a, b)), a.dot(b)); }

}  // namespace

std::vector<RayEndpoint> ray_candidates(const Stencil& stencil, const Vec2& direction, double window,
                                       std::size_t max_count) {
  const Vec2 nu = direction.normalized();
  std::vector<int> left, right;
  std::vector<RayEndpoint> out;
  for (int k = 0; k < stencil.size(); ++k) {
    const Vec2& z = stencil.projected[k];
    if (angle_between(nu, stencil.directions[k]) > window) continue;
    const double c = cross2(nu, z);
    if (std::abs(c) <= 1e-14 * stencil.distances[k]) {
      if (nu.dot(z) > 0.0) out.push_back(RayEndpoint{k, k, 1.0, nu.dot(z), 0.0});
    } else if (c > 0.0) {
      left.push_back(k);
    } else {
      right.push_back(k);
    }
  }
  for (int a : left) {
    const Vec2& za = stencil.projected[a];
    const double ca = cross2(nu, za);
    for (int b : right) {
      const Vec2& zb = stencil.projected[b];
      const double cb = cross2(nu, zb);
      const double lambda = cb / (cb - ca);
      const Vec2 hit = lambda * za + (1.0 - lambda) * zb;
      const double t = nu.dot(hit);
      if (!(t > 0.0)) continue;
      out.push_back(RayEndpoint{a, b, lambda, t, lambda * (1.0 - lambda) * (za - zb).squaredNorm()});
    }
  }
  const auto rank = [](const RayEndpoint& e) { return e.spread / (e.distance * e.distance); };
  std::sort(out.begin(), out.end(), [&](const RayEndpoint& x, const RayEndpoint& y) {
    const double rx = rank(x), ry = rank(y);
    if (rx != ry) return rx < ry;
    return x.distance > y.distance;
  });
  if (out.size() > max_count) out.resize(max_count);
  return out;
}

std::optional<RayEndpoint> ray_endpoint(const Stencil& stencil, const Vec2& direction, double window) {
  const auto c = ray_candidates(stencil, direction, window, 1);
  if (c.empty()) return std::nullopt;
  return c.front();
}

double endpoint_pair_error(const RayEndpoint& forward, const RayEndpoint& backward) {
  const double tp = forward.distance;
  const double tm = backward.distance;
  const double interpolation = (forward.spread / tp + backward.spread / tm) / (tp + tm);
  return interpolation + std::abs(tp - tm) / 3.0 + (tp * tp - tp * tm + tm * tm) / 12.0;
}

double second_directional_difference(const Stencil& stencil, std::span<const double> values,
                                     const RayEndpoint& forward, const RayEndpoint& backward) {
  auto at = [&](const RayEndpoint& e) {
    return e.weight * values[stencil.neighbor_indices[e.first]] +
           (1.0 - e.weight) * values[stencil.neighbor_indices[e.second]];
  };
  const double u0 = values[stencil.center_index];
  const double tp = forward.distance;
  const double tm = backward.distance;
  return 2.0 * ((at(forward) - u0) / (tp * (tp + tm)) + (at(backward) - u0) / (tm * (tp + tm)));
}

DifferenceRow compile_difference(const Stencil& stencil, const Vec2& direction) {
  const Vec2 nu = direction.normalized();
  const double window = kEndpointWindow * std::max(stencil.dtheta, 1e-12);
  const auto fwds = ray_candidates(stencil, nu, window, kEndpointCandidates);
  const auto bwds = ray_candidates(stencil, -nu, window, kEndpointCandidates);
  if (fwds.empty() || bwds.empty()) {
    throw Error(ErrorCode::NoAntipodalNeighbor,
                "stencil of node " + std::to_string(stencil.center_index) + " cannot resolve a direction");
  }
  const RayEndpoint* fwd = &fwds.front();
  const RayEndpoint* bwd = &bwds.front();
  double best = std::numeric_limits<double>::infinity();
  for (const auto& f : fwds) {
    for (const auto& b : bwds) {
      const double e = endpoint_pair_error(f, b);
      if (e < best) best = e, fwd = &f, bwd = &b;
    }
  }
  DifferenceRow row;
  row.direction = nu;
  const double tp = fwd->distance;
  const double tm = bwd->distance;
  auto push = [&](int local, double w) {
    if (w == 0.0) return;
    const int node = stencil.neighbor_indices[local];
    for (int k = 0; k < row.count; ++k) {
      if (row.nodes[k] == node) {
        row.weights[k] += w;
        return;
      }
    }
    row.nodes[row.count] = node;
    row.weights[row.count] = w;
    ++row.count;
  };
  const double sp = 2.0 / (tp * (tp + tm));
  const double sm = 2.0 / (tm * (tp + tm));
  push(fwd->first, sp * fwd->weight);
  if (fwd->second != fwd->first) push(fwd->second, sp * (1.0 - fwd->weight));
  push(bwd->first, sm * bwd->weight);
  if (bwd->second != bwd->first) push(bwd->second, sm * (1.0 - bwd->weight));
  return row;
}

std::vector<DirectionPair> direction_pairs(const Stencil& stencil, int count) {
  if (count < 1) throw Error(ErrorCode::ConfigError, "need at least one direction pair");
  std::vector<DirectionPair> out;
  out.reserve(count);
  for (int k = 0; k < count; ++k) {
    const double theta = k * std::numbers::pi / (2.0 * count);
    const Vec2 nu(std::cos(theta), std::sin(theta));
    const Vec2 perp(-nu.y(), nu.x());
    out.push_back({compile_difference(stencil, nu), compile_difference(stencil, perp)});
  }
  return out;
}

double det_plus(double d1, double d2, double delta) {
  return std::max(d1, delta) * std::max(d2, delta) + std::min(d1 - delta, 0.0) + std::min(d2 - delta, 0.0);
}

double truncation_scale(double h, double r, double dtheta, double constant) {
  if (!(h > 0.0) || !(r > 0.0) || !(dtheta >= 0.0) || !(constant > 0.0)) {
    throw Error(ErrorCode::ConfigError, "truncation scale needs positive h, r, constant");
  }
  return constant * (r * r + h / r + dtheta);
}

std::vector<double> area_weights(const PointCloud& cloud) {
  std::vector<double> w(cloud.nodes.size(), 0.0);
  double total = 0.0;
  for (const auto& t : cloud.triangles) {
    const double a = spherical_triangle_area(cloud.nodes[t[0]].coords(), cloud.nodes[t[1]].coords(),
                                             cloud.nodes[t[2]].coords());
    for (int v : t) w[v] += a / 3.0;
    total += a;
  }
  for (auto& x : w) x /= total;
  return w;
}

double discrete_average(std::span<const double> weights, std::span<const double> values) {
  double s = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) s += weights[i] * values[i];
  return s;
}

double discrete_average(const PointCloud& cloud, std::span<const double> values) {
  return discrete_average(area_weights(cloud), values);
}

double eikonal(const Stencil& stencil, std::span<const double> values) {
  const double u0 = values[stencil.center_index];
  double best = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < stencil.size(); ++k) {
    best = std::max(best, (u0 - values[stencil.neighbor_indices[k]]) / stencil.distances[k]);
  }
  return best;
}

namespace {

struct PairEval {
  double value;
  int index;
  double d1;
  double d2;
};

PairEval min_pair(int center, std::span<const double> values, std::span<const DirectionPair> pairs,
                  const Mat2& A, double delta) {
  PairEval best{std::numeric_limits<double>::infinity(), -1, 0.0, 0.0};
  for (int k = 0; k < static_cast<int>(pairs.size()); ++k) {
    const auto& p = pairs[k];
    const double d1 = p.first.apply(values, center) + p.first.direction.dot(A * p.first.direction);
    const double d2 = p.second.apply(values, center) + p.second.direction.dot(A * p.second.direction);
    const double v = det_plus(d1, d2, delta);
    if (v < best.value) best = {v, k, d1, d2};
  }
  return best;
}

}  // namespace

double ma_operator(const Stencil& stencil, std::span<const double> values, std::span<const DirectionPair> pairs,
                   const NodeCoefficients& coeff, double delta) {
  return -min_pair(stencil.center_index, values, pairs, coeff.A, delta).value + coeff.H;
}

double max_dtheta(const std::vector<Stencil>& stencils) {
  double d = 0.0;
  for (const auto& s : stencils) d = std::max(d, s.dtheta);
  return d;
}

Scheme::Scheme(const PointCloud& cloud, const SchemeConfig& config, const CostModel& model)
    : cloud_(&cloud), stencils_(build_stencils(cloud)), weights_(area_weights(cloud)) {
  params_.R = gradient_bound(model);
  params_.pair_count = config.pair_count;
  params_.flip_eikonal_sign = config.flip_eikonal_sign;
  params_.dtheta = max_dtheta(stencils_);
  params_.tau = truncation_scale(cloud.h, cloud.r, params_.dtheta, config.tau_constant);
  if (config.delta_mode == "tau") {
    if (!(config.delta_scale >= 0.0)) throw Error(ErrorCode::ConfigError, "delta scale must be >= 0");
    params_.delta = config.delta_scale * params_.tau;
  } else if (config.delta_mode == "fixed") {
    if (!(config.delta_value >= 0.0)) throw Error(ErrorCode::ConfigError, "delta must be >= 0");
    params_.delta = config.delta_value;
  } else {
    throw Error(ErrorCode::ConfigError, "unknown delta mode '" + config.delta_mode + "' (valid: tau, fixed)");
  }
  const double kappa = config.underestimation >= 0.0 ? config.underestimation
                      : model.kind == CostKind::SquaredGeodesic ? kSquaredUnderestimation
                                                                  : 0.0;
  params_.offset = kappa * params_.tau;
  pairs_.resize(stencils_.size());
  for (std::size_t i = 0; i < stencils_.size(); ++i) pairs_[i] = direction_pairs(stencils_[i], config.pair_count);
}

double Scheme::eikonal_at(int node, std::span<const double> values) const {
  const Stencil& s = stencils_[node];
  if (!params_.flip_eikonal_sign) return eikonal(s, values);
  const double u0 = values[node];
  double best = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < s.size(); ++k) best = std::max(best, (values[s.neighbor_indices[k]] - u0) / s.distances[k]);
  return best;
}

double Scheme::ma_at(int node, std::span<const double> values, const NodeCoefficients& coeff) const {
  return ma_operator(stencils_[node], values, pairs_[node], coeff, params_.delta) - params_.offset;
}

double Scheme::combined_at(int node, std::span<const double> values, const NodeCoefficients& coeff) const {
  return std::max(ma_at(node, values, coeff), eikonal_at(node, values) - params_.R);
}

Eigen::VectorXd Scheme::operator_values(std::span<const double> values,
                                        std::span<const NodeCoefficients> coeffs) const {
  Eigen::VectorXd out(size());
#pragma omp parallel for schedule(static)
  for (int i = 0; i < size(); ++i) out[i] = combined_at(i, values, coeffs[i]);
  return out;
}

Eigen::VectorXd Scheme::residual(std::span<const double> values, std::span<const NodeCoefficients> coeffs) const {
  Eigen::VectorXd out = operator_values(values, coeffs);
  for (int i = 0; i < size(); ++i) out[i] += params_.tau * values[i];
  return out;
}

RowLinearization Scheme::linearize(int node, std::span<const double> values, const NodeCoefficients& coeff) const {
  RowLinearization row;
  const Stencil& s = stencils_[node];
  const PairEval pe = min_pair(node, values, pairs_[node], coeff.A, params_.delta);
  const double F = -pe.value + coeff.H - params_.offset;

  // Eikonal branch: active neighbour and its value.
  const double u0 = values[node];
  double E = -std::numeric_limits<double>::infinity();
  int arg = -1;
  for (int k = 0; k < s.size(); ++k) {
    const double diff = params_.flip_eikonal_sign ? values[s.neighbor_indices[k]] - u0 : u0 - values[s.neighbor_indices[k]];
    const double q = diff / s.distances[k];
    if (q > E) E = q, arg = k;
  }

  double diag = params_.tau;
  if (F >= E - params_.R) {
    row.value = F;
    const double delta = params_.delta;
    const double g1 = pe.d1 >= delta ? std::max(pe.d2, delta) : 1.0;
    const double g2 = pe.d2 >= delta ? std::max(pe.d1, delta) : 1.0;
    const DirectionPair& p = pairs_[node][pe.index];
    for (const auto& [rowd, g] : {std::pair{&p.first, g1}, std::pair{&p.second, g2}}) {
      for (int k = 0; k < rowd->count; ++k) {
        row.entries.emplace_back(rowd->nodes[k], -g * rowd->weights[k]);
        diag += g * rowd->weights[k];
      }
    }
  } else {
    row.value = E - params_.R;
    row.eikonal_active = true;
    const double w = 1.0 / s.distances[arg];
    const double sign = params_.flip_eikonal_sign ? -1.0 : 1.0;
    row.entries.emplace_back(s.neighbor_indices[arg], -sign * w);
    diag += sign * w;
  }
  row.value += params_.tau * u0;
  row.entries.emplace_back(node, diag);
  return row;
}

}  // namespace sphere_ot
