#pragma once

// Built-in probability densities on S^2 (unit total mass).

#include <string>

#include "sphere_ot/cost.hpp"

namespace sphere_ot {

DensityFn uniform_density();

/// von Mises-Fisher density with mean direction mu and concentration kappa,
/// blended with a uniform floor: (1 - floor) vMF + floor / (4 pi).
DensityFn vmf_density(const Vec3& mu, double kappa, double floor = 0.0);

/// weight * vMF(mu1, kappa1) + (1 - weight) * vMF(mu2, kappa2).
DensityFn two_bump_density(const Vec3& mu1, double kappa1, const Vec3& mu2, double kappa2, double weight);

/// Parses "uniform", "vmf:mx,my,mz,kappa[,floor]" or
/// "mixture:m1x,m1y,m1z,k1,m2x,m2y,m2z,k2,weight". Throws ConfigError.
DensityFn parse_density(const std::string& spec);

/// True for names accepted by parse_density (per-node files are handled by callers).
bool is_builtin_density(const std::string& spec);

}  // namespace sphere_ot
