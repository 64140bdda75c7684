#include "sphere_ot/density.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "sphere_ot/error.hpp"

namespace sphere_ot {

DensityFn uniform_density() {
  return [](const SpherePoint&) { return 1.0 / (4.0 * std::numbers::pi); };
}

namespace {

double vmf_value(const Vec3& mu, double kappa, const Vec3& x) {
  if (kappa < 1e-8) return 1.0 / (4.0 * std::numbers::pi);
  // kappa / (4 pi sinh kappa) exp(kappa mu.x), rewritten to avoid overflow.
  const double norm = kappa / (2.0 * std::numbers::pi * (1.0 - std::exp(-2.0 * kappa)));
  return norm * std::exp(kappa * (mu.dot(x) - 1.0));
}

std::vector<double> parse_numbers(const std::string& body, const std::string& spec) {
  std::vector<double> out;
  std::stringstream ss(body);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(ErrorCode::ConfigError, "bad number '" + item + "' in density '" + spec + "'");
    }
  }
  return out;
}

}  // namespace

DensityFn vmf_density(const Vec3& mu, double kappa, double floor) {
  if (!(kappa >= 0.0) || !(floor >= 0.0 && floor <= 1.0) || !(mu.norm() > 0.0)) {
    throw Error(ErrorCode::ConfigError, "vmf density needs kappa >= 0, floor in [0,1], nonzero mean");
  }
  const Vec3 m = mu.normalized();
  return [m, kappa, floor](const SpherePoint& x) {
    return (1.0 - floor) * vmf_value(m, kappa, x.coords()) + floor / (4.0 * std::numbers::pi);
  };
}

DensityFn two_bump_density(const Vec3& mu1, double kappa1, const Vec3& mu2, double kappa2, double weight) {
  if (!(weight >= 0.0 && weight <= 1.0) || !(kappa1 >= 0.0) || !(kappa2 >= 0.0) || !(mu1.norm() > 0.0) ||
      !(mu2.norm() > 0.0)) {
    throw Error(ErrorCode::ConfigError, "mixture density needs kappas >= 0, weight in [0,1], nonzero means");
  }
  const Vec3 a = mu1.normalized();
  const Vec3 b = mu2.normalized();
  return [=](const SpherePoint& x) {
    return weight * vmf_value(a, kappa1, x.coords()) + (1.0 - weight) * vmf_value(b, kappa2, x.coords());
  };
}

bool is_builtin_density(const std::string& spec) {
  return spec == "uniform" || spec.rfind("vmf:", 0) == 0 || spec.rfind("mixture:", 0) == 0;
}

DensityFn parse_density(const std::string& spec) {
  if (spec == "uniform") return uniform_density();
  if (spec.rfind("vmf:", 0) == 0) {
    const auto v = parse_numbers(spec.substr(4), spec);
    if (v.size() != 4 && v.size() != 5) throw Error(ErrorCode::ConfigError, "vmf density takes 4 or 5 numbers");
    return vmf_density({v[0], v[1], v[2]}, v[3], v.size() == 5 ? v[4] : 0.0);
  }
  if (spec.rfind("mixture:", 0) == 0) {
    const auto v = parse_numbers(spec.substr(8), spec);
    if (v.size() != 9) throw Error(ErrorCode::ConfigError, "mixture density takes 9 numbers");
    return two_bump_density({v[0], v[1], v[2]}, v[3], {v[4], v[5], v[6]}, v[7], v[8]);
  }
  throw Error(ErrorCode::ConfigError, "unknown density '" + spec + "' (valid: uniform, vmf:..., mixture:..., or a file)");
}

}  // namespace sphere_ot
