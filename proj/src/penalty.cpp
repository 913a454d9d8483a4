#include "damflow/penalty.hpp"

#include <string>

#include "damflow/error.hpp"

namespace damflow {

namespace {

void require_eps(double eps) {
  if (!(eps > 0.0)) throw InvalidArgument("penalty eps must be > 0, got " + std::to_string(eps));
}

}  // namespace

void PenaltyConfig::validate() const {
  require_eps(eps);
  if (!(alpha >= 0.0)) {
    throw InvalidArgument("compressibility alpha must be >= 0, got " + std::to_string(alpha));
  }
}

double heaviside_eps(double s, double eps) {
  require_eps(eps);
  return detail::heaviside(s, 1.0 / eps);
}

double heaviside_eps_derivative(double s, double eps) {
  require_eps(eps);
  return detail::heaviside_derivative(s, eps, 1.0 / eps);
}

double g_eps(double s, const PenaltyConfig& config) {
  config.validate();
  return config.alpha * s + detail::heaviside(s, 1.0 / config.eps);
}

}  // namespace damflow
