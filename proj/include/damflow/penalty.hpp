#pragma once

namespace damflow {

// Penalization parameter eps and compressibility alpha of the regularized
// problems.
struct PenaltyConfig {
  double eps = 1e-2;
  double alpha = 0.0;

  void validate() const;
};

// H_eps(s) = min(1, s^+ / eps).
double heaviside_eps(double s, double eps);

// Generalized derivative of H_eps: 1/eps on the closed ramp [0, eps], 0 outside.
double heaviside_eps_derivative(double s, double eps);

// Conserved quantity alpha s + H_eps(s).
double g_eps(double s, const PenaltyConfig& config);

// Nodal implementations without the argument checks, for inner loops.
namespace detail {

inline double heaviside(double s, double inv_eps) {
  const double r = s * inv_eps;
  return r <= 0.0 ? 0.0 : (r >= 1.0 ? 1.0 : r);
}

inline double heaviside_derivative(double s, double eps, double inv_eps) {
  return (s >= 0.0 && s <= eps) ? inv_eps : 0.0;
}

}  // namespace detail

}  // namespace damflow
