#pragma once

#include <Eigen/Core>

#include "damflow/domain.hpp"

namespace damflow {

// Nodal field on a Grid, indexed like Grid::index.
using Field = Eigen::VectorXd;

// Pressure/saturation pair at one time level.
struct SolutionField {
  Field u;
  Field chi;
  double time = 0.0;

  // max over nodes of u (1 - chi)
  double complementarity_residual() const;
};

struct ProblemData {
  double alpha = 0.0;
  double T_final = 1.0;
  double eps0 = 0.1;
  BoundaryHead phi;
  Field u0;
  Field chi0;
  double M = 0.0;  // reported upper bound of u0
};

// Hydrostatic head (k - x2)^+.
BoundaryHead hydrostatic_head(double k);

// Reservoir heads on the two lateral faces, (h(x1) - x2)^+ with h linear
// between left (x1 = 0) and right (x1 = L). Vanishes on the top edge when both
// levels are below K.
BoundaryHead dam_head(double left, double right, const DamGeometry& geometry);

struct BarrierHeads {
  BoundaryHead phi0;
  BoundaryHead phi1;
};

// phi0 = (eps0 - x2)^+, phi1 = (K - eps0 - x2)^+ on the lateral faces, zero on
// top. Requires 0 < eps0 < K/2.
BarrierHeads make_barrier_data(double eps0, const DamGeometry& geometry);

// u = (k - x2)^+, chi = 1 where x2 < k, else 0 (dry at x2 == k).
SolutionField hydrostatic_profile(double k, const Grid& grid);

Field sample(const Grid& grid, const BoundaryHead& f);

struct InitialValidation {
  double u_below = 0.0;    // max(v0 - u0)
  double u_above = 0.0;    // max(u0 - v1)
  double chi_below = 0.0;  // max(gamma0 - chi0)
  double chi_above = 0.0;  // max(chi0 - gamma1)
  double u0_min = 0.0;
  double u0_max = 0.0;
  double chi0_min = 0.0;
  double chi0_max = 0.0;
  bool bounds_ok = true;  // 0 <= u0 <= M, 0 <= chi0 <= 1
  bool pass = false;

  double max_violation() const;
};

inline constexpr double kTolOrderData = 1e-9;

// Checks v0 <= u0 <= v1, gamma0 <= chi0 <= gamma1 and the pointwise bounds on
// (u0, chi0). Report only.
InitialValidation validate_initial(const ProblemData& data, const Field& v0, const Field& v1,
                                   const Field& gamma0, const Field& gamma1,
                                   double tol = kTolOrderData);

// Tolerance for ordering checks on computed solutions.
inline double computed_order_tolerance(const DamGeometry& geometry) {
  return 1e-3 * (geometry.K > 1.0 ? geometry.K : 1.0);
}

}  // namespace damflow
