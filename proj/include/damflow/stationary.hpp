#pragma once

#include "damflow/coeffs.hpp"
#include "damflow/data.hpp"
#include "damflow/domain.hpp"
#include "damflow/fem.hpp"
#include "damflow/penalty.hpp"
#include "damflow/solver.hpp"

namespace damflow {

struct StationarySolve {
  Field v;
  Field chi;  // H_eps(v) at the nodes
  double residual_norm = 0.0;
  double initial_residual = 0.0;
  int newton_iters = 0;
  int picard_iters = 0;
  bool used_fallback = false;
  double eps_used = 0.0;
  double min_before_clamp = 0.0;
};

// Weak residual  R_i = int a (grad v + H_eps(v) e) . grad phi_i  for every
// non-Dirichlet node i; Dirichlet rows are returned as zero.
Field assemble_stationary_residual(const Field& v, const PermeabilityField& field,
                                   const Grid& grid, const BoundaryTags& tags,
                                   const PenaltyConfig& config);
Field assemble_stationary_residual(const Field& v, const Discretization& disc,
                                   const BoundaryTags& tags, const PenaltyConfig& config);

// Boundary data extended hydrostatically from the highest wet piezometric
// level on the Dirichlet boundary, clipped to [0, K]; exact on Dirichlet nodes.
Field stationary_initial_guess(const Grid& grid, const BoundaryTags& tags, const BoundaryHead& phi);

// Nodal chi = H_eps(v).
Field nodal_saturation(const Field& v, double eps);

StationarySolve solve_stationary(const BoundaryHead& phi, const PermeabilityField& field,
                                 const Grid& grid, const PenaltyConfig& config,
                                 const SolverParams& params = {});
StationarySolve solve_stationary(const Discretization& disc, const BoundaryTags& tags,
                                 const BoundaryHead& phi, const PenaltyConfig& config,
                                 const SolverParams& params = {});

}  // namespace damflow
