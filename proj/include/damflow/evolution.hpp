#pragma once

#include <utility>
#include <vector>

#include "damflow/data.hpp"
#include "damflow/fem.hpp"
#include "damflow/penalty.hpp"
#include "damflow/solver.hpp"
#include "damflow/stationary.hpp"

namespace damflow {

struct EvolutionConfig {
  double dt = 0.0;
  int n_steps = 0;
  PenaltyConfig penalty;
  double time_reg = 0.0;
  bool mass_lumping = true;
  SolverParams solver;
  int max_dt_halvings = 3;
  double tol_flux = 1e-9;

  double final_time() const { return dt * n_steps; }
  void validate() const;
};

// n_steps = T / dt, which must be an integer within 1e-12 relative.
EvolutionConfig make_evolution_config(double T, double dt, const PenaltyConfig& penalty);

struct StepDiagnostics {
  int step = 0;
  double time = 0.0;
  int substeps = 1;
  int newton_iters = 0;
  int picard_iters = 0;
  bool used_fallback = false;
  double initial_residual = 0.0;
  double residual = 0.0;
  double storage_change = 0.0;  // sum over all nodes of M (G^{n+1} - G^n), regularization included
  double boundary_inflow = 0.0; // dt * net discrete flux into the domain through the Dirichlet boundary
  double mass_balance = 0.0;    // |storage_change - boundary_inflow| relative to the mass scale
  double max_dry_flux = 0.0;    // max discrete a(grad u + chi e).nu over dry Dirichlet nodes
  bool outflow_ok = true;
};

struct Trajectory {
  std::vector<SolutionField> snapshots;
  std::vector<StepDiagnostics> diagnostics;  // diagnostics[n] belongs to the step ending at snapshot n+1
  double alpha = 0.0;
  double eps = 0.0;
  double dt = 0.0;

  std::vector<double> times() const;
  double max_mass_balance() const;
  double max_complementarity() const;
};

// u0eps = min(u0, v1eps), chi0eps = min(chi0, H_eps(v1eps)).
std::pair<Field, Field> project_initial(const ProblemData& data, const StationarySolve& v1eps,
                                        const PenaltyConfig& config);

// Backward Euler stepping with reusable assembly.
class EvolutionStepper {
 public:
  EvolutionStepper(const Discretization& disc, const BoundaryTags& tags, BoundaryHead phi,
                   EvolutionConfig config);

  const EvolutionConfig& config() const { return config_; }
  const DofMap& dofs() const { return dofs_; }

  // One step of size config.dt from `state` (previous_u is u^{n-1} for the
  // time regularization; null means u^{n-1} = u^n). Retries with dt halving
  // and throws StepFailure when that fails too.
  SolutionField advance(const SolutionField& state, const Field* previous_u, int step_index,
                        StepDiagnostics* diag = nullptr) const;

  // Discrete boundary flux  R_i(u) + M (G(u) - G^n)_i / dt  at every Dirichlet
  // node (zero elsewhere); positive means inflow.
  Field boundary_flux(const Field& u, const Field& g_old, const Field& reg, double dt) const;

 private:
  struct Attempt {
    Field u;
    NonlinearResult result;
  };

  Attempt solve_substep(const SolutionField& state, const Field& prev_u, double dt) const;
  void advance_recursive(const SolutionField& state, const Field& prev_u, double dt, int depth,
                         int step_index, SolutionField& out, StepDiagnostics& diag) const;
  Field storage(const Field& u, const Field& g_old) const;
  Field conserved(const Field& u, const Field& chi) const;

  const Discretization& disc_;
  BoundaryTags tags_;
  BoundaryHead phi_;
  EvolutionConfig config_;
  DofMap dofs_;
  Field dirichlet_values_;
};

SolutionField step(const SolutionField& state, const EvolutionConfig& config,
                   const PermeabilityField& field, const Grid& grid, const BoundaryTags& tags,
                   const BoundaryHead& phi, StepDiagnostics* diag = nullptr);

// Runs n_steps from (u0, chi0), or from the projected data when v1eps is given.
Trajectory solve_unsteady(const ProblemData& data, const Discretization& disc,
                          const EvolutionConfig& config, const StationarySolve* v1eps = nullptr);
Trajectory solve_unsteady(const ProblemData& data, const PermeabilityField& field,
                          const Grid& grid, const EvolutionConfig& config,
                          const StationarySolve* v1eps = nullptr);

}  // namespace damflow
