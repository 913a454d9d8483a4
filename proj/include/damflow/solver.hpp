#pragma once

#include <functional>
#include <string>
#include <vector>

#include "damflow/domain.hpp"
#include "damflow/fem.hpp"

namespace damflow {

enum class LinearSolverKind { Direct, Krylov };
enum class NonlinearMethod { Newton, Picard };

const char* to_string(LinearSolverKind kind);
const char* to_string(NonlinearMethod method);

struct SolverParams {
  NonlinearMethod method = NonlinearMethod::Newton;
  LinearSolverKind linear = LinearSolverKind::Direct;
  double tol = 1e-9;            // relative: ||F|| <= tol (1 + ||F0||)
  int max_iters = 50;
  int max_halvings = 8;
  double picard_relaxation = 0.7;
  int max_picard_iters = 500;
  double tol_neg = 1e-10;
  double krylov_tol = 1e-10;
  bool fallback = true;         // Picard after a failed Newton solve
  int polish_iters = 1;         // extra full Newton steps taken after convergence when they help

  void validate() const;
};

// Map between all nodes and the unknowns (non-Dirichlet nodes).
class DofMap {
 public:
  DofMap() = default;
  explicit DofMap(const BoundaryTags& tags);

  std::size_t num_nodes() const { return to_free_.size(); }
  std::size_t num_free() const { return free_.size(); }
  const std::vector<std::size_t>& free_nodes() const { return free_; }
  const std::vector<std::size_t>& dirichlet_nodes() const { return dirichlet_; }
  bool is_free(std::size_t n) const { return to_free_[n] >= 0; }
  long free_index(std::size_t n) const { return to_free_[n]; }

  Field restrict(const Field& full) const;
  void scatter(const Field& reduced, Field& full) const;
  void add_scaled(const Field& reduced, double s, Field& full) const;
  SparseMatrix restrict(const SparseMatrix& full) const;

 private:
  std::vector<std::size_t> free_;
  std::vector<std::size_t> dirichlet_;
  std::vector<long> to_free_;
};

// Solves A x = b. Direct: sparse LU (or LDLT when symmetric). Krylov:
// diagonally preconditioned CG (symmetric) or BiCGSTAB. Throws NonConvergence.
Field solve_linear(const SparseMatrix& A, const Field& b, LinearSolverKind kind, bool symmetric,
                   double krylov_tol);

struct NonlinearResult {
  bool converged = false;
  int iterations = 0;
  int picard_iterations = 0;
  double initial_residual = 0.0;
  double residual = 0.0;
  bool used_fallback = false;
};

// Residual on all nodes; only free rows are used.
using ResidualFn = std::function<Field(const Field&)>;
// Jacobian of the free rows with respect to the free unknowns.
using JacobianFn = std::function<SparseMatrix(const Field&)>;
// One Picard map u -> u~ with the nonlinearity frozen at u; returns a full field
// with the Dirichlet values already in place.
using PicardMapFn = std::function<Field(const Field&)>;

// Semismooth Newton with backtracking on ||F||_2. u holds the initial guess
// with Dirichlet values and is updated in place.
NonlinearResult newton_solve(Field& u, const DofMap& dofs, const ResidualFn& residual,
                             const JacobianFn& jacobian, const SolverParams& params);

// Damped fixed-point iteration u <- u + omega (P(u) - u), stopped on the
// residual of the full problem.
NonlinearResult picard_solve(Field& u, const DofMap& dofs, const ResidualFn& residual,
                             const PicardMapFn& map, const SolverParams& params,
                             double reference_residual);

// Newton, then Picard from the original guess if Newton fails and fallback is on.
NonlinearResult solve_nonlinear(Field& u, const DofMap& dofs, const ResidualFn& residual,
                                const JacobianFn& jacobian, const PicardMapFn& map,
                                const SolverParams& params);

}  // namespace damflow
