#include "damflow/solver.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "damflow/error.hpp"

namespace damflow {

const char* to_string(LinearSolverKind kind) {
  return kind == LinearSolverKind::Direct ? "direct" : "krylov";
}

const char* to_string(NonlinearMethod method) {
  return method == NonlinearMethod::Newton ? "newton" : "picard";
}

void SolverParams::validate() const {
  if (!(tol > 0.0)) throw InvalidArgument("solver tol must be > 0");
  if (max_iters < 1) throw InvalidArgument("solver max_iters must be >= 1");
  if (max_halvings < 0) throw InvalidArgument("solver max_halvings must be >= 0");
  if (!(picard_relaxation > 0.0 && picard_relaxation <= 1.0)) {
    throw InvalidArgument("picard relaxation must lie in (0, 1]");
  }
  if (max_picard_iters < 1) throw InvalidArgument("solver max_picard_iters must be >= 1");
  if (!(tol_neg >= 0.0)) throw InvalidArgument("solver tol_neg must be >= 0");
  if (!(krylov_tol > 0.0)) throw InvalidArgument("solver krylov_tol must be > 0");
}

DofMap::DofMap(const BoundaryTags& tags) : to_free_(tags.size(), -1) {
  for (std::size_t n = 0; n < tags.size(); ++n) {
    if (tags.is_dirichlet(n)) {
      dirichlet_.push_back(n);
    } else {
      to_free_[n] = static_cast<long>(free_.size());
      free_.push_back(n);
    }
  }
}

Field DofMap::restrict(const Field& full) const {
  if (static_cast<std::size_t>(full.size()) != num_nodes()) {
    throw InvalidArgument("DofMap::restrict: field size does not match the grid");
  }
  Field r(static_cast<Eigen::Index>(free_.size()));
  for (std::size_t k = 0; k < free_.size(); ++k) {
    r[static_cast<Eigen::Index>(k)] = full[static_cast<Eigen::Index>(free_[k])];
  }
  return r;
}

void DofMap::scatter(const Field& reduced, Field& full) const {
  for (std::size_t k = 0; k < free_.size(); ++k) {
    full[static_cast<Eigen::Index>(free_[k])] = reduced[static_cast<Eigen::Index>(k)];
  }
}

void DofMap::add_scaled(const Field& reduced, double s, Field& full) const {
  for (std::size_t k = 0; k < free_.size(); ++k) {
    full[static_cast<Eigen::Index>(free_[k])] += s * reduced[static_cast<Eigen::Index>(k)];
  }
}

SparseMatrix DofMap::restrict(const SparseMatrix& full) const {
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<std::size_t>(full.nonZeros()));
  for (Eigen::Index col = 0; col < full.outerSize(); ++col) {
    const long jc = to_free_[static_cast<std::size_t>(col)];
    if (jc < 0) continue;
    for (SparseMatrix::InnerIterator it(full, col); it; ++it) {
      const long ir = to_free_[static_cast<std::size_t>(it.row())];
      if (ir >= 0) t.emplace_back(ir, jc, it.value());
    }
  }
  const auto n = static_cast<Eigen::Index>(free_.size());
  SparseMatrix out(n, n);
  out.setFromTriplets(t.begin(), t.end());
  return out;
}

Field solve_linear(const SparseMatrix& A, const Field& b, LinearSolverKind kind, bool symmetric,
                   double krylov_tol) {
  if (A.rows() != A.cols() || A.rows() != b.size()) {
    throw InvalidArgument("solve_linear: dimension mismatch");
  }
  if (b.size() == 0) return Field();
  Field x;
  if (kind == LinearSolverKind::Direct) {
    if (symmetric) {
      Eigen::SimplicialLDLT<SparseMatrix> ldlt(A);
      if (ldlt.info() != Eigen::Success) throw NonConvergence("LDLT factorization failed", b.norm());
      x = ldlt.solve(b);
    } else {
      Eigen::SparseLU<SparseMatrix> lu;
      lu.analyzePattern(A);
      lu.factorize(A);
      if (lu.info() != Eigen::Success) {
        throw NonConvergence("LU factorization failed: " + lu.lastErrorMessage(), b.norm());
      }
      x = lu.solve(b);
    }
  } else if (symmetric) {
    Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper> cg;
    cg.setTolerance(krylov_tol);
    cg.setMaxIterations(std::max<Eigen::Index>(1000, 10 * A.rows()));
    cg.compute(A);
    x = cg.solve(b);
    if (cg.info() != Eigen::Success) throw NonConvergence("CG did not converge", cg.error());
  } else {
    Eigen::BiCGSTAB<SparseMatrix> bicg;
    bicg.setTolerance(krylov_tol);
    bicg.setMaxIterations(std::max<Eigen::Index>(1000, 10 * A.rows()));
    bicg.compute(A);
    x = bicg.solve(b);
    if (bicg.info() != Eigen::Success) throw NonConvergence("BiCGSTAB did not converge", bicg.error());
  }
  if (!x.allFinite()) throw NonConvergence("linear solve produced non-finite values", b.norm());
  return x;
}

namespace {

double free_norm(const DofMap& dofs, const Field& r) { return dofs.restrict(r).norm(); }

}  // namespace

NonlinearResult newton_solve(Field& u, const DofMap& dofs, const ResidualFn& residual,
                             const JacobianFn& jacobian, const SolverParams& params) {
  NonlinearResult res;
  Field F = dofs.restrict(residual(u));
  double r = F.norm();
  res.initial_residual = r;
  const double target = params.tol * (1.0 + r);
  int polished = 0;
  while (true) {
    if (!std::isfinite(r)) break;
    const bool done = r <= target;
    if (done && polished >= params.polish_iters) {
      res.converged = true;
      break;
    }
    if (r == 0.0) {
      res.converged = true;
      break;
    }
    if (res.iterations >= params.max_iters) break;

    const SparseMatrix J = jacobian(u);
    Field delta;
    try {
      delta = solve_linear(J, -F, params.linear, false, params.krylov_tol);
    } catch (const NonConvergence&) {
      if (done) {
        res.converged = true;
      }
      break;
    }
    ++res.iterations;

    if (done) {
      // Polishing: accept the full step only if it lowers the residual.
      Field trial = u;
      dofs.add_scaled(delta, 1.0, trial);
      Field Ft = dofs.restrict(residual(trial));
      const double rt = Ft.norm();
      ++polished;
      if (rt < r) {
        u = std::move(trial);
        F = std::move(Ft);
        r = rt;
      } else {
        res.converged = true;
        break;
      }
      continue;
    }

    double s = 1.0;
    bool accepted = false;
    for (int k = 0; k <= params.max_halvings; ++k) {
      Field trial = u;
      dofs.add_scaled(delta, s, trial);
      Field Ft = dofs.restrict(residual(trial));
      const double rt = Ft.norm();
      if (std::isfinite(rt) && rt <= (1.0 - 1e-4 * s) * r) {
        u = std::move(trial);
        F = std::move(Ft);
        r = rt;
        accepted = true;
        break;
      }
      s *= 0.5;
    }
    if (!accepted) break;
  }
  res.residual = r;
  return res;
}

NonlinearResult picard_solve(Field& u, const DofMap& dofs, const ResidualFn& residual,
                             const PicardMapFn& map, const SolverParams& params,
                             double reference_residual) {
  NonlinearResult res;
  double r = free_norm(dofs, residual(u));
  res.initial_residual = r;
  const double target = params.tol * (1.0 + std::max(reference_residual, r));
  const double w = params.picard_relaxation;
  while (r > target && res.picard_iterations < params.max_picard_iters) {
    const Field next = map(u);
    u = (1.0 - w) * u + w * next;
    r = free_norm(dofs, residual(u));
    ++res.picard_iterations;
    if (!std::isfinite(r)) break;
  }
  res.converged = std::isfinite(r) && r <= target;
  res.residual = r;
  return res;
}

NonlinearResult solve_nonlinear(Field& u, const DofMap& dofs, const ResidualFn& residual,
                                const JacobianFn& jacobian, const PicardMapFn& map,
                                const SolverParams& params) {
  if (params.method == NonlinearMethod::Picard) {
    NonlinearResult p = picard_solve(u, dofs, residual, map, params, 0.0);
    return p;
  }
  const Field guess = u;
  NonlinearResult n = newton_solve(u, dofs, residual, jacobian, params);
  if (n.converged || !params.fallback) return n;
  u = guess;
  NonlinearResult p = picard_solve(u, dofs, residual, map, params, n.initial_residual);
  p.iterations = n.iterations;
  p.initial_residual = n.initial_residual;
  p.used_fallback = true;
  if (!p.converged && n.residual < p.residual) p.residual = n.residual;
  return p;
}

}  // namespace damflow
