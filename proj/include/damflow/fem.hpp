#pragma once

#include <array>
#include <vector>

#include <Eigen/SparseCore>

#include "damflow/coeffs.hpp"
#include "damflow/data.hpp"
#include "damflow/domain.hpp"

namespace damflow {

using SparseMatrix = Eigen::SparseMatrix<double>;

// Conforming bilinear (Q1) elements on the structured grid with 2x2 Gauss
// quadrature. Precomputes the permeability at every quadrature point, the
// stiffness matrix and both mass matrices.
//
// The gravity term  g_i(v) = sum_K sum_q w_q |K| H_eps(v_h(x_q)) (a(x_q) e) . grad phi_i(x_q)
// evaluates H_eps at the quadrature points of the bilinear interpolant, so a
// hydrostatic state whose wet cells have all quadrature values >= eps has zero
// flux a (grad v + chi e) in every wet cell.
class Discretization {
 public:
  static constexpr int kQuad = 4;

  Discretization(const Grid& grid, const PermeabilityField& field);

  const Grid& grid() const { return grid_; }
  const PermeabilityField& field() const { return field_; }

  // Full matrices over all nodes, Dirichlet rows included.
  const SparseMatrix& stiffness() const { return stiffness_; }
  const SparseMatrix& consistent_mass() const { return mass_; }
  const Field& lumped_mass() const { return lumped_mass_; }

  Field gravity(const Field& v, double eps) const;
  // d gravity / d v as a full sparse matrix.
  SparseMatrix gravity_jacobian(const Field& v, double eps) const;

  // K v + g(v): weak residual of the penalized stationary problem, every row.
  Field weak_residual(const Field& v, double eps) const;

  // v^T K v = integral of a grad v . grad v
  double energy(const Field& v) const;

  // Value of the bilinear interpolant at quadrature point q of cell c.
  double value_at(const Field& v, std::size_t cell, int q) const;

  // Reference data shared by every cell of the uniform grid.
  const std::array<std::array<double, 4>, kQuad>& basis() const { return phi_; }
  const std::array<Point, kQuad>& quad_offsets() const { return quad_offsets_; }
  double quad_weight() const { return quad_weight_; }

 private:
  Grid grid_;
  PermeabilityField field_;
  double quad_weight_;                                  // w_q |K|
  std::array<Point, kQuad> quad_offsets_;               // in cell-local coordinates
  std::array<std::array<double, 4>, kQuad> phi_;        // phi_[q][i]
  std::array<std::array<Point, 4>, kQuad> grad_phi_;    // grad_phi_[q][i]
  std::vector<std::array<double, 4 * kQuad>> gravity_coeff_;  // per cell, [q * 4 + i]
  std::vector<std::array<std::size_t, 4>> cell_nodes_;
  SparseMatrix stiffness_;
  SparseMatrix mass_;
  Field lumped_mass_;
};

}  // namespace damflow
