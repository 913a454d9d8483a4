#include "damflow/fem.hpp"

#include <cmath>

#include "damflow/penalty.hpp"

namespace damflow {

Discretization::Discretization(const Grid& grid, const PermeabilityField& field)
    : grid_(grid), field_(field) {
  const double h1 = grid.h1();
  const double h2 = grid.h2();
  const double g = 0.5 / std::sqrt(3.0);
  const std::array<double, 2> gp = {0.5 - g, 0.5 + g};
  quad_weight_ = 0.25 * h1 * h2;

  for (int qy = 0; qy < 2; ++qy) {
    for (int qx = 0; qx < 2; ++qx) {
      const int q = qy * 2 + qx;
      const double s = gp[qx];
      const double t = gp[qy];
      quad_offsets_[q] = {s * h1, t * h2};
      phi_[q] = {(1 - s) * (1 - t), s * (1 - t), (1 - s) * t, s * t};
      grad_phi_[q] = {Point{-(1 - t) / h1, -(1 - s) / h2}, Point{(1 - t) / h1, -s / h2},
                      Point{-t / h1, (1 - s) / h2}, Point{t / h1, s / h2}};
    }
  }

  const int nx = grid.nx();
  const int ny = grid.ny();
  const std::size_t ncells = grid.num_cells();
  cell_nodes_.resize(ncells);
  gravity_coeff_.resize(ncells);

  std::vector<Eigen::Triplet<double>> kt, mt;
  kt.reserve(ncells * 16);
  mt.reserve(ncells * 16);
  lumped_mass_ = Field::Zero(static_cast<Eigen::Index>(grid.num_nodes()));

  for (int cj = 0; cj < ny; ++cj) {
    for (int ci = 0; ci < nx; ++ci) {
      const std::size_t c = static_cast<std::size_t>(cj) * nx + ci;
      const auto nodes = grid.cell_nodes(ci, cj);
      cell_nodes_[c] = nodes;
      const Point origin = grid.node(ci, cj);
      std::array<std::array<double, 4>, 4> ke{};
      std::array<std::array<double, 4>, 4> me{};
      for (int q = 0; q < kQuad; ++q) {
        const Point xq{origin.x1 + quad_offsets_[q].x1, origin.x2 + quad_offsets_[q].x2};
        const SymTensor2 a = field(xq);
        for (int i = 0; i < 4; ++i) {
          const Point agi = a.apply(grad_phi_[q][i]);
          // (a e) . grad phi_i = a12 d1 phi_i + a22 d2 phi_i
          gravity_coeff_[c][q * 4 + i] = quad_weight_ * agi.x2;
          for (int jn = 0; jn < 4; ++jn) {
            const Point& gj = grad_phi_[q][jn];
            ke[i][jn] += quad_weight_ * (agi.x1 * gj.x1 + agi.x2 * gj.x2);
            me[i][jn] += quad_weight_ * phi_[q][i] * phi_[q][jn];
          }
        }
      }
      for (int i = 0; i < 4; ++i) {
        for (int jn = 0; jn < 4; ++jn) {
          kt.emplace_back(nodes[i], nodes[jn], ke[i][jn]);
          mt.emplace_back(nodes[i], nodes[jn], me[i][jn]);
          lumped_mass_[static_cast<Eigen::Index>(nodes[i])] += me[i][jn];
        }
      }
    }
  }
  const auto n = static_cast<Eigen::Index>(grid.num_nodes());
  stiffness_.resize(n, n);
  stiffness_.setFromTriplets(kt.begin(), kt.end());
  mass_.resize(n, n);
  mass_.setFromTriplets(mt.begin(), mt.end());
}

double Discretization::value_at(const Field& v, std::size_t cell, int q) const {
  const auto& nodes = cell_nodes_[cell];
  double s = 0.0;
  for (int i = 0; i < 4; ++i) s += phi_[q][i] * v[static_cast<Eigen::Index>(nodes[i])];
  return s;
}

Field Discretization::gravity(const Field& v, double eps) const {
  const double inv_eps = 1.0 / eps;
  Field g = Field::Zero(v.size());
  for (std::size_t c = 0; c < cell_nodes_.size(); ++c) {
    const auto& nodes = cell_nodes_[c];
    for (int q = 0; q < kQuad; ++q) {
      const double hq = detail::heaviside(value_at(v, c, q), inv_eps);
      if (hq == 0.0) continue;
      for (int i = 0; i < 4; ++i) {
        g[static_cast<Eigen::Index>(nodes[i])] += hq * gravity_coeff_[c][q * 4 + i];
      }
    }
  }
  return g;
}

SparseMatrix Discretization::gravity_jacobian(const Field& v, double eps) const {
  const double inv_eps = 1.0 / eps;
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(cell_nodes_.size() * 4);
  for (std::size_t c = 0; c < cell_nodes_.size(); ++c) {
    const auto& nodes = cell_nodes_[c];
    for (int q = 0; q < kQuad; ++q) {
      const double dh = detail::heaviside_derivative(value_at(v, c, q), eps, inv_eps);
      if (dh == 0.0) continue;
      for (int i = 0; i < 4; ++i) {
        const double ci = dh * gravity_coeff_[c][q * 4 + i];
        for (int j = 0; j < 4; ++j) t.emplace_back(nodes[i], nodes[j], ci * phi_[q][j]);
      }
    }
  }
  SparseMatrix jac(v.size(), v.size());
  jac.setFromTriplets(t.begin(), t.end());
  return jac;
}

Field Discretization::weak_residual(const Field& v, double eps) const {
  Field r = stiffness_ * v;
  r += gravity(v, eps);
  return r;
}

double Discretization::energy(const Field& v) const { return v.dot(stiffness_ * v); }

}  // namespace damflow
