#pragma once

// Reference computations for the tests. Nothing here calls into the library's
// assembly code: every integral is recomputed cell by cell with a Gauss rule
// (3x3 unless a caller asks for 2x2) and hand-written bilinear shape functions.

#include <array>
#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "damflow/coeffs.hpp"
#include "damflow/data.hpp"
#include "damflow/domain.hpp"

namespace oracle {

using damflow::Field;
using damflow::Grid;
using damflow::Point;

// Gauss-Legendre rule on [-1, 1] with 2 or 3 points.
struct GaussRule {
  std::vector<double> x;
  std::vector<double> w;
};

inline GaussRule gauss(int points) {
  if (points == 2) return {{-1.0 / std::sqrt(3.0), 1.0 / std::sqrt(3.0)}, {1.0, 1.0}};
  return {{-std::sqrt(0.6), 0.0, std::sqrt(0.6)}, {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0}};
}

// Bilinear interpolant of nodal values on cell (ci, cj) at local (s, t) in [0,1]^2.
struct CellEval {
  double value;
  Point grad;
};

inline CellEval eval_cell(const Grid& g, const Field& v, int ci, int cj, double s, double t) {
  const double v00 = v[static_cast<Eigen::Index>(g.index(ci, cj))];
  const double v10 = v[static_cast<Eigen::Index>(g.index(ci + 1, cj))];
  const double v01 = v[static_cast<Eigen::Index>(g.index(ci, cj + 1))];
  const double v11 = v[static_cast<Eigen::Index>(g.index(ci + 1, cj + 1))];
  CellEval e;
  e.value = v00 * (1 - s) * (1 - t) + v10 * s * (1 - t) + v01 * (1 - s) * t + v11 * s * t;
  e.grad.x1 = ((v10 - v00) * (1 - t) + (v11 - v01) * t) / g.h1();
  e.grad.x2 = ((v01 - v00) * (1 - s) + (v11 - v10) * s) / g.h2();
  return e;
}

// Visits every Gauss point: f(ci, cj, s, t, x, weight * |cell|).
inline void for_each_gauss_point(const Grid& g,
                                 const std::function<void(int, int, double, double, Point, double)>& f,
                                 int points = 3) {
  const GaussRule q = gauss(points);
  const int nq = static_cast<int>(q.x.size());
  const double area = g.h1() * g.h2();
  for (int cj = 0; cj < g.ny(); ++cj) {
    for (int ci = 0; ci < g.nx(); ++ci) {
      for (int a = 0; a < nq; ++a) {
        for (int b = 0; b < nq; ++b) {
          const double s = 0.5 * (1 + q.x[a]);
          const double t = 0.5 * (1 + q.x[b]);
          const Point x{(ci + s) * g.h1(), (cj + t) * g.h2()};
          f(ci, cj, s, t, x, 0.25 * q.w[a] * q.w[b] * area);
        }
      }
    }
  }
}

inline double ramp(double s, double eps) { return std::min(1.0, std::max(0.0, s) / eps); }

// Weak residual  int a (grad v + H_eps(v) e) . grad phi_n  at every node.
inline Field weak_residual(const Grid& g, const damflow::PermeabilityField& a, const Field& v,
                           double eps, int points = 3) {
  Field r = Field::Zero(static_cast<Eigen::Index>(g.num_nodes()));
  for_each_gauss_point(g, [&](int ci, int cj, double s, double t, Point x, double w) {
    const CellEval e = eval_cell(g, v, ci, cj, s, t);
    const damflow::SymTensor2 k = a(x);
    const Point flux = k.apply({e.grad.x1, e.grad.x2 + ramp(e.value, eps)});
    const std::array<int, 4> di{0, 1, 0, 1};
    const std::array<int, 4> dj{0, 0, 1, 1};
    for (int m = 0; m < 4; ++m) {
      const double sx = di[m] ? s : 1 - s;
      const double ty = dj[m] ? t : 1 - t;
      const double gx = (di[m] ? 1.0 : -1.0) * ty / g.h1();
      const double gy = (dj[m] ? 1.0 : -1.0) * sx / g.h2();
      r[static_cast<Eigen::Index>(g.index(ci + di[m], cj + dj[m]))] += w * (flux.x1 * gx + flux.x2 * gy);
    }
  }, points);
  return r;
}

inline double energy(const Grid& g, const damflow::PermeabilityField& a, const Field& v) {
  double sum = 0.0;
  for_each_gauss_point(g, [&](int ci, int cj, double s, double t, Point x, double w) {
    const CellEval e = eval_cell(g, v, ci, cj, s, t);
    const Point ag = a(x).apply(e.grad);
    sum += w * (ag.x1 * e.grad.x1 + ag.x2 * e.grad.x2);
  });
  return sum;
}

// || v_h - f ||_{L2}
inline double l2_error(const Grid& g, const Field& v, const std::function<double(Point)>& f) {
  double sum = 0.0;
  for_each_gauss_point(g, [&](int ci, int cj, double s, double t, Point x, double w) {
    const double d = eval_cell(g, v, ci, cj, s, t).value - f(x);
    sum += w * d * d;
  });
  return std::sqrt(sum);
}

inline Field nodal(const Grid& g, const std::function<double(Point)>& f) {
  Field v(static_cast<Eigen::Index>(g.num_nodes()));
  for (std::size_t n = 0; n < g.num_nodes(); ++n) v[static_cast<Eigen::Index>(n)] = f(g.node(n));
  return v;
}

// Lumped Q1 mass: a quarter of every adjacent cell.
inline Field lumped_mass(const Grid& g) {
  Field m(static_cast<Eigen::Index>(g.num_nodes()));
  for (std::size_t n = 0; n < g.num_nodes(); ++n) {
    const int i = g.i_of(n), j = g.j_of(n);
    const int cx = (i > 0) + (i < g.nx());
    const int cy = (j > 0) + (j < g.ny());
    m[static_cast<Eigen::Index>(n)] = 0.25 * cx * cy * g.h1() * g.h2();
  }
  return m;
}

// One backward Euler step with lumped mass, 2x2 gravity quadrature and a
// dense Newton solve with a finite-difference Jacobian. `dirichlet[n]` marks
// nodes fixed to `phi`.
inline Field euler_step(const Grid& g, const damflow::PermeabilityField& a, const Field& u_old,
                        const Field& chi_old, const std::vector<bool>& dirichlet,
                        const std::function<double(Point)>& phi, double alpha, double eps, double dt) {
  const Field m = lumped_mass(g);
  std::vector<Eigen::Index> free;
  Field u = u_old;
  for (std::size_t n = 0; n < g.num_nodes(); ++n) {
    if (dirichlet[n]) u[static_cast<Eigen::Index>(n)] = phi(g.node(n));
    else free.push_back(static_cast<Eigen::Index>(n));
  }
  const auto nf = static_cast<Eigen::Index>(free.size());
  auto F = [&](const Field& v) {
    const Field r = weak_residual(g, a, v, eps, 2);
    Eigen::VectorXd out(nf);
    for (Eigen::Index k = 0; k < nf; ++k) {
      const Eigen::Index n = free[static_cast<std::size_t>(k)];
      const double G = alpha * v[n] + ramp(v[n], eps);
      const double G_old = alpha * u_old[n] + chi_old[n];
      out[k] = m[n] * (G - G_old) / dt + r[n];
    }
    return out;
  };
  for (int it = 0; it < 200; ++it) {
    const Eigen::VectorXd f = F(u);
    if (f.norm() < 1e-14) break;
    Eigen::MatrixXd J(nf, nf);
    for (Eigen::Index k = 0; k < nf; ++k) {
      const double step = 1e-7;
      Field up = u, um = u;
      up[free[static_cast<std::size_t>(k)]] += step;
      um[free[static_cast<std::size_t>(k)]] -= step;
      J.col(k) = (F(up) - F(um)) / (2 * step);
    }
    const Eigen::VectorXd du = J.fullPivLu().solve(-f);
    double lambda = 1.0;
    for (int h = 0; h < 30; ++h, lambda *= 0.5) {
      Field trial = u;
      for (Eigen::Index k = 0; k < nf; ++k) trial[free[static_cast<std::size_t>(k)]] += lambda * du[k];
      if (F(trial).norm() < f.norm()) {
        u = trial;
        break;
      }
    }
  }
  return u;
}

}  // namespace oracle
