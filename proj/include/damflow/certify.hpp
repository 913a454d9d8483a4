#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "damflow/evolution.hpp"
#include "damflow/fem.hpp"
#include "damflow/solver.hpp"

namespace damflow {

struct DifferencePair {
  Field w;     // u1 - u2
  Field dchi;  // chi1 - chi2
  Field eta;   // alpha w + dchi
  double time = 0.0;
};

DifferencePair make_difference(const SolutionField& s1, const SolutionField& s2, double alpha);

struct DualCheck {
  double energy = 0.0;            // int a grad v . grad v
  double load = 0.0;              // int eta v
  double identity_error = 0.0;    // |energy - load| / max(|energy|, |load|)
  double grad_sq = 0.0;           // int |grad v|^2
  double eta_sq = 0.0;            // int eta^2
  double stability_ratio = 0.0;   // grad_sq / (eta_sq / lambda^2)
};

// Dual elliptic problem  int a grad v . grad xi = int eta xi  for every xi
// vanishing on the Dirichlet boundary, v = 0 there. The factorization of the
// reduced stiffness is computed once.
class DualSolver {
 public:
  DualSolver(const Discretization& disc, const BoundaryTags& tags,
             LinearSolverKind kind = LinearSolverKind::Direct, double krylov_tol = 1e-10);
  ~DualSolver();
  DualSolver(const DualSolver&) = delete;
  DualSolver& operator=(const DualSolver&) = delete;

  Field solve(const Field& eta) const;
  DualCheck check(const Field& v, const Field& eta) const;
  double lambda() const { return lambda_; }

 private:
  struct Impl;
  const Discretization& disc_;
  DofMap dofs_;
  LinearSolverKind kind_;
  double krylov_tol_;
  double lambda_;
  SparseMatrix laplace_;
  std::unique_ptr<Impl> impl_;
};

Field solve_dual(const Field& eta, const PermeabilityField& field, const Grid& grid,
                 const BoundaryTags& tags);

// Quadrature of a grad v . grad v over the domain.
double energy(const Field& v, const PermeabilityField& field, const Grid& grid);

struct TimeSeries {
  std::vector<double> times;   // strictly increasing
  std::vector<Field> values;
};

TimeSeries time_series(const Trajectory& traj);

// (1/h) int_t^{t+h} g(s) ds of the piecewise-linear interpolant in time, at
// every series time t <= T - h.
TimeSeries steklov_average(const TimeSeries& series, double h);
// Same average at an arbitrary t in [t0, T - h].
Field steklov_average_at(const TimeSeries& series, double h, double t);
// Piecewise-linear interpolant at t.
Field interpolate(const TimeSeries& series, double t);

struct EnergySeries {
  std::vector<double> times;
  std::vector<double> E;      // int a grad v . grad v of the dual solution
  std::vector<double> F;      // int_0^t E
  std::vector<double> cross;  // int_0^t int w (chi1 - chi2)
  double C_fit = 0.0;
};

struct CertificateReport {
  double sup_E = 0.0;
  double F_final = 0.0;
  double C_fit = 0.0;
  double cross_term_min = 0.0;
  double sign_min = 0.0;
  double ordering_violations = 0.0;
  double tol_unique = 0.0;
  double solution_max = 0.0;
  double energy_identity_max = 0.0;
  double dual_stability_max = 0.0;
  bool dual_stability_flag = false;   // some ratio above 10
  double gronwall_margin = 0.0;       // max of E + 2 cross - C_fit F (report only)
  bool pass = false;
};

struct Barriers {
  Field lower;
  Field upper;
  double tol = 1e-3;
};

struct MonitorOptions {
  std::optional<double> tol_unique;  // default 1e-6 (alpha M + 1)^2 |Omega|
  const Barriers* barriers = nullptr;
  LinearSolverKind linear = LinearSolverKind::Direct;
};

inline constexpr double kDualStabilityFlag = 10.0;

// Least-squares slope of log F over the samples with F > 1e3 machine epsilon.
double fit_gronwall_constant(const std::vector<double>& times, const std::vector<double>& F);

// Throws InvalidArgument listing every mismatch between the two trajectories.
void require_compatible(const Trajectory& a, const Trajectory& b);

std::pair<EnergySeries, CertificateReport> gronwall_monitor(const Trajectory& traj1,
                                                            const Trajectory& traj2,
                                                            const Discretization& disc,
                                                            const BoundaryTags& tags,
                                                            const MonitorOptions& options = {});
std::pair<EnergySeries, CertificateReport> gronwall_monitor(const Trajectory& traj1,
                                                            const Trajectory& traj2,
                                                            const PermeabilityField& field,
                                                            const Grid& grid,
                                                            const BoundaryTags& tags);

std::vector<DifferencePair> differences(const Trajectory& traj1, const Trajectory& traj2);

// Minimum nodal w (chi1 - chi2) over all pairs.
double sign_check(const std::vector<DifferencePair>& pairs);

struct OrderingReport {
  double below = 0.0;  // max(lower - u)
  double above = 0.0;  // max(u - upper)
  bool pass = false;
};

OrderingReport check_sandwich(const Field& u, const Field& lower, const Field& upper, double tol);

enum class ColumnState { Crossing, Wet, Dry };

const char* to_string(ColumnState state);

struct ColumnInterface {
  int i = 0;
  double x1 = 0.0;
  ColumnState state = ColumnState::Dry;
  double height = 0.0;  // crossing height; K for wet columns, 0 for dry ones
};

std::vector<ColumnInterface> extract_free_boundary(const SolutionField& solution, const Grid& grid,
                                                   double level = 0.5);

// Fattened strip width 2 max(h2, eps).
double strip_width(const Grid& grid, double eps);

struct StripReport {
  double delta = 0.0;
  int lower_nodes = 0;            // nodes with x2 < eps0 - delta
  int upper_nodes = 0;            // nodes with x2 > K - eps0 + delta
  double lower_min_u = 0.0;
  double lower_min_chi = 1.0;
  double upper_max_u = 0.0;
  double upper_max_chi = 0.0;
  bool lower_wet = true;          // u > 0 in the lower strip
  bool lower_saturated = true;    // chi >= 1 - tol_chi in the lower strip
  bool upper_dry = true;          // u <= tol_zero and chi <= tol_chi in the upper strip
};

StripReport check_strips(const SolutionField& solution, const Grid& grid, double eps0, double eps,
                         double tol_chi = 1e-2, double tol_zero = 1e-3);

}  // namespace damflow
