#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "damflow/domain.hpp"

namespace damflow {

// Symmetric 2x2 permeability tensor; a21 is a12 by construction.
struct SymTensor2 {
  double a11 = 1.0;
  double a12 = 0.0;
  double a22 = 1.0;

  double det() const { return a11 * a22 - a12 * a12; }
  double min_eigenvalue() const;
  double max_eigenvalue() const;
  // (a xi) for xi = (x, y)
  Point apply(const Point& xi) const { return {a11 * xi.x1 + a12 * xi.x2, a12 * xi.x1 + a22 * xi.x2}; }
};

enum class PermeabilityKind { Identity, Layered, SmoothAnalytic, GridSampled };

const char* to_string(PermeabilityKind kind);

// Heterogeneous permeability a(x) on the closed dam rectangle.
class PermeabilityField {
 public:
  using Evaluator = std::function<SymTensor2(const Point&)>;
  using Divergence = std::function<double(const Point&)>;

  PermeabilityField(PermeabilityKind kind, DamGeometry geometry, Evaluator eval,
                    std::optional<Divergence> div_ae = std::nullopt,
                    std::map<std::string, double> parameters = {});

  PermeabilityKind kind() const { return kind_; }
  const DamGeometry& geometry() const { return geometry_; }

  // No domain check; callers inside the assembly loop use this.
  SymTensor2 operator()(const Point& x) const { return eval_(x); }

  bool has_analytic_divergence() const { return div_ae_.has_value(); }
  // div(a(x) e) = d(a12)/dx1 + d(a22)/dx2; requires has_analytic_divergence().
  double divergence(const Point& x) const;

  // Construction parameters, echoed into run summaries.
  const std::map<std::string, double>& parameters() const { return parameters_; }

  static PermeabilityField identity(const DamGeometry& geometry);
  // diag(a11, a22_base + a22_slope * x2)
  static PermeabilityField layered(const DamGeometry& geometry, double a11, double a22_base,
                                   double a22_slope);
  // a11 (1 + amp sin(pi x1/L) sin(pi x2/K)), constant a12, a22 (1 + amp x2/K).
  static PermeabilityField smooth_analytic(const DamGeometry& geometry, double a11, double a12,
                                           double a22, double amplitude);
  // Bilinear interpolation of tensor samples on a tensor-product lattice.
  static PermeabilityField grid_sampled(const DamGeometry& geometry, std::vector<double> x1s,
                                        std::vector<double> x2s, std::vector<SymTensor2> values);

 private:
  PermeabilityKind kind_;
  DamGeometry geometry_;
  Evaluator eval_;
  std::optional<Divergence> div_ae_;
  std::map<std::string, double> parameters_;
};

// Evaluates a(x); throws OutOfDomain outside the closed rectangle.
SymTensor2 eval_tensor(const PermeabilityField& field, const Point& x);

// Reads rows "x1,x2,a11,a12,a22" (an optional header line is skipped). The
// sample points must form a complete tensor-product lattice.
PermeabilityField load_permeability_csv(const std::string& path, const DamGeometry& geometry);

struct AssumptionReport {
  double lambda_est = 0.0;   // min eigenvalue over samples
  double Lambda_est = 0.0;   // max operator norm over samples
  double N_est = 0.0;        // max |d a_ij / d x_k| by centered differences
  double div_ae_min = 0.0;   // min div(a e) over samples
  Point div_ae_argmin{};
  bool symmetric = true;
  bool div_ae_violation = false;  // div_ae_min < -tol_div
};

inline constexpr double kTolDiv = 1e-10;

// Samples the field at every grid node. Throws AssumptionViolation at the
// first non positive definite sample.
AssumptionReport validate_assumptions(const PermeabilityField& field, const Grid& grid,
                                      double tol_div = kTolDiv);

}  // namespace damflow
