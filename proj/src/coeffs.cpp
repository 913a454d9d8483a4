#include "damflow/coeffs.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "damflow/error.hpp"

namespace damflow {

double SymTensor2::min_eigenvalue() const {
  const double mean = 0.5 * (a11 + a22);
  const double r = std::hypot(0.5 * (a11 - a22), a12);
  return mean - r;
}

double SymTensor2::max_eigenvalue() const {
  const double mean = 0.5 * (a11 + a22);
  const double r = std::hypot(0.5 * (a11 - a22), a12);
  return mean + r;
}

const char* to_string(PermeabilityKind kind) {
  switch (kind) {
    case PermeabilityKind::Identity:
      return "identity";
    case PermeabilityKind::Layered:
      return "layered";
    case PermeabilityKind::SmoothAnalytic:
      return "smooth";
    case PermeabilityKind::GridSampled:
      return "grid";
  }
  return "unknown";
}

PermeabilityField::PermeabilityField(PermeabilityKind kind, DamGeometry geometry, Evaluator eval,
                                     std::optional<Divergence> div_ae,
                                     std::map<std::string, double> parameters)
    : kind_(kind),
      geometry_(geometry),
      eval_(std::move(eval)),
      div_ae_(std::move(div_ae)),
      parameters_(std::move(parameters)) {}

double PermeabilityField::divergence(const Point& x) const {
  if (!div_ae_) throw InvalidArgument("permeability field has no analytic divergence");
  return (*div_ae_)(x);
}

PermeabilityField PermeabilityField::identity(const DamGeometry& geometry) {
  return PermeabilityField(
      PermeabilityKind::Identity, geometry, [](const Point&) { return SymTensor2{1.0, 0.0, 1.0}; },
      [](const Point&) { return 0.0; });
}

PermeabilityField PermeabilityField::layered(const DamGeometry& geometry, double a11,
                                             double a22_base, double a22_slope) {
  return PermeabilityField(
      PermeabilityKind::Layered, geometry,
      [=](const Point& x) { return SymTensor2{a11, 0.0, a22_base + a22_slope * x.x2}; },
      [=](const Point&) { return a22_slope; },
      {{"a11", a11}, {"a22", a22_base}, {"a22_slope", a22_slope}});
}

PermeabilityField PermeabilityField::smooth_analytic(const DamGeometry& geometry, double a11,
                                                     double a12, double a22, double amplitude) {
  const double L = geometry.L;
  const double K = geometry.K;
  constexpr double pi = std::numbers::pi;
  return PermeabilityField(
      PermeabilityKind::SmoothAnalytic, geometry,
      [=](const Point& x) {
        return SymTensor2{a11 * (1.0 + amplitude * std::sin(pi * x.x1 / L) * std::sin(pi * x.x2 / K)),
                          a12, a22 * (1.0 + amplitude * x.x2 / K)};
      },
      [=](const Point&) { return a22 * amplitude / K; },
      {{"a11", a11}, {"a12", a12}, {"a22", a22}, {"amplitude", amplitude}});
}

namespace {

// Index of the lattice interval containing t, clamped to the valid range.
std::size_t bracket(const std::vector<double>& xs, double t) {
  auto it = std::upper_bound(xs.begin(), xs.end(), t);
  std::size_t k = (it == xs.begin()) ? 0 : static_cast<std::size_t>(it - xs.begin()) - 1;
  return std::min(k, xs.size() - 2);
}

}  // namespace

PermeabilityField PermeabilityField::grid_sampled(const DamGeometry& geometry,
                                                  std::vector<double> x1s, std::vector<double> x2s,
                                                  std::vector<SymTensor2> values) {
  if (x1s.size() < 2 || x2s.size() < 2) {
    throw InvalidArgument("sampled permeability needs at least 2 samples per axis");
  }
  if (values.size() != x1s.size() * x2s.size()) {
    throw InvalidArgument("sampled permeability: value count does not match lattice size");
  }
  if (!std::is_sorted(x1s.begin(), x1s.end()) || !std::is_sorted(x2s.begin(), x2s.end())) {
    throw InvalidArgument("sampled permeability: lattice coordinates must be increasing");
  }
  const std::size_t n1 = x1s.size();
  auto eval = [x1s = std::move(x1s), x2s = std::move(x2s), values = std::move(values),
               n1](const Point& x) {
    const std::size_t p = bracket(x1s, x.x1);
    const std::size_t q = bracket(x2s, x.x2);
    const double s = std::clamp((x.x1 - x1s[p]) / (x1s[p + 1] - x1s[p]), 0.0, 1.0);
    const double t = std::clamp((x.x2 - x2s[q]) / (x2s[q + 1] - x2s[q]), 0.0, 1.0);
    const SymTensor2& v00 = values[q * n1 + p];
    const SymTensor2& v10 = values[q * n1 + p + 1];
    const SymTensor2& v01 = values[(q + 1) * n1 + p];
    const SymTensor2& v11 = values[(q + 1) * n1 + p + 1];
    auto mix = [&](double SymTensor2::*m) {
      return (1 - s) * (1 - t) * (v00.*m) + s * (1 - t) * (v10.*m) + (1 - s) * t * (v01.*m) +
             s * t * (v11.*m);
    };
    return SymTensor2{mix(&SymTensor2::a11), mix(&SymTensor2::a12), mix(&SymTensor2::a22)};
  };
  return PermeabilityField(PermeabilityKind::GridSampled, geometry, std::move(eval));
}

SymTensor2 eval_tensor(const PermeabilityField& field, const Point& x) {
  if (!field.geometry().contains(x)) {
    std::ostringstream os;
    os << "point (" << x.x1 << ", " << x.x2 << ") lies outside the dam rectangle";
    throw OutOfDomain(os.str());
  }
  return field(x);
}

PermeabilityField load_permeability_csv(const std::string& path, const DamGeometry& geometry) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open permeability file: " + path);

  struct Row {
    double x1, x2;
    SymTensor2 a;
  };
  std::vector<Row> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    Row r{};
    if (!(ls >> r.x1 >> r.x2 >> r.a.a11 >> r.a.a12 >> r.a.a22)) {
      if (rows.empty() && line_no == 1) continue;  // header
      throw InvalidArgument("malformed permeability row " + std::to_string(line_no) + " in " +
                            path);
    }
    rows.push_back(r);
  }

  std::set<double> s1, s2;
  for (const auto& r : rows) {
    s1.insert(r.x1);
    s2.insert(r.x2);
  }
  std::vector<double> x1s(s1.begin(), s1.end());
  std::vector<double> x2s(s2.begin(), s2.end());
  if (x1s.size() * x2s.size() != rows.size()) {
    throw InvalidArgument("permeability samples in " + path + " do not form a complete lattice");
  }
  std::vector<SymTensor2> values(rows.size());
  std::vector<bool> seen(rows.size(), false);
  for (const auto& r : rows) {
    const auto p = static_cast<std::size_t>(std::lower_bound(x1s.begin(), x1s.end(), r.x1) - x1s.begin());
    const auto q = static_cast<std::size_t>(std::lower_bound(x2s.begin(), x2s.end(), r.x2) - x2s.begin());
    const std::size_t k = q * x1s.size() + p;
    if (seen[k]) throw InvalidArgument("duplicate permeability sample in " + path);
    seen[k] = true;
    values[k] = r.a;
  }
  return PermeabilityField::grid_sampled(geometry, std::move(x1s), std::move(x2s),
                                         std::move(values));
}

AssumptionReport validate_assumptions(const PermeabilityField& field, const Grid& grid,
                                      double tol_div) {
  AssumptionReport report;
  report.lambda_est = std::numeric_limits<double>::infinity();
  report.Lambda_est = 0.0;
  report.div_ae_min = std::numeric_limits<double>::infinity();

  const int nx = grid.nx();
  const int ny = grid.ny();
  std::vector<SymTensor2> samples(grid.num_nodes());
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      const Point x = grid.node(i, j);
      const SymTensor2 a = field(x);
      if (!(a.a11 > 0.0) || !(a.det() > 0.0)) {
        std::ostringstream os;
        os << "permeability not positive definite at (" << x.x1 << ", " << x.x2
           << "): a11=" << a.a11 << " det=" << a.det();
        throw AssumptionViolation(os.str(), x.x1, x.x2);
      }
      samples[grid.index(i, j)] = a;
      report.lambda_est = std::min(report.lambda_est, a.min_eigenvalue());
      report.Lambda_est = std::max(report.Lambda_est, a.max_eigenvalue());
    }
  }

  // One-sided differences on the boundary, centered inside.
  auto deriv = [&](int i, int j, int axis, double SymTensor2::*m) {
    const int lo_i = (axis == 0) ? std::max(i - 1, 0) : i;
    const int hi_i = (axis == 0) ? std::min(i + 1, nx) : i;
    const int lo_j = (axis == 1) ? std::max(j - 1, 0) : j;
    const int hi_j = (axis == 1) ? std::min(j + 1, ny) : j;
    const double span = (axis == 0) ? (hi_i - lo_i) * grid.h1() : (hi_j - lo_j) * grid.h2();
    return (samples[grid.index(hi_i, hi_j)].*m - samples[grid.index(lo_i, lo_j)].*m) / span;
  };

  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      for (int axis = 0; axis < 2; ++axis) {
        for (auto m : {&SymTensor2::a11, &SymTensor2::a12, &SymTensor2::a22}) {
          report.N_est = std::max(report.N_est, std::abs(deriv(i, j, axis, m)));
        }
      }
      const Point x = grid.node(i, j);
      const double div = field.has_analytic_divergence()
                             ? field.divergence(x)
                             : deriv(i, j, 0, &SymTensor2::a12) + deriv(i, j, 1, &SymTensor2::a22);
      if (div < report.div_ae_min) {
        report.div_ae_min = div;
        report.div_ae_argmin = x;
      }
    }
  }
  report.div_ae_violation = report.div_ae_min < -tol_div;
  return report;
}

}  // namespace damflow
