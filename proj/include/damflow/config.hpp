#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "damflow/coeffs.hpp"
#include "damflow/data.hpp"
#include "damflow/domain.hpp"
#include "damflow/penalty.hpp"
#include "damflow/solver.hpp"

namespace damflow {

// Malformed config text, unknown key or unparsable value (exit status 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Well-formed config that violates a precondition (exit status 3).
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  std::vector<std::string> problems_;
};

enum class RunMode { Stationary, Unsteady, Certify, Sweep };
enum class HeadKind { Hydrostatic, Dam, BarrierLower, BarrierUpper };
enum class InitialKind { Midpoint, StationaryLower, StationaryUpper, Hydrostatic, File };

const char* to_string(RunMode mode);
const char* to_string(HeadKind kind);
const char* to_string(InitialKind kind);

// Flat "section.key" -> value view of an INI file.
using KeyValues = std::map<std::string, std::string>;

struct RunConfig {
  std::string name = "run";
  RunMode mode = RunMode::Stationary;
  unsigned long long seed = 0;

  DamGeometry geometry;
  int nx = 32;
  int ny = 32;

  struct Permeability {
    std::string kind = "identity";  // identity | layered | smooth | random | file
    double a11 = 1.0;
    double a12 = 0.0;
    double a22 = 1.0;
    double a22_slope = 0.0;
    double amplitude = 0.0;
    int samples = 5;
    std::string file;
  } permeability;

  struct Data {
    HeadKind head = HeadKind::Hydrostatic;
    double level = 0.5;
    double left = 0.8;
    double right = 0.2;
    double eps0 = 0.1;
    InitialKind initial = InitialKind::Midpoint;
    double initial_level = 0.5;
    std::string initial_file;
    bool project = true;
  } data;

  PenaltyConfig penalty;  // carries alpha
  SolverParams solver;

  struct Time {
    double T = 0.5;
    std::optional<double> dt;  // default h2
    double reg = 0.0;
    bool mass_lumping = true;
  } time;

  struct Output {
    std::string root = "runs";
    int every_n_steps = 1;
  } output;

  struct Checks {
    bool ordering = true;
    bool strips = true;
    bool conservation = true;
    bool complementarity = true;
    std::optional<double> tol_order;  // default 1e-3 max(K, 1)
    double tol_chi = 1e-2;
    double tol_mass = 1e-10;
    double tol_flux = 1e-9;
  } checks;

  struct Certify {
    std::string second = "picard";  // picard | same
    std::optional<double> tol_unique;
  } certify;

  struct Sweep {
    std::string param;
    std::vector<std::string> values;
    int jobs = 1;
    RunMode mode = RunMode::Unsteady;  // mode of every job
  } sweep;

  KeyValues source;  // parsed key values, used to rewrite the config

  double dt() const;
  double tol_order() const;
};

KeyValues read_ini_file(const std::filesystem::path& path);
KeyValues read_ini_string(const std::string& text);
std::string write_ini(const KeyValues& kv);

// Parses and range-checks every value. Throws ConfigError on unknown keys or
// unparsable values, ValidationError listing every violated precondition.
RunConfig parse_config(const KeyValues& kv);
RunConfig load_config(const std::filesystem::path& path);

// Problems that are only visible once files and data are consulted; empty when valid.
std::vector<std::string> validate_config(const RunConfig& config);

// Everything needed to solve, built from a validated config.
struct Problem {
  Grid grid;
  PermeabilityField field;
  BoundaryHead phi;
  BarrierHeads barriers;
  AssumptionReport assumptions;
};

Problem build_problem(const RunConfig& config);

}  // namespace damflow
