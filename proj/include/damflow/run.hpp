#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "damflow/certify.hpp"
#include "damflow/config.hpp"

namespace damflow {

enum ExitCode : int {
  kExitOk = 0,
  kExitCheckFailure = 1,
  kExitParseError = 2,
  kExitValidation = 3,
  kExitNonconvergence = 4,
};

struct RunOutcome {
  int exit_code = kExitOk;
  std::vector<std::string> failures;  // names of failed checks or the error message
  std::filesystem::path dir;
  double complementarity_max = 0.0;
  double eps = 0.0;
};

// DAMFLOW_OUT when set, else output.root from the config.
std::filesystem::path output_root(const RunConfig& config);

// Runs one config into `dir` (created if needed). Never throws for solver or
// check failures; these are reported through the exit code, the failure
// list and summary.json. summary.json is always written last.
RunOutcome run(const RunConfig& config, const std::filesystem::path& dir);
RunOutcome run(const RunConfig& config);

// Loads two finished unsteady runs and certifies their agreement. Writes
// certificate.json and energy.csv into out_dir when it is not empty. Throws
// InvalidArgument naming every mismatched key when the runs are incompatible.
CertificateReport compare_runs(const std::filesystem::path& dir_a,
                               const std::filesystem::path& dir_b,
                               const std::filesystem::path& out_dir = {});

struct SweepOutcome {
  int exit_code = kExitOk;
  std::vector<RunOutcome> runs;
  std::filesystem::path dir;
  bool complementarity_monotone = true;
};

// One run per value of `param` ("section.key"), each in its own directory
// below <root>/<name>, then sweep_summary.json.
SweepOutcome sweep(const RunConfig& config, const std::string& param,
                   const std::vector<std::string>& values, int jobs = 1);

}  // namespace damflow
