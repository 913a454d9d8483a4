#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "damflow/config.hpp"
#include "damflow/error.hpp"
#include "damflow/run.hpp"

namespace fs = std::filesystem;
using namespace damflow;

namespace {

// Parse and validate only; prints every problem found.
int load(const std::string& path, RunConfig& out) {
  try {
    out = load_config(path);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "damflow: %s\n", e.what());
    return kExitParseError;
  } catch (const ValidationError& e) {
    for (const auto& p : e.problems()) std::fprintf(stderr, "damflow: %s\n", p.c_str());
    return kExitValidation;
  }
  return kExitOk;
}

void report(const RunOutcome& r) {
  std::printf("%s: exit %d\n", r.dir.string().c_str(), r.exit_code);
  for (const auto& f : r.failures) std::printf("  failed: %s\n", f.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Penalized dam seepage solver"};
  app.require_subcommand(1);

  std::string config_path;
  std::string dir_a;
  std::string dir_b;
  std::string out_dir;
  std::string param;
  std::vector<std::string> values;
  int jobs = 1;

  auto* run_cmd = app.add_subcommand("run", "Run a config (stationary, unsteady or certify)");
  run_cmd->add_option("config", config_path, "INI config file")->required()->check(CLI::ExistingFile);

  auto* validate_cmd = app.add_subcommand("validate", "Check a config without solving");
  validate_cmd->add_option("config", config_path, "INI config file")->required()->check(CLI::ExistingFile);

  auto* compare_cmd = app.add_subcommand("compare", "Certify agreement of two unsteady runs");
  compare_cmd->add_option("dir_a", dir_a, "first run directory")->required()->check(CLI::ExistingDirectory);
  compare_cmd->add_option("dir_b", dir_b, "second run directory")->required()->check(CLI::ExistingDirectory);
  compare_cmd->add_option("--out", out_dir, "report directory (default: dir_a)");

  auto* sweep_cmd = app.add_subcommand("sweep", "Run a config for several values of one key");
  sweep_cmd->add_option("config", config_path, "INI config file")->required()->check(CLI::ExistingFile);
  sweep_cmd->add_option("--param", param, "section.key to vary (default: sweep.param)");
  sweep_cmd->add_option("--values", values, "values (default: sweep.values)");
  sweep_cmd->add_option("--jobs", jobs, "concurrent runs")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitParseError;
  }

  try {
    if (*run_cmd || *validate_cmd) {
      RunConfig config;
      if (const int rc = load(config_path, config); rc != kExitOk) return rc;
      if (*validate_cmd) {
        const auto problems = validate_config(config);
        for (const auto& p : problems) std::fprintf(stderr, "damflow: %s\n", p.c_str());
        if (!problems.empty()) return kExitValidation;
        std::printf("%s: ok\n", config_path.c_str());
        return kExitOk;
      }
      if (config.mode == RunMode::Sweep) {
        const SweepOutcome s = sweep(config, config.sweep.param, config.sweep.values, config.sweep.jobs);
        for (const auto& r : s.runs) report(r);
        return s.exit_code;
      }
      const RunOutcome r = run(config);
      report(r);
      return r.exit_code;
    }
    if (*compare_cmd) {
      const fs::path out = out_dir.empty() ? fs::path(dir_a) : fs::path(out_dir);
      const CertificateReport rep = compare_runs(dir_a, dir_b, out);
      std::printf("sup_E %.6e  tol_unique %.6e  sign_min %.6e  %s\n", rep.sup_E, rep.tol_unique,
                  rep.sign_min, rep.pass ? "PASS" : "FAIL");
      return rep.pass ? kExitOk : kExitCheckFailure;
    }
    if (*sweep_cmd) {
      RunConfig config;
      if (const int rc = load(config_path, config); rc != kExitOk) return rc;
      if (param.empty()) param = config.sweep.param;
      if (values.empty()) values = config.sweep.values;
      if (!sweep_cmd->count("--jobs")) jobs = config.sweep.jobs;
      if (param.empty() || values.empty()) {
        std::fprintf(stderr, "damflow: sweep needs --param and --values\n");
        return kExitValidation;
      }
      const SweepOutcome s = sweep(config, param, values, jobs);
      for (const auto& r : s.runs) report(r);
      std::printf("complementarity monotone: %s\n", s.complementarity_monotone ? "yes" : "no");
      return s.exit_code;
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "damflow: %s\n", e.what());
    return kExitParseError;
  } catch (const ValidationError& e) {
    for (const auto& p : e.problems()) std::fprintf(stderr, "damflow: %s\n", p.c_str());
    return kExitValidation;
  } catch (const InvalidArgument& e) {
    std::fprintf(stderr, "damflow: %s\n", e.what());
    return kExitValidation;
  } catch (const NonConvergence& e) {
    std::fprintf(stderr, "damflow: %s\n", e.what());
    return kExitNonconvergence;
  }
  return kExitOk;
}
