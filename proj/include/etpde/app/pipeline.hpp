#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "etpde/app/config.hpp"

namespace etpde::app {

enum class Stage { Eig, Design, Certify, Simulate, Verify };

Stage parse_stage(std::string_view name);
std::string_view to_string(Stage stage);

/// Exit codes of the command-line tool.
enum ExitCode : int { kSuccess = 0, kFailure = 1, kValidation = 2, kCertification = 3, kSimulation = 4 };

struct PipelineResult {
  json summary;
  int exit_code = kSuccess;
};

/// Runs the pipeline up to and including `last`, writing artifacts to
/// `directory`. Failures are recorded in summary.json (with the stage name)
/// before the result is returned; nothing is thrown.
PipelineResult run_pipeline(const ExperimentConfig& cfg, Stage last, const std::string& directory);

struct SweepRow {
  double value = 0;
  std::string status;  // "ok" or the failing stage
  json summary;
};

/// Repeats the full pipeline for each value of `axis` (tau, sigma, delta or
/// J) on `jobs` worker threads; cells write to directory/<axis>_<index>.
/// Writes directory/sweep.csv and returns rows in input order.
std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg, const std::string& axis,
                                const std::vector<double>& values, int jobs, const std::string& directory);

/// "%.17g"; "nan", "inf", "-inf" for non-finite values.
std::string format_number(double x);

}  // namespace etpde::app
