#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rpp/chebyshev.hpp"
#include "rpp/config.hpp"
#include "rpp/metrics.hpp"

namespace rpp {

// CLI / run_experiment exit codes
inline constexpr int kExitConverged = 0;
inline constexpr int kExitMaxIters = 2;
inline constexpr int kExitDiverged = 3;
inline constexpr int kExitConfigError = 4;

struct RunResult {
  int exit_code = kExitMaxIters;
  bool converged = false;
  IterationTrace trace;
  AlgoParams params;
  Eigen::VectorXd x1;          // first iterate (rate certificate input)
  NetworkState final_state;
  std::string summary_json;    // companion summary document
  // assumption-4 accounting over the whole run
  std::int64_t a4_norm_violations = 0;   // norm bounds, zero by construction
  std::int64_t a4_diff_violations = 0;   // difference bounds, monitored
  std::int64_t a4_iterations_hit = 0;    // iterations with >= 1 diff violation
  std::int64_t a4_checks = 0;
  CertificateReport certificate;
  double kappa_p = 0, kappa_l = 0;
  int tau_used = 1;
};

/// Builds graph, mixing matrix and problem from the config, selects or
/// accepts parameters, iterates the chosen variant until gap_tol on the
/// stationarity gap or max_iters, writes the trace CSV and the summary
/// document. Divergence is reported through exit_code, not an exception.
RunResult run_experiment(const ExperimentConfig& cfg);

struct SweepCell {
  std::string axis_value;
  std::uint64_t seed = 0;
  std::string variant;
  double sigma = 0;
  int tau = 1;
  std::int64_t iters_to_tol = -1;  // -1: tolerance not reached
  std::int64_t comm_to_tol = -1;
  double final_gap = 0;
  int exit_code = 0;
  std::string trace_path;
  std::string error;
};

struct SweepResult {
  std::vector<SweepCell> cells;
  std::string combined_csv_path;
};

/// Cross-product runs over axis values and run seeds; one trace per cell plus
/// a combined CSV. Cell failures are recorded and the sweep continues. Cells
/// run on `jobs` worker threads; outputs are identical for any worker count.
SweepResult sweep(const ExperimentConfig& cfg_template, const std::string& axis,
                  const std::vector<std::string>& values,
                  const std::vector<std::uint64_t>& seeds, int jobs = 1);

}  // namespace rpp
