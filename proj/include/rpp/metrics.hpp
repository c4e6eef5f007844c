#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "rpp/engine.hpp"
#include "rpp/graph.hpp"
#include "rpp/objectives.hpp"

namespace rpp {

struct TraceRow {
  std::int64_t k = 0;
  std::int64_t comm_rounds = 0;
  double stationarity_gap = 0;
  double optimality_gap = 0;
  double consensus_err = 0;
  double potential = 0;
  double f_value = 0;
  std::int64_t a4_violations = 0;  // difference-bound violations at this step
};

struct IterationTrace {
  std::vector<TraceRow> rows;
};

/// (1/N) ||sum_i grad f_i(x_i)||^2 + rho ||x||_L^2 with the effective mixing
/// matrix (the polynomial operator for rpp_ca runs).
double stationarity_gap(const NetworkState& state, const AlgoParams& params,
                        const WeightMatrix& l_eff, const ProblemInstance& problem,
                        const Eigen::VectorXd* grad_hint = nullptr);

/// ||sum_i grad f_i(x_i)||^2 + x^T (H (x) I) x against the base
/// (un-accelerated) weight matrix H; zero exactly on consensus stationary
/// points of the sum objective.
double optimality_gap(const NetworkState& state, const ProblemInstance& problem,
                      const WeightMatrix& h,
                      const Eigen::VectorXd* grad_hint = nullptr);

/// ||x - (J (x) I) x|| with J the averaging matrix.
double consensus_error(const NetworkState& state, int n_nodes);

struct CertificateReport {
  bool available = false;  // false when the problem lacks a lower bound
  double c1 = 0;
  double c2 = 0;
  std::vector<double> margins;  // C1 C2 / T - running average, per prefix T
  double min_margin = 0;
  bool pass = false;
};

/// Executable rate certificate: asserts the running average of the
/// stationarity gap stays below C1 C2 / T for every prefix T of the trace
/// (rows with k >= 1).
CertificateReport rate_certificate(const IterationTrace& trace,
                                       const AlgoParams& params,
                                       const ProblemInstance& problem,
                                       const Eigen::VectorXd& x1);

/// CSV with a fixed header and 17-significant-digit floats (lossless
/// round trip).
void write_trace(const IterationTrace& trace, const std::filesystem::path& path);
IterationTrace read_trace(const std::filesystem::path& path);

}  // namespace rpp
