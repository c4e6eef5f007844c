#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "rpp/engine.hpp"

namespace rpp {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GraphConfig {
  std::string type = "geometric";
  int n = 0;
  double radius = 0;
  std::uint64_t seed = 0;
};

struct ProblemConfig {
  std::string type;  // "logistic_nonconvex" | "quadratic"
  int m = 1;
  int d = 0;
  double lambda = 0.001;
  double mu = 1.0;
  std::uint64_t seed = 0;
};

struct ManualParams {
  double rho = 0, alpha = 0, beta = 0;
};

struct AlgorithmConfig {
  Variant variant = Variant::rpp;
  bool auto_params = true;
  double delta = 2.0;
  double eta = 0.0;
  double sigma_e = 0.0;
  double sigma_r = 0.0;
  std::optional<int> tau;  // null -> ceil(sqrt(kappa_p)) for rpp_ca
  std::optional<ManualParams> manual;
};

struct RunConfig {
  std::int64_t max_iters = 0;
  double gap_tol = 1e-8;
  std::uint64_t seed = 0;
  std::string trace_path;
};

struct ExperimentConfig {
  GraphConfig graph;
  ProblemConfig problem;
  AlgorithmConfig algorithm;
  RunConfig run;
};

/// Parses and validates the JSON config document; throws ConfigError naming
/// the offending field path.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const ExperimentConfig& cfg);

}  // namespace rpp
