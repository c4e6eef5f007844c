#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rpp/graph.hpp"
#include "rpp/objectives.hpp"
#include "rpp/rng.hpp"

namespace rpp {

enum class Variant { rpp, rpp_ca, dgd_baseline };

/// Constants produced by the parameter rules, kept with the parameters so the
/// potential function and the rate certificate can be evaluated later.
struct DerivedConstants {
  double m_bar = 0;
  double delta = 0;
  double lambda_min_nonzero = 0;  // of the effective mixing matrix
  double c = 0;
  double d1 = 0, d2 = 0, d3 = 0, d4 = 0, d5 = 0, d6 = 0;
  double xi1 = 0;
  double lambda_max_b = 0, lambda_min_b = 0;
  double kappa = 0;  // lambda_max_b / (rho * lambda_min_nonzero)
  // Stepsize-rule conditions, evaluated numerically. Selection asserts them;
  // manual parameters only log them.
  bool cond_eta_sigma = false;   // |eta| + 2 sigma_e < 1/2
  bool cond_kappa = false;       // kappa <= c d2 / lambda_min_nonzero
  bool cond_proximal = false;    // lhs_proximal >= 0
  double lhs_proximal = 0;       // B/2 - (1+2c)(M+2sr)/2 - 5 d1 c/(12 B) at lambda_min_b
};

struct AlgoParams {
  Variant variant = Variant::rpp;
  double rho = 0;
  double alpha = 0;
  double beta = 0;
  double eta = 0;
  double sigma_e = 0;
  double sigma_r = 0;
  int tau = 1;  // Chebyshev degree, rpp_ca only
  std::optional<DerivedConstants> derived;
};

/// Theory-driven parameter selection. Throws std::invalid_argument on a
/// precondition violation and std::runtime_error (naming the failed
/// condition and its margin) if the produced parameters do not verify the
/// decrease conditions numerically.
AlgoParams select_parameters(double m_bar, double lambda_min_nonzero,
                             double eta, double sigma_e, double sigma_r,
                             double delta);

/// Fills DerivedConstants for externally chosen (manual) parameters: computes
/// the same constants and condition flags but never throws on a failed
/// condition.
DerivedConstants derive_constants(const AlgoParams& params, double m_bar,
                                  double lambda_min_nonzero);

enum class NoiseMode { none, spherical_capped };

struct NoiseSpec {
  double sigma_e = 0;
  double sigma_r = 0;
  NoiseMode mode = NoiseMode::none;
  std::uint64_t seed = 0;

  static NoiseSpec disabled() { return {}; }
  static NoiseSpec spherical(double sigma_e, double sigma_r, std::uint64_t seed);
};

/// Complete per-iteration algorithm state; blocks of length dim per node.
struct NetworkState {
  std::int64_t k = 0;
  std::int64_t comm_rounds = 0;
  Eigen::VectorXd x, x_prev;
  Eigen::VectorXd d_hat, d;
  Eigen::VectorXd e, r;  // perturbations used by the latest step

  std::string to_csv(int n_nodes) const;  // debugging snapshot
};

NetworkState initial_state(int n_nodes, int dim);

/// Raised when a step produces a non-finite entry.
struct DivergenceError : std::runtime_error {
  DivergenceError(int node, std::int64_t k);
  int node;
  std::int64_t k;
};

/// Norm-capped spherical perturbation: sigma ||delta_x|| u v with u uniform
/// on the sphere and v uniform on [0,1], clipped so the norm bound holds
/// exactly. `prev` (the previous perturbation) is part of the interface for
/// generators that also enforce the difference bounds; this one only
/// monitors them.
Eigen::VectorXd generate_perturbation(const Eigen::VectorXd& delta_x,
                                      const Eigen::VectorXd& prev,
                                      double sigma, SubstreamRng& rng);

struct NoiseTriple {
  Eigen::VectorXd e, r, x;
};

struct Assumption4Report {
  std::int64_t violations_norm_e = 0;   // ||e^k|| bound
  std::int64_t violations_diff_e = 0;   // ||e^k - e^{k-1}|| bound
  std::int64_t violations_norm_r = 0;
  std::int64_t violations_diff_r = 0;
  double max_ratio_norm_e = 0, max_ratio_diff_e = 0;
  double max_ratio_norm_r = 0, max_ratio_diff_r = 0;
  std::int64_t transitions = 0;  // (k, node) pairs checked
};

Assumption4Report check_assumption4(const std::vector<NoiseTriple>& trace,
                                    int n_nodes, double sigma_e,
                                    double sigma_r);

/// One distributed RPP iteration (two neighbor exchanges). If grad_hint is
/// given it must equal the stacked gradient at state.x.
void rpp_step(NetworkState& state, const AlgoParams& params,
              const WeightMatrix& p, const ProblemInstance& problem,
              const NoiseSpec& noise,
              const Eigen::VectorXd* grad_hint = nullptr);

/// Dense matrix-form reference step with fixed noise vectors; the test
/// oracle for rpp_step and rpp_ca_step.
void centralized_step(NetworkState& state, const AlgoParams& params,
                      const WeightMatrix& p, const ProblemInstance& problem,
                      const Eigen::VectorXd& e_fixed,
                      const Eigen::VectorXd& r_fixed);

/// x <- (I - P) x - stepsize grad; one exchange.
void dgd_baseline_step(NetworkState& state, double stepsize,
                       const WeightMatrix& p, const ProblemInstance& problem,
                       const Eigen::VectorXd* grad_hint = nullptr);

/// AL(x, d) = f~(x) + <x, rho L d> + (rho/2) ||x||_L^2
double augmented_lagrangian(const NetworkState& state, const AlgoParams& params,
                            const WeightMatrix& p, const ProblemInstance& problem);

/// Potential-function evaluator; assembles the dense proximal matrix B and
/// its factorisation once so per-iteration evaluation stays cheap.
class PotentialEvaluator {
 public:
  PotentialEvaluator(const AlgoParams& params, const WeightMatrix& p,
                     const ProblemInstance& problem);
  /// f_hint, when given, must equal f~(state.x).
  double operator()(const NetworkState& state,
                    const double* f_hint = nullptr) const;

 private:
  const ProblemInstance* problem_;
  AlgoParams params_;
  int dim_;
  Eigen::MatrixXd eigvecs_;  // eigenbasis of the n-level mixing matrix
  Eigen::VectorXd eigvals_;
  Eigen::MatrixXd b_;  // n-level proximal matrix G^{-1} - rho P
  Eigen::LDLT<Eigen::MatrixXd> b_solver_;
  double kappa_ = 0;
};

double potential(const NetworkState& state, const AlgoParams& params,
                 const WeightMatrix& p, const ProblemInstance& problem);

}  // namespace rpp
