#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <utility>

#include "rpp/engine.hpp"
#include "rpp/graph.hpp"

namespace rpp {

/// Multi-round Chebyshev communication operator. The recurrence runs on the
/// pre-scaled matrix prescale * P, whose nonzero spectrum lies inside
/// [1 - 1/c, 1 + 1/c]; `effective` is the induced normalised mixing matrix
/// L = P_tau(prescale P) / lambda_max_poly, which satisfies the usual weight
/// matrix contract with lambda_max = 1.
struct ChebOperator {
  WeightMatrix base;       // the input mixing matrix P (lambda_max = 1)
  double prescale = 1.0;   // 2 / (lambda_max + lambda_min_nonzero)
  WeightMatrix effective;
  int tau = 1;
  double c = 1.0;          // (kappa_p + 1) / (kappa_p - 1)
  double b_final = 1.0;    // b^tau from the scalar recurrence, equals T_tau(c)
  double lambda_max_poly = 1.0;
  double kappa_p = 1.0;
  bool degenerate = false;  // kappa_p ~ 1: pass-through with L = P

  /// Key-value text block with the operator constants and both round counts
  /// (charged per call vs. the literal listing, which also sends the final,
  /// never-consumed iterate).
  std::string diagnostic() const;
};

ChebOperator make_cheb_operator(const WeightMatrix& p,
                                std::optional<int> tau_override = {});

/// P_tau(prescale P) s via tau neighbor exchanges; returns the product and
/// the number of rounds consumed.
std::pair<Eigen::VectorXd, int> cacc(const Eigen::VectorXd& s,
                                     const ChebOperator& op, int dim);

/// RPP iteration with both one-hop weight applications replaced by CACC;
/// costs exactly 2 tau communication rounds. Parameters refer to the
/// normalised effective operator, so centralized_step with op.effective is
/// the matching oracle.
void rpp_ca_step(NetworkState& state, const AlgoParams& params,
                 const ChebOperator& op, const ProblemInstance& problem,
                 const NoiseSpec& noise,
                 const Eigen::VectorXd* grad_hint = nullptr);

struct EigengapCertificate {
  double kappa_l = 0;
  double bound = 0;
  bool pass = false;
};

/// Eigengap certificate for tau = ceil(sqrt(kappa_p)):
/// kappa_L <= ((e^{1/2} + e^{-1/2}) / (e^{1/2} - e^{-1/2}))^2.
EigengapCertificate verify_eigengap_bound(const ChebOperator& op);

}  // namespace rpp
