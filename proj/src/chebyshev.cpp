#include "rpp/chebyshev.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace rpp {

namespace {

// T_tau(c (1 - x)) by the three-term recurrence; matches the b-sequence
// bit-for-bit at x = 0.
double cheb_poly_arg(int tau, double c, double x) {
  double t_prev = 1.0;
  double t_cur = c * (1.0 - x);
  for (int t = 1; t < tau; ++t) {
    const double t_next = 2.0 * c * (1.0 - x) * t_cur - t_prev;
    t_prev = t_cur;
    t_cur = t_next;
  }
  return tau >= 1 ? t_cur : t_prev;
}

}  // namespace

std::string ChebOperator::diagnostic() const {
  std::ostringstream out;
  out.precision(17);
  out << "tau " << tau << '\n'
      << "c " << c << '\n'
      << "b_tau " << b_final << '\n'
      << "kappa_p " << kappa_p << '\n'
      << "kappa_l " << effective.spectral().eigengap << '\n'
      << "lambda_max_poly " << lambda_max_poly << '\n'
      << "prescale " << prescale << '\n'
      << "degenerate " << (degenerate ? 1 : 0) << '\n'
      << "rounds_charged_per_cacc " << tau << '\n'
      << "rounds_literal_listing " << tau + 1 << '\n';
  return out.str();
}

ChebOperator make_cheb_operator(const WeightMatrix& p,
                                std::optional<int> tau_override) {
  if (tau_override && *tau_override < 1)
    throw std::invalid_argument("make_cheb_operator: tau must be >= 1");

  ChebOperator op;
  op.base = p;
  op.kappa_p = p.spectral().eigengap;

  if (op.kappa_p <= 1.0 + 1e-9) {
    // complete-graph-like spectrum: c = (kappa+1)/(kappa-1) is undefined
    op.degenerate = true;
    op.effective = p;
    return op;
  }

  op.prescale = 2.0 / (p.spectral().lambda_max + p.spectral().lambda_min_nonzero);
  op.tau = tau_override ? *tau_override
                        : static_cast<int>(std::ceil(std::sqrt(op.kappa_p)));
  op.c = (op.kappa_p + 1.0) / (op.kappa_p - 1.0);

  double b_prev = 1.0, b_cur = op.c;
  for (int t = 1; t < op.tau; ++t) {
    const double b_next = 2.0 * op.c * b_cur - b_prev;
    b_prev = b_cur;
    b_cur = b_next;
  }
  op.b_final = op.tau >= 1 ? b_cur : b_prev;

  // dense evaluation of the polynomial on P's eigenvalues
  const Eigen::VectorXd& ev = p.eigenvalues();
  Eigen::VectorXd vals(ev.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    vals[i] = 1.0 - cheb_poly_arg(op.tau, op.c, op.prescale * ev[i]) / op.b_final;
  op.lambda_max_poly = vals.maxCoeff();

  op.effective = WeightMatrix::from_dense(
      p.eigenvectors() * (vals / op.lambda_max_poly).asDiagonal() *
      p.eigenvectors().transpose());
  return op;
}

std::pair<Eigen::VectorXd, int> cacc(const Eigen::VectorXd& s,
                                     const ChebOperator& op, int dim) {
  if (op.degenerate) return {apply_weight(op.base, s, dim), 1};

  auto apply_scaled = [&](const Eigen::VectorXd& v) {
    return (op.prescale * apply_weight(op.base, v, dim)).eval();
  };

  Eigen::VectorXd s_prev = s;
  Eigen::VectorXd s_cur = op.c * (s - apply_scaled(s));
  for (int t = 1; t < op.tau; ++t) {
    Eigen::VectorXd s_next = 2.0 * op.c * (s_cur - apply_scaled(s_cur)) - s_prev;
    s_prev = std::move(s_cur);
    s_cur = std::move(s_next);
  }
  return {s - s_cur / op.b_final, op.tau};
}

void rpp_ca_step(NetworkState& state, const AlgoParams& params,
                 const ChebOperator& op, const ProblemInstance& problem,
                 const NoiseSpec& noise, const Eigen::VectorXd* grad_hint) {
  if (params.variant != Variant::rpp_ca)
    throw std::invalid_argument("rpp_ca_step: params.variant must be rpp_ca");
  const int n = op.base.n();
  const int dim = problem.dim;
  const double inv_norm = 1.0 / op.lambda_max_poly;

  Eigen::VectorXd e = Eigen::VectorXd::Zero(state.x.size());
  Eigen::VectorXd r = Eigen::VectorXd::Zero(state.x.size());
  if (noise.mode == NoiseMode::spherical_capped) {
    for (int i = 0; i < n; ++i) {
      const Eigen::Index off = static_cast<Eigen::Index>(i) * dim;
      const Eigen::VectorXd delta =
          state.x.segment(off, dim) - state.x_prev.segment(off, dim);
      SubstreamRng rng_e(substream_key(noise.seed, i, state.k, 0));
      e.segment(off, dim) =
          generate_perturbation(delta, state.e.segment(off, dim), noise.sigma_e, rng_e);
      SubstreamRng rng_r(substream_key(noise.seed, i, state.k, 1));
      r.segment(off, dim) =
          generate_perturbation(delta, state.r.segment(off, dim), noise.sigma_r, rng_r);
    }
  }

  const Eigen::VectorXd y = state.x + state.d + e;
  auto [poly_y, rounds_y] = cacc(y, op, dim);
  state.comm_rounds += rounds_y;

  Eigen::VectorXd z;
  if (grad_hint)
    z = *grad_hint + params.rho * inv_norm * poly_y + r;
  else
    z = problem.gradient_stacked(state.x) + params.rho * inv_norm * poly_y + r;

  auto [poly_z, rounds_z] = cacc(z, op, dim);
  state.comm_rounds += rounds_z;

  Eigen::VectorXd x_new = state.x - params.alpha * z + params.beta * inv_norm * poly_z;
  for (int i = 0; i < n; ++i)
    if (!x_new.segment(static_cast<Eigen::Index>(i) * dim, dim).allFinite())
      throw DivergenceError(i, state.k);

  state.x_prev = state.x;
  state.x = std::move(x_new);
  state.d_hat += state.x;
  state.d = state.d_hat + params.eta * state.x;
  state.e = std::move(e);
  state.r = std::move(r);
  state.k += 1;
}

EigengapCertificate verify_eigengap_bound(const ChebOperator& op) {
  const int certificate_tau =
      op.degenerate ? 1 : static_cast<int>(std::ceil(std::sqrt(op.kappa_p)));
  if (op.tau != certificate_tau)
    throw std::invalid_argument(
        "verify_eigengap_bound: requires tau = ceil(sqrt(kappa_p))");

  EigengapCertificate cert;
  const double e_half = std::exp(0.5);
  const double ratio = (e_half + 1.0 / e_half) / (e_half - 1.0 / e_half);
  cert.bound = ratio * ratio;
  cert.kappa_l = op.effective.spectral().eigengap;
  cert.pass = cert.kappa_l <= cert.bound * (1.0 + 1e-9);
  return cert;
}

}  // namespace rpp
