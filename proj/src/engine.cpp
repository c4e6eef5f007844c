#include "rpp/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace rpp {

namespace {

using MapMat = Eigen::Map<const Eigen::MatrixXd>;

// Eigenvalue of B = G^{-1} - rho L at an L-eigenvalue t, with G = alpha I - beta L.
double b_eig(double alpha, double beta, double rho, double t) {
  return 1.0 / (alpha - beta * t) - rho * t;
}

// Extremes of b_eig over the admissible spectrum {0} u [lmin, 1]. b_eig is
// convex in t, so the max sits at an endpoint; the min is the interior
// stationary point clamped into [lmin, 1], taken together with the endpoints.
// Both 0 and 1 are always actual eigenvalues, so the max is exact; the min is
// a safe lower bound for any graph with that lambda_min_nonzero.
std::pair<double, double> b_extremes(double alpha, double beta, double rho,
                                     double lmin) {
  const double at0 = b_eig(alpha, beta, rho, 0.0);
  const double at1 = b_eig(alpha, beta, rho, 1.0);
  double lo = std::min(at0, std::min(at1, b_eig(alpha, beta, rho, lmin)));
  if (rho > 0 && beta > 0) {
    const double t_star = (alpha - std::sqrt(beta / rho)) / beta;
    if (t_star > lmin && t_star < 1.0)
      lo = std::min(lo, b_eig(alpha, beta, rho, t_star));
  }
  return {std::max(at0, at1), lo};
}

void fill_conditions(DerivedConstants& dc, const AlgoParams& p) {
  dc.cond_eta_sigma = std::abs(p.eta) + 2.0 * p.sigma_e < 0.5;
  dc.cond_kappa = dc.kappa <= dc.c * dc.d2 / dc.lambda_min_nonzero;
  dc.lhs_proximal = 0.5 * dc.lambda_min_b -
                    0.5 * (1.0 + 2.0 * dc.c) * (dc.m_bar + 2.0 * p.sigma_r) -
                    5.0 * dc.d1 * dc.c / (12.0 * dc.lambda_min_b);
  dc.cond_proximal = dc.lambda_min_b > 0 && dc.lhs_proximal >= 0;
}

Eigen::MatrixXd proximal_matrix(const WeightMatrix& p, const AlgoParams& params) {
  // B = Q diag(1/(alpha - beta lam) - rho lam) Q^T, sharing P's eigenvectors
  const Eigen::VectorXd& ev = p.eigenvalues();
  Eigen::VectorXd diag(ev.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    diag[i] = b_eig(params.alpha, params.beta, params.rho, ev[i]);
  return p.eigenvectors() * diag.asDiagonal() * p.eigenvectors().transpose();
}

}  // namespace

AlgoParams select_parameters(double m_bar, double lambda_min_nonzero,
                             double eta, double sigma_e, double sigma_r,
                             double delta) {
  if (!(m_bar > 0)) throw std::invalid_argument("select_parameters: m_bar must be > 0");
  if (!(lambda_min_nonzero > 0) || lambda_min_nonzero > 1.0 + 1e-9)
    throw std::invalid_argument("select_parameters: lambda_min_nonzero must lie in (0, 1]");
  if (!(std::abs(eta) < 0.5))
    throw std::invalid_argument("select_parameters: requires |eta| < 1/2");
  if (sigma_e < 0 || !(sigma_e < 0.25 - 0.5 * std::abs(eta)))
    throw std::invalid_argument(
        "select_parameters: requires 0 <= sigma_e < 1/4 - |eta|/2");
  if (sigma_r < 0) throw std::invalid_argument("select_parameters: sigma_r must be >= 0");
  if (!(delta > 1)) throw std::invalid_argument("select_parameters: delta must be > 1");

  constexpr double kSlack = 1.0 + 1e-3;  // strict inequalities need a concrete point

  DerivedConstants dc;
  dc.m_bar = m_bar;
  dc.delta = delta;
  dc.lambda_min_nonzero = lambda_min_nonzero;

  dc.d2 = lambda_min_nonzero / (6.0 * (2.0 + std::max(eta, 0.0)));
  dc.c = kSlack * 20.0 * delta * delta / (3.0 * dc.d2 * dc.d2);
  dc.d3 = std::pow(dc.d2 * dc.c + 1.0, 2) / (delta * delta) - 20.0 * dc.c / 3.0;
  if (!(dc.d3 > 0))
    throw std::runtime_error("select_parameters: d3 <= 0 (parameter rule infeasible)");
  dc.d4 = 2.0 * (dc.c * dc.d2 + 1.0) * (1.0 + 2.0 * dc.c) * (m_bar + 2.0 * sigma_r) / delta;
  dc.d5 = 10.0 * dc.c * m_bar * m_bar / 3.0;

  AlgoParams params;
  params.eta = eta;
  params.sigma_e = sigma_e;
  params.sigma_r = sigma_r;
  params.rho = kSlack * (dc.d4 + std::sqrt(dc.d4 * dc.d4 + 4.0 * dc.d3 * dc.d5)) /
               (2.0 * dc.d3);

  dc.d1 = m_bar * m_bar + params.rho * params.rho * (eta * eta + sigma_e * sigma_e) +
          sigma_r * sigma_r;
  dc.d6 = (1.0 + 2.0 * dc.c) * (m_bar + 2.0 * sigma_r);
  dc.xi1 = 0.5 * (dc.d6 + std::sqrt(dc.d6 * dc.d6 + 8.0 * dc.d1 * dc.c / 3.0));

  // 1/alpha is placed at the geometric midpoint of the open interval
  // (xi1, delta xi1); beta = alpha / 2.
  params.alpha = 1.0 / (std::sqrt(delta) * dc.xi1);
  params.beta = params.alpha / 2.0;

  auto [bmax, bmin] = b_extremes(params.alpha, params.beta, params.rho,
                                 lambda_min_nonzero);
  dc.lambda_max_b = bmax;
  dc.lambda_min_b = bmin;
  dc.kappa = bmax / (params.rho * lambda_min_nonzero);
  fill_conditions(dc, params);

  std::ostringstream fail;
  if (!dc.cond_eta_sigma)
    fail << "|eta|+2sigma_e = " << std::abs(eta) + 2 * sigma_e << " >= 1/2; ";
  if (!dc.cond_kappa)
    fail << "kappa condition violated by "
         << dc.kappa - dc.c * dc.d2 / lambda_min_nonzero << "; ";
  if (!dc.cond_proximal)
    fail << "proximal condition lhs = " << dc.lhs_proximal << " < 0; ";
  if (!fail.str().empty())
    throw std::runtime_error("select_parameters: decrease conditions failed: " +
                             fail.str());

  params.derived = dc;
  return params;
}

DerivedConstants derive_constants(const AlgoParams& params, double m_bar,
                                  double lambda_min_nonzero) {
  if (!(params.alpha > 0) || params.beta < 0 || !(params.alpha - params.beta > 0))
    throw std::invalid_argument("derive_constants: needs alpha > beta >= 0");
  if (!(params.rho > 0))
    throw std::invalid_argument("derive_constants: needs rho > 0");

  DerivedConstants dc;
  dc.m_bar = m_bar;
  dc.delta = 2.0;  // canonical margin for the logged chain
  dc.lambda_min_nonzero = lambda_min_nonzero;
  dc.d2 = lambda_min_nonzero / (6.0 * (2.0 + std::max(params.eta, 0.0)));
  dc.c = (1.0 + 1e-3) * 20.0 * dc.delta * dc.delta / (3.0 * dc.d2 * dc.d2);
  dc.d3 = std::pow(dc.d2 * dc.c + 1.0, 2) / (dc.delta * dc.delta) - 20.0 * dc.c / 3.0;
  dc.d4 = 2.0 * (dc.c * dc.d2 + 1.0) * (1.0 + 2.0 * dc.c) *
          (m_bar + 2.0 * params.sigma_r) / dc.delta;
  dc.d5 = 10.0 * dc.c * m_bar * m_bar / 3.0;
  dc.d1 = m_bar * m_bar +
          params.rho * params.rho * (params.eta * params.eta + params.sigma_e * params.sigma_e) +
          params.sigma_r * params.sigma_r;
  dc.d6 = (1.0 + 2.0 * dc.c) * (m_bar + 2.0 * params.sigma_r);
  dc.xi1 = 0.5 * (dc.d6 + std::sqrt(dc.d6 * dc.d6 + 8.0 * dc.d1 * dc.c / 3.0));

  auto [bmax, bmin] = b_extremes(params.alpha, params.beta, params.rho,
                                 lambda_min_nonzero);
  dc.lambda_max_b = bmax;
  dc.lambda_min_b = bmin;
  dc.kappa = bmax / (params.rho * lambda_min_nonzero);
  fill_conditions(dc, params);
  return dc;
}

NoiseSpec NoiseSpec::spherical(double sigma_e, double sigma_r, std::uint64_t seed) {
  if (sigma_e < 0 || sigma_r < 0)
    throw std::invalid_argument("NoiseSpec: sigma must be >= 0");
  NoiseSpec spec;
  spec.sigma_e = sigma_e;
  spec.sigma_r = sigma_r;
  spec.mode = NoiseMode::spherical_capped;
  spec.seed = seed;
  return spec;
}

NetworkState initial_state(int n_nodes, int dim) {
  NetworkState s;
  const Eigen::Index size = static_cast<Eigen::Index>(n_nodes) * dim;
  s.x = Eigen::VectorXd::Zero(size);
  s.x_prev = Eigen::VectorXd::Zero(size);
  s.d_hat = Eigen::VectorXd::Zero(size);
  s.d = Eigen::VectorXd::Zero(size);
  s.e = Eigen::VectorXd::Zero(size);
  s.r = Eigen::VectorXd::Zero(size);
  return s;
}

std::string NetworkState::to_csv(int n_nodes) const {
  const int dim = static_cast<int>(x.size()) / n_nodes;
  std::ostringstream out;
  out.precision(17);
  out << "node,field,coord,value\n";
  auto dump = [&](const char* name, const Eigen::VectorXd& v) {
    for (int i = 0; i < n_nodes; ++i)
      for (int t = 0; t < dim; ++t)
        out << i << ',' << name << ',' << t << ','
            << v[static_cast<Eigen::Index>(i) * dim + t] << '\n';
  };
  dump("x", x);
  dump("x_prev", x_prev);
  dump("d_hat", d_hat);
  dump("d", d);
  dump("e", e);
  dump("r", r);
  return out.str();
}

DivergenceError::DivergenceError(int node_, std::int64_t k_)
    : std::runtime_error("divergence: non-finite state at node " +
                         std::to_string(node_) + ", iteration " +
                         std::to_string(k_)),
      node(node_),
      k(k_) {}

Eigen::VectorXd generate_perturbation(const Eigen::VectorXd& delta_x,
                                      const Eigen::VectorXd& /*prev*/,
                                      double sigma, SubstreamRng& rng) {
  if (sigma < 0) throw std::invalid_argument("generate_perturbation: sigma must be >= 0");
  const double cap = sigma * delta_x.norm();
  if (cap == 0.0) return Eigen::VectorXd::Zero(delta_x.size());

  const Eigen::VectorXd u = rng.unit_sphere(static_cast<int>(delta_x.size()));
  const double v = rng.uniform01();
  Eigen::VectorXd out = cap * v * u;
  // the norm bound must hold exactly, not just up to rounding
  double norm = out.norm();
  for (int i = 0; norm > cap && i < 8; ++i) {
    out *= cap / norm * (1.0 - 1e-15);
    norm = out.norm();
  }
  return out;
}

Assumption4Report check_assumption4(const std::vector<NoiseTriple>& trace,
                                    int n_nodes, double sigma_e,
                                    double sigma_r) {
  if (trace.size() < 2)
    throw std::invalid_argument("check_assumption4: trace length must be >= 2");
  Assumption4Report rep;
  const int dim = static_cast<int>(trace[0].x.size()) / n_nodes;

  auto ratio = [](double lhs, double rhs) {
    if (rhs > 0) return lhs / rhs;
    return lhs > 0 ? std::numeric_limits<double>::infinity() : 0.0;
  };

  for (std::size_t k = 1; k < trace.size(); ++k) {
    for (int i = 0; i < n_nodes; ++i) {
      const Eigen::Index off = static_cast<Eigen::Index>(i) * dim;
      const double dx2 =
          (trace[k].x.segment(off, dim) - trace[k - 1].x.segment(off, dim))
              .squaredNorm();
      const double bound_e = sigma_e * sigma_e * dx2;
      const double bound_r = sigma_r * sigma_r * dx2;

      const double ne = trace[k].e.segment(off, dim).squaredNorm();
      const double de =
          (trace[k].e.segment(off, dim) - trace[k - 1].e.segment(off, dim))
              .squaredNorm();
      const double nr = trace[k].r.segment(off, dim).squaredNorm();
      const double dr =
          (trace[k].r.segment(off, dim) - trace[k - 1].r.segment(off, dim))
              .squaredNorm();

      if (ne > bound_e) ++rep.violations_norm_e;
      if (de > bound_e) ++rep.violations_diff_e;
      if (nr > bound_r) ++rep.violations_norm_r;
      if (dr > bound_r) ++rep.violations_diff_r;
      rep.max_ratio_norm_e = std::max(rep.max_ratio_norm_e, ratio(ne, bound_e));
      rep.max_ratio_diff_e = std::max(rep.max_ratio_diff_e, ratio(de, bound_e));
      rep.max_ratio_norm_r = std::max(rep.max_ratio_norm_r, ratio(nr, bound_r));
      rep.max_ratio_diff_r = std::max(rep.max_ratio_diff_r, ratio(dr, bound_r));
      ++rep.transitions;
    }
  }
  return rep;
}

void rpp_step(NetworkState& state, const AlgoParams& params,
              const WeightMatrix& p, const ProblemInstance& problem,
              const NoiseSpec& noise, const Eigen::VectorXd* grad_hint) {
  if (params.variant != Variant::rpp)
    throw std::invalid_argument("rpp_step: params.variant must be rpp");
  const int n = p.n();
  const int dim = problem.dim;

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
  const Eigen::VectorXd py = apply_weight(p, y, dim);
  state.comm_rounds += 1;  // exchange of y

  Eigen::VectorXd z;
  if (grad_hint)
    z = *grad_hint + params.rho * py + r;
  else
    z = problem.gradient_stacked(state.x) + params.rho * py + r;

  const Eigen::VectorXd pz = apply_weight(p, z, dim);
  state.comm_rounds += 1;  // exchange of z

  Eigen::VectorXd x_new = state.x - params.alpha * z + params.beta * pz;
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

void centralized_step(NetworkState& state, const AlgoParams& params,
                      const WeightMatrix& p, const ProblemInstance& problem,
                      const Eigen::VectorXd& e_fixed,
                      const Eigen::VectorXd& r_fixed) {
  const int n = p.n();
  const int dim = problem.dim;
  const Eigen::Index size = static_cast<Eigen::Index>(n) * dim;
  if (e_fixed.size() != size || r_fixed.size() != size)
    throw std::invalid_argument("centralized_step: noise dimension mismatch");

  Eigen::MatrixXd l_full = Eigen::MatrixXd::Zero(size, size);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      l_full.block(static_cast<Eigen::Index>(i) * dim,
                   static_cast<Eigen::Index>(j) * dim, dim, dim) =
          p.entries()(i, j) * Eigen::MatrixXd::Identity(dim, dim);
  const Eigen::MatrixXd g_full =
      params.alpha * Eigen::MatrixXd::Identity(size, size) - params.beta * l_full;

  const Eigen::VectorXd grad = problem.gradient_stacked(state.x);
  Eigen::VectorXd x_new =
      state.x -
      g_full * (grad + r_fixed + params.rho * (l_full * (state.x + state.d + e_fixed)));
  for (int i = 0; i < n; ++i)
    if (!x_new.segment(static_cast<Eigen::Index>(i) * dim, dim).allFinite())
      throw DivergenceError(i, state.k);

  state.x_prev = state.x;
  state.x = std::move(x_new);
  state.d_hat += state.x;
  state.d = state.d_hat + params.eta * state.x;
  state.e = e_fixed;
  state.r = r_fixed;
  state.k += 1;
  state.comm_rounds += 2;  // mirrors the distributed accounting
}

void dgd_baseline_step(NetworkState& state, double stepsize,
                       const WeightMatrix& p, const ProblemInstance& problem,
                       const Eigen::VectorXd* grad_hint) {
  const int n = p.n();
  const int dim = problem.dim;
  const Eigen::VectorXd px = apply_weight(p, state.x, dim);
  state.comm_rounds += 1;
  const Eigen::VectorXd grad =
      grad_hint ? *grad_hint : problem.gradient_stacked(state.x);
  Eigen::VectorXd x_new = state.x - px - stepsize * grad;  // w = I - P
  for (int i = 0; i < n; ++i)
    if (!x_new.segment(static_cast<Eigen::Index>(i) * dim, dim).allFinite())
      throw DivergenceError(i, state.k);
  state.x_prev = state.x;
  state.x = std::move(x_new);
  state.k += 1;
}

double augmented_lagrangian(const NetworkState& state, const AlgoParams& params,
                            const WeightMatrix& p, const ProblemInstance& problem) {
  const int n = p.n();
  const int dim = problem.dim;
  MapMat x(state.x.data(), dim, n);
  MapMat d(state.d.data(), dim, n);
  // L-forms in the eigenbasis; the null mode carries the unbounded consensus
  // component of d and must drop out exactly.
  const Eigen::MatrixXd xq = x * p.eigenvectors();
  const Eigen::MatrixXd dq = d * p.eigenvectors();
  double cross = 0, quad = 0;
  for (int i = 0; i < n; ++i) {
    const double lam = p.eigenvalues()[i];
    if (lam <= 1e-9) continue;  // the certified null mode
    cross += lam * xq.col(i).dot(dq.col(i));
    quad += lam * xq.col(i).squaredNorm();
  }
  return problem.value_sum(state.x) + params.rho * cross + 0.5 * params.rho * quad;
}

PotentialEvaluator::PotentialEvaluator(const AlgoParams& params,
                                       const WeightMatrix& p,
                                       const ProblemInstance& problem)
    : problem_(&problem), params_(params), dim_(problem.dim) {
  if (!params.derived)
    throw std::invalid_argument("potential: params lack derived constants");
  eigvecs_ = p.eigenvectors();
  eigvals_ = p.eigenvalues();
  b_ = proximal_matrix(p, params);
  b_solver_.compute(b_);
  kappa_ = params.derived->kappa;
}

double PotentialEvaluator::operator()(const NetworkState& state,
                                      const double* f_hint) const {
  const auto& dc = *params_.derived;
  const int n = static_cast<int>(eigvecs_.rows());
  MapMat x(state.x.data(), dim_, n);
  MapMat xp(state.x_prev.data(), dim_, n);
  MapMat d(state.d.data(), dim_, n);

  // L-forms in the eigenbasis; the null mode carries the unbounded consensus
  // component of d and must drop out exactly.
  const Eigen::MatrixXd xq = x * eigvecs_;
  const Eigen::MatrixXd dq = d * eigvecs_;
  const Eigen::MatrixXd dx = x - xp;
  const Eigen::MatrixXd dxq = dx * eigvecs_;
  double cross_l = 0, x_l = 0, quad_l = 0;
  for (int i = 0; i < n; ++i) {
    const double lam = eigvals_[i];
    if (lam <= 1e-9) continue;
    cross_l += lam * xq.col(i).dot(dq.col(i));
    x_l += lam * xq.col(i).squaredNorm();
    quad_l += lam * dxq.col(i).squaredNorm();
  }

  const double al = (f_hint ? *f_hint : problem_->value_sum(state.x)) +
                    params_.rho * cross_l + 0.5 * params_.rho * x_l;
  const double quad_b = (dx * b_).cwiseProduct(dx).sum();
  const Eigen::MatrixXd binv_dx =
      b_solver_.solve(dx.transpose()).transpose();  // symmetric solve
  const double quad_binv = binv_dx.cwiseProduct(dx).sum();
  const double quad_i = dx.squaredNorm();

  const double eta = params_.eta;
  return al +
         2.5 * (2.0 + eta) * dc.d1 * kappa_ * quad_binv +
         0.5 * (params_.sigma_r * quad_i + params_.sigma_e * params_.rho * quad_l) +
         0.5 * dc.c *
             (params_.rho * x_l + quad_b + (dc.m_bar + params_.sigma_r) * quad_i +
              (std::abs(eta) + params_.sigma_e) * params_.rho * quad_l) -
         0.5 * eta * params_.rho * x_l;
}

double potential(const NetworkState& state, const AlgoParams& params,
                 const WeightMatrix& p, const ProblemInstance& problem) {
  return PotentialEvaluator(params, p, problem)(state);
}

}  // namespace rpp
