#include "rpp/verify.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "rpp/chebyshev.hpp"
#include "rpp/engine.hpp"
#include "rpp/graph.hpp"
#include "rpp/metrics.hpp"
#include "rpp/objectives.hpp"

namespace rpp {

namespace {

std::string fmt(double v) {
  std::ostringstream out;
  out.precision(6);
  out << v;
  return out.str();
}

Eigen::MatrixXd kron_identity(const Eigen::MatrixXd& m, int dim) {
  const Eigen::Index n = m.rows();
  Eigen::MatrixXd full = Eigen::MatrixXd::Zero(n * dim, n * dim);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      full.block(i * dim, j * dim, dim, dim) =
          m(i, j) * Eigen::MatrixXd::Identity(dim, dim);
  return full;
}

void check_equivalence(std::vector<CheckResult>& out) {
  const Graph g = generate_geometric_graph(5, 0.6, 42);
  const WeightMatrix p = WeightMatrix::from_graph(g, WeightScheme::normalized_laplacian);
  const int dim = 3;

  for (const char* prob_name : {"quadratic", "logistic"}) {
    ProblemInstance problem;
    if (std::string(prob_name) == "quadratic") {
      problem = quadratic_problem(5, dim, 9);
    } else {
      problem = logistic_nonconvex_problem(
          generate_classification_data(5, 20, dim, 9), 0.001, 1.0);
    }
    for (double sigma : {0.0, 0.3}) {
      AlgoParams params;
      params.variant = Variant::rpp;
      params.rho = 1.0;
      params.alpha = 0.3;
      params.beta = 0.15;
      params.eta = 0.1;
      params.sigma_e = sigma;
      params.sigma_r = sigma;
      const NoiseSpec noise = sigma > 0 ? NoiseSpec::spherical(sigma, sigma, 77)
                                        : NoiseSpec::disabled();
      NetworkState dist = initial_state(5, dim);
      NetworkState cent = initial_state(5, dim);
      double worst = 0;
      for (int k = 0; k < 100; ++k) {
        rpp_step(dist, params, p, problem, noise);
        centralized_step(cent, params, p, problem, dist.e, dist.r);
        const double scale = 1.0 + dist.x.norm() + dist.d_hat.norm();
        worst = std::max(worst, (dist.x - cent.x).norm() / scale);
        worst = std::max(worst, (dist.d_hat - cent.d_hat).norm() / scale);
        worst = std::max(worst, (dist.d - cent.d).norm() / scale);
      }
      out.push_back({std::string("equivalence.rpp_vs_centralized.") + prob_name +
                         ".sigma" + fmt(sigma),
                     worst <= 1e-10, "max relative deviation " + fmt(worst)});
    }
  }

  // rpp_ca against the dense normalised polynomial operator
  {
    const Graph g2 = generate_geometric_graph(8, 0.5, 3);
    const WeightMatrix p2 =
        WeightMatrix::from_graph(g2, WeightScheme::normalized_laplacian);
    const ChebOperator op = make_cheb_operator(p2);
    const ProblemInstance problem = quadratic_problem(8, dim, 5);
    AlgoParams params;
    params.variant = Variant::rpp_ca;
    params.rho = 1.0;
    params.alpha = 0.3;
    params.beta = 0.15;
    params.eta = 0.0;
    params.sigma_e = params.sigma_r = 0.2;
    params.tau = op.tau;
    const NoiseSpec noise = NoiseSpec::spherical(0.2, 0.2, 5);
    NetworkState dist = initial_state(8, dim);
    NetworkState cent = initial_state(8, dim);
    double worst = 0;
    for (int k = 0; k < 60; ++k) {
      rpp_ca_step(dist, params, op, problem, noise);
      centralized_step(cent, params, op.effective, problem, dist.e, dist.r);
      const double scale = 1.0 + dist.x.norm() + dist.d_hat.norm();
      worst = std::max(worst, (dist.x - cent.x).norm() / scale);
    }
    out.push_back({"equivalence.rpp_ca_vs_centralized", worst <= 1e-9,
                   "max relative deviation " + fmt(worst)});
  }

  // adding a consensus vector to d_hat^0 leaves the x-trajectory unchanged
  {
    const ProblemInstance problem = quadratic_problem(5, dim, 13);
    AlgoParams params;
    params.variant = Variant::rpp;
    params.rho = 1.5;
    params.alpha = 0.25;
    params.beta = 0.125;
    params.eta = 0.2;
    NetworkState a = initial_state(5, dim);
    NetworkState b = initial_state(5, dim);
    Eigen::VectorXd shift(dim);
    shift << 0.7, -1.3, 0.4;
    for (int i = 0; i < 5; ++i)
      b.d_hat.segment(static_cast<Eigen::Index>(i) * dim, dim) = shift;
    b.d = b.d_hat;
    double worst = 0;
    for (int k = 0; k < 50; ++k) {
      rpp_step(a, params, p, problem, NoiseSpec::disabled());
      rpp_step(b, params, p, problem, NoiseSpec::disabled());
      worst = std::max(worst, (a.x - b.x).norm() / (1.0 + a.x.norm()));
    }
    out.push_back({"equivalence.dual_shift_invariance", worst <= 1e-12,
                   "max relative deviation " + fmt(worst)});
  }

  // first-order-condition residual after every step
  {
    const ProblemInstance problem = logistic_nonconvex_problem(
        generate_classification_data(5, 15, dim, 21), 0.001, 1.0);
    AlgoParams params;
    params.variant = Variant::rpp;
    params.rho = 1.0;
    params.alpha = 0.3;
    params.beta = 0.15;
    params.eta = -0.2;
    params.sigma_e = params.sigma_r = 0.25;
    const NoiseSpec noise = NoiseSpec::spherical(0.25, 0.25, 11);
    const Eigen::MatrixXd l_full = kron_identity(p.entries(), dim);
    const Eigen::MatrixXd b_full =
        (params.alpha * Eigen::MatrixXd::Identity(l_full.rows(), l_full.cols()) -
         params.beta * l_full)
            .inverse() -
        params.rho * l_full;
    NetworkState s = initial_state(5, dim);
    double worst = 0;
    for (int k = 0; k < 60; ++k) {
      const Eigen::VectorXd x_k = s.x;
      const Eigen::VectorXd grad_k = problem.gradient_stacked(x_k);
      rpp_step(s, params, p, problem, noise);
      const Eigen::VectorXd residual =
          grad_k + s.r + params.rho * (l_full * (s.d_hat + params.eta * x_k + s.e)) +
          b_full * (s.x - x_k);
      worst = std::max(worst, residual.norm() / (1.0 + grad_k.norm()));
    }
    out.push_back({"equivalence.first_order_condition_residual", worst <= 1e-8,
                   "max scaled residual " + fmt(worst)});
  }
}

void check_lyapunov(std::vector<CheckResult>& out) {
  const Graph g = generate_geometric_graph(10, 0.5, 3);
  const WeightMatrix p = WeightMatrix::from_graph(g, WeightScheme::normalized_laplacian);
  const double lmin = p.spectral().lambda_min_nonzero;

  for (const char* prob_name : {"quadratic", "logistic"}) {
    ProblemInstance problem;
    if (std::string(prob_name) == "quadratic") {
      problem = quadratic_problem(10, 5, 11);
    } else {
      problem = logistic_nonconvex_problem(
          generate_classification_data(10, 50, 5, 42), 0.001, 1.0);
    }
    const double m_bar = global_smoothness(problem);

    for (const auto& [sigma, eta] : std::vector<std::pair<double, double>>{
             {0.0, 0.0}, {0.0, 0.2}, {0.0, -0.2}, {0.2, 0.0}}) {
      const AlgoParams params =
          select_parameters(m_bar, lmin, eta, sigma, sigma, 2.0);
      const NoiseSpec noise = sigma > 0 ? NoiseSpec::spherical(sigma, sigma, 5)
                                        : NoiseSpec::disabled();
      const PotentialEvaluator pot(params, p, problem);
      NetworkState s = initial_state(10, 5);
      double prev = 0;
      double worst_increase = -std::numeric_limits<double>::infinity();
      double min_pot = std::numeric_limits<double>::infinity();
      Eigen::VectorXd x1;
      for (int k = 0; k < 400; ++k) {
        rpp_step(s, params, p, problem, noise);
        const double cur = pot(s);
        if (k >= 1)
          worst_increase = std::max(worst_increase,
                                    (cur - prev) / (1.0 + std::abs(prev)));
        min_pot = std::min(min_pot, cur);
        prev = cur;
        if (k == 0) x1 = s.x;
      }
      const std::string tag = std::string(prob_name) + ".sigma" + fmt(sigma) +
                              ".eta" + fmt(eta);
      out.push_back({"lyapunov.decrease." + tag, worst_increase <= 1e-9,
                     "worst relative increase " + fmt(worst_increase)});
      out.push_back({"lyapunov.lower_bound." + tag,
                     min_pot >= problem.lower_bound - 1e-9,
                     "min potential " + fmt(min_pot) + " vs f* " +
                         fmt(problem.lower_bound)});
      // P^1 against its closed-form initialisation bound
      NetworkState first = initial_state(10, 5);
      rpp_step(first, params, p, problem, noise);
      const double p1 = pot(first);
      const auto& dc = *params.derived;
      const double grad0_sq =
          problem.gradient_stacked(Eigen::VectorXd::Zero(50)).squaredNorm();
      const double bound = problem.value_sum(first.x) +
                           (2.0 + dc.c) /
                               ((1.0 + 2.0 * dc.c) * (m_bar + 2.0 * params.sigma_r)) *
                               grad0_sq;
      out.push_back({"lyapunov.p1_bound." + tag, p1 <= bound * (1.0 + 1e-9),
                     "P^1 " + fmt(p1) + " <= " + fmt(bound)});
    }
  }
}

void check_chebyshev(std::vector<CheckResult>& out) {
  // CACC output against dense polynomial evaluation, 100 random pairs
  {
    double worst = 0;
    double worst_consensus = 0;
    SubstreamRng rng(substream_key(2024, 0, 0, 5));
    for (int trial = 0; trial < 100; ++trial) {
      const int n = 4 + static_cast<int>(rng.next_u64() % 26);
      const Graph g = generate_geometric_graph(n, 0.55, 100 + trial);
      const WeightMatrix p =
          WeightMatrix::from_graph(g, WeightScheme::normalized_laplacian);
      const ChebOperator op = make_cheb_operator(p);
      const int dim = 3;
      Eigen::VectorXd s(static_cast<Eigen::Index>(n) * dim);
      for (Eigen::Index i = 0; i < s.size(); ++i) s[i] = rng.gaussian();
      const auto [got, rounds] = cacc(s, op, dim);
      const Eigen::MatrixXd poly_full = kron_identity(
          (op.effective.entries() * op.lambda_max_poly).eval(), dim);
      const Eigen::VectorXd want = poly_full * s;
      worst = std::max(worst, (got - want).norm() / std::max(want.norm(), 1e-300));
      const Eigen::VectorXd consensus =
          Eigen::VectorXd::Ones(n * dim);
      worst_consensus =
          std::max(worst_consensus, cacc(consensus, op, dim).first.norm());
    }
    out.push_back({"chebyshev.cacc_vs_dense", worst <= 1e-8,
                   "max relative error " + fmt(worst)});
    out.push_back({"chebyshev.consensus_annihilation", worst_consensus <= 1e-12,
                   "max norm " + fmt(worst_consensus)});
  }

  // b^tau against the cosh closed form
  {
    double worst = 0;
    for (int seed = 0; seed < 10; ++seed) {
      const Graph g = generate_geometric_graph(30, 0.35, 500 + seed);
      const WeightMatrix p =
          WeightMatrix::from_graph(g, WeightScheme::normalized_laplacian);
      const ChebOperator op = make_cheb_operator(p);
      if (op.degenerate) continue;
      const double closed = std::cosh(op.tau * std::acosh(op.c));
      worst = std::max(worst, std::abs(op.b_final - closed) / closed);
    }
    out.push_back({"chebyshev.b_tau_closed_form", worst <= 1e-10,
                   "max relative error " + fmt(worst)});
  }

  // Eigengap certificate on 20 random geometric graphs at the paper scale
  {
    bool all_pass = true;
    double worst_kl = 0;
    for (int i = 0; i < 20; ++i) {
      const Graph g = generate_geometric_graph(50, 0.3, 100 + 17 * i);
      const WeightMatrix p =
          WeightMatrix::from_graph(g, WeightScheme::normalized_laplacian);
      const auto cert = verify_eigengap_bound(make_cheb_operator(p));
      all_pass = all_pass && cert.pass;
      worst_kl = std::max(worst_kl, cert.kappa_l);
    }
    out.push_back({"chebyshev.eigengap_certificate", all_pass && worst_kl <= 4.6832,
                   "max kappa_L " + fmt(worst_kl) + " bound 4.6832"});
  }

  // communication accounting: 2 tau per rpp_ca iteration
  {
    const Graph g = generate_geometric_graph(12, 0.4, 8);
    const WeightMatrix p =
        WeightMatrix::from_graph(g, WeightScheme::normalized_laplacian);
    const ChebOperator op = make_cheb_operator(p);
    const ProblemInstance problem = quadratic_problem(12, 4, 2);
    AlgoParams params;
    params.variant = Variant::rpp_ca;
    params.rho = 1.0;
    params.alpha = 0.2;
    params.beta = 0.1;
    params.tau = op.tau;
    NetworkState s = initial_state(12, 4);
    for (int k = 0; k < 7; ++k)
      rpp_ca_step(s, params, op, problem, NoiseSpec::disabled());
    const bool ok = s.comm_rounds == 7 * 2 * op.tau;
    out.push_back({"chebyshev.comm_accounting", ok,
                   "rounds " + std::to_string(s.comm_rounds) + " for 7 iterations, tau " +
                       std::to_string(op.tau)});
  }
}

void check_gradients(std::vector<CheckResult>& out) {
  const int dim = 6;
  const ProblemInstance logistic = logistic_nonconvex_problem(
      generate_classification_data(8, 30, dim, 7), 0.001, 1.0);
  const ProblemInstance quad = quadratic_problem(8, dim, 17);

  for (const auto& [name, problem] :
       std::vector<std::pair<std::string, const ProblemInstance*>>{
           {"logistic", &logistic}, {"quadratic", &quad}}) {
    SubstreamRng rng(substream_key(99, 0, 0, 6));
    double worst_fd = 0;
    for (int i = 0; i < problem->n_nodes; ++i) {
      for (int pt = 0; pt < 10; ++pt) {
        Eigen::VectorXd x(dim);
        for (int t = 0; t < dim; ++t) x[t] = 2.0 * rng.gaussian();
        const double h = 1e-6 * (1.0 + x.norm());
        const Eigen::VectorXd g = problem->locals[i].gradient(x);
        Eigen::VectorXd fd(dim);
        for (int t = 0; t < dim; ++t) {
          Eigen::VectorXd xp = x, xm = x;
          xp[t] += h;
          xm[t] -= h;
          fd[t] = (problem->locals[i].value(xp) - problem->locals[i].value(xm)) /
                  (2.0 * h);
        }
        worst_fd = std::max(worst_fd, (g - fd).norm() / std::max(g.norm(), 1e-8));
      }
    }
    out.push_back({"gradients.finite_difference." + name, worst_fd <= 1e-5,
                   "max relative error " + fmt(worst_fd)});

    double worst_lip = 0;
    for (int i = 0; i < problem->n_nodes; ++i) {
      for (int pair = 0; pair < 100; ++pair) {
        Eigen::VectorXd x(dim), y(dim);
        for (int t = 0; t < dim; ++t) {
          x[t] = 3.0 * rng.gaussian();
          y[t] = 3.0 * rng.gaussian();
        }
        const double lhs =
            (problem->locals[i].gradient(x) - problem->locals[i].gradient(y)).norm();
        const double rhs = problem->locals[i].smoothness * (x - y).norm();
        if (rhs > 0) worst_lip = std::max(worst_lip, lhs / rhs);
      }
    }
    out.push_back({"gradients.lipschitz." + name, worst_lip <= 1.0 + 1e-9,
                   "max ratio " + fmt(worst_lip)});
  }

  // nonnegative logistic values support lower_bound = 0
  {
    SubstreamRng rng(substream_key(5, 1, 0, 6));
    double min_val = std::numeric_limits<double>::infinity();
    for (int trial = 0; trial < 200; ++trial) {
      const int i = static_cast<int>(rng.next_u64() % logistic.n_nodes);
      Eigen::VectorXd x(dim);
      for (int t = 0; t < dim; ++t) x[t] = 5.0 * rng.gaussian();
      min_val = std::min(min_val, logistic.locals[i].value(x));
    }
    out.push_back({"gradients.logistic_nonnegative", min_val >= 0,
                   "min sampled value " + fmt(min_val)});
  }
}

}  // namespace

std::vector<CheckResult> run_verify_suite(const std::string& suite) {
  std::vector<CheckResult> out;
  bool known = false;
  if (suite == "equivalence" || suite == "all") {
    check_equivalence(out);
    known = true;
  }
  if (suite == "lyapunov" || suite == "all") {
    check_lyapunov(out);
    known = true;
  }
  if (suite == "chebyshev" || suite == "all") {
    check_chebyshev(out);
    known = true;
  }
  if (suite == "gradients" || suite == "all") {
    check_gradients(out);
    known = true;
  }
  if (!known)
    throw std::invalid_argument(
        "verify: unknown suite \"" + suite +
        "\" (expected all | equivalence | lyapunov | chebyshev | gradients)");
  return out;
}

}  // namespace rpp
