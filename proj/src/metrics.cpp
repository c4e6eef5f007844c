#include "rpp/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace rpp {

namespace {

double sum_gradient_sqnorm(const NetworkState& state,
                           const ProblemInstance& problem,
                           const Eigen::VectorXd* grad_hint) {
  if (grad_hint) {
    Eigen::VectorXd total = Eigen::VectorXd::Zero(problem.dim);
    for (int i = 0; i < problem.n_nodes; ++i)
      total += grad_hint->segment(static_cast<Eigen::Index>(i) * problem.dim,
                                  problem.dim);
    return total.squaredNorm();
  }
  return problem.gradient_total(state.x).squaredNorm();
}

double weighted_quad(const NetworkState& state, const WeightMatrix& w, int dim) {
  Eigen::Map<const Eigen::MatrixXd> x(state.x.data(), dim, w.n());
  return (x * w.entries()).cwiseProduct(x).sum();
}

std::string format17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

double stationarity_gap(const NetworkState& state, const AlgoParams& params,
                        const WeightMatrix& l_eff, const ProblemInstance& problem,
                        const Eigen::VectorXd* grad_hint) {
  return sum_gradient_sqnorm(state, problem, grad_hint) / problem.n_nodes +
         params.rho * weighted_quad(state, l_eff, problem.dim);
}

double optimality_gap(const NetworkState& state, const ProblemInstance& problem,
                      const WeightMatrix& h, const Eigen::VectorXd* grad_hint) {
  return sum_gradient_sqnorm(state, problem, grad_hint) +
         weighted_quad(state, h, problem.dim);
}

double consensus_error(const NetworkState& state, int n_nodes) {
  const int dim = static_cast<int>(state.x.size()) / n_nodes;
  Eigen::Map<const Eigen::MatrixXd> x(state.x.data(), dim, n_nodes);
  const Eigen::VectorXd mean = x.rowwise().mean();
  return (x.colwise() - mean).norm();
}

CertificateReport rate_certificate(const IterationTrace& trace,
                                       const AlgoParams& params,
                                       const ProblemInstance& problem,
                                       const Eigen::VectorXd& x1) {
  CertificateReport rep;
  if (!std::isfinite(problem.lower_bound)) return rep;  // unavailable
  if (!params.derived)
    throw std::invalid_argument("rate_certificate: params lack derived constants");
  rep.available = true;

  const auto& dc = *params.derived;
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(x1.size());
  const double grad0_sq = problem.gradient_stacked(zero).squaredNorm();
  rep.c1 = problem.value_sum(x1) - problem.lower_bound +
           2.0 / dc.m_bar * grad0_sq;
  const double eta_plus = std::max(params.eta, 0.0);
  rep.c2 = 4.0 / params.alpha + 8.0 +
           (8.0 + (5.0 + 18.0 / dc.c) * 12.0 / dc.c) / ((2.0 + eta_plus) * dc.c);

  double running = 0;
  std::int64_t t = 0;
  rep.min_margin = std::numeric_limits<double>::infinity();
  for (const auto& row : trace.rows) {
    if (row.k < 1) continue;
    running += row.stationarity_gap;
    ++t;
    const double margin = rep.c1 * rep.c2 / t - running / t;
    rep.margins.push_back(margin);
    rep.min_margin = std::min(rep.min_margin, margin);
  }
  rep.pass = !rep.margins.empty() && rep.min_margin >= 0;
  return rep;
}

void write_trace(const IterationTrace& trace, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_trace: cannot open " + path.string());
  out << "k,comm_rounds,stationarity_gap,optimality_gap,consensus_err,"
         "potential,f_value,a4_violations\n";
  for (const auto& row : trace.rows) {
    out << row.k << ',' << row.comm_rounds << ',' << format17(row.stationarity_gap)
        << ',' << format17(row.optimality_gap) << ','
        << format17(row.consensus_err) << ',' << format17(row.potential) << ','
        << format17(row.f_value) << ',' << row.a4_violations << '\n';
  }
  if (!out) throw std::runtime_error("write_trace: write failed for " + path.string());
}

IterationTrace read_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_trace: cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("read_trace: empty file " + path.string());

  IterationTrace trace;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() != 8)
      throw std::runtime_error("read_trace: malformed row in " + path.string());
    TraceRow row;
    row.k = std::stoll(cells[0]);
    row.comm_rounds = std::stoll(cells[1]);
    row.stationarity_gap = std::stod(cells[2]);
    row.optimality_gap = std::stod(cells[3]);
    row.consensus_err = std::stod(cells[4]);
    row.potential = std::stod(cells[5]);
    row.f_value = std::stod(cells[6]);
    row.a4_violations = std::stoll(cells[7]);
    trace.rows.push_back(row);
  }
  return trace;
}

}  // namespace rpp
