#include "rpp/objectives.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "rpp/rng.hpp"

namespace rpp {

namespace {

// log(1 + exp(u)) without overflow
double log1pexp(double u) {
  return u > 0 ? u + std::log1p(std::exp(-u)) : std::log1p(std::exp(u));
}

double sigmoid(double u) {
  return u >= 0 ? 1.0 / (1.0 + std::exp(-u)) : std::exp(u) / (1.0 + std::exp(u));
}

}  // namespace

double ProblemInstance::value_sum(const Eigen::VectorXd& stacked) const {
  double total = 0;
  for (int i = 0; i < n_nodes; ++i)
    total += locals[i].value(stacked.segment(static_cast<Eigen::Index>(i) * dim, dim));
  return total;
}

Eigen::VectorXd ProblemInstance::gradient_stacked(const Eigen::VectorXd& stacked) const {
  Eigen::VectorXd g(stacked.size());
  for (int i = 0; i < n_nodes; ++i)
    g.segment(static_cast<Eigen::Index>(i) * dim, dim) =
        locals[i].gradient(stacked.segment(static_cast<Eigen::Index>(i) * dim, dim));
  return g;
}

Eigen::VectorXd ProblemInstance::gradient_total(const Eigen::VectorXd& stacked) const {
  Eigen::VectorXd total = Eigen::VectorXd::Zero(dim);
  for (int i = 0; i < n_nodes; ++i)
    total += locals[i].gradient(stacked.segment(static_cast<Eigen::Index>(i) * dim, dim));
  return total;
}

std::pair<double, Eigen::VectorXd> ProblemInstance::value_and_gradient_stacked(
    const Eigen::VectorXd& stacked) const {
  double total = 0;
  Eigen::VectorXd g(stacked.size());
  for (int i = 0; i < n_nodes; ++i) {
    const auto block = stacked.segment(static_cast<Eigen::Index>(i) * dim, dim);
    if (locals[i].value_and_gradient) {
      auto [v, gi] = locals[i].value_and_gradient(block);
      total += v;
      g.segment(static_cast<Eigen::Index>(i) * dim, dim) = std::move(gi);
    } else {
      total += locals[i].value(block);
      g.segment(static_cast<Eigen::Index>(i) * dim, dim) = locals[i].gradient(block);
    }
  }
  return {total, std::move(g)};
}

std::string Dataset::to_csv() const {
  std::ostringstream out;
  out.precision(17);
  for (int i = 0; i < n_nodes; ++i)
    for (int s = 0; s < m; ++s) {
      out << i << ',' << labels[i][s];
      for (int t = 0; t < dim; ++t) out << ',' << features[i](s, t);
      out << '\n';
    }
  return out.str();
}

Dataset Dataset::from_csv(const std::string& text) {
  std::vector<std::vector<std::pair<double, Eigen::VectorXd>>> per_node;
  std::istringstream in(text);
  std::string line;
  int dim = -1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    std::vector<double> vals;
    while (std::getline(ls, cell, ',')) vals.push_back(std::stod(cell));
    if (vals.size() < 3) throw std::invalid_argument("dataset csv: short row");
    if (dim < 0) dim = static_cast<int>(vals.size()) - 2;
    if (static_cast<int>(vals.size()) != dim + 2)
      throw std::invalid_argument("dataset csv: ragged row");
    const int node = static_cast<int>(vals[0]);
    if (node < 0) throw std::invalid_argument("dataset csv: bad node id");
    if (node >= static_cast<int>(per_node.size())) per_node.resize(node + 1);
    Eigen::VectorXd z(dim);
    for (int t = 0; t < dim; ++t) z[t] = vals[2 + t];
    per_node[node].emplace_back(vals[1], std::move(z));
  }
  Dataset d;
  d.n_nodes = static_cast<int>(per_node.size());
  d.dim = dim;
  d.m = d.n_nodes ? static_cast<int>(per_node[0].size()) : 0;
  for (const auto& rows : per_node) {
    if (static_cast<int>(rows.size()) != d.m)
      throw std::invalid_argument("dataset csv: nodes hold unequal sample counts");
    Eigen::MatrixXd z(d.m, dim);
    Eigen::VectorXd y(d.m);
    for (int s = 0; s < d.m; ++s) {
      y[s] = rows[s].first;
      z.row(s) = rows[s].second.transpose();
    }
    d.features.push_back(std::move(z));
    d.labels.push_back(std::move(y));
  }
  return d;
}

Dataset generate_classification_data(int n_nodes, int m, int dim,
                                     std::uint64_t seed) {
  if (n_nodes < 1 || m < 1 || dim < 1)
    throw std::invalid_argument("generate_classification_data: counts must be >= 1");
  Dataset d;
  d.n_nodes = n_nodes;
  d.m = m;
  d.dim = dim;
  d.seed = seed;

  SubstreamRng wrng(substream_key(seed, 0, 0, /*channel=*/2));
  const Eigen::VectorXd w_star = wrng.unit_sphere(dim);

  d.features.reserve(n_nodes);
  d.labels.reserve(n_nodes);
  for (int i = 0; i < n_nodes; ++i) {
    SubstreamRng rng(substream_key(seed, i, 0, /*channel=*/3));
    Eigen::MatrixXd z(m, dim);
    Eigen::VectorXd y(m);
    for (int s = 0; s < m; ++s) {
      for (int t = 0; t < dim; ++t) z(s, t) = rng.gaussian();
      const double margin = z.row(s).dot(w_star) + 0.1 * rng.gaussian();
      y[s] = margin >= 0 ? 1.0 : -1.0;  // sign(0) -> +1
    }
    d.features.push_back(std::move(z));
    d.labels.push_back(std::move(y));
  }
  return d;
}

ProblemInstance logistic_nonconvex_problem(const Dataset& data, double lambda,
                                           double mu) {
  if (lambda < 0) throw std::invalid_argument("logistic problem: lambda must be >= 0");
  if (!(mu > 0)) throw std::invalid_argument("logistic problem: mu must be > 0");

  ProblemInstance p;
  p.n_nodes = data.n_nodes;
  p.dim = data.dim;
  p.lower_bound = 0.0;  // both terms are nonnegative
  for (int i = 0; i < data.n_nodes; ++i) {
    const Eigen::MatrixXd z = data.features[i];
    const Eigen::VectorXd y = data.labels[i];
    const int m = data.m;

    LocalObjective node;
    node.value = [z, y, m, lambda, mu](const Eigen::VectorXd& x) {
      const Eigen::VectorXd u = -(y.array() * (z * x).array()).matrix();
      double loss = 0;
      for (int s = 0; s < m; ++s) loss += log1pexp(u[s]);
      loss /= m;
      for (int t = 0; t < x.size(); ++t) {
        const double xt2 = x[t] * x[t];
        const double den = 1.0 + mu * xt2;
        loss += lambda * mu * xt2 / den;
      }
      return loss;
    };
    node.gradient = [z, y, m, lambda, mu](const Eigen::VectorXd& x) {
      const Eigen::VectorXd u = -(y.array() * (z * x).array()).matrix();
      Eigen::VectorXd coeff(m);
      for (int s = 0; s < m; ++s) coeff[s] = -y[s] * sigmoid(u[s]);
      Eigen::VectorXd g = (z.transpose() * coeff) / m;
      for (int t = 0; t < x.size(); ++t) {
        const double xt2 = x[t] * x[t];
        const double den = 1.0 + mu * xt2;
        g[t] += 2.0 * lambda * mu * x[t] / (den * den);
      }
      return g;
    };
    node.value_and_gradient = [z, y, m, lambda, mu](const Eigen::VectorXd& x) {
      const Eigen::VectorXd u = -(y.array() * (z * x).array()).matrix();
      double loss = 0;
      Eigen::VectorXd coeff(m);
      for (int s = 0; s < m; ++s) {
        // one exp shared between log(1+e^u) and sigmoid(u)
        const double eu = std::exp(-std::abs(u[s]));
        loss += u[s] > 0 ? u[s] + std::log1p(eu) : std::log1p(eu);
        const double sig = u[s] >= 0 ? 1.0 / (1.0 + eu) : eu / (1.0 + eu);
        coeff[s] = -y[s] * sig;
      }
      loss /= m;
      Eigen::VectorXd g = (z.transpose() * coeff) / m;
      for (int t = 0; t < x.size(); ++t) {
        const double xt2 = x[t] * x[t];
        const double den = 1.0 + mu * xt2;
        loss += lambda * mu * xt2 / den;
        g[t] += 2.0 * lambda * mu * x[t] / (den * den);
      }
      return std::make_pair(loss, std::move(g));
    };
    // logistic Hessian <= (1/4m) sum_s z z^T, regulariser curvature <= 2 lambda mu
    node.smoothness = z.squaredNorm() / (4.0 * m) + 2.0 * lambda * mu;
    p.locals.push_back(std::move(node));
  }
  return p;
}

ProblemInstance quadratic_problem(int n_nodes, int dim, std::uint64_t seed) {
  if (n_nodes < 1 || dim < 1)
    throw std::invalid_argument("quadratic problem: counts must be >= 1");
  ProblemInstance p;
  p.n_nodes = n_nodes;
  p.dim = dim;

  std::vector<Eigen::VectorXd> centers;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
  for (int i = 0; i < n_nodes; ++i) {
    SubstreamRng rng(substream_key(seed, i, 0, /*channel=*/4));
    Eigen::VectorXd a(dim);
    for (int t = 0; t < dim; ++t) a[t] = rng.gaussian();
    mean += a;
    centers.push_back(std::move(a));
  }
  mean /= n_nodes;

  // f* = f(mean(a)) in closed form; the consensus minimiser of the sum
  double fstar = 0;
  for (const auto& a : centers) fstar += 0.5 * (mean - a).squaredNorm();
  p.lower_bound = fstar;

  for (int i = 0; i < n_nodes; ++i) {
    const Eigen::VectorXd a = centers[i];
    LocalObjective node;
    node.value = [a](const Eigen::VectorXd& x) { return 0.5 * (x - a).squaredNorm(); };
    node.gradient = [a](const Eigen::VectorXd& x) { return (x - a).eval(); };
    node.value_and_gradient = [a](const Eigen::VectorXd& x) {
      return std::make_pair(0.5 * (x - a).squaredNorm(), (x - a).eval());
    };
    node.smoothness = 1.0;
    p.locals.push_back(std::move(node));
  }
  return p;
}

double global_smoothness(const ProblemInstance& p) {
  double m_bar = 0;
  for (const auto& node : p.locals) m_bar = std::max(m_bar, node.smoothness);
  return m_bar;
}

}  // namespace rpp
