#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace rpp {

/// Per-node objective oracle: value, gradient and a smoothness constant M_i
/// with ||grad f_i(x) - grad f_i(y)|| <= M_i ||x - y||. The fused oracle is
/// optional; when present it must agree with the separate ones and exists so
/// hot loops evaluate the shared transcendentals once.
struct LocalObjective {
  std::function<double(const Eigen::VectorXd&)> value;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
  std::function<std::pair<double, Eigen::VectorXd>(const Eigen::VectorXd&)>
      value_and_gradient;
  double smoothness = 0;
};

struct ProblemInstance {
  int n_nodes = 0;
  int dim = 0;
  std::vector<LocalObjective> locals;
  /// Known lower bound f* on the objective (-inf sentinel when unknown).
  double lower_bound = -std::numeric_limits<double>::infinity();

  /// f~(x) = sum_i f_i(x_i) on a stacked vector.
  double value_sum(const Eigen::VectorXd& stacked) const;
  /// Stacked gradient (grad f_1(x_1), ..., grad f_N(x_N)).
  Eigen::VectorXd gradient_stacked(const Eigen::VectorXd& stacked) const;
  /// sum_i grad f_i(x_i), a dim-vector.
  Eigen::VectorXd gradient_total(const Eigen::VectorXd& stacked) const;
  /// f~(x) and the stacked gradient in one pass.
  std::pair<double, Eigen::VectorXd> value_and_gradient_stacked(
      const Eigen::VectorXd& stacked) const;
};

struct Dataset {
  int n_nodes = 0;
  int m = 0;  // samples per node
  int dim = 0;
  std::vector<Eigen::MatrixXd> features;  // per node: m x dim
  std::vector<Eigen::VectorXd> labels;    // per node: m entries in {-1,+1}
  std::uint64_t seed = 0;

  /// CSV rows "node,label,z_1,...,z_d".
  std::string to_csv() const;
  static Dataset from_csv(const std::string& text);
};

/// Synthetic binary classification data: features are standard normal, a
/// hidden unit-sphere separator plants the labels, with label noise
/// y = sign(z.w* + 0.1 g), sign(0) -> +1.
Dataset generate_classification_data(int n_nodes, int m, int dim,
                                     std::uint64_t seed);

/// f_i(x) = (1/m) sum_s log(1+exp(-y_is x.z_is))
///          + sum_t lambda mu [x]_t^2 / (1 + mu [x]_t^2)
ProblemInstance logistic_nonconvex_problem(const Dataset& data, double lambda,
                                           double mu);

/// f_i(x) = 0.5 ||x - a_i||^2 with random a_i; M_i = 1.
ProblemInstance quadratic_problem(int n_nodes, int dim, std::uint64_t seed);

/// max_i M_i
double global_smoothness(const ProblemInstance& p);

}  // namespace rpp
