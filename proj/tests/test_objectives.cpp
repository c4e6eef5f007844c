#include <doctest.h>

#include <cmath>

#include "rpp/objectives.hpp"
#include "rpp/rng.hpp"

using namespace rpp;

TEST_CASE("classification data: shape, labels, determinism") {
  const Dataset d = generate_classification_data(50, 200, 10, 1);
  CHECK(d.n_nodes == 50);
  CHECK(d.m == 200);
  CHECK(d.dim == 10);
  for (int i = 0; i < d.n_nodes; ++i) {
    CHECK(d.features[i].allFinite());
    for (int s = 0; s < d.m; ++s)
      CHECK((d.labels[i][s] == 1.0 || d.labels[i][s] == -1.0));
  }
  const Dataset again = generate_classification_data(50, 200, 10, 1);
  for (int i = 0; i < d.n_nodes; ++i) {
    CHECK(d.features[i] == again.features[i]);
    CHECK(d.labels[i] == again.labels[i]);
  }

  const Dataset tiny = generate_classification_data(3, 1, 1, 9);
  CHECK(tiny.m == 1);
  for (int i = 0; i < 3; ++i)
    CHECK((tiny.labels[i][0] == 1.0 || tiny.labels[i][0] == -1.0));
}

TEST_CASE("dataset csv round trip") {
  const Dataset d = generate_classification_data(4, 5, 3, 2);
  const Dataset back = Dataset::from_csv(d.to_csv());
  REQUIRE(back.n_nodes == 4);
  REQUIRE(back.m == 5);
  for (int i = 0; i < 4; ++i) {
    CHECK(back.features[i] == d.features[i]);
    CHECK(back.labels[i] == d.labels[i]);
  }
}

TEST_CASE("logistic value and gradient at x = 0") {
  const Dataset d = generate_classification_data(6, 40, 5, 3);
  const ProblemInstance p = logistic_nonconvex_problem(d, 0.001, 1.0);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(5);
  for (int i = 0; i < 6; ++i) {
    // regulariser vanishes at 0: value is log 2, gradient the -(1/2m) sum y z
    CHECK(p.locals[i].value(zero) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    Eigen::VectorXd expect = Eigen::VectorXd::Zero(5);
    for (int s = 0; s < d.m; ++s)
      expect -= 0.5 / d.m * d.labels[i][s] * d.features[i].row(s).transpose();
    CHECK((p.locals[i].gradient(zero) - expect).norm() <= 1e-14);
  }
}

TEST_CASE("logistic values are nonnegative everywhere sampled") {
  const ProblemInstance p =
      logistic_nonconvex_problem(generate_classification_data(5, 30, 4, 8), 0.001, 1.0);
  CHECK(p.lower_bound == 0.0);
  SubstreamRng rng(substream_key(4, 0, 0, 6));
  for (int trial = 0; trial < 300; ++trial) {
    Eigen::VectorXd x(4);
    for (int t = 0; t < 4; ++t) x[t] = 6.0 * rng.gaussian();
    const int i = static_cast<int>(rng.next_u64() % 5);
    CHECK(p.locals[i].value(x) >= 0.0);
  }
}

TEST_CASE("finite-difference gradient agreement, 10 points per node") {
  const ProblemInstance logistic =
      logistic_nonconvex_problem(generate_classification_data(5, 25, 6, 11), 0.001, 1.0);
  const ProblemInstance quad = quadratic_problem(5, 6, 12);
  SubstreamRng rng(substream_key(10, 0, 0, 6));
  for (const ProblemInstance* p : {&logistic, &quad}) {
    for (int i = 0; i < p->n_nodes; ++i) {
      for (int pt = 0; pt < 10; ++pt) {
        Eigen::VectorXd x(6);
        for (int t = 0; t < 6; ++t) x[t] = 2.0 * rng.gaussian();
        const double h = 1e-6 * (1.0 + x.norm());
        const Eigen::VectorXd g = p->locals[i].gradient(x);
        Eigen::VectorXd fd(6);
        for (int t = 0; t < 6; ++t) {
          Eigen::VectorXd xp = x, xm = x;
          xp[t] += h;
          xm[t] -= h;
          fd[t] = (p->locals[i].value(xp) - p->locals[i].value(xm)) / (2.0 * h);
        }
        CHECK((g - fd).norm() <= 1e-5 * std::max(g.norm(), 1e-8));
      }
    }
  }
}

TEST_CASE("smoothness constants bound gradient differences, 100 pairs per node") {
  const ProblemInstance logistic =
      logistic_nonconvex_problem(generate_classification_data(4, 30, 5, 13), 0.001, 1.0);
  const ProblemInstance quad = quadratic_problem(4, 5, 14);
  SubstreamRng rng(substream_key(20, 0, 0, 6));
  for (const ProblemInstance* p : {&logistic, &quad}) {
    for (int i = 0; i < p->n_nodes; ++i) {
      for (int pair = 0; pair < 100; ++pair) {
        Eigen::VectorXd x(5), y(5);
        for (int t = 0; t < 5; ++t) {
          x[t] = 3.0 * rng.gaussian();
          y[t] = 3.0 * rng.gaussian();
        }
        const double lhs = (p->locals[i].gradient(x) - p->locals[i].gradient(y)).norm();
        CHECK(lhs <= p->locals[i].smoothness * (x - y).norm() * (1.0 + 1e-9));
      }
    }
  }
}

TEST_CASE("quadratic problem: gradient at the center, minimiser at the mean") {
  const ProblemInstance p = quadratic_problem(3, 2, 21);
  Eigen::VectorXd centers[3];
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(2);
  for (int i = 0; i < 3; ++i) {
    // gradient at 0 is -a_i, recovering the center
    centers[i] = -p.locals[i].gradient(Eigen::VectorXd::Zero(2));
    CHECK(p.locals[i].gradient(centers[i]).norm() == 0.0);
    mean += centers[i];
  }
  mean /= 3.0;
  // centralized minimiser of sum 0.5||x-a_i||^2 is the mean; compare values
  double at_mean = 0;
  for (int i = 0; i < 3; ++i) at_mean += 0.5 * (mean - centers[i]).squaredNorm();
  CHECK(p.lower_bound == doctest::Approx(at_mean).epsilon(1e-12));
  // perturbing the candidate only increases the sum
  Eigen::VectorXd bump = mean;
  bump[0] += 1e-3;
  double perturbed = 0;
  for (int i = 0; i < 3; ++i) perturbed += 0.5 * (bump - centers[i]).squaredNorm();
  CHECK(perturbed >= at_mean);
}

TEST_CASE("common-center quadratic has zero gap at the center") {
  // all a_i equal: stationarity at x_i = a_i for every node
  ProblemInstance p = quadratic_problem(4, 3, 33);
  const Eigen::VectorXd a = -p.locals[0].gradient(Eigen::VectorXd::Zero(3));
  for (auto& node : p.locals) {
    node.value = [a](const Eigen::VectorXd& x) { return 0.5 * (x - a).squaredNorm(); };
    node.gradient = [a](const Eigen::VectorXd& x) { return (x - a).eval(); };
  }
  Eigen::VectorXd stacked(12);
  for (int i = 0; i < 4; ++i) stacked.segment(3 * i, 3) = a;
  CHECK(p.gradient_stacked(stacked).norm() == 0.0);
}

TEST_CASE("fused value-and-gradient agrees with the separate oracles") {
  const ProblemInstance logistic =
      logistic_nonconvex_problem(generate_classification_data(4, 25, 5, 19), 0.001, 1.0);
  const ProblemInstance quad = quadratic_problem(4, 5, 20);
  SubstreamRng rng(substream_key(30, 0, 0, 6));
  for (const ProblemInstance* p : {&logistic, &quad}) {
    for (int trial = 0; trial < 50; ++trial) {
      Eigen::VectorXd stacked(20);
      for (int t = 0; t < 20; ++t) stacked[t] = 4.0 * rng.gaussian();
      const auto [v, g] = p->value_and_gradient_stacked(stacked);
      CHECK(v == p->value_sum(stacked));
      CHECK((g - p->gradient_stacked(stacked)).norm() == 0.0);
    }
  }
}

TEST_CASE("global smoothness is the max of node constants") {
  ProblemInstance quad = quadratic_problem(5, 3, 40);
  CHECK(global_smoothness(quad) == 1.0);  // identity Hessian

  // single unit-norm sample, lambda = 0: (1/4m) sum ||z||^2 = 0.25
  Dataset d;
  d.n_nodes = 2;
  d.m = 1;
  d.dim = 3;
  Eigen::MatrixXd z(1, 3);
  z << 1.0, 0.0, 0.0;
  d.features = {z, z};
  Eigen::VectorXd y(1);
  y << 1.0;
  d.labels = {y, y};
  const ProblemInstance unit = logistic_nonconvex_problem(d, 0.0, 1.0);
  CHECK(global_smoothness(unit) == doctest::Approx(0.25).epsilon(1e-15));

  quad.locals[2].smoothness = 7.5;  // mixed nodes
  CHECK(global_smoothness(quad) == 7.5);
}
