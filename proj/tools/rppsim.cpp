#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rpp/chebyshev.hpp"
#include "rpp/experiment.hpp"
#include "rpp/verify.hpp"

namespace {

std::vector<std::string> split_csv(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

int cmd_run(const std::string& config_path) {
  const rpp::ExperimentConfig cfg = rpp::load_config(config_path);
  const rpp::RunResult res = rpp::run_experiment(cfg);
  std::cout << res.summary_json << '\n';
  return res.exit_code;
}

int cmd_sweep(const std::string& config_path, const std::string& axis,
              const std::string& values_csv, const std::string& seeds_csv,
              int jobs) {
  const rpp::ExperimentConfig cfg = rpp::load_config(config_path);
  std::vector<std::uint64_t> seeds;
  for (const auto& s : split_csv(seeds_csv)) seeds.push_back(std::stoull(s));
  const rpp::SweepResult res = rpp::sweep(cfg, axis, split_csv(values_csv), seeds, jobs);
  std::cout << "combined csv: " << res.combined_csv_path << '\n';
  for (const auto& cell : res.cells) {
    std::cout << axis << '=' << cell.axis_value << " seed=" << cell.seed
              << " variant=" << cell.variant << " iters_to_tol=" << cell.iters_to_tol
              << " comm_to_tol=" << cell.comm_to_tol;
    if (!cell.error.empty()) std::cout << " error=" << cell.error;
    std::cout << '\n';
  }
  return 0;
}

int cmd_verify(const std::string& suite) {
  const auto results = rpp::run_verify_suite(suite);
  int failures = 0;
  for (const auto& check : results) {
    std::cout << (check.pass ? "ok   " : "FAIL ") << check.name << "  ("
              << check.detail << ")\n";
    if (!check.pass) ++failures;
  }
  std::cout << results.size() - failures << "/" << results.size() << " checks passed\n";
  return failures == 0 ? 0 : 1;
}

int cmd_spectral(const std::string& config_path) {
  const rpp::ExperimentConfig cfg = rpp::load_config(config_path);
  const rpp::Graph g =
      rpp::generate_geometric_graph(cfg.graph.n, cfg.graph.radius, cfg.graph.seed);
  const rpp::WeightMatrix p =
      rpp::WeightMatrix::from_graph(g, rpp::WeightScheme::normalized_laplacian);
  const rpp::ChebOperator op = rpp::make_cheb_operator(p, cfg.algorithm.tau);
  std::printf("lambda_max %.17g\n", p.spectral().lambda_max);
  std::printf("lambda_min_nonzero %.17g\n", p.spectral().lambda_min_nonzero);
  std::printf("kappa_p %.17g\n", p.spectral().eigengap);
  std::printf("kappa_l %.17g\n", op.effective.spectral().eigengap);
  std::printf("tau %d\n", op.tau);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RPP / RPP-CA distributed nonconvex optimization simulator"};
  app.require_subcommand(1);

  std::string config_path, axis, values_csv, seeds_csv, suite = "all";
  int jobs = 1;

  auto* run = app.add_subcommand("run", "run one experiment from a JSON config");
  run->add_option("--config", config_path, "config file")->required();

  auto* sw = app.add_subcommand("sweep", "cross-product runs over one parameter axis");
  sw->add_option("--config", config_path, "config template")->required();
  sw->add_option("--axis", axis, "parameter name (sigma|eta|tau|variant|graph.seed|problem.seed|radius)")
      ->required();
  sw->add_option("--values", values_csv, "comma-separated axis values")->required();
  sw->add_option("--seeds", seeds_csv, "comma-separated run seeds")->required();
  sw->add_option("--jobs", jobs, "worker threads");

  auto* ver = app.add_subcommand("verify", "run the property suites");
  ver->add_option("--suite", suite, "all|equivalence|lyapunov|chebyshev|gradients");

  auto* spec = app.add_subcommand("spectral", "print spectral quantities for a config");
  spec->add_option("--config", config_path, "config file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path);
    if (sw->parsed()) return cmd_sweep(config_path, axis, values_csv, seeds_csv, jobs);
    if (ver->parsed()) return cmd_verify(suite);
    if (spec->parsed()) return cmd_spectral(config_path);
  } catch (const rpp::ConfigError& ex) {
    std::cerr << ex.what() << '\n';
    return rpp::kExitConfigError;
  } catch (const rpp::DivergenceError& ex) {
    std::cerr << ex.what() << '\n';
    return rpp::kExitDiverged;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return 4;
  }
  return 0;
}
