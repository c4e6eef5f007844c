#include "rpp/experiment.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <thread>

#include <json.hpp>

namespace rpp {

namespace {

using nlohmann::json;

struct BuiltProblem {
  WeightMatrix base;
  std::optional<ChebOperator> cheb;
  ProblemInstance problem;
  AlgoParams params;
  double dgd_stepsize = 0;
  NoiseSpec noise;

  const WeightMatrix& effective() const {
    return cheb ? cheb->effective : base;
  }
};

BuiltProblem build(const ExperimentConfig& cfg) {
  BuiltProblem bp;
  const Graph g =
      generate_geometric_graph(cfg.graph.n, cfg.graph.radius, cfg.graph.seed);
  bp.base = WeightMatrix::from_graph(g, WeightScheme::normalized_laplacian);

  if (cfg.problem.type == "quadratic") {
    bp.problem = quadratic_problem(cfg.graph.n, cfg.problem.d, cfg.problem.seed);
  } else {
    const Dataset data = generate_classification_data(
        cfg.graph.n, cfg.problem.m, cfg.problem.d, cfg.problem.seed);
    bp.problem = logistic_nonconvex_problem(data, cfg.problem.lambda, cfg.problem.mu);
  }
  const double m_bar = global_smoothness(bp.problem);

  if (cfg.algorithm.variant == Variant::rpp_ca)
    bp.cheb = make_cheb_operator(bp.base, cfg.algorithm.tau);

  const double lambda_min = bp.effective().spectral().lambda_min_nonzero;

  if (cfg.algorithm.variant == Variant::dgd_baseline) {
    bp.params.variant = Variant::dgd_baseline;
    bp.dgd_stepsize = cfg.algorithm.manual ? cfg.algorithm.manual->alpha
                                           : 1.0 / (2.0 * m_bar);
    bp.params.rho = 0;
  } else if (cfg.algorithm.auto_params) {
    bp.params = select_parameters(m_bar, lambda_min, cfg.algorithm.eta,
                                  cfg.algorithm.sigma_e, cfg.algorithm.sigma_r,
                                  cfg.algorithm.delta);
    bp.params.variant = cfg.algorithm.variant;
  } else {
    bp.params.variant = cfg.algorithm.variant;
    bp.params.rho = cfg.algorithm.manual->rho;
    bp.params.alpha = cfg.algorithm.manual->alpha;
    bp.params.beta = cfg.algorithm.manual->beta;
    bp.params.eta = cfg.algorithm.eta;
    bp.params.sigma_e = cfg.algorithm.sigma_e;
    bp.params.sigma_r = cfg.algorithm.sigma_r;
    bp.params.derived = derive_constants(bp.params, m_bar, lambda_min);
  }
  if (bp.cheb) bp.params.tau = bp.cheb->tau;

  if (cfg.algorithm.sigma_e > 0 || cfg.algorithm.sigma_r > 0)
    bp.noise = NoiseSpec::spherical(cfg.algorithm.sigma_e, cfg.algorithm.sigma_r,
                                    cfg.run.seed);
  else
    bp.noise = NoiseSpec::disabled();
  return bp;
}

std::filesystem::path summary_path_for(const std::filesystem::path& trace_path) {
  std::filesystem::path p = trace_path;
  p.replace_extension(".summary.json");
  return p;
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& cfg) {
  RunResult res;
  BuiltProblem bp = build(cfg);
  const int n = cfg.graph.n;
  const int dim = cfg.problem.d;
  const bool is_dgd = cfg.algorithm.variant == Variant::dgd_baseline;

  std::optional<PotentialEvaluator> pot;
  if (!is_dgd) pot.emplace(bp.params, bp.effective(), bp.problem);

  NetworkState state = initial_state(n, dim);
  res.params = bp.params;
  res.kappa_p = bp.base.spectral().eigengap;
  res.kappa_l = bp.effective().spectral().eigengap;
  res.tau_used = bp.params.tau;

  std::string divergence_msg;
  // one trace row per completed iteration; the k = 0 state is all zeros
  Eigen::VectorXd grad = bp.problem.gradient_stacked(state.x);
  double f_value = 0;
  for (std::int64_t k = 1; k <= cfg.run.max_iters; ++k) {
    const Eigen::VectorXd x_before = state.x;
    const Eigen::VectorXd xp_before = state.x_prev;
    const Eigen::VectorXd prev_e = state.e;
    const Eigen::VectorXd prev_r = state.r;

    try {
      if (is_dgd)
        dgd_baseline_step(state, bp.dgd_stepsize, bp.base, bp.problem, &grad);
      else if (bp.cheb)
        rpp_ca_step(state, bp.params, *bp.cheb, bp.problem, bp.noise, &grad);
      else
        rpp_step(state, bp.params, bp.base, bp.problem, bp.noise, &grad);
    } catch (const DivergenceError& ex) {
      divergence_msg = ex.what();
      res.exit_code = kExitDiverged;
      break;
    }
    if (state.k == 1) res.x1 = state.x;
    std::tie(f_value, grad) = bp.problem.value_and_gradient_stacked(state.x);

    // assumption-4 accounting for the noise just drawn
    std::int64_t step_diff_violations = 0;
    if (bp.noise.mode == NoiseMode::spherical_capped) {
      for (int i = 0; i < n; ++i) {
        const Eigen::Index off = static_cast<Eigen::Index>(i) * dim;
        const double dx2 =
            (x_before.segment(off, dim) - xp_before.segment(off, dim)).squaredNorm();
        const double ne = state.e.segment(off, dim).squaredNorm();
        const double nr = state.r.segment(off, dim).squaredNorm();
        if (ne > bp.noise.sigma_e * bp.noise.sigma_e * dx2) ++res.a4_norm_violations;
        if (nr > bp.noise.sigma_r * bp.noise.sigma_r * dx2) ++res.a4_norm_violations;
        const double de =
            (state.e.segment(off, dim) - prev_e.segment(off, dim)).squaredNorm();
        const double dr =
            (state.r.segment(off, dim) - prev_r.segment(off, dim)).squaredNorm();
        if (de > bp.noise.sigma_e * bp.noise.sigma_e * dx2) ++step_diff_violations;
        if (dr > bp.noise.sigma_r * bp.noise.sigma_r * dx2) ++step_diff_violations;
        res.a4_checks += 2;
      }
      res.a4_diff_violations += step_diff_violations;
      if (step_diff_violations > 0) ++res.a4_iterations_hit;
    }

    TraceRow row;
    row.k = state.k;
    row.comm_rounds = state.comm_rounds;
    row.stationarity_gap =
        stationarity_gap(state, bp.params, bp.effective(), bp.problem, &grad);
    row.optimality_gap = optimality_gap(state, bp.problem, bp.base, &grad);
    row.consensus_err = consensus_error(state, n);
    row.f_value = f_value;
    row.potential = pot ? (*pot)(state, &f_value) : f_value;
    row.a4_violations = step_diff_violations;
    res.trace.rows.push_back(row);

    if (row.stationarity_gap <= cfg.run.gap_tol) {
      res.converged = true;
      res.exit_code = kExitConverged;
      break;
    }
  }

  res.final_state = state;
  if (res.x1.size() == 0) res.x1 = Eigen::VectorXd::Zero(state.x.size());

  if (!is_dgd && cfg.algorithm.auto_params)
    res.certificate = rate_certificate(res.trace, bp.params, bp.problem, res.x1);

  const std::int64_t iterations = res.trace.rows.empty()
                                      ? 0
                                      : res.trace.rows.back().k;
  json summary;
  summary["variant"] = cfg.algorithm.variant == Variant::rpp      ? "rpp"
                       : cfg.algorithm.variant == Variant::rpp_ca ? "rpp_ca"
                                                                  : "dgd";
  summary["converged"] = res.converged;
  summary["exit_code"] = res.exit_code;
  summary["iterations"] = iterations;
  summary["comm_rounds"] = res.trace.rows.empty() ? 0 : res.trace.rows.back().comm_rounds;
  if (!res.trace.rows.empty()) {
    summary["final_stationarity_gap"] = res.trace.rows.back().stationarity_gap;
    summary["final_optimality_gap"] = res.trace.rows.back().optimality_gap;
    summary["final_consensus_err"] = res.trace.rows.back().consensus_err;
    summary["final_f_value"] = res.trace.rows.back().f_value;
  }
  summary["parameters"] = {{"rho", bp.params.rho},         {"alpha", bp.params.alpha},
                           {"beta", bp.params.beta},       {"eta", bp.params.eta},
                           {"sigma_e", bp.params.sigma_e}, {"sigma_r", bp.params.sigma_r},
                           {"tau", bp.params.tau},
                           {"auto_params", cfg.algorithm.auto_params}};
  if (is_dgd) summary["parameters"]["dgd_stepsize"] = bp.dgd_stepsize;
  if (bp.params.derived) {
    const auto& dc = *bp.params.derived;
    summary["derived"] = {{"c", dc.c},
                          {"d1", dc.d1},
                          {"kappa", dc.kappa},
                          {"xi1", dc.xi1},
                          {"lambda_max_b", dc.lambda_max_b},
                          {"lambda_min_b", dc.lambda_min_b},
                          {"cond_eta_sigma", dc.cond_eta_sigma},
                          {"cond_kappa", dc.cond_kappa},
                          {"cond_proximal", dc.cond_proximal},
                          {"lhs_proximal", dc.lhs_proximal}};
  }
  summary["spectral"] = {{"kappa_p", res.kappa_p},
                         {"kappa_l", res.kappa_l},
                         {"lambda_min_nonzero", bp.effective().spectral().lambda_min_nonzero}};
  const std::int64_t noisy_iters =
      bp.noise.mode == NoiseMode::spherical_capped ? iterations : 0;
  summary["assumption4"] = {
      {"norm_violations", res.a4_norm_violations},
      {"diff_violations", res.a4_diff_violations},
      {"checks", res.a4_checks},
      {"diff_violation_rate_checks",
       res.a4_checks ? double(res.a4_diff_violations) / double(res.a4_checks) : 0.0},
      {"diff_violation_rate_iterations",
       noisy_iters ? double(res.a4_iterations_hit) / double(noisy_iters) : 0.0}};
  summary["certificate"] = {{"available", res.certificate.available},
                            {"pass", res.certificate.pass},
                            {"c1", res.certificate.c1},
                            {"c2", res.certificate.c2},
                            {"min_margin", res.certificate.min_margin}};
  if (!divergence_msg.empty()) summary["divergence"] = divergence_msg;
  res.summary_json = summary.dump(2);

  if (!cfg.run.trace_path.empty()) {
    write_trace(res.trace, cfg.run.trace_path);
    std::ofstream out(summary_path_for(cfg.run.trace_path));
    out << res.summary_json << '\n';
  }
  return res;
}

namespace {

ExperimentConfig apply_axis(const ExperimentConfig& base, const std::string& axis,
                            const std::string& value) {
  ExperimentConfig cfg = base;
  if (axis == "sigma") {
    const double v = std::stod(value);
    cfg.algorithm.sigma_e = v;
    cfg.algorithm.sigma_r = v;
  } else if (axis == "sigma_e") {
    cfg.algorithm.sigma_e = std::stod(value);
  } else if (axis == "sigma_r") {
    cfg.algorithm.sigma_r = std::stod(value);
  } else if (axis == "eta") {
    cfg.algorithm.eta = std::stod(value);
  } else if (axis == "tau") {
    cfg.algorithm.tau = std::stoi(value);
  } else if (axis == "variant") {
    if (value == "rpp")
      cfg.algorithm.variant = Variant::rpp;
    else if (value == "rpp_ca")
      cfg.algorithm.variant = Variant::rpp_ca;
    else if (value == "dgd")
      cfg.algorithm.variant = Variant::dgd_baseline;
    else
      throw ConfigError("sweep: unknown variant value " + value);
  } else if (axis == "graph.seed") {
    cfg.graph.seed = std::stoull(value);
  } else if (axis == "problem.seed") {
    cfg.problem.seed = std::stoull(value);
  } else if (axis == "radius") {
    cfg.graph.radius = std::stod(value);
  } else {
    throw ConfigError("sweep: unknown axis " + axis);
  }
  return cfg;
}

std::string cell_trace_path(const std::string& base_path, const std::string& axis,
                            const std::string& value, std::uint64_t seed) {
  std::filesystem::path p(base_path.empty() ? std::string("sweep.csv") : base_path);
  const std::string stem = p.stem().string();
  std::string v = value;
  for (char& c : v)
    if (c == '.' || c == '/' || c == '\\') c = '_';
  std::filesystem::path out = p.parent_path() /
      (stem + "_" + axis + "-" + v + "_seed-" + std::to_string(seed) + ".csv");
  return out.string();
}

}  // namespace

SweepResult sweep(const ExperimentConfig& cfg_template, const std::string& axis,
                  const std::vector<std::string>& values,
                  const std::vector<std::uint64_t>& seeds, int jobs) {
  SweepResult result;
  std::vector<std::pair<std::string, std::uint64_t>> cells;
  for (const auto& v : values)
    for (const auto s : seeds) cells.emplace_back(v, s);
  result.cells.resize(cells.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t idx = next.fetch_add(1);
      if (idx >= cells.size()) return;
      const auto& [value, seed] = cells[idx];
      SweepCell cell;
      cell.axis_value = value;
      cell.seed = seed;
      try {
        ExperimentConfig cfg = apply_axis(cfg_template, axis, value);
        cfg.run.seed = seed;
        cfg.run.trace_path =
            cell_trace_path(cfg_template.run.trace_path, axis, value, seed);
        cell.trace_path = cfg.run.trace_path;
        const RunResult run = run_experiment(cfg);
        cell.variant = cfg.algorithm.variant == Variant::rpp      ? "rpp"
                       : cfg.algorithm.variant == Variant::rpp_ca ? "rpp_ca"
                                                                  : "dgd";
        cell.sigma = cfg.algorithm.sigma_e;
        cell.tau = run.tau_used;
        cell.exit_code = run.exit_code;
        for (const auto& row : run.trace.rows) {
          if (row.stationarity_gap <= cfg.run.gap_tol) {
            cell.iters_to_tol = row.k;
            cell.comm_to_tol = row.comm_rounds;
            break;
          }
        }
        if (!run.trace.rows.empty())
          cell.final_gap = run.trace.rows.back().stationarity_gap;
      } catch (const std::exception& ex) {
        cell.error = ex.what();
        cell.exit_code = kExitConfigError;
      }
      result.cells[idx] = std::move(cell);
    }
  };

  const int workers = std::max(1, jobs);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  std::filesystem::path combined(cfg_template.run.trace_path.empty()
                                     ? std::string("sweep.csv")
                                     : cfg_template.run.trace_path);
  combined = combined.parent_path() /
             (combined.stem().string() + "_sweep.csv");
  result.combined_csv_path = combined.string();
  std::ofstream out(combined);
  out << "variant,sigma,tau,seed,axis,value,iters_to_tol,comm_to_tol,final_gap,"
         "exit_code,error\n";
  out.precision(17);
  for (const auto& cell : result.cells)
    out << cell.variant << ',' << cell.sigma << ',' << cell.tau << ','
        << cell.seed << ',' << axis << ',' << cell.axis_value << ','
        << cell.iters_to_tol << ',' << cell.comm_to_tol << ',' << cell.final_gap
        << ',' << cell.exit_code << ',' << cell.error << '\n';
  return result;
}

}  // namespace rpp
