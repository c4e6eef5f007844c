#include "rpp/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace rpp {

namespace {

using nlohmann::json;

const json& require(const json& obj, const std::string& key,
                    const std::string& path) {
  if (!obj.is_object() || !obj.contains(key))
    throw ConfigError("config: missing field " + path + key);
  return obj.at(key);
}

template <typename T>
T get_as(const json& obj, const std::string& key, const std::string& path) {
  try {
    return require(obj, key, path).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config: bad type for field " + path + key);
  }
}

template <typename T>
T get_or(const json& obj, const std::string& key, const std::string& path, T def) {
  if (!obj.is_object() || !obj.contains(key) || obj.at(key).is_null()) return def;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config: bad type for field " + path + key);
  }
}

Variant parse_variant(const std::string& name) {
  if (name == "rpp") return Variant::rpp;
  if (name == "rpp_ca") return Variant::rpp_ca;
  if (name == "dgd") return Variant::dgd_baseline;
  throw ConfigError("config: algorithm.variant must be rpp | rpp_ca | dgd, got \"" +
                    name + "\"");
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text, nullptr, /*allow_exceptions=*/true,
                      /*ignore_comments=*/true);
  } catch (const json::exception& ex) {
    throw ConfigError(std::string("config: not valid JSON: ") + ex.what());
  }

  ExperimentConfig cfg;

  const json& g = require(doc, "graph", "");
  cfg.graph.type = get_as<std::string>(g, "type", "graph.");
  if (cfg.graph.type != "geometric")
    throw ConfigError("config: graph.type must be \"geometric\"");
  cfg.graph.n = get_as<int>(g, "n", "graph.");
  cfg.graph.radius = get_as<double>(g, "radius", "graph.");
  cfg.graph.seed = get_as<std::uint64_t>(g, "seed", "graph.");
  if (cfg.graph.n < 2) throw ConfigError("config: graph.n must be >= 2");
  if (!(cfg.graph.radius > 0)) throw ConfigError("config: graph.radius must be > 0");

  const json& p = require(doc, "problem", "");
  cfg.problem.type = get_as<std::string>(p, "type", "problem.");
  if (cfg.problem.type != "logistic_nonconvex" && cfg.problem.type != "quadratic")
    throw ConfigError(
        "config: problem.type must be logistic_nonconvex | quadratic");
  cfg.problem.d = get_as<int>(p, "d", "problem.");
  cfg.problem.seed = get_as<std::uint64_t>(p, "seed", "problem.");
  cfg.problem.m = get_or<int>(p, "m", "problem.", 1);
  cfg.problem.lambda = get_or<double>(p, "lambda", "problem.", 0.001);
  cfg.problem.mu = get_or<double>(p, "mu", "problem.", 1.0);
  if (cfg.problem.d < 1) throw ConfigError("config: problem.d must be >= 1");
  if (cfg.problem.m < 1) throw ConfigError("config: problem.m must be >= 1");
  if (cfg.problem.type == "logistic_nonconvex") {
    if (cfg.problem.lambda < 0) throw ConfigError("config: problem.lambda must be >= 0");
    if (!(cfg.problem.mu > 0)) throw ConfigError("config: problem.mu must be > 0");
  }

  const json& a = require(doc, "algorithm", "");
  cfg.algorithm.variant = parse_variant(get_as<std::string>(a, "variant", "algorithm."));
  cfg.algorithm.auto_params = get_as<bool>(a, "auto_params", "algorithm.");
  cfg.algorithm.delta = get_or<double>(a, "delta", "algorithm.", 2.0);
  cfg.algorithm.eta = get_or<double>(a, "eta", "algorithm.", 0.0);
  cfg.algorithm.sigma_e = get_or<double>(a, "sigma_e", "algorithm.", 0.0);
  cfg.algorithm.sigma_r = get_or<double>(a, "sigma_r", "algorithm.", 0.0);
  if (a.contains("tau") && !a.at("tau").is_null())
    cfg.algorithm.tau = get_as<int>(a, "tau", "algorithm.");
  if (a.contains("manual") && !a.at("manual").is_null()) {
    const json& m = a.at("manual");
    ManualParams mp;
    mp.rho = get_as<double>(m, "rho", "algorithm.manual.");
    mp.alpha = get_as<double>(m, "alpha", "algorithm.manual.");
    mp.beta = get_as<double>(m, "beta", "algorithm.manual.");
    cfg.algorithm.manual = mp;
  }
  if (cfg.algorithm.auto_params && cfg.algorithm.manual)
    throw ConfigError(
        "config: algorithm.auto_params excludes algorithm.manual overrides");
  if (!cfg.algorithm.auto_params && !cfg.algorithm.manual &&
      cfg.algorithm.variant != Variant::dgd_baseline)
    throw ConfigError(
        "config: algorithm.manual is required when auto_params is false");
  if (cfg.algorithm.sigma_e < 0 || cfg.algorithm.sigma_r < 0)
    throw ConfigError("config: algorithm.sigma_e/sigma_r must be >= 0");
  if (!(cfg.algorithm.delta > 1))
    throw ConfigError("config: algorithm.delta must be > 1");
  if (cfg.algorithm.tau && *cfg.algorithm.tau < 1)
    throw ConfigError("config: algorithm.tau must be >= 1");

  const json& r = require(doc, "run", "");
  cfg.run.max_iters = get_as<std::int64_t>(r, "max_iters", "run.");
  cfg.run.gap_tol = get_or<double>(r, "gap_tol", "run.", 1e-8);
  cfg.run.seed = get_as<std::uint64_t>(r, "seed", "run.");
  cfg.run.trace_path = get_as<std::string>(r, "trace_path", "run.");
  if (cfg.run.max_iters < 0) throw ConfigError("config: run.max_iters must be >= 0");
  if (!(cfg.run.gap_tol > 0)) throw ConfigError("config: run.gap_tol must be > 0");

  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string config_to_json(const ExperimentConfig& cfg) {
  json doc;
  doc["graph"] = {{"type", cfg.graph.type},
                  {"n", cfg.graph.n},
                  {"radius", cfg.graph.radius},
                  {"seed", cfg.graph.seed}};
  doc["problem"] = {{"type", cfg.problem.type}, {"m", cfg.problem.m},
                    {"d", cfg.problem.d},       {"lambda", cfg.problem.lambda},
                    {"mu", cfg.problem.mu},     {"seed", cfg.problem.seed}};
  const char* variant = cfg.algorithm.variant == Variant::rpp      ? "rpp"
                        : cfg.algorithm.variant == Variant::rpp_ca ? "rpp_ca"
                                                                   : "dgd";
  doc["algorithm"] = {{"variant", variant},
                      {"auto_params", cfg.algorithm.auto_params},
                      {"delta", cfg.algorithm.delta},
                      {"eta", cfg.algorithm.eta},
                      {"sigma_e", cfg.algorithm.sigma_e},
                      {"sigma_r", cfg.algorithm.sigma_r}};
  if (cfg.algorithm.tau)
    doc["algorithm"]["tau"] = *cfg.algorithm.tau;
  else
    doc["algorithm"]["tau"] = nullptr;
  if (cfg.algorithm.manual)
    doc["algorithm"]["manual"] = {{"rho", cfg.algorithm.manual->rho},
                                  {"alpha", cfg.algorithm.manual->alpha},
                                  {"beta", cfg.algorithm.manual->beta}};
  else
    doc["algorithm"]["manual"] = nullptr;
  doc["run"] = {{"max_iters", cfg.run.max_iters},
                {"gap_tol", cfg.run.gap_tol},
                {"seed", cfg.run.seed},
                {"trace_path", cfg.run.trace_path}};
  return doc.dump(2);
}

}  // namespace rpp
