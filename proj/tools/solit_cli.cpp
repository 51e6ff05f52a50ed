// solit: simulate | rates | candidates | quantile-check
//
// Settings are layered: built-in defaults, then the JSON file given with
// --config, then SOLIT_OUT_DIR (output directory only), then flags.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "solit/solit.hpp"

namespace {

using nlohmann::json;
using namespace solit;

enum class Kind { text, real, count, flag };

struct Key {
  const char* name;  // config key; the flag is --name with '_' -> '-'
  Kind kind;
  const char* help;
};

const Key kKeys[] = {
    {"problem", Kind::text, "antiderivative | gradiometry | heat"},
    {"n", Kind::count, "truncation (0 = problem default)"},
    {"radius", Kind::real, "gradiometry orbit radius R"},
    {"time", Kind::real, "heat equation time"},
    {"filter", Kind::text, "tikhonov | showalter | cutoff | landweber"},
    {"theta", Kind::real, "variance growth factor of the grid"},
    {"beta", Kind::real, "threshold bias factor"},
    {"gamma", Kind::real, "threshold budget exponent"},
    {"lepskii_kappa", Kind::real, "Lepskii tuning constant"},
    {"selectors", Kind::text, "comma list: solit,lepskii,oracle,optimal,noise-level"},
    {"sigma_start", Kind::real, "largest noise level"},
    {"sigma_stop", Kind::real, "smallest noise level"},
    {"sigma_count", Kind::count, "number of noise levels"},
    {"runs", Kind::count, "Monte Carlo runs per noise level"},
    {"seed", Kind::count, "master seed"},
    {"out", Kind::text, "output directory"},
    {"noise_free", Kind::flag, "use exact data in every run"},
    {"sigma", Kind::real, "noise level"},
    {"mc_samples", Kind::count, "Monte Carlo samples per pair"},
    {"in", Kind::text, "results directory to read"},
    {"model", Kind::text, "poly | log"},
};

const std::vector<std::string> kExperimentKeys = {
    "problem", "n",           "radius",     "time",        "filter", "theta",
    "beta",    "gamma",       "lepskii_kappa", "selectors", "sigma_start", "sigma_stop",
    "sigma_count", "runs",    "seed",       "out",         "noise_free"};

const Key& key_info(const std::string& name) {
  for (const auto& k : kKeys) {
    if (name == k.name) return k;
  }
  throw ConfigurationError("unknown config key '" + name + "'");
}

std::string flag_name(std::string key) {
  for (auto& c : key) {
    if (c == '_') c = '-';
  }
  return "--" + key;
}

std::string normalize(std::string key) {
  for (auto& c : key) {
    if (c == '-') c = '_';
  }
  return key;
}

json convert(const Key& k, const std::string& raw) {
  try {
    switch (k.kind) {
      case Kind::text: return raw;
      case Kind::real: return std::stod(raw);
      case Kind::count: {
        if (!raw.empty() && raw[0] == '-') throw std::invalid_argument("negative");
        // accept 1e6 style counts
        const double v = std::stod(raw);
        if (v != std::floor(v)) throw std::invalid_argument("not an integer");
        return static_cast<std::uint64_t>(v);
      }
      case Kind::flag: return raw != "false" && raw != "0";
    }
  } catch (const std::exception&) {
  }
  throw ConfigurationError("bad value '" + raw + "' for " + flag_name(k.name));
}

struct Command {
  CLI::App* app = nullptr;
  std::string config_path;
  std::vector<std::pair<std::string, CLI::Option*>> options;
};

Command make_command(CLI::App& root, const char* name, const char* description,
                     const std::vector<std::string>& keys) {
  Command cmd;
  cmd.app = root.add_subcommand(name, description);
  cmd.app->add_option("--config", cmd.config_path, "JSON file with any of the flags below")
      ->check(CLI::ExistingFile);
  for (const auto& key : keys) {
    const Key& k = key_info(key);
    CLI::Option* opt = k.kind == Kind::flag ? cmd.app->add_flag(flag_name(k.name), k.help)
                                            : cmd.app->add_option(flag_name(k.name), k.help);
    cmd.options.emplace_back(key, opt);
  }
  return cmd;
}

// Defaults < config file < SOLIT_OUT_DIR < flags.
json layered_settings(const Command& cmd) {
  json merged = json::object();
  if (!cmd.config_path.empty()) {
    const json file = read_json_file(cmd.config_path);
    if (!file.is_object()) throw ConfigurationError(cmd.config_path + ": config must be an object");
    for (const auto& [raw, value] : file.items()) {
      const std::string key = normalize(raw);
      key_info(key);
      merged[key] = value;
    }
  }
  if (const char* env = std::getenv("SOLIT_OUT_DIR"); env && *env) merged["out"] = env;
  for (const auto& [key, opt] : cmd.options) {
    if (opt->count() == 0) continue;
    const Key& k = key_info(key);
    merged[key] = k.kind == Kind::flag ? json(true) : convert(k, opt->as<std::string>());
  }
  return merged;
}

template <class T>
T setting(const json& s, const char* key, T fallback) {
  if (!s.contains(key)) return fallback;
  try {
    return s.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigurationError(std::string("bad value for '") + key + "'");
  }
}

SpectralProblem problem_from_settings(const json& s) {
  ProblemParameters params;
  params.n = setting<std::size_t>(s, "n", 0);
  params.radius = setting<double>(s, "radius", kGradiometryRadius);
  params.time = setting<double>(s, "time", kHeatTime);
  return problem_from_name(setting<std::string>(s, "problem", "antiderivative"), params);
}

double required_sigma(const json& s) {
  if (!s.contains("sigma")) throw ConfigurationError("--sigma is required");
  return setting<double>(s, "sigma", 0.0);
}

int simulate(const json& s) {
  json experiment = json::object();
  for (const auto& key : kExperimentKeys) {
    if (s.contains(key)) experiment[key] = s.at(key);
  }
  ExperimentConfig config;
  apply_config_json(config, experiment);
  const auto result = run_experiment(config);
  write_results(result, config.output);
  std::printf("# %s, %s, %zu runs -> %s\n", result.problem_label.c_str(), config.filter.c_str(),
              config.runs, config.output.c_str());
  std::printf("sigma,m_max,m_star");
  for (auto sel : config.selectors) std::printf(",%s", std::string(selector_name(sel)).c_str());
  std::printf("\n");
  for (const auto& cell : result.cells) {
    std::printf("%.6g,%zu,%zu", cell.sigma, cell.grid.m_max(), cell.m_star);
    for (const auto& r : cell.selectors) std::printf(",%.6g", r.mse);
    std::printf("\n");
  }
  return 0;
}

int rates(const json& s) {
  const std::string dir = setting<std::string>(s, "in", setting<std::string>(s, "out", "results"));
  const std::string model_name = setting<std::string>(s, "model", "poly");
  const RateModel model = rate_model_from_name(model_name);
  const auto rows = read_results_csv(std::filesystem::path(dir) / "results.csv");
  std::vector<std::string> selectors;
  for (const auto& r : rows) {
    if (std::find(selectors.begin(), selectors.end(), r.selector) == selectors.end()) {
      selectors.push_back(r.selector);
    }
  }
  std::printf("selector,model,slope,intercept\n");
  for (const auto& name : selectors) {
    const auto [sigmas, mse] = rows_for_selector(rows, name);
    const auto fit = fit_rate(sigmas, mse, model);
    std::printf("%s,%s,%.6f,%.6f\n", name.c_str(), model_name.c_str(), fit.slope, fit.intercept);
  }
  return 0;
}

int candidates(const json& s) {
  const auto problem = problem_from_settings(s);
  const auto spec = filter_for_problem(setting<std::string>(s, "filter", "tikhonov"), problem);
  const auto grid = build_grid(problem, spec, required_sigma(s), setting<double>(s, "theta", 2.0));
  write_grid_csv(std::cout, grid);
  if (grid.theta2_enlarged) {
    std::fprintf(stderr, "note: variance jumps enlarged theta2 to %.6g\n", grid.theta2);
  }
  return 0;
}

int quantile_check(const json& s) {
  const auto problem = problem_from_settings(s);
  const auto spec = filter_for_problem(setting<std::string>(s, "filter", "tikhonov"), problem);
  const auto grid = build_grid(problem, spec, required_sigma(s), setting<double>(s, "theta", 2.0));
  const auto samples = setting<std::size_t>(s, "mc_samples", 1000000);
  const auto seed = setting<std::uint64_t>(s, "seed", 42);
  const auto q = filter_table(problem, spec, grid.alphas);
  const double ps[] = {std::exp(-1.0), std::exp(-2.0), std::exp(-4.0)};
  std::printf("m1,m2,p,ltz,mc,rel_err\n");
  for (std::size_t m = 0; m + 1 < grid.size(); ++m) {
    const auto w = pair_weights(problem.eigenvalues, q[m], q[m + 1]);
    const Cumulants c = cumulant_traces(w);
    if (c.max_weight == 0.0) continue;
    auto draws = mc_samples(w, samples, seed + m);
    for (double p : ps) {
      const double ltz = ltz_tail_quantile(c, p);
      const double mc = empirical_upper_quantile(draws, p);
      std::printf("%zu,%zu,%.6g,%.10g,%.10g,%.6g\n", m, m + 1, p, ltz, mc,
                  std::abs(ltz - mc) / mc);
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive regularization parameter choice experiments"};
  app.require_subcommand(1);

  std::vector<std::string> problem_keys = {"problem", "n", "radius", "time", "filter", "theta"};
  auto sim = make_command(app, "simulate", "Monte Carlo study over a noise grid", kExperimentKeys);
  auto rat = make_command(app, "rates", "fit convergence rates to results.csv", {"in", "out", "model"});
  auto with = [](std::vector<std::string> base, std::vector<std::string> extra) {
    base.insert(base.end(), extra.begin(), extra.end());
    return base;
  };
  auto cand = make_command(app, "candidates", "candidate grid CSV for one noise level",
                           with(problem_keys, {"sigma"}));
  auto qc = make_command(app, "quantile-check", "LTZ vs Monte Carlo critical values",
                         with(problem_keys, {"sigma", "mc_samples", "seed"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim.app->parsed()) return simulate(layered_settings(sim));
    if (rat.app->parsed()) return rates(layered_settings(rat));
    if (cand.app->parsed()) return candidates(layered_settings(cand));
    if (qc.app->parsed()) return quantile_check(layered_settings(qc));
  } catch (const IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 1;
}
