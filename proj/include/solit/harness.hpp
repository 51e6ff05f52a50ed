#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "solit/candidates.hpp"
#include "solit/error.hpp"
#include "solit/filters.hpp"
#include "solit/genchi2.hpp"
#include "solit/rng.hpp"
#include "solit/selectors.hpp"
#include "solit/sequence_model.hpp"
#include "solit/testproblems.hpp"

namespace solit {

struct ExperimentConfig {
  std::string problem = "antiderivative";
  ProblemParameters problem_parameters;
  std::string filter = "tikhonov";
  double theta = 2.0;
  double beta = 1.0;
  double gamma = 1.0;
  double lepskii_kappa = 1.0;
  std::vector<Selector> selectors = {Selector::solit, Selector::lepskii, Selector::oracle,
                                     Selector::optimal, Selector::noise_level};
  double sigma_start = 3e-2;
  double sigma_stop = 1e-5;
  std::size_t sigma_count = 8;
  std::size_t runs = 200;
  std::uint64_t seed = 42;
  std::string output = "results";
  // Replaces every realization by the exact data.
  bool noise_free = false;

  /// Geometric noise levels from sigma_start down to sigma_stop.
  std::vector<double> sigmas() const {
    std::vector<double> out;
    if (sigma_count == 1) return {sigma_start};
    const double step = std::log(sigma_stop / sigma_start) / static_cast<double>(sigma_count - 1);
    for (std::size_t i = 0; i < sigma_count; ++i) {
      out.push_back(sigma_start * std::exp(step * static_cast<double>(i)));
    }
    out.back() = sigma_stop;
    return out;
  }

  void validate() const {
    if (sigma_count < 1) throw ConfigurationError("sigma grid needs at least one point");
    if (!(sigma_start > 0.0) || !(sigma_stop > 0.0)) {
      throw ConfigurationError("noise levels must be positive");
    }
    if (sigma_count > 1 && !(sigma_start > sigma_stop)) {
      throw ConfigurationError("noise levels must decrease from sigma-start to sigma-stop");
    }
    if (runs < 1) throw ConfigurationError("at least one Monte Carlo run is required");
    if (!(theta > 1.0)) throw ConfigurationError("theta must exceed 1");
    if (!(beta > 0.0) || !(gamma > 0.0)) throw ConfigurationError("beta and gamma must be positive");
    if (!(lepskii_kappa >= 1.0)) throw ConfigurationError("Lepskii kappa must be >= 1");
  }
};

/// Kahan-Babuska-Neumaier accumulator.
class CompensatedSum {
 public:
  void add(double value) {
    const double t = sum_ + value;
    if (std::abs(sum_) >= std::abs(value)) {
      compensation_ += (sum_ - t) + value;
    } else {
      compensation_ += (value - t) + sum_;
    }
    sum_ = t;
  }
  double value() const noexcept { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

/// Mean and standard error of a stream of squared errors.
class ErrorAccumulator {
 public:
  void add(double value) {
    sum_.add(value);
    squares_.add(value * value);
    ++count_;
  }
  std::size_t count() const noexcept { return count_; }
  double mean() const { return count_ ? sum_.value() / static_cast<double>(count_) : 0.0; }
  double standard_error() const {
    if (count_ < 2) return 0.0;
    const double n = static_cast<double>(count_);
    const double m = mean();
    const double variance = std::max(0.0, (squares_.value() - n * m * m) / (n - 1.0));
    return std::sqrt(variance / n);
  }

 private:
  CompensatedSum sum_;
  CompensatedSum squares_;
  std::size_t count_ = 0;
};

struct SelectorResult {
  Selector selector = Selector::solit;
  double mse = 0.0;
  double stderr_ = 0.0;
  std::vector<std::size_t> histogram;  // selected index counts, size m_max + 1
};

struct SigmaResult {
  double sigma = 0.0;
  CandidateGrid grid;
  std::size_t m_star = 0;
  std::size_t m_double_star = 0;
  double risk_m_star = 0.0;         // Monte Carlo mean at m*
  double risk_m_star_stderr = 0.0;
  double exact_risk_m_star = 0.0;   // b_{m*}^2 + v_{m*}
  double c1 = 0.0;
  double c2 = 0.0;
  double price_of_adaptation = 0.0;
  std::vector<SelectorResult> selectors;

  const SelectorResult* find(Selector s) const {
    for (const auto& r : selectors) {
      if (r.selector == s) return &r;
    }
    return nullptr;
  }
};

struct ExperimentResult {
  ExperimentConfig config;
  std::string problem_label;
  std::vector<SigmaResult> cells;
};

/// Filter spec for a named filter on a given problem (Landweber is relaxed
/// to step = 1 / lambda_max).
inline FilterSpec filter_for_problem(std::string_view name, const SpectralProblem& problem) {
  FilterSpec spec = filter_from_name(name);
  if (spec.kind == FilterKind::landweber) spec.landweber_step = 1.0 / problem.eigenvalues.front();
  return spec;
}

/// Everything about one noise level that does not depend on the data.
struct DeterministicTables {
  CandidateGrid grid;
  GridTables tables;
  ThresholdTable thresholds;
  std::vector<std::vector<double>> data_weights;  // q_m(lambda_k) sqrt(lambda_k)
  std::vector<double> bias;                        // ||E f_m - f||
  PairTable bias_pair;                             // ||E f_m1 - E f_m2||
  std::size_t m_star = 0;
  std::size_t m_double_star = 0;
  OracleConstants constants;
};

inline DeterministicTables prepare_noise_level(const SpectralProblem& problem,
                                               const FilterSpec& spec, double sigma,
                                               const ExperimentConfig& config) {
  DeterministicTables d;
  d.grid = build_grid(problem, spec, sigma, config.theta);
  d.tables = compute_grid_tables(problem, spec, d.grid);
  d.thresholds = build_thresholds(problem, d.grid, d.tables, config.beta, config.gamma);

  const std::size_t count = d.grid.size();
  const std::size_t n = problem.size();
  d.data_weights.assign(count, std::vector<double>(n));
  std::vector<std::vector<double>> mean_estimates(count, std::vector<double>(n));
  d.bias.assign(count, 0.0);
  for (std::size_t m = 0; m < count; ++m) {
    for (std::size_t k = 0; k < n; ++k) {
      d.data_weights[m][k] = d.tables.q[m][k] * std::sqrt(problem.eigenvalues[k]);
      mean_estimates[m][k] = d.data_weights[m][k] * problem.data_truth[k];
    }
    d.bias[m] = std::sqrt(squared_error(mean_estimates[m], problem));
  }
  d.bias_pair = distance_table(mean_estimates);
  d.m_star = oracle_select(d.bias_pair, d.tables.v_pair, config.beta);
  d.m_double_star = bias_variance_crossing(d.bias, d.grid.v, d.grid.theta1, config.beta);
  d.constants = oracle_constants(d.grid, d.m_star, d.tables.u[d.m_star], config.beta, config.gamma);
  return d;
}

/// Monte Carlo study over the configured noise levels. Run r at noise index
/// i draws its noise from the key (seed, i, r), so results do not depend on
/// evaluation order.
inline ExperimentResult run_experiment(const ExperimentConfig& config,
                                       const SpectralProblem& problem) {
  config.validate();
  problem.validate();
  const FilterSpec spec = filter_for_problem(config.filter, problem);

  ExperimentResult result;
  result.config = config;
  result.problem_label = problem.label;
  const auto sigmas = config.sigmas();
  const std::size_t n = problem.size();

  for (std::size_t i = 0; i < sigmas.size(); ++i) {
    const double sigma = sigmas[i];
    const DeterministicTables d = prepare_noise_level(problem, spec, sigma, config);
    const std::size_t count = d.grid.size();

    std::vector<ErrorAccumulator> accumulators(config.selectors.size());
    std::vector<std::vector<std::size_t>> histograms(config.selectors.size(),
                                                     std::vector<std::size_t>(count, 0));
    ErrorAccumulator risk_at_m_star;

    std::vector<double> y(n);
    std::vector<std::vector<double>> estimates(count, std::vector<double>(n));
    std::vector<double> errors(count);
    for (std::size_t r = 0; r < config.runs; ++r) {
      if (config.noise_free) {
        y = problem.data_truth;
      } else {
        NormalStream noise({config.seed, static_cast<std::uint64_t>(i),
                            static_cast<std::uint64_t>(r)});
        for (std::size_t k = 0; k < n; ++k) y[k] = problem.data_truth[k] + sigma * noise();
      }
      for (std::size_t m = 0; m < count; ++m) {
        double err = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double f = d.data_weights[m][k] * y[k];
          estimates[m][k] = f;
          const double diff = f - problem.truth[k];
          err += diff * diff;
        }
        errors[m] = err;
        if (!std::isfinite(err)) {
          throw ConfigurationError("non-finite reconstruction error at sigma index " +
                                   std::to_string(i) + ", run " + std::to_string(r));
        }
      }
      risk_at_m_star.add(errors[d.m_star]);

      PairTable bhat;
      bool have_bhat = false;
      for (std::size_t s = 0; s < config.selectors.size(); ++s) {
        std::size_t chosen = 0;
        switch (config.selectors[s]) {
          case Selector::solit:
          case Selector::lepskii:
            if (!have_bhat) {
              bhat = distance_table(estimates);
              have_bhat = true;
            }
            chosen = config.selectors[s] == Selector::solit
                         ? solit_select(bhat, d.thresholds)
                         : lepskii_select(bhat, d.grid, config.lepskii_kappa);
            break;
          case Selector::oracle: chosen = d.m_star; break;
          case Selector::optimal: chosen = optimal_select(errors); break;
          case Selector::noise_level: chosen = noise_level_select(d.grid, sigma); break;
        }
        accumulators[s].add(errors[chosen]);
        ++histograms[s][chosen];
      }
    }

    SigmaResult cell;
    cell.sigma = sigma;
    cell.grid = d.grid;
    cell.m_star = d.m_star;
    cell.m_double_star = d.m_double_star;
    cell.risk_m_star = risk_at_m_star.mean();
    cell.risk_m_star_stderr = risk_at_m_star.standard_error();
    cell.exact_risk_m_star = d.bias[d.m_star] * d.bias[d.m_star] + d.grid.v[d.m_star];
    cell.c1 = d.constants.c1;
    cell.c2 = d.constants.c2;
    cell.price_of_adaptation = price_of_adaptation(cell.risk_m_star, cell.c2);
    for (std::size_t s = 0; s < config.selectors.size(); ++s) {
      cell.selectors.push_back({config.selectors[s], accumulators[s].mean(),
                                accumulators[s].standard_error(), histograms[s]});
    }
    result.cells.push_back(std::move(cell));
  }
  return result;
}

inline ExperimentResult run_experiment(const ExperimentConfig& config) {
  return run_experiment(config, problem_from_name(config.problem, config.problem_parameters));
}

enum class RateModel { poly, log };

inline RateModel rate_model_from_name(std::string_view name) {
  if (name == "poly") return RateModel::poly;
  if (name == "log") return RateModel::log;
  throw ConfigurationError("unknown rate model '" + std::string(name) + "'");
}

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
};

/// Least-squares line through (log sigma, log mse) for the polynomial model
/// or (log(-log sigma), log mse) for the logarithmic model.
inline RateFit fit_rate(std::span<const double> sigmas, std::span<const double> mse,
                        RateModel model) {
  if (sigmas.size() != mse.size()) throw InvalidParameter("fit_rate: length mismatch");
  if (sigmas.size() < 3) throw InvalidParameter("fit_rate needs at least three points");
  std::vector<double> xs;
  std::vector<double> ys;
  for (std::size_t i = 0; i < sigmas.size(); ++i) {
    if (!(sigmas[i] > 0.0) || !(mse[i] > 0.0)) {
      throw InvalidParameter("fit_rate needs positive noise levels and errors");
    }
    if (model == RateModel::log && !(sigmas[i] < 1.0)) {
      throw InvalidParameter("the logarithmic rate model needs sigma < 1");
    }
    xs.push_back(model == RateModel::poly ? std::log(sigmas[i]) : std::log(-std::log(sigmas[i])));
    ys.push_back(std::log(mse[i]));
  }
  const double count = static_cast<double>(xs.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= count;
  my /= count;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  if (!(sxx > 0.0)) throw InvalidParameter("fit_rate needs distinct noise levels");
  RateFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  return fit;
}

/// MSE of one selector across the noise levels of a result.
inline std::vector<double> selector_mse(const ExperimentResult& result, Selector s) {
  std::vector<double> out;
  for (const auto& cell : result.cells) {
    const auto* r = cell.find(s);
    if (!r) throw ConfigurationError("result has no '" + std::string(selector_name(s)) + "' rows");
    out.push_back(r->mse);
  }
  return out;
}

inline std::vector<double> result_sigmas(const ExperimentResult& result) {
  std::vector<double> out;
  for (const auto& cell : result.cells) out.push_back(cell.sigma);
  return out;
}

struct OracleCheck {
  double sigma = 0.0;
  double mse = 0.0;
  double bound = 0.0;  // C1 R + (sqrt(R) + C2)^2
  double slack = 0.0;  // three combined standard errors
  double margin = 0.0; // bound + slack - mse
  bool pass = false;
};

struct OracleInequalityReport {
  std::vector<OracleCheck> cells;
  bool pass() const {
    return std::all_of(cells.begin(), cells.end(), [](const OracleCheck& c) { return c.pass; });
  }
};

/// Empirical oracle inequality MSE(SOLIT) <= C1 R + (sqrt(R) + C2)^2 per
/// noise level, with R the Monte Carlo risk at m*. Both Monte Carlo
/// uncertainties enter the slack (the bound's through its derivative in R).
inline OracleInequalityReport verify_oracle_inequality(const ExperimentResult& result) {
  OracleInequalityReport report;
  for (const auto& cell : result.cells) {
    const auto* solit = cell.find(Selector::solit);
    if (!solit) throw ConfigurationError("oracle inequality check needs SOLIT rows");
    OracleCheck check;
    check.sigma = cell.sigma;
    check.mse = solit->mse;
    const double risk = cell.risk_m_star;
    check.bound = cell.c1 * risk + price_of_adaptation(risk, cell.c2);
    if (std::isinf(check.bound)) {
      check.slack = 0.0;
      check.margin = std::numeric_limits<double>::infinity();
      check.pass = true;
    } else {
      const double slope = risk > 0.0 ? cell.c1 + 1.0 + cell.c2 / std::sqrt(risk) : 0.0;
      const double se_bound = slope * cell.risk_m_star_stderr;
      check.slack = 3.0 * std::sqrt(solit->stderr_ * solit->stderr_ + se_bound * se_bound);
      check.margin = check.bound + check.slack - check.mse;
      check.pass = check.margin >= 0.0;
    }
    report.cells.push_back(check);
  }
  return report;
}

}  // namespace solit
