// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "solit/solit.hpp"

using namespace solit;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

void note(Outcome& o, bool ok, const std::string& msg) {
  if (!ok) {
    o.pass = false;
    o.detail += (o.detail.empty() ? "" : "; ") + msg;
  }
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string fmt(const char* f, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

struct ProblemSetup {
  std::string name;
  double sigma_start;
  double sigma_stop;
};

const std::vector<ProblemSetup> kProblems = {
    {"antiderivative", 3e-2, 1e-5},
    {"gradiometry", 1e-2, 1e-8},
    {"heat", 1e-2, 1e-8},
};

const std::vector<std::string> kFilters = {"tikhonov", "showalter", "cutoff"};

ExperimentConfig config_for(const ProblemSetup& p, const std::string& filter) {
  ExperimentConfig c;
  c.problem = p.name;
  c.filter = filter;
  c.sigma_start = p.sigma_start;
  c.sigma_stop = p.sigma_stop;
  c.sigma_count = 8;
  c.runs = 200;
  c.seed = 42;
  return c;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void report(int id, const char* title, const Outcome& o) {
  std::printf("%s criterion %d: %s%s%s\n", o.pass ? "PASS" : "FAIL", id, title,
              o.detail.empty() ? "" : " -- ", o.detail.c_str());
  std::fflush(stdout);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main() {
  bool all = true;
  std::map<std::string, SpectralProblem> problems;
  for (const auto& p : kProblems) problems.emplace(p.name, problem_from_name(p.name));

  // Experiments for criteria 1-6.
  std::map<std::pair<std::string, std::string>, ExperimentResult> results;
  std::map<std::string, double> runtime;
  for (const auto& p : kProblems) {
    for (const auto& f : kFilters) {
      const auto t0 = std::chrono::steady_clock::now();
      results[{p.name, f}] = run_experiment(config_for(p, f), problems.at(p.name));
      if (f == "tikhonov") runtime[p.name] = seconds_since(t0);
    }
  }

  // `skip` drops the largest noise levels.
  auto slope_of = [&](const std::string& problem, RateModel model, Selector s = Selector::solit,
                      std::size_t skip = 0) {
    const auto& r = results.at({problem, "tikhonov"});
    const auto sigmas = result_sigmas(r);
    const auto mse = selector_mse(r, s);
    return fit_rate(std::span(sigmas).subspan(skip), std::span(mse).subspan(skip), model).slope;
  };
  // Context for a failing log-rate: the optimal choice over the same range
  // and SOLIT over the four smallest noise levels.
  auto log_rate_context = [&](const std::string& problem) {
    return fmt(", optimal-choice slope %.3f, SOLIT slope on the 4 smallest sigma %.3f",
               slope_of(problem, RateModel::log, Selector::optimal),
               slope_of(problem, RateModel::log, Selector::solit, 4));
  };

  {
    Outcome o;
    const double slope = slope_of("antiderivative", RateModel::poly);
    o.detail = fmt("poly slope %.3f, runtime %.1f s", slope, runtime["antiderivative"]);
    o.pass = slope >= 0.60 && slope <= 0.90 && runtime["antiderivative"] < 300.0;
    report(1, "antiderivative rate in [0.60, 0.90]", o);
    all = all && o.pass;
  }
  {
    Outcome o;
    const double slope = slope_of("gradiometry", RateModel::log);
    o.detail = fmt("log slope %.3f", slope) + log_rate_context("gradiometry");
    o.pass = slope >= -4.0 && slope <= -2.2;
    report(2, "gradiometry log-rate in [-4.0, -2.2]", o);
    all = all && o.pass;
  }
  {
    Outcome o;
    const double slope = slope_of("heat", RateModel::log);
    o.detail = fmt("log slope %.3f", slope) + log_rate_context("heat");
    o.pass = slope >= -2.2 && slope <= -1.0;
    report(3, "heat log-rate in [-2.2, -1.0]", o);
    all = all && o.pass;
  }
  {
    Outcome o;
    std::size_t cells = 0;
    double worst = std::numeric_limits<double>::infinity();
    for (const auto& [key, r] : results) {
      const auto check = verify_oracle_inequality(r);
      for (const auto& c : check.cells) {
        ++cells;
        worst = std::min(worst, c.margin / std::max(c.bound, 1e-300));
        note(o, c.pass, key.first + "/" + key.second + fmt(" sigma=%.3g margin=%.3g", c.sigma, c.margin));
      }
    }
    if (o.pass) o.detail = std::to_string(cells) + " cells, smallest relative margin " + fmt("%.3g", worst);
    report(4, "oracle inequality on every cell", o);
    all = all && o.pass;
  }
  {
    Outcome o;
    std::string summary;
    for (const auto& p : kProblems) {
      const auto& r = results.at({p.name, "tikhonov"});
      const auto solit = selector_mse(r, Selector::solit);
      const auto optimal = selector_mse(r, Selector::optimal);
      std::vector<double> ratios;
      for (std::size_t i = 0; i < solit.size(); ++i) ratios.push_back(solit[i] / optimal[i]);
      const double med = median(ratios);
      summary += (summary.empty() ? "" : ", ") + p.name + fmt(" %.2f", med);
      note(o, med <= 4.0, p.name + fmt(" median ratio %.3f", med));
    }
    if (o.pass) o.detail = "median SOLIT/optimal: " + summary;
    report(5, "median MSE(SOLIT)/MSE(optimal) <= 4", o);
    all = all && o.pass;
  }
  {
    Outcome o;
    double worst = 0.0;
    for (const auto& p : kProblems) {
      const auto& r = results.at({p.name, "tikhonov"});
      const auto solit = selector_mse(r, Selector::solit);
      const auto lepskii = selector_mse(r, Selector::lepskii);
      for (std::size_t i = 0; i < solit.size(); ++i) {
        const double ratio = solit[i] / lepskii[i];
        worst = std::max(worst, ratio);
        note(o, ratio <= 1.5, p.name + fmt(" sigma=%.3g ratio %.3f", r.cells[i].sigma, ratio));
      }
    }
    if (o.pass) o.detail = fmt("largest SOLIT/Lepskii ratio %.3f", worst);
    report(6, "MSE(SOLIT) <= 1.5 MSE(Lepskii) at every sigma", o);
    all = all && o.pass;
  }

  // Criterion 7: every adjacent pair of each filter's grid at the
  // geometric middle of each sigma range.
  {
    Outcome o;
    const double ps[] = {std::exp(-1.0), std::exp(-2.0), std::exp(-4.0)};
    double worst = 0.0;
    std::size_t pairs = 0;
    const auto t0 = std::chrono::steady_clock::now();
    for (const auto& p : kProblems) {
      const auto& problem = problems.at(p.name);
      const double sigma = std::sqrt(p.sigma_start * p.sigma_stop);
      for (const auto& f : kFilters) {
        const FilterSpec spec = filter_for_problem(f, problem);
        const auto grid = build_grid(problem, spec, sigma, 2.0);
        const auto q = filter_table(problem, spec, grid.alphas);
        for (std::size_t m = 0; m + 1 < grid.size(); ++m) {
          const auto w = pair_weights(problem.eigenvalues, q[m], q[m + 1]);
          const Cumulants c = cumulant_traces(w);
          if (c.max_weight == 0.0) continue;
          auto draws = mc_samples(w, 1000000, 1000 + m);
          ++pairs;
          for (double prob : ps) {
            const double ltz = ltz_tail_quantile(c, prob);
            const double mc = empirical_upper_quantile(draws, prob);
            const double rel = std::abs(ltz - mc) / mc;
            worst = std::max(worst, rel);
            note(o, rel <= 0.05, p.name + "/" + f + " pair " + std::to_string(m) + fmt(" p=%.3g rel %.3g", prob, rel));
          }
        }
      }
    }
    if (o.pass) {
      o.detail = std::to_string(pairs) + " pairs, worst relative error " + fmt("%.3g", worst) +
                 fmt(", %.0f s", seconds_since(t0));
    }
    report(7, "LTZ vs Monte Carlo quantiles within 5%", o);
    all = all && o.pass;
  }

  {
    Outcome o;
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (const auto& p : kProblems) {
      const auto& problem = problems.at(p.name);
      for (const std::string f : {"tikhonov", "showalter"}) {
        const FilterSpec spec = filter_for_problem(f, problem);
        for (double sigma : config_for(p, f).sigmas()) {
          const auto grid = build_grid(problem, spec, sigma, 2.0);
          for (std::size_t m = 1; m < grid.size(); ++m) {
            lo = std::min(lo, grid.ratio(m));
            hi = std::max(hi, grid.ratio(m));
            note(o, grid.ratio(m) >= 1.5 && grid.ratio(m) <= 2.5,
                 p.name + "/" + f + fmt(" ratio %.4f", grid.ratio(m)));
          }
        }
      }
    }
    const auto& heat = problems.at("heat");
    bool enlarged = false;
    try {
      const auto grid = build_grid(heat, FilterSpec::cutoff(), 1e-8, 2.0);
      enlarged = grid.theta2_enlarged && grid.theta2 > 2.5;
      o.detail = fmt("continuous ratios in [%.4f, %.4f]", lo, hi) +
                 fmt(", heat cut-off theta2 = %.3g", grid.theta2);
    } catch (const std::exception& e) {
      o.detail += std::string("; heat cut-off grid failed: ") + e.what();
    }
    note(o, enlarged, "heat cut-off grid did not report an enlarged theta2");
    report(8, "grid ratios and enlarged theta2", o);
    all = all && o.pass;
  }

  // Criterion 9: condensed versions of the property suites (the full suites
  // live in the unit tests).
  {
    Outcome o;
    std::vector<double> alphas;
    std::vector<double> lambdas;
    for (int i = 0; i < 100; ++i) {
      alphas.push_back(std::pow(10.0, -8.0 + 9.0 * i / 99.0));
      lambdas.push_back(i == 0 ? 0.0 : std::pow(10.0, -10.0 + 10.0 * i / 99.0));
    }
    for (const auto& spec : {FilterSpec::tikhonov(), FilterSpec::showalter(), FilterSpec::cutoff(),
                             FilterSpec::landweber(1.0)}) {
      note(o, validate_ordered_filter(spec, alphas, lambdas).ok(),
           std::string(filter_name(spec.kind)) + " violates the filter axioms");
    }

    std::size_t configs = 0;
    for (const auto& p : kProblems) {
      const auto& problem = problems.at(p.name);
      for (const auto& f : kFilters) {
        const FilterSpec spec = filter_for_problem(f, problem);
        ExperimentConfig cfg = config_for(p, f);
        for (double sigma : cfg.sigmas()) {
          ++configs;
          const auto d = prepare_noise_level(problem, spec, sigma, cfg);
          note(o, d.m_star <= d.m_double_star, p.name + "/" + f + " m* > m**");
          const double floor = std::pow(std::sqrt(d.grid.theta1) - 1.0, 2.0);
          for (std::size_t a = 0; a < d.grid.size(); ++a) {
            for (std::size_t b = a + 1; b < d.grid.size(); ++b) {
              note(o, d.tables.v_pair(a, b) >= floor * d.grid.v[a] * (1.0 - 1e-9),
                   p.name + "/" + f + " pairwise variance below the Cauchy-Schwarz floor");
            }
          }
        }
      }
    }

    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int trial = 0; trial < 2000; ++trial) {
      const std::size_t count = 1 + trial % 7;
      PairTable bhat(count);
      PairTable kappa(count);
      for (std::size_t a = 0; a < count; ++a) {
        for (std::size_t b = a + 1; b < count; ++b) {
          bhat(a, b) = unif(rng);
          kappa(a, b) = unif(rng);
        }
      }
      std::size_t reference = count - 1;
      for (std::size_t m = 0; m < count; ++m) {
        bool ok = true;
        for (std::size_t b = m + 1; b < count; ++b) ok = ok && bhat(m, b) <= kappa(m, b);
        if (ok) {
          reference = m;
          break;
        }
      }
      note(o, solit_select(bhat, kappa) == reference, "SOLIT differs from brute force");
    }

    for (std::size_t n : {1u, 2u, 5u, 40u}) {
      const std::vector<double> w(n, 0.3);
      const Cumulants c = cumulant_traces(w);
      for (double t : {0.1, 0.5, 1.0, 3.0, 10.0}) {
        const double exact = boost::math::gamma_q(0.5 * static_cast<double>(n), 0.5 * t / 0.3);
        note(o, std::abs(ltz_tail_sf(c, t) - exact) <= 1e-10, "LTZ inexact for equal weights");
      }
    }

    const auto dir = std::filesystem::temp_directory_path() / "solit_acceptance_roundtrip";
    const auto& r = results.at({"heat", "tikhonov"});
    write_results(r, dir);
    const auto rows = read_results_csv(dir / "results.csv");
    std::size_t index = 0;
    for (const auto& cell : r.cells) {
      for (const auto& s : cell.selectors) {
        const auto& row = rows.at(index++);
        const bool same = row.sigma == cell.sigma && row.mse == s.mse && row.stderr_ == s.stderr_ &&
                          row.m_star == cell.m_star && row.risk_m_star == cell.risk_m_star &&
                          row.c1 == cell.c1 && row.c2 == cell.c2 &&
                          row.poa == cell.price_of_adaptation &&
                          row.selector == selector_name(s.selector);
        note(o, same, "results.csv round trip changed a value");
      }
    }
    note(o, index == rows.size(), "results.csv has extra rows");
    std::filesystem::remove_all(dir);
    if (o.pass) o.detail = std::to_string(configs) + " benchmark configurations";
    report(9, "property suites", o);
    all = all && o.pass;
  }

  return all ? 0 : 1;
}
