#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "solit/candidates.hpp"
#include "solit/error.hpp"
#include "solit/filters.hpp"
#include "solit/genchi2.hpp"
#include "solit/sequence_model.hpp"

namespace solit {

/// Square table indexed by candidate pairs; only entries with m1 < m2 are
/// meaningful for the selectors.
class PairTable {
 public:
  PairTable() = default;
  explicit PairTable(std::size_t candidates, double fill = 0.0)
      : size_(candidates), data_(candidates * candidates, fill) {}

  std::size_t candidates() const noexcept { return size_; }
  double& operator()(std::size_t m1, std::size_t m2) { return data_[m1 * size_ + m2]; }
  double operator()(std::size_t m1, std::size_t m2) const { return data_[m1 * size_ + m2]; }

 private:
  std::size_t size_ = 0;
  std::vector<double> data_;
};

/// Norms of pairwise differences of the coefficient vectors in `estimates`
/// (one row per candidate), upper triangle only.
inline PairTable distance_table(const std::vector<std::vector<double>>& estimates) {
  PairTable table(estimates.size());
  for (std::size_t m1 = 0; m1 < estimates.size(); ++m1) {
    for (std::size_t m2 = m1 + 1; m2 < estimates.size(); ++m2) {
      table(m1, m2) = pairwise_distance(estimates[m1], estimates[m2]);
    }
  }
  return table;
}

/// Data-independent quantities on a candidate grid.
struct GridTables {
  std::vector<std::vector<double>> q;  // q_{alpha_m}(lambda_k)
  PairTable v_pair;                    // v_{m1,m2}
  std::vector<double> u;               // u_m
};

inline GridTables compute_grid_tables(const SpectralProblem& problem, const FilterSpec& spec,
                                      const CandidateGrid& grid) {
  GridTables tables;
  tables.q = filter_table(problem, spec, grid.alphas);
  const std::size_t count = grid.size();
  const double sigma2 = grid.sigma * grid.sigma;
  tables.v_pair = PairTable(count);
  tables.u.assign(count, 0.0);
  for (std::size_t m = 0; m < count; ++m) {
    double largest = 0.0;
    for (std::size_t k = 0; k < problem.size(); ++k) {
      const double q = tables.q[m][k];
      largest = std::max(largest, problem.eigenvalues[k] * q * q);
    }
    tables.u[m] = sigma2 * largest;
  }
  for (std::size_t m1 = 0; m1 < count; ++m1) {
    for (std::size_t m2 = m1 + 1; m2 < count; ++m2) {
      double sum = 0.0;
      for (std::size_t k = 0; k < problem.size(); ++k) {
        const double d = tables.q[m1][k] - tables.q[m2][k];
        sum += problem.eigenvalues[k] * d * d;
      }
      tables.v_pair(m1, m2) = sigma2 * sum;
      tables.v_pair(m2, m1) = sigma2 * sum;
    }
  }
  return tables;
}

struct ThresholdTable {
  PairTable kappa;        // sigma z_{m1,m2}(x_{m1}) + beta sqrt(v_{m1,m2})
  PairTable z;            // z_{m1,m2}(x_{m1}) at unit noise level
  std::vector<double> x;  // x_m = 2 (1 + gamma) log(v_{m+1} / v_0), m < m_max
  double beta = 1.0;
  double gamma = 1.0;
  std::size_t degenerate_pairs = 0;
};

inline std::vector<double> threshold_budgets(const CandidateGrid& grid, double gamma) {
  std::vector<double> x;
  for (std::size_t m = 0; m + 1 < grid.size(); ++m) {
    x.push_back(2.0 * (1.0 + gamma) * std::log(grid.v[m + 1] / grid.v[0]));
  }
  return x;
}

inline ThresholdTable build_thresholds(const SpectralProblem& problem, const CandidateGrid& grid,
                                       const GridTables& tables, double beta, double gamma) {
  if (!(beta >= 0.0)) throw InvalidParameter("beta must be nonnegative");
  if (!(gamma > 0.0)) throw InvalidParameter("gamma must be positive");
  ThresholdTable t;
  t.beta = beta;
  t.gamma = gamma;
  t.x = threshold_budgets(grid, gamma);
  const std::size_t count = grid.size();
  t.kappa = PairTable(count);
  t.z = PairTable(count);
  for (std::size_t m1 = 0; m1 + 1 < count; ++m1) {
    for (std::size_t m2 = m1 + 1; m2 < count; ++m2) {
      const auto w = pair_weights(problem.eigenvalues, tables.q[m1], tables.q[m2]);
      const CriticalValue cv = critical_value_z(w, t.x[m1]);
      if (cv.degenerate) ++t.degenerate_pairs;
      t.z(m1, m2) = cv.z;
      t.kappa(m1, m2) = grid.sigma * cv.z + beta * std::sqrt(tables.v_pair(m1, m2));
    }
  }
  return t;
}

inline ThresholdTable build_thresholds(const SpectralProblem& problem, const FilterSpec& spec,
                                       const CandidateGrid& grid, double beta, double gamma) {
  return build_thresholds(problem, grid, compute_grid_tables(problem, spec, grid), beta, gamma);
}

/// Smallest m1 whose estimator stays within kappa of every finer one;
/// m_max when no earlier index qualifies.
inline std::size_t solit_select(const PairTable& bhat, const PairTable& kappa) {
  const std::size_t count = bhat.candidates();
  for (std::size_t m1 = 0; m1 < count; ++m1) {
    bool accepted = true;
    for (std::size_t m2 = m1 + 1; m2 < count && accepted; ++m2) {
      accepted = bhat(m1, m2) <= kappa(m1, m2);
    }
    if (accepted) return m1;
  }
  return count == 0 ? 0 : count - 1;
}

inline std::size_t solit_select(const PairTable& bhat, const ThresholdTable& thresholds) {
  return solit_select(bhat, thresholds.kappa);
}

/// Deterministic analogue of SOLIT from the noise-free pairwise biases:
/// min m with b_{m1,m2}^2 <= beta^2 v_{m1,m2} for all m <= m1 < m2.
inline std::size_t oracle_select(const PairTable& bias, const PairTable& v_pair, double beta) {
  const std::size_t count = bias.candidates();
  // m* is one past the largest m1 that has a violating partner.
  for (std::size_t m1 = count; m1-- > 0;) {
    for (std::size_t m2 = m1 + 1; m2 < count; ++m2) {
      const double b = bias(m1, m2);
      if (b * b - beta * beta * v_pair(m1, m2) > 0.0) return m1 + 1;
    }
  }
  return 0;
}

/// Classical balancing principle: min m1 with bhat_{m1,m2} <= 4 kappa mu_{m2}
/// for all m2 > m1, mu_m = sqrt(v_m).
inline std::size_t lepskii_select(const PairTable& bhat, const CandidateGrid& grid,
                                  double kappa_tune) {
  if (!(kappa_tune >= 1.0)) throw InvalidParameter("Lepskii tuning constant must be >= 1");
  const std::size_t count = grid.size();
  for (std::size_t m1 = 0; m1 < count; ++m1) {
    bool accepted = true;
    for (std::size_t m2 = m1 + 1; m2 < count && accepted; ++m2) {
      accepted = bhat(m1, m2) <= 4.0 * kappa_tune * std::sqrt(grid.v[m2]);
    }
    if (accepted) return m1;
  }
  return count == 0 ? 0 : count - 1;
}

/// Index of the smallest error; ties go to the smaller index.
inline std::size_t optimal_select(std::span<const double> errors) {
  if (errors.empty()) throw InvalidParameter("optimal_select: no candidates");
  return static_cast<std::size_t>(std::min_element(errors.begin(), errors.end()) - errors.begin());
}

/// alpha closest to sigma on a log scale; ties go to the smaller index.
inline std::size_t noise_level_select(const CandidateGrid& grid, double sigma) {
  if (grid.alphas.empty()) throw InvalidParameter("noise_level_select: empty grid");
  const double target = std::log(sigma);
  std::size_t best = 0;
  double best_gap = std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m < grid.size(); ++m) {
    const double gap = std::abs(std::log(grid.alphas[m]) - target);
    if (gap < best_gap) {
      best_gap = gap;
      best = m;
    }
  }
  return best;
}

/// min m with b_m^2 <= (sqrt(theta1) - 1)^2 beta^2 v_m, where b_m is the bias
/// norm of candidate m; m_max if none qualifies.
inline std::size_t bias_variance_crossing(std::span<const double> bias, std::span<const double> v,
                                          double theta1, double beta) {
  const double factor = (std::sqrt(theta1) - 1.0) * beta;
  for (std::size_t m = 0; m < bias.size(); ++m) {
    if (bias[m] * bias[m] <= factor * factor * v[m]) return m;
  }
  return bias.empty() ? 0 : bias.size() - 1;
}

struct OracleConstants {
  double c1 = 0.0;
  double c2 = 0.0;
};

inline OracleConstants oracle_constants(const CandidateGrid& grid, std::size_t m_star,
                                        double u_star, double beta, double gamma) {
  if (m_star > grid.m_max()) throw InvalidParameter("oracle index outside the grid");
  const double v0 = grid.v.front();
  const double v_star = grid.v[m_star];
  OracleConstants c;
  c.c1 = 2.0 * std::numbers::sqrt3 / (std::pow(grid.theta1, gamma) - 1.0) *
         std::pow(v0 / v_star, 1.0 + gamma);
  const double log_term = 2.0 * (1.0 + gamma) * std::log(v_star / v0) +
                          std::log(1.0 + static_cast<double>(grid.m_max()));
  c.c2 = beta * std::sqrt(v_star) + std::sqrt(2.0 * u_star * log_term);
  return c;
}

inline double price_of_adaptation(double risk, double c2) {
  if (!(risk >= 0.0)) throw InvalidParameter("risk must be nonnegative");
  const double root = std::sqrt(risk) + c2;
  return root * root;
}

enum class Selector { solit, lepskii, oracle, optimal, noise_level };

inline std::string_view selector_name(Selector s) {
  switch (s) {
    case Selector::solit: return "solit";
    case Selector::lepskii: return "lepskii";
    case Selector::oracle: return "oracle";
    case Selector::optimal: return "optimal";
    case Selector::noise_level: return "noise-level";
  }
  return "unknown";
}

inline Selector selector_from_name(std::string_view name) {
  if (name == "solit") return Selector::solit;
  if (name == "lepskii") return Selector::lepskii;
  if (name == "oracle") return Selector::oracle;
  if (name == "optimal") return Selector::optimal;
  if (name == "noise-level") return Selector::noise_level;
  throw ConfigurationError("unknown selector '" + std::string(name) + "'");
}

}  // namespace solit
