#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <ostream>
#include <span>
#include <utility>
#include <vector>

#include "solit/error.hpp"
#include "solit/filters.hpp"
#include "solit/rng.hpp"
#include "solit/sequence_model.hpp"

namespace solit {

/// V(alpha) = sum_k lambda_k q_alpha(lambda_k)^2, the trace of the estimator
/// covariance in units of sigma^2.
inline double variance_V(const SpectralProblem& problem, const FilterSpec& spec, double alpha) {
  detail::require_alpha(alpha);
  double sum = 0.0;
  for (double lambda : problem.eigenvalues) {
    const double q = filter_weight(spec, alpha, lambda);
    sum += lambda * q * q;
  }
  return sum;
}

/// sigma^2 max_k lambda_k q_alpha(lambda_k)^2, the operator norm of the
/// estimator covariance.
inline double weak_variance_u(const SpectralProblem& problem, const FilterSpec& spec,
                              double alpha, double sigma) {
  detail::require_alpha(alpha);
  if (!(sigma >= 0.0)) throw InvalidParameter("noise level must be nonnegative");
  double largest = 0.0;
  for (double lambda : problem.eigenvalues) {
    const double q = filter_weight(spec, alpha, lambda);
    largest = std::max(largest, lambda * q * q);
  }
  return sigma * sigma * largest;
}

/// sigma^2 sum_k lambda_k (q_a(lambda_k) - q_b(lambda_k))^2, the trace of the
/// covariance of the difference of two estimators.
inline double pairwise_variance_v(const SpectralProblem& problem, const FilterSpec& spec,
                                  double alpha_a, double alpha_b, double sigma) {
  detail::require_alpha(alpha_a);
  detail::require_alpha(alpha_b);
  double sum = 0.0;
  for (double lambda : problem.eigenvalues) {
    const double d = filter_weight(spec, alpha_a, lambda) - filter_weight(spec, alpha_b, lambda);
    sum += lambda * d * d;
  }
  return sigma * sigma * sum;
}

struct VarianceBracket {
  double alpha_lo;  // small alpha, large V
  double alpha_hi;  // large alpha, small V
};

struct LineSearchResult {
  double alpha;
  double variance;        // V(alpha)
  double achieved_error;  // |log V(alpha) - log target|
};

namespace detail {

inline double log_gap(double variance, double target) {
  if (variance <= 0.0) return std::numeric_limits<double>::infinity();
  return std::abs(std::log(variance) - std::log(target));
}

inline LineSearchResult make_result(const SpectralProblem& problem, const FilterSpec& spec,
                                    double alpha, double target) {
  const double v = variance_V(problem, spec, alpha);
  return {alpha, v, log_gap(v, target)};
}

// Distinct eigenvalues in [lo, hi], descending.
inline std::vector<double> admissible_cutoffs(const SpectralProblem& problem, double lo,
                                              double hi) {
  std::vector<double> out;
  for (double lambda : problem.eigenvalues) {
    if (lambda < lo || lambda > hi) continue;
    if (out.empty() || out.back() != lambda) out.push_back(lambda);
  }
  return out;
}

}  // namespace detail

/// Solves V(alpha) = target inside the bracket.
///
/// Continuum filters are bisected in log(alpha) until the log-variance gap is
/// at most `tol`. If the equation has no solution there (target outside the
/// attainable range, or a jump of V across the target) the admissible alpha
/// with the smallest V not below the target is returned instead, together
/// with its gap; when even V(alpha_lo) is below the target, alpha_lo is
/// returned. For spectral cut-off the search runs over the eigenvalues.
inline LineSearchResult line_search_variance(const SpectralProblem& problem,
                                             const FilterSpec& spec, double target, double tol,
                                             VarianceBracket bracket) {
  if (!(target > 0.0)) throw InvalidParameter("line search target must be positive");
  if (!(tol > 0.0)) throw InvalidParameter("line search tolerance must be positive");
  if (!(bracket.alpha_lo > 0.0) || !(bracket.alpha_hi >= bracket.alpha_lo)) {
    throw InvalidParameter("line search bracket must satisfy 0 < alpha_lo <= alpha_hi");
  }

  if (spec.admissible_set() == AdmissibleSet::eigenvalues) {
    const auto cutoffs = detail::admissible_cutoffs(problem, bracket.alpha_lo, bracket.alpha_hi);
    if (cutoffs.empty()) throw InvalidParameter("no admissible cut-off inside the bracket");
    // V grows along `cutoffs`; find the first entry with V >= target.
    std::size_t lo = 0;
    std::size_t hi = cutoffs.size();
    while (lo < hi) {
      const std::size_t mid = lo + (hi - lo) / 2;
      if (variance_V(problem, spec, cutoffs[mid]) >= target) {
        hi = mid;
      } else {
        lo = mid + 1;
      }
    }
    if (lo == cutoffs.size()) return detail::make_result(problem, spec, cutoffs.back(), target);
    auto upper = detail::make_result(problem, spec, cutoffs[lo], target);
    if (lo > 0) {
      auto lower = detail::make_result(problem, spec, cutoffs[lo - 1], target);
      if (lower.achieved_error <= tol && lower.achieved_error < upper.achieved_error) return lower;
    }
    return upper;
  }

  double lo = bracket.alpha_lo;
  double hi = bracket.alpha_hi;
  auto at_lo = detail::make_result(problem, spec, lo, target);
  if (at_lo.variance < target || at_lo.achieved_error <= tol) return at_lo;
  auto at_hi = detail::make_result(problem, spec, hi, target);
  if (at_hi.variance >= target || at_hi.achieved_error <= tol) return at_hi;

  // Invariant: V(lo) >= target > V(hi).
  for (int step = 0; step < 200; ++step) {
    const double mid = std::sqrt(lo * hi);
    if (!(mid > lo && mid < hi)) break;
    auto at_mid = detail::make_result(problem, spec, mid, target);
    if (at_mid.achieved_error <= tol) return at_mid;
    if (at_mid.variance >= target) {
      lo = mid;
      at_lo = at_mid;
    } else {
      hi = mid;
    }
  }
  return at_lo;
}

/// Candidate parameters alpha_0 > ... > alpha_mmax whose variances grow
/// geometrically with ratios in [theta1, theta2].
struct CandidateGrid {
  std::vector<double> alphas;
  std::vector<double> v;  // sigma^2 V(alpha_m)
  double theta1 = 0.0;
  double theta2 = 0.0;
  double sigma = 0.0;
  // True when a jump of V forced a ratio above theta + (theta - 1) / 2.
  bool theta2_enlarged = false;
  // |log V(alpha_0) - log anchor|
  double anchor_gap = 0.0;
  // Upper bound on the variance omitted by truncation at alpha_mmax,
  // relative to the retained variance. NaN when the problem has no tail.
  double truncation_ratio = std::numeric_limits<double>::quiet_NaN();
  bool truncation_ok = true;

  std::size_t m_max() const noexcept { return alphas.empty() ? 0 : alphas.size() - 1; }
  std::size_t size() const noexcept { return alphas.size(); }
  double ratio(std::size_t m) const { return v.at(m) / v.at(m - 1); }
};

struct GridOptions {
  // V(alpha_0) target; v_0 = sigma^2 * anchor.
  double anchor = 1.0;
  // Log-scale tolerance of each line search. Must not exceed log(theta2/theta).
  double tol = 1e-3;
  std::size_t max_candidates = 10000;
  // Omitted tail variance allowed relative to the retained variance.
  double truncation_budget = 1e-4;
};

/// Builds the candidate grid by successive line searches
/// log V(alpha_m) = log theta + log V(alpha_{m-1}), stopping at the first
/// m >= 1 with sigma^2 V(alpha_m) >= 1.
inline CandidateGrid build_grid(const SpectralProblem& problem, const FilterSpec& spec,
                                double sigma, double theta, const GridOptions& options = {}) {
  if (!(theta > 1.0)) throw InvalidParameter("theta must exceed 1");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw InvalidParameter("sigma must be positive");
  problem.validate();

  CandidateGrid grid;
  grid.sigma = sigma;
  grid.theta1 = theta - (theta - 1.0) / 2.0;
  grid.theta2 = theta + (theta - 1.0) / 2.0;
  const double tol = std::min(options.tol, std::log(grid.theta2 / theta));

  const double lambda_max = problem.eigenvalues.front();
  const double lambda_min = problem.eigenvalues.back();
  const bool discrete = spec.admissible_set() == AdmissibleSet::eigenvalues;
  const double alpha_floor = discrete ? lambda_min : lambda_min * 1e-3;
  double alpha_ceiling = lambda_max;
  if (!discrete) {
    // q_alpha <= 1/alpha gives V(alpha) <= trace / alpha^2.
    double trace = 0.0;
    for (double lambda : problem.eigenvalues) trace += lambda;
    alpha_ceiling = 2.0 * std::max(lambda_max, std::sqrt(trace / options.anchor));
  }

  auto first = line_search_variance(problem, spec, options.anchor, tol,
                                    {alpha_floor, alpha_ceiling});
  if (!(first.variance > 0.0)) {
    throw ConfigurationError(problem.label + ": no candidate with positive variance");
  }
  grid.anchor_gap = first.achieved_error;
  grid.alphas.push_back(first.alpha);
  grid.v.push_back(sigma * sigma * first.variance);

  const double sigma2 = sigma * sigma;
  double previous_V = first.variance;
  while (grid.alphas.size() < 2 || grid.v.back() < 1.0) {
    if (grid.alphas.size() >= options.max_candidates) {
      throw ConfigurationError(problem.label + ": candidate grid exceeds " +
                               std::to_string(options.max_candidates) + " entries");
    }
    const double target = theta * previous_V;
    auto next = line_search_variance(problem, spec, target, tol,
                                     {alpha_floor, grid.alphas.back()});
    const double ratio = next.variance / previous_V;
    if (!(next.alpha < grid.alphas.back()) || !(ratio >= grid.theta1)) {
      throw ConfigurationError(problem.label +
                               ": variance cannot grow further; increase the truncation "
                               "dimension or the noise level");
    }
    grid.alphas.push_back(next.alpha);
    grid.v.push_back(sigma2 * next.variance);
    previous_V = next.variance;
    // compare the stored ratio so theta2 bounds exactly what callers see
    const double stored = grid.ratio(grid.size() - 1);
    if (stored > grid.theta2) {
      grid.theta2 = stored;
      grid.theta2_enlarged = true;
    }
  }

  if (problem.tail_trace > 0.0) {
    const double alpha_min = grid.alphas.back();
    const double omitted = problem.tail_trace / (alpha_min * alpha_min);
    grid.truncation_ratio = omitted / previous_V;
    grid.truncation_ok = grid.truncation_ratio <= options.truncation_budget;
  }
  return grid;
}

/// q_{alpha_m}(lambda_k) for every candidate, row-major by m.
inline std::vector<std::vector<double>> filter_table(const SpectralProblem& problem,
                                                     const FilterSpec& spec,
                                                     std::span<const double> alphas) {
  std::vector<std::vector<double>> table(alphas.size());
  for (std::size_t m = 0; m < alphas.size(); ++m) {
    table[m].resize(problem.size());
    for (std::size_t k = 0; k < problem.size(); ++k) {
      table[m][k] = filter_weight(spec, alphas[m], problem.eigenvalues[k]);
    }
  }
  return table;
}

/// Unbiased Hutchinson estimate of trace(A) from Rademacher probes.
/// `apply` maps a probe vector z to A z.
template <class Apply>
double hutchinson_trace(std::size_t n, Apply&& apply, int probes, std::uint64_t seed) {
  if (probes < 1) throw InvalidParameter("hutchinson_trace needs at least one probe");
  NormalStream stream({seed, 0x48757463ull});
  std::vector<double> z(n);
  double sum = 0.0;
  for (int p = 0; p < probes; ++p) {
    for (auto& zi : z) zi = stream.sign();
    const std::vector<double> az = apply(std::as_const(z));
    double dot = 0.0;
    for (std::size_t i = 0; i < n; ++i) dot += z[i] * az[i];
    sum += dot;
  }
  return sum / probes;
}

/// CSV with columns m, alpha, v_m, ratio (ratio is nan for m = 0).
inline void write_grid_csv(std::ostream& out, const CandidateGrid& grid) {
  const auto precision = out.precision();
  out.precision(17);
  out << "m,alpha,v_m,ratio\n";
  for (std::size_t m = 0; m < grid.size(); ++m) {
    out << m << ',' << grid.alphas[m] << ',' << grid.v[m] << ',';
    if (m == 0) {
      out << "nan";
    } else {
      out << grid.ratio(m);
    }
    out << '\n';
  }
  out.precision(precision);
}

}  // namespace solit
