#pragma once

// Tail probabilities and quantiles of Z = sum_i a_i eps_i^2 with a_i >= 0 and
// eps_i iid standard normal, via a four-cumulant non-central chi-square
// match, plus a Monte Carlo reference.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "solit/error.hpp"
#include "solit/filters.hpp"
#include "solit/rng.hpp"
#include "solit/sequence_model.hpp"

namespace solit {

/// Power sums c_k = trace(A^k) = sum_i a_i^k, k = 1..4.
struct Cumulants {
  double c1 = 0.0;
  double c2 = 0.0;
  double c3 = 0.0;
  double c4 = 0.0;
  double max_weight = 0.0;
};

inline Cumulants cumulant_traces(std::span<const double> weights) {
  if (weights.empty()) throw InvalidParameter("cumulant_traces: empty weight vector");
  Cumulants c;
  for (double a : weights) {
    if (!(a >= 0.0)) throw InvalidParameter("generalized chi-square weights must be >= 0");
    const double a2 = a * a;
    c.c1 += a;
    c.c2 += a2;
    c.c3 += a2 * a;
    c.c4 += a2 * a2;
    c.max_weight = std::max(c.max_weight, a);
  }
  return c;
}

/// P(chi^2_l(delta) > x) as a Poisson(delta/2) mixture of central chi-square
/// tails. Terms are added outward from the Poisson mode until the neglected
/// Poisson mass is below 1e-14 and below 1e-15 of the accumulated tail, so
/// far-tail probabilities keep their relative accuracy.
inline double noncentral_chi2_sf(double dof, double delta, double x) {
  if (!(dof > 0.0)) throw InvalidParameter("chi-square degrees of freedom must be positive");
  if (!(delta >= 0.0)) throw InvalidParameter("non-centrality must be nonnegative");
  if (x <= 0.0) return 1.0;
  if (!std::isfinite(x)) return 0.0;
  const double half_x = 0.5 * x;
  if (delta == 0.0) return boost::math::gamma_q(0.5 * dof, half_x);

  const double mean = 0.5 * delta;
  const double mode = std::floor(mean);
  const double mode_weight = std::exp(-mean + mode * std::log(mean) - std::lgamma(mode + 1.0));
  auto term = [&](double j) { return boost::math::gamma_q(0.5 * dof + j, half_x); };

  double sum = mode_weight * term(mode);
  double mass = mode_weight;

  // Upward: the central tails grow with j, so bound the remainder by the
  // Poisson mass alone.
  double weight = mode_weight;
  for (double j = mode + 1.0;; j += 1.0) {
    weight *= mean / j;
    sum += weight * term(j);
    mass += weight;
    const double ratio = mean / (j + 1.0);
    const double remaining = ratio < 1.0 ? weight * ratio / (1.0 - ratio) : 1.0;
    if (remaining < 1e-14 && remaining <= 1e-15 * sum) break;
    if (weight == 0.0) break;
  }
  // Downward: both the weights and the central tails shrink.
  weight = mode_weight;
  for (double j = mode - 1.0; j >= 0.0; j -= 1.0) {
    weight *= (j + 1.0) / mean;
    const double contribution = weight * term(j);
    sum += contribution;
    mass += weight;
    const double ratio = j / mean;
    const double remaining = weight * ratio / (1.0 - ratio);
    if (remaining < 1e-14 && contribution <= 1e-17 * sum) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

/// Parameters of the matched non-central chi-square.
struct LtzParameters {
  double dof = 0.0;
  double noncentrality = 0.0;
  double a = 0.0;
  // Set when the skewness is so small that the matched chi-square would have
  // more than 1e12 degrees of freedom; the Gaussian limit is used instead.
  bool gaussian = false;
};

inline LtzParameters ltz_parameters(const Cumulants& c) {
  if (!(c.c2 > 0.0)) throw InvalidParameter("ltz approximation requires c2 > 0");
  const double s1 = c.c3 / std::pow(c.c2, 1.5);
  const double s2 = c.c4 / (c.c2 * c.c2);
  LtzParameters p;
  if (!(s1 > 1e-6)) {
    p.gaussian = true;
    return p;
  }
  if (s1 * s1 > s2) {
    p.a = 1.0 / (s1 - std::sqrt(s1 * s1 - s2));
    p.noncentrality = std::max(0.0, s1 * p.a * p.a * p.a - p.a * p.a);
    p.dof = p.a * p.a - 2.0 * p.noncentrality;
  } else {
    p.noncentrality = 0.0;
    p.dof = c.c2 * c.c2 * c.c2 / (c.c3 * c.c3);
    p.a = 1.0 / s1;
  }
  return p;
}

/// Approximate P(Z > t).
inline double ltz_tail_sf(const Cumulants& c, double t) {
  const LtzParameters p = ltz_parameters(c);
  const double standardized = (t - c.c1) / std::sqrt(2.0 * c.c2);
  if (p.gaussian) return 0.5 * std::erfc(standardized / std::sqrt(2.0));
  const double mapped = std::sqrt(2.0) * p.a * standardized + p.dof + p.noncentrality;
  return noncentral_chi2_sf(p.dof, p.noncentrality, mapped);
}

/// t with ltz_tail_sf(t) = p, by bisection on [0, c1 + 20 sqrt(2 c2) + 20 max a]
/// (widened while the upper end still has tail mass above p).
inline double ltz_tail_quantile(const Cumulants& c, double p) {
  if (!(p > 0.0 && p < 1.0)) throw InvalidParameter("tail probability must lie in (0, 1)");
  const LtzParameters params = ltz_parameters(c);
  if (params.gaussian) {
    return std::max(0.0, c.c1 + std::sqrt(2.0 * c.c2) * std::sqrt(2.0) *
                                    boost::math::erfc_inv(2.0 * p));
  }
  double lo = 0.0;
  double hi = c.c1 + 20.0 * std::sqrt(2.0 * c.c2) + 20.0 * c.max_weight;
  for (int grow = 0; grow < 200 && ltz_tail_sf(c, hi) > p; ++grow) {
    lo = hi;
    hi *= 2.0;
  }
  if (ltz_tail_sf(c, lo) <= p) return lo;
  while (hi - lo > 1e-10 * hi) {
    const double mid = 0.5 * (lo + hi);
    if (ltz_tail_sf(c, mid) > p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// Fraction of c2 the Monte Carlo sampler may hand to its Gaussian tail.
inline constexpr double kGaussianTailBudget = 1e-4;

/// Monte Carlo draws of Z, deterministic given `seed`.
///
/// Weights are sorted in decreasing order and drawn exactly (equal weights
/// pooled in pairs as -2 log U) until the rest carries at most
/// kGaussianTailBudget of c2; that rest is replaced by a normal variable with
/// its exact mean and variance. Its standard deviation is then below 1% of
/// the total, so the neglected skewness moves quantiles by ~1e-5 relative.
inline std::vector<double> mc_samples(std::span<const double> weights, std::size_t samples,
                                      std::uint64_t seed) {
  if (samples < 1000) throw InvalidParameter("Monte Carlo quantiles need at least 1000 samples");
  const Cumulants c = cumulant_traces(weights);
  std::vector<double> sorted(weights.begin(), weights.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());

  std::vector<double> tail_c2(sorted.size() + 1, 0.0);  // sum of a^2 from index i on
  for (std::size_t i = sorted.size(); i-- > 0;) tail_c2[i] = tail_c2[i + 1] + sorted[i] * sorted[i];
  std::size_t exact = 0;
  while (exact < sorted.size() && tail_c2[exact] > kGaussianTailBudget * c.c2) ++exact;
  double tail_mean = 0.0;
  for (std::size_t i = exact; i < sorted.size(); ++i) tail_mean += sorted[i];
  const double tail_sd = std::sqrt(2.0 * tail_c2[exact]);

  struct Group {
    double weight;
    std::size_t pairs;
    bool odd;
  };
  std::vector<Group> groups;
  for (std::size_t i = 0; i < exact;) {
    std::size_t j = i;
    while (j < exact && sorted[j] == sorted[i]) ++j;
    groups.push_back({sorted[i], (j - i) / 2, (j - i) % 2 == 1});
    i = j;
  }

  NormalStream stream({seed, 0x6d63ull});
  std::vector<double> draws(samples);
  for (auto& z : draws) {
    double sum = tail_mean;
    for (const auto& g : groups) {
      double chi2 = 0.0;
      for (std::size_t p = 0; p < g.pairs; ++p) chi2 -= 2.0 * std::log(stream.uniform());
      if (g.odd) {
        const double e = stream();
        chi2 += e * e;
      }
      sum += g.weight * chi2;
    }
    if (tail_sd > 0.0) sum += tail_sd * stream();
    z = sum;
  }
  return draws;
}

/// Empirical upper-p point of sorted-in-place draws.
inline double empirical_upper_quantile(std::vector<double>& draws, double p) {
  if (!(p > 0.0 && p < 1.0)) throw InvalidParameter("tail probability must lie in (0, 1)");
  const auto n = draws.size();
  auto index = static_cast<std::size_t>(std::floor((1.0 - p) * static_cast<double>(n)));
  index = std::min(index, n - 1);
  std::nth_element(draws.begin(), draws.begin() + static_cast<std::ptrdiff_t>(index), draws.end());
  return draws[index];
}

/// Empirical (1 - p)-quantile of Z from `samples` draws.
inline double mc_tail_quantile(std::span<const double> weights, double p, std::size_t samples,
                               std::uint64_t seed) {
  auto draws = mc_samples(weights, samples, seed);
  return empirical_upper_quantile(draws, p);
}

/// a_i = lambda_i (q_a(lambda_i) - q_b(lambda_i))^2 from two rows of filter values.
inline std::vector<double> pair_weights(std::span<const double> eigenvalues,
                                        std::span<const double> q_a, std::span<const double> q_b) {
  std::vector<double> w(eigenvalues.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double d = q_a[i] - q_b[i];
    w[i] = eigenvalues[i] * d * d;
  }
  return w;
}

inline std::vector<double> pair_weights(const SpectralProblem& problem, const FilterSpec& spec,
                                        double alpha_a, double alpha_b) {
  std::vector<double> w(problem.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double lambda = problem.eigenvalues[i];
    const double d = filter_weight(spec, alpha_a, lambda) - filter_weight(spec, alpha_b, lambda);
    w[i] = lambda * d * d;
  }
  return w;
}

struct CriticalValue {
  double z = 0.0;
  // Both filters agree on the whole spectrum; the difference is identically 0.
  bool degenerate = false;
};

/// z with P(||noise difference|| > z) = e^{-x}, for unit noise level. The
/// squared norm is the generalized chi-square, hence the square root.
inline CriticalValue critical_value_z(std::span<const double> weights, double x) {
  if (!(x >= 0.0)) throw InvalidParameter("critical value budget x must be nonnegative");
  const Cumulants c = cumulant_traces(weights);
  if (c.max_weight == 0.0) return {0.0, true};
  if (x == 0.0) return {0.0, false};
  return {std::sqrt(ltz_tail_quantile(c, std::exp(-x))), false};
}

inline CriticalValue critical_value_z(const SpectralProblem& problem, const FilterSpec& spec,
                                      double alpha_a, double alpha_b, double x) {
  if (alpha_a == alpha_b) throw InvalidParameter("critical value needs two distinct parameters");
  return critical_value_z(pair_weights(problem, spec, alpha_a, alpha_b), x);
}

}  // namespace solit
