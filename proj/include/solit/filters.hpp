#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "solit/error.hpp"

namespace solit {

enum class FilterKind { spectral_cutoff, tikhonov, showalter, landweber };

// Spectral cut-off may only place its threshold on the spectrum; the other
// filters accept any alpha > 0.
enum class AdmissibleSet { continuum, eigenvalues };

/// An ordered spectral filter q_alpha(lambda) with alpha * q <= cq_prime and
/// lambda * q <= 1 on [0, lambda_max].
struct FilterSpec {
  FilterKind kind = FilterKind::tikhonov;
  double cq_prime = 1.0;
  // Landweber relaxation; requires landweber_step * lambda_max <= 1.
  double landweber_step = 1.0;

  AdmissibleSet admissible_set() const noexcept {
    return kind == FilterKind::spectral_cutoff ? AdmissibleSet::eigenvalues
                                               : AdmissibleSet::continuum;
  }

  static FilterSpec tikhonov() { return {FilterKind::tikhonov}; }
  static FilterSpec showalter() { return {FilterKind::showalter}; }
  static FilterSpec cutoff() { return {FilterKind::spectral_cutoff}; }
  static FilterSpec landweber(double step) {
    if (!(step > 0.0) || !std::isfinite(step)) {
      throw InvalidParameter("landweber step must be positive, got " + std::to_string(step));
    }
    return {FilterKind::landweber, 1.0, step};
  }
};

inline std::string_view filter_name(FilterKind kind) {
  switch (kind) {
    case FilterKind::spectral_cutoff: return "cutoff";
    case FilterKind::tikhonov: return "tikhonov";
    case FilterKind::showalter: return "showalter";
    case FilterKind::landweber: return "landweber";
  }
  return "unknown";
}

/// Parses "tikhonov" | "showalter" | "cutoff" | "landweber". The Landweber
/// step defaults to 1 and should be reset to 1/lambda_max by the caller.
inline FilterSpec filter_from_name(std::string_view name) {
  if (name == "tikhonov") return FilterSpec::tikhonov();
  if (name == "showalter") return FilterSpec::showalter();
  if (name == "cutoff" || name == "spectral_cutoff") return FilterSpec::cutoff();
  if (name == "landweber") return FilterSpec::landweber(1.0);
  throw ConfigurationError("unknown filter '" + std::string(name) + "'");
}

namespace detail {

inline void require_alpha(double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw InvalidParameter("regularization parameter must be positive and finite, got " +
                           std::to_string(alpha));
  }
}

// Number of Landweber iterations represented by alpha. Flooring keeps
// alpha * q_alpha(0) = alpha * step * N <= 1.
inline double landweber_iterations(double step, double alpha) {
  return std::floor(1.0 / (step * alpha));
}

}  // namespace detail

/// q_alpha(lambda).
inline double filter_weight(const FilterSpec& spec, double alpha, double lambda) {
  detail::require_alpha(alpha);
  if (!(lambda >= 0.0)) throw InvalidParameter("lambda must be nonnegative");
  switch (spec.kind) {
    case FilterKind::tikhonov:
      return 1.0 / (lambda + alpha);
    case FilterKind::showalter:
      if (lambda == 0.0) return 1.0 / alpha;
      return -std::expm1(-lambda / alpha) / lambda;
    case FilterKind::spectral_cutoff:
      return (lambda >= alpha && lambda > 0.0) ? 1.0 / lambda : 0.0;
    case FilterKind::landweber: {
      const double n = detail::landweber_iterations(spec.landweber_step, alpha);
      if (n <= 0.0) return 0.0;
      if (lambda == 0.0) return spec.landweber_step * n;
      // step * sum_{j<n} (1 - step*lambda)^j = (1 - (1 - step*lambda)^n) / lambda
      return -std::expm1(n * std::log1p(-spec.landweber_step * lambda)) / lambda;
    }
  }
  return 0.0;
}

/// 1 - lambda * q_alpha(lambda), evaluated without cancellation where the
/// closed form allows it.
inline double residual_weight(const FilterSpec& spec, double alpha, double lambda) {
  detail::require_alpha(alpha);
  if (!(lambda >= 0.0)) throw InvalidParameter("lambda must be nonnegative");
  switch (spec.kind) {
    case FilterKind::tikhonov:
      return alpha / (lambda + alpha);
    case FilterKind::showalter:
      return std::exp(-lambda / alpha);
    case FilterKind::spectral_cutoff:
      return (lambda >= alpha && lambda > 0.0) ? 0.0 : 1.0;
    case FilterKind::landweber: {
      const double n = detail::landweber_iterations(spec.landweber_step, alpha);
      if (n <= 0.0) return 1.0;
      return std::exp(n * std::log1p(-spec.landweber_step * lambda));
    }
  }
  return 1.0;
}

struct FilterViolation {
  enum class Kind { negative, alpha_bound, lambda_bound, not_ordered };
  Kind kind;
  double alpha;
  double lambda;
  double value;  // the offending quantity (q, alpha*q, lambda*q or q increase)
};

struct FilterValidationReport {
  std::vector<FilterViolation> violations;
  bool ok() const noexcept { return violations.empty(); }
};

/// Checks the ordered-filter axioms for an arbitrary weight function
/// q(alpha, lambda) on the sample grid. Samples of alpha may be in any order.
template <class Weight>
FilterValidationReport validate_ordered_filter(Weight&& q, double cq_prime,
                                               std::span<const double> alphas,
                                               std::span<const double> lambdas,
                                               double slack = 1e-12) {
  FilterValidationReport report;
  std::vector<double> sorted(alphas.begin(), alphas.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> previous(lambdas.size(), 0.0);
  for (std::size_t a = 0; a < sorted.size(); ++a) {
    const double alpha = sorted[a];
    for (std::size_t l = 0; l < lambdas.size(); ++l) {
      const double lambda = lambdas[l];
      const double value = q(alpha, lambda);
      using K = FilterViolation::Kind;
      if (!(value >= 0.0)) report.violations.push_back({K::negative, alpha, lambda, value});
      if (alpha * value > cq_prime * (1.0 + slack)) {
        report.violations.push_back({K::alpha_bound, alpha, lambda, alpha * value});
      }
      if (lambda * value > 1.0 + slack) {
        report.violations.push_back({K::lambda_bound, alpha, lambda, lambda * value});
      }
      // alpha ascending, so q must not increase
      if (a > 0 && value > previous[l] * (1.0 + slack)) {
        report.violations.push_back({K::not_ordered, alpha, lambda, value - previous[l]});
      }
      previous[l] = value;
    }
  }
  return report;
}

inline FilterValidationReport validate_ordered_filter(const FilterSpec& spec,
                                                      std::span<const double> alphas,
                                                      std::span<const double> lambdas) {
  return validate_ordered_filter(
      [&spec](double alpha, double lambda) { return filter_weight(spec, alpha, lambda); },
      spec.cq_prime, alphas, lambdas);
}

}  // namespace solit
