#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "solit/error.hpp"
#include "solit/filters.hpp"
#include "solit/rng.hpp"

namespace solit {

/// An inverse problem written in the eigenbasis of T*T, truncated at n
/// coordinates. Coordinates are sorted so that eigenvalues never increase.
struct SpectralProblem {
  std::vector<double> eigenvalues;  // lambda_1 >= ... >= lambda_n > 0
  std::vector<double> truth;        // coefficients of f-dagger
  std::vector<double> data_truth;   // coefficients of the exact data T f-dagger
  std::string label;
  // Sum of the eigenvalues beyond the truncation. Zero when unknown.
  double tail_trace = 0.0;

  std::size_t size() const noexcept { return eigenvalues.size(); }

  /// Throws InvalidParameter if lengths differ, an eigenvalue is not
  /// positive, or the ordering is violated.
  void validate() const {
    const std::size_t n = eigenvalues.size();
    if (n == 0) throw InvalidParameter(label + ": empty spectrum");
    if (truth.size() != n || data_truth.size() != n) {
      throw InvalidParameter(label + ": eigenvalues, truth and data_truth differ in length");
    }
    for (std::size_t k = 0; k < n; ++k) {
      if (!(eigenvalues[k] > 0.0) || !std::isfinite(eigenvalues[k])) {
        throw InvalidParameter(label + ": eigenvalue " + std::to_string(k) + " not positive");
      }
      if (k > 0 && eigenvalues[k] > eigenvalues[k - 1]) {
        throw InvalidParameter(label + ": eigenvalues not non-increasing at " +
                               std::to_string(k));
      }
    }
  }
};

struct DataRealization {
  std::vector<double> y;
  double sigma = 0.0;
  std::uint64_t seed = 0;
};

/// y_k = g_k + sigma * eps_k; the noise stream is keyed by `key`, so Monte
/// Carlo runs pass (seed, sigma index, run index).
inline DataRealization simulate_data(const SpectralProblem& problem, double sigma,
                                     std::initializer_list<std::uint64_t> key) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw InvalidParameter("noise level must be positive, got " + std::to_string(sigma));
  }
  NormalStream noise(key);
  DataRealization data;
  data.sigma = sigma;
  data.seed = key.size() > 0 ? *key.begin() : 0;
  data.y.resize(problem.size());
  for (std::size_t k = 0; k < problem.size(); ++k) {
    data.y[k] = problem.data_truth[k] + sigma * noise();
  }
  return data;
}

inline DataRealization simulate_data(const SpectralProblem& problem, double sigma,
                                     std::uint64_t seed) {
  return simulate_data(problem, sigma, {seed});
}

/// Coefficient-wise weights q_alpha(lambda_k) * sqrt(lambda_k) that map data
/// coefficients to estimator coefficients.
inline std::vector<double> estimator_weights(std::span<const double> eigenvalues,
                                             const FilterSpec& spec, double alpha) {
  std::vector<double> w(eigenvalues.size());
  for (std::size_t k = 0; k < w.size(); ++k) {
    w[k] = filter_weight(spec, alpha, eigenvalues[k]) * std::sqrt(eigenvalues[k]);
  }
  return w;
}

/// Coefficients of q_alpha(T*T) T* y.
inline std::vector<double> estimate(const SpectralProblem& problem, std::span<const double> y,
                                    const FilterSpec& spec, double alpha) {
  if (y.size() != problem.size()) {
    throw InvalidParameter("data length " + std::to_string(y.size()) +
                           " does not match problem size " + std::to_string(problem.size()));
  }
  std::vector<double> f = estimator_weights(problem.eigenvalues, spec, alpha);
  for (std::size_t k = 0; k < f.size(); ++k) f[k] *= y[k];
  return f;
}

inline std::vector<double> estimate(const SpectralProblem& problem, const DataRealization& data,
                                    const FilterSpec& spec, double alpha) {
  return estimate(problem, data.y, spec, alpha);
}

inline double pairwise_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidParameter("pairwise_distance: length mismatch");
  double sum = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    sum += d * d;
  }
  return std::sqrt(sum);
}

/// Squared norm of the reconstruction error.
inline double squared_error(std::span<const double> estimate, const SpectralProblem& problem) {
  if (estimate.size() != problem.size()) {
    throw InvalidParameter("squared_error: length mismatch");
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < estimate.size(); ++k) {
    const double d = estimate[k] - problem.truth[k];
    sum += d * d;
  }
  return sum;
}

}  // namespace solit
