#pragma once

// Benchmark problems in sequence space. Exact data are produced from the
// analytic right-hand sides (by quadrature or closed-form series), never by
// applying the truncated forward map to the truth.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <numeric>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "solit/error.hpp"
#include "solit/quadrature.hpp"
#include "solit/sequence_model.hpp"

namespace solit {

inline constexpr std::size_t kAntiderivativeDimension = 2000;
inline constexpr std::size_t kGradiometryModes = 129;
inline constexpr std::size_t kHeatModes = 40;
inline constexpr double kGradiometryRadius = 2.0;
inline constexpr double kHeatTime = 0.1;

namespace detail {

inline constexpr std::size_t kQuadratureNodes = 64;

struct Coordinate {
  double eigenvalue;
  double truth;
  double data;
};

// Sorts by decreasing eigenvalue (stable, so ties keep mode order).
inline SpectralProblem assemble(std::vector<Coordinate> coords, std::string label,
                                double tail_trace) {
  std::stable_sort(coords.begin(), coords.end(),
                   [](const Coordinate& a, const Coordinate& b) { return a.eigenvalue > b.eigenvalue; });
  SpectralProblem p;
  p.label = std::move(label);
  p.tail_trace = tail_trace;
  for (const auto& c : coords) {
    p.eigenvalues.push_back(c.eigenvalue);
    p.truth.push_back(c.truth);
    p.data_truth.push_back(c.data);
  }
  p.validate();
  return p;
}

// Fourier coefficient of pi/2 - |x| against cos(kx)/sqrt(pi) on [-pi, pi].
inline double tent_cosine_coefficient(std::size_t k) {
  if (k % 2 == 0) return 0.0;
  const auto dk = static_cast<double>(k);
  return 4.0 / (std::sqrt(std::numbers::pi) * dk * dk);
}

}  // namespace detail

/// (Tf)'' = -f on [0, 1] with homogeneous Dirichlet data. Basis
/// sqrt(2) sin(k pi x), lambda_k = (k pi)^-4; truth is the hat function.
inline SpectralProblem antiderivative_problem(std::size_t n = kAntiderivativeDimension) {
  if (n < 8) throw InvalidParameter("antiderivative problem needs n >= 8");
  const double pi = std::numbers::pi;
  const auto rule = gauss_legendre(detail::kQuadratureNodes);
  auto g = [](double x) {
    if (x <= 0.5) return -x * (4.0 * x * x - 3.0) / 24.0;
    return (x - 1.0) * (4.0 * x * x - 8.0 * x + 1.0) / 24.0;
  };
  std::vector<detail::Coordinate> coords;
  coords.reserve(n);
  for (std::size_t k = 1; k <= n; ++k) {
    const double kpi = static_cast<double>(k) * pi;
    const double lambda = 1.0 / (kpi * kpi * kpi * kpi);
    const double truth = 2.0 * std::numbers::sqrt2 * std::sin(kpi / 2.0) / (kpi * kpi);
    // g is smooth on each half; panels cover at most four periods.
    const std::size_t panels = k / 16 + 1;
    auto integrand = [&](double x) { return g(x) * std::numbers::sqrt2 * std::sin(kpi * x); };
    const double data = integrate(rule, integrand, 0.0, 0.5, panels) +
                        integrate(rule, integrand, 0.5, 1.0, panels);
    coords.push_back({lambda, truth, data});
  }
  const double edge = static_cast<double>(n) + 0.5;
  const double tail = 1.0 / (3.0 * edge * edge * edge * pi * pi * pi * pi);
  return detail::assemble(std::move(coords), "antiderivative", tail);
}

/// 2D satellite gradiometry: Fourier symbol |k|(|k|+1) R^{-|k|-2}, truth
/// pi/2 - |x| on [-pi, pi]. Each |k| = 1..modes contributes a cosine and a
/// sine coordinate; the undeterminable mean is left out.
inline SpectralProblem gradiometry_problem(std::size_t modes = kGradiometryModes,
                                           double radius = kGradiometryRadius) {
  if (modes < 2) throw InvalidParameter("gradiometry problem needs at least 2 modes");
  if (!(radius > 1.0)) throw InvalidParameter("gradiometry radius must exceed 1");
  constexpr std::size_t kSeriesTerms = 128;  // data series truncated at m = 128
  auto eigenvalue = [radius](double k) {
    return k * k * (k + 1.0) * (k + 1.0) * std::pow(radius, -2.0 * k - 4.0);
  };
  std::vector<detail::Coordinate> coords;
  for (std::size_t k = 1; k <= modes; ++k) {
    const auto dk = static_cast<double>(k);
    double data = 0.0;
    if (k % 2 == 1 && (k - 1) / 2 <= kSeriesTerms) {
      // sqrt(pi) times the cosine coefficient (4/pi)(1 + 1/k) R^{-k-2} of g.
      data = 4.0 / std::sqrt(std::numbers::pi) * (1.0 + 1.0 / dk) * std::pow(radius, -dk - 2.0);
    }
    coords.push_back({eigenvalue(dk), detail::tent_cosine_coefficient(k), data});
    coords.push_back({eigenvalue(dk), 0.0, 0.0});
  }
  double tail = 0.0;
  for (double k = static_cast<double>(modes) + 1.0;; k += 1.0) {
    const double term = 2.0 * eigenvalue(k);
    tail += term;
    if (term < 1e-18 * tail || term == 0.0) break;
  }
  return detail::assemble(std::move(coords), "gradiometry", tail);
}

/// Backward periodic heat equation on [-pi, pi] at time t: lambda_k =
/// exp(-2 k^2 t), truth pi/2 - |x|. Mode 0 is kept (lambda = 1, zero truth).
/// Data apply the exact multiplier exp(-k^2 t) to truth coefficients
/// obtained by quadrature.
inline SpectralProblem heat_problem(std::size_t modes = kHeatModes, double time = kHeatTime) {
  if (modes < 2) throw InvalidParameter("heat problem needs at least 2 modes");
  if (!(time > 0.0)) throw InvalidParameter("heat time must be positive");
  const double pi = std::numbers::pi;
  const double norm = 1.0 / std::sqrt(pi);
  const auto rule = gauss_legendre(detail::kQuadratureNodes);
  auto tent = [pi](double x) { return pi / 2.0 - std::abs(x); };
  auto project = [&](auto&& basis, std::size_t k) {
    const std::size_t panels = k / 16 + 1;
    auto integrand = [&](double x) { return tent(x) * basis(x); };
    return integrate(rule, integrand, -pi, 0.0, panels) +
           integrate(rule, integrand, 0.0, pi, panels);
  };

  std::vector<detail::Coordinate> coords;
  {
    const double constant = 1.0 / std::sqrt(2.0 * pi);
    const double mean = project([constant](double) { return constant; }, 0);
    coords.push_back({1.0, 0.0, mean});
  }
  for (std::size_t k = 1; k <= modes; ++k) {
    const auto dk = static_cast<double>(k);
    const double lambda = std::exp(-2.0 * dk * dk * time);
    const double multiplier = std::exp(-dk * dk * time);
    const double cos_coeff = project([&](double x) { return norm * std::cos(dk * x); }, k);
    const double sin_coeff = project([&](double x) { return norm * std::sin(dk * x); }, k);
    coords.push_back({lambda, detail::tent_cosine_coefficient(k), multiplier * cos_coeff});
    coords.push_back({lambda, 0.0, multiplier * sin_coeff});
  }
  if (!(coords.back().eigenvalue > 0.0)) {
    throw InvalidParameter("heat problem: eigenvalues underflow, reduce the number of modes");
  }
  double tail = 0.0;
  for (double k = static_cast<double>(modes) + 1.0;; k += 1.0) {
    const double term = 2.0 * std::exp(-2.0 * k * k * time);
    tail += term;
    if (term < 1e-18 * tail || term == 0.0) break;
  }
  return detail::assemble(std::move(coords), "heat", tail);
}

struct ProblemParameters {
  std::size_t n = 0;  // 0 selects the per-problem default
  double radius = kGradiometryRadius;
  double time = kHeatTime;
};

/// "antiderivative" | "gradiometry" | "heat".
inline SpectralProblem problem_from_name(std::string_view name,
                                         const ProblemParameters& params = {}) {
  if (name == "antiderivative") {
    return antiderivative_problem(params.n ? params.n : kAntiderivativeDimension);
  }
  if (name == "gradiometry") {
    return gradiometry_problem(params.n ? params.n : kGradiometryModes, params.radius);
  }
  if (name == "heat") return heat_problem(params.n ? params.n : kHeatModes, params.time);
  throw ConfigurationError("unknown problem '" + std::string(name) + "'");
}

}  // namespace solit
