#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "solit/candidates.hpp"
#include "solit/sequence_model.hpp"
#include "solit/testproblems.hpp"

using namespace solit;

namespace {

SpectralProblem small_problem() {
  SpectralProblem p;
  p.label = "small";
  p.eigenvalues = {1.0, 0.5, 0.25, 0.1};
  p.truth = {1.0, -2.0, 0.5, 3.0};
  for (std::size_t k = 0; k < 4; ++k) p.data_truth.push_back(std::sqrt(p.eigenvalues[k]) * p.truth[k]);
  return p;
}

}  // namespace

TEST(SpectralProblem, ValidateRejectsBadInput) {
  auto p = small_problem();
  EXPECT_NO_THROW(p.validate());
  auto unordered = p;
  unordered.eigenvalues[2] = 0.7;
  EXPECT_THROW(unordered.validate(), InvalidParameter);
  auto zero = p;
  zero.eigenvalues.back() = 0.0;
  EXPECT_THROW(zero.validate(), InvalidParameter);
  auto short_truth = p;
  short_truth.truth.pop_back();
  EXPECT_THROW(short_truth.validate(), InvalidParameter);
}

TEST(SimulateData, DeterministicGivenSeed) {
  const auto p = small_problem();
  const auto a = simulate_data(p, 0.3, 17);
  const auto b = simulate_data(p, 0.3, 17);
  const auto c = simulate_data(p, 0.3, 18);
  EXPECT_EQ(a.y, b.y);
  EXPECT_NE(a.y, c.y);
  const auto k1 = simulate_data(p, 0.3, {42, 1, 7});
  const auto k2 = simulate_data(p, 0.3, {42, 7, 1});
  EXPECT_NE(k1.y, k2.y);
}

TEST(SimulateData, VanishingNoiseGivesExactData) {
  const auto p = small_problem();
  const auto d = simulate_data(p, 1e-300, 3);
  for (std::size_t k = 0; k < p.size(); ++k) EXPECT_DOUBLE_EQ(d.y[k], p.data_truth[k]);
}

TEST(SimulateData, NoiseHasUnitVariance) {
  SpectralProblem p;
  p.label = "flat";
  p.eigenvalues.assign(10000, 1.0);
  p.truth.assign(10000, 0.0);
  p.data_truth.assign(10000, 0.25);
  const double sigma = 0.01;
  const auto d = simulate_data(p, sigma, 99);
  double mean = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) mean += (d.y[k] - 0.25) / sigma;
  mean /= 10000.0;
  double var = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double e = (d.y[k] - 0.25) / sigma - mean;
    var += e * e;
  }
  var /= 9999.0;
  EXPECT_NEAR(var, 1.0, 0.05);
  EXPECT_NEAR(mean, 0.0, 0.05);
}

TEST(SimulateData, RejectsNonPositiveSigma) {
  const auto p = small_problem();
  EXPECT_THROW(simulate_data(p, 0.0, 1), InvalidParameter);
  EXPECT_THROW(simulate_data(p, -1.0, 1), InvalidParameter);
}

TEST(Estimate, TikhonovScalar) {
  SpectralProblem p;
  p.label = "scalar";
  p.eigenvalues = {1.0};
  p.truth = {1.0};
  p.data_truth = {1.0};
  const std::vector<double> y = {1.0};
  EXPECT_DOUBLE_EQ(estimate(p, y, FilterSpec::tikhonov(), 1.0)[0], 0.5);
}

TEST(Estimate, CutoffBelowSpectrumInvertsExactly) {
  const auto p = small_problem();
  const auto f = estimate(p, p.data_truth, FilterSpec::cutoff(), 0.1);
  for (std::size_t k = 0; k < p.size(); ++k) EXPECT_NEAR(f[k], p.truth[k], 1e-14);
  EXPECT_NEAR(squared_error(f, p), 0.0, 1e-26);
}

TEST(Estimate, IsLinear) {
  const auto p = small_problem();
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n;
  for (const auto& spec : {FilterSpec::tikhonov(), FilterSpec::showalter(), FilterSpec::cutoff()}) {
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<double> y1(p.size()), y2(p.size()), sum(p.size());
      for (std::size_t k = 0; k < p.size(); ++k) {
        y1[k] = n(rng);
        y2[k] = n(rng);
        sum[k] = y1[k] + y2[k];
      }
      const auto f1 = estimate(p, y1, spec, 0.2);
      const auto f2 = estimate(p, y2, spec, 0.2);
      const auto fs = estimate(p, sum, spec, 0.2);
      for (std::size_t k = 0; k < p.size(); ++k) EXPECT_NEAR(fs[k], f1[k] + f2[k], 1e-12);
    }
  }
}

TEST(Estimate, RejectsBadInput) {
  const auto p = small_problem();
  EXPECT_THROW(estimate(p, p.data_truth, FilterSpec::tikhonov(), 0.0), InvalidParameter);
  const std::vector<double> short_y = {1.0};
  EXPECT_THROW(estimate(p, short_y, FilterSpec::tikhonov(), 1.0), InvalidParameter);
}

TEST(PairwiseDistance, Examples) {
  const std::vector<double> a = {3.0, 0.0};
  const std::vector<double> b = {0.0, 4.0};
  EXPECT_DOUBLE_EQ(pairwise_distance(a, b), 5.0);
  EXPECT_EQ(pairwise_distance(a, a), 0.0);
  const std::vector<double> c = {1.0};
  EXPECT_THROW(pairwise_distance(a, c), InvalidParameter);
}

TEST(PairwiseDistance, TriangleInequality) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n;
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> a(6), b(6), c(6);
    for (int k = 0; k < 6; ++k) {
      a[k] = n(rng);
      b[k] = n(rng);
      c[k] = n(rng);
    }
    EXPECT_LE(pairwise_distance(a, c), pairwise_distance(a, b) + pairwise_distance(b, c) + 1e-12);
  }
}

TEST(PairwiseDistance, NoiseFreeMatchesBiasDifference) {
  // Two paths: estimators from exact data vs the closed form
  // sum_k ((1 - r_a) - (1 - r_b))^2 truth_k^2 with r the residual weight.
  const auto p = small_problem();
  const auto spec = FilterSpec::tikhonov();
  const auto fa = estimate(p, p.data_truth, spec, 0.3);
  const auto fb = estimate(p, p.data_truth, spec, 0.05);
  double direct = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double d = residual_weight(spec, 0.05, p.eigenvalues[k]) -
                     residual_weight(spec, 0.3, p.eigenvalues[k]);
    direct += d * d * p.truth[k] * p.truth[k];
  }
  EXPECT_NEAR(pairwise_distance(fa, fb), std::sqrt(direct), 1e-14);
}

TEST(SquaredError, Examples) {
  const auto p = small_problem();
  EXPECT_EQ(squared_error(p.truth, p), 0.0);
  const std::vector<double> zero(p.size(), 0.0);
  EXPECT_DOUBLE_EQ(squared_error(zero, p), 1.0 + 4.0 + 0.25 + 9.0);
  const std::vector<double> short_f = {1.0};
  EXPECT_THROW(squared_error(short_f, p), InvalidParameter);
}

TEST(SequenceModelProperties, BiasNonIncreasingAlongGrid) {
  for (const char* name : {"antiderivative", "gradiometry", "heat"}) {
    const auto p = problem_from_name(name);
    for (const auto& spec : {FilterSpec::tikhonov(), FilterSpec::showalter(), FilterSpec::cutoff()}) {
      const auto grid = build_grid(p, spec, 1e-4, 2.0);
      double previous = std::numeric_limits<double>::infinity();
      for (double alpha : grid.alphas) {
        const double bias = squared_error(estimate(p, p.data_truth, spec, alpha), p);
        EXPECT_LE(bias, previous * (1.0 + 1e-9) + 1e-30) << name << " " << filter_name(spec.kind);
        previous = bias;
      }
    }
  }
}
