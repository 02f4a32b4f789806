// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include <nlohmann/json.hpp>

#include "aigcvqa/error.hpp"
#include "aigcvqa/metrics.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace aigcvqa;
using testutil::kind_of;

namespace {

std::vector<double> random_vector(std::mt19937_64& gen, std::size_t n) {
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = dist(gen);
  return v;
}

}  // namespace

TEST(Plcc, HandPickedVectorMatchesScalarLoop) {
  const std::vector<double> x{1, 2, 3, 4}, y{1, 3, 2, 4};
  EXPECT_NEAR(plcc(x, y), oracle::pearson(x, y), 1e-12);
  EXPECT_NEAR(plcc(x, y), 0.8, 1e-12);  // sxy = 4, sxx = syy = 5
}

TEST(Plcc, IdenticalAndNegatedInputs) {
  const std::vector<double> x{0.5, 1.5, -2.0, 3.0};
  std::vector<double> neg(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) neg[i] = -x[i];
  EXPECT_DOUBLE_EQ(plcc(x, x), 1.0);
  EXPECT_DOUBLE_EQ(plcc(x, neg), -1.0);
}

TEST(Plcc, ErrorCases) {
  const std::vector<double> constant{2, 2, 2}, ramp{1, 2, 3}, shorter{1, 2};
  EXPECT_EQ(kind_of([&] { plcc(constant, ramp); }), ErrorKind::degenerate);
  EXPECT_EQ(kind_of([&] { plcc(ramp, shorter); }), ErrorKind::shape);
  EXPECT_EQ(kind_of([&] { plcc(std::vector<double>{1}, std::vector<double>{2}); }),
            ErrorKind::argument);
  EXPECT_EQ(kind_of([&] { plcc(std::vector<double>{1, NAN}, std::vector<double>{1, 2}); }),
            ErrorKind::input);
}

TEST(Srocc, ReversedRankingIsMinusOne) {
  const std::vector<double> x{3, 1, 4, 1.5, 9}, y{-3, -1, -4, -1.5, -9};
  EXPECT_DOUBLE_EQ(srocc(x, y), -1.0);
}

TEST(Srocc, StrictlyIncreasingTransformIsOne) {
  const std::vector<double> x{0.3, -1.2, 2.5, 0.9, 1.1};
  std::vector<double> y;
  for (double v : x) y.push_back(std::exp(3 * v) + v * v * v);
  EXPECT_DOUBLE_EQ(srocc(x, y), 1.0);
}

TEST(Srocc, TiesUseAverageRanks) {
  const std::vector<double> x{1, 2, 2, 4}, y{1, 3, 2, 4};
  // Ranks: x -> (1, 2.5, 2.5, 4), y -> (1, 3, 2, 4).
  EXPECT_NEAR(srocc(x, y), oracle::pearson({1, 2.5, 2.5, 4}, {1, 3, 2, 4}), 1e-12);
  EXPECT_NEAR(srocc(x, y), oracle::spearman(x, y), 1e-12);
}

TEST(Srocc, AllTiedIsDegenerate) {
  EXPECT_EQ(kind_of([] { srocc(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}); }),
            ErrorKind::degenerate);
}

TEST(FractionalRanks, AverageOverTies) {
  const auto r = fractional_ranks(std::vector<double>{10, 20, 20, 5});
  EXPECT_EQ(r, (std::vector<double>{2, 3.5, 3.5, 1}));
}

TEST(MainScore, ReportedPairAveragesToFourDecimals) {
  const double m = main_score(0.8099, 0.7905);
  EXPECT_NEAR(m, 0.8002, 5e-5);
  EXPECT_EQ(std::round(m * 1e4) / 1e4, 0.8002);
}

TEST(MainScore, IgnoresSign) {
  const std::vector<double> x{1, 2, 3, 5}, y{-1, -2, -3, -5};
  EXPECT_DOUBLE_EQ(main_score(x, x), 1.0);
  EXPECT_DOUBLE_EQ(main_score(x, y), 1.0);
}

TEST(EvalReport, JsonHasAllFields) {
  const std::vector<double> x{1, 2, 3}, y{1, 2, 4};
  const EvalReport r = evaluate(x, y);
  const auto j = nlohmann::json::parse(r.to_json());
  EXPECT_EQ(j.at("n").get<int>(), 3);
  EXPECT_DOUBLE_EQ(j.at("srocc").get<double>(), 1.0);
  EXPECT_NEAR(j.at("plcc").get<double>(), oracle::pearson(x, y), 1e-12);
}

// ---- properties over random inputs

TEST(MetricProperties, TieFreeClosedFormMatchesPearsonOfRanks) {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + gen() % 49;
    std::vector<double> x(n), y(n);
    std::iota(x.begin(), x.end(), 0.0);
    std::iota(y.begin(), y.end(), 0.0);
    std::shuffle(x.begin(), x.end(), gen);
    std::shuffle(y.begin(), y.end(), gen);
    EXPECT_NEAR(srocc(x, y), oracle::pearson(oracle::average_ranks(x), oracle::average_ranks(y)),
                1e-12);
  }
}

TEST(MetricProperties, AffineAndMonotoneInvariance) {
  std::mt19937_64 gen(12);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 3 + gen() % 30;
    const auto x = random_vector(gen, n), y = random_vector(gen, n);
    std::vector<double> affine(n), flipped(n), cubed(n);
    for (std::size_t i = 0; i < n; ++i) {
      affine[i] = 2.5 * x[i] - 7.0;
      flipped[i] = -0.5 * x[i] + 1.0;
      cubed[i] = x[i] * x[i] * x[i] + x[i];
    }
    const double p = plcc(x, y), s = srocc(x, y);
    EXPECT_NEAR(plcc(affine, y), p, 1e-9);
    EXPECT_NEAR(plcc(flipped, y), -p, 1e-9);
    EXPECT_NEAR(srocc(cubed, y), s, 1e-12);
    EXPECT_LE(std::abs(p), 1.0 + 1e-12);
    EXPECT_LE(std::abs(s), 1.0 + 1e-12);
  }
}

TEST(MetricProperties, RandomVectorsWithTiesMatchOracles) {
  std::mt19937_64 gen(13);
  std::uniform_int_distribution<int> coarse(0, 5);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 4 + gen() % 20;
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = coarse(gen);
      y[i] = coarse(gen);
    }
    if (*std::min_element(x.begin(), x.end()) == *std::max_element(x.begin(), x.end())) continue;
    if (*std::min_element(y.begin(), y.end()) == *std::max_element(y.begin(), y.end())) continue;
    EXPECT_NEAR(srocc(x, y), oracle::spearman(x, y), 1e-12);
    EXPECT_NEAR(plcc(x, y), oracle::pearson(x, y), 1e-12);
  }
}
