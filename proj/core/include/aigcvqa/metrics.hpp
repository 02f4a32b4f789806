// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace aigcvqa {

/// Pearson linear correlation. Throws ErrorKind::degenerate if either input
/// is constant, ErrorKind::shape on length mismatch.
double plcc(std::span<const double> x, std::span<const double> y);

/// 1-based ranks; tied values share the mean of the ranks they span.
std::vector<double> fractional_ranks(std::span<const double> values);

/// Spearman rank correlation: the closed form 1 - 6 sum d^2 / (n (n^2 - 1))
/// when neither input has ties, Pearson of fractional ranks otherwise.
double srocc(std::span<const double> x, std::span<const double> y);

/// (|plcc| + |srocc|) / 2.
double main_score(double plcc_value, double srocc_value) noexcept;
double main_score(std::span<const double> x, std::span<const double> y);

struct EvalReport {
  double plcc = 0.0;
  double srocc = 0.0;
  double main_score = 0.0;
  std::size_t n = 0;

  std::string to_json() const;
};

EvalReport evaluate(std::span<const double> predictions, std::span<const double> targets);

}  // namespace aigcvqa
