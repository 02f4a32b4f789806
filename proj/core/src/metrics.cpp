// SPDX-License-Identifier: Apache-2.0

#include "aigcvqa/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "aigcvqa/error.hpp"

namespace aigcvqa {

namespace {

void check_pair(std::span<const double> x, std::span<const double> y, const char* op) {
  if (x.size() != y.size())
    fail(ErrorKind::shape, std::string(op) + ": inputs have different lengths");
  if (x.size() < 2) fail(ErrorKind::argument, std::string(op) + ": need at least 2 samples");
  for (std::size_t i = 0; i < x.size(); ++i)
    if (!std::isfinite(x[i]) || !std::isfinite(y[i]))
      fail(ErrorKind::input, std::string(op) + ": non-finite input");
}

bool has_ties(std::span<const double> v) {
  std::vector<double> sorted(v.begin(), v.end());
  std::sort(sorted.begin(), sorted.end());
  return std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end();
}

}  // namespace

double plcc(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y, "plcc");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (!(sxx > 0) || !(syy > 0)) fail(ErrorKind::degenerate, "correlation undefined for a constant input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> fractional_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    const double rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
    i = j;
  }
  return ranks;
}

double srocc(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y, "srocc");
  const auto rx = fractional_ranks(x);
  const auto ry = fractional_ranks(y);
  if (has_ties(x) || has_ties(y)) return plcc(rx, ry);
  const double n = static_cast<double>(x.size());
  double d2 = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) d2 += (rx[i] - ry[i]) * (rx[i] - ry[i]);
  return 1.0 - 6.0 * d2 / (n * (n * n - 1.0));
}

double main_score(double plcc_value, double srocc_value) noexcept {
  return (std::abs(plcc_value) + std::abs(srocc_value)) / 2.0;
}

double main_score(std::span<const double> x, std::span<const double> y) {
  return main_score(plcc(x, y), srocc(x, y));
}

std::string EvalReport::to_json() const {
  nlohmann::json j;
  j["plcc"] = plcc;
  j["srocc"] = srocc;
  j["main_score"] = main_score;
  j["n"] = n;
  return j.dump();
}

EvalReport evaluate(std::span<const double> predictions, std::span<const double> targets) {
  EvalReport r;
  r.plcc = plcc(predictions, targets);
  r.srocc = srocc(predictions, targets);
  r.main_score = aigcvqa::main_score(r.plcc, r.srocc);
  r.n = predictions.size();
  return r;
}

}  // namespace aigcvqa
