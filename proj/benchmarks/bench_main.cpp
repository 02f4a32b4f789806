// SPDX-License-Identifier: Apache-2.0
//
// Microbenchmarks for the hot paths: attention pooling, correlation metrics,
// fragment sampling and one forward/backward pass of the full model.

#include <benchmark/benchmark.h>

#include <vector>

#include "aigcvqa/fusion.hpp"
#include "aigcvqa/metrics.hpp"
#include "aigcvqa/model.hpp"
#include "aigcvqa/objectives.hpp"
#include "aigcvqa/random.hpp"
#include "aigcvqa/sampling.hpp"
#include "aigcvqa/synthetic.hpp"

namespace {

using namespace aigcvqa;

void BM_AttentionPool(benchmark::State& state) {
  const int tokens = static_cast<int>(state.range(0));
  Rng rng(1);
  const AttentionParams p = AttentionParams::init(64, 64, 64, 1, false, rng);
  TokenGrid grid;
  grid.tokens = rng.normal_matrix(tokens, 64, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(attention_pool(grid, p));
  state.SetItemsProcessed(state.iterations() * tokens);
}
BENCHMARK(BM_AttentionPool)->Arg(49)->Arg(392)->Arg(784);

void BM_MainScore(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = rng.normal();
    y[i] = rng.normal();
  }
  for (auto _ : state) benchmark::DoNotOptimize(main_score(x, y));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(n));
}
BENCHMARK(BM_MainScore)->Arg(100)->Arg(10000);

void BM_FragmentSample(benchmark::State& state) {
  SyntheticOptions o;
  o.count = 1;
  o.frames = 16;
  o.height = 270;
  o.width = 480;
  const auto video = make_synthetic_videos(o).front();
  for (auto _ : state) benchmark::DoNotOptimize(fragment_sample(video.frames, 7, 32, 5));
}
BENCHMARK(BM_FragmentSample)->Unit(benchmark::kMillisecond);

void BM_TrainStep(benchmark::State& state) {
  SyntheticOptions o;
  o.count = 4;
  const auto videos = make_synthetic_videos(o);
  TrainConfig config;
  config.frames = 8;
  const QualityModel model(config);
  std::vector<PreparedSample> samples;
  Eigen::VectorXd target(4);
  for (std::size_t i = 0; i < videos.size(); ++i) {
    samples.push_back(model.prepare(videos[i].record, videos[i].frames));
    target(static_cast<Eigen::Index>(i)) = *videos[i].record.mos;
  }
  for (auto _ : state) {
    std::vector<ad::Var> preds;
    for (const auto& s : samples) preds.push_back(model.forward(s).prediction);
    ad::Var loss = plcc_loss(ad::stack_rows(preds), target);
    ad::backward(loss);
    benchmark::DoNotOptimize(loss.scalar());
  }
}
BENCHMARK(BM_TrainStep)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
