// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "aigcvqa/ensemble.hpp"
#include "aigcvqa/error.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace aigcvqa;
using testutil::kind_of;

namespace {

PredictionSet make_set(std::vector<std::string> names, std::vector<double> scores) {
  PredictionSet s;
  s.names = std::move(names);
  s.scores = std::move(scores);
  return s;
}

PredictionSet random_set(std::mt19937_64& gen, int n) {
  std::normal_distribution<double> nd(3, 1);
  PredictionSet s;
  for (int i = 0; i < n; ++i) {
    s.names.push_back(std::to_string(i) + "_" + std::to_string(i % 10) + ".mp4");
    s.scores.push_back(nd(gen));
  }
  return s;
}

PredictionSet reversed(const PredictionSet& s) {
  PredictionSet r;
  r.names.assign(s.names.rbegin(), s.names.rend());
  r.scores.assign(s.scores.rbegin(), s.scores.rend());
  return r;
}

}  // namespace

TEST(Ensemble, ProjectionIdempotenceAndMean) {
  std::mt19937_64 gen(21);
  const auto a = random_set(gen, 20), b = random_set(gen, 20);
  const std::vector<PredictionSet> ab{a, b};
  const std::vector<double> w10{1, 0};
  const auto proj = ensemble_predictions(ab, w10, false);
  EXPECT_EQ(proj.names, a.names);
  EXPECT_EQ(proj.scores, a.scores);

  const std::vector<PredictionSet> aa{a, a};
  const std::vector<double> half{0.5, 0.5};
  const auto same = ensemble_predictions(aa, half, false);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(same.scores[i], a.scores[i], 1e-15);

  const std::vector<PredictionSet> one{make_set({"1_0.mp4"}, {2.0}), make_set({"1_0.mp4"}, {4.0})};
  const std::vector<double> ones{1, 1};
  EXPECT_EQ(ensemble_predictions(one, ones, false).scores[0], 3.0);
}

TEST(Ensemble, MemberRowOrderDoesNotMatter) {
  std::mt19937_64 gen(22);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = random_set(gen, 15), b = random_set(gen, 15);
    const std::vector<double> w{0.3, 1.7};
    const std::vector<PredictionSet> plain{a, b}, shuffled{a, reversed(b)};
    for (bool norm : {false, true}) {
      const auto x = ensemble_predictions(plain, w, norm), y = ensemble_predictions(shuffled, w, norm);
      for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(x.scores[i], y.scores[i], 1e-12);
    }
  }
}

TEST(Ensemble, WeightedAverageOracle) {
  std::mt19937_64 gen(23);
  const auto a = random_set(gen, 10), b = random_set(gen, 10), c = random_set(gen, 10);
  const std::vector<PredictionSet> abc{a, b, c};
  const std::vector<double> w{0.2, 0.5, 1.3};
  const auto out = ensemble_predictions(abc, w, false);
  for (std::size_t i = 0; i < 10; ++i)
    EXPECT_NEAR(out.scores[i], (0.2 * a.scores[i] + 0.5 * b.scores[i] + 1.3 * c.scores[i]) / 2.0, 1e-12);
}

TEST(Ensemble, Errors) {
  const auto a = make_set({"1_0.mp4", "2_0.mp4"}, {1, 2});
  const auto b = make_set({"1_0.mp4", "3_0.mp4"}, {1, 2});
  const std::vector<PredictionSet> ab{a, b};
  const std::vector<double> w{1, 1}, zero{0, 0}, cancel{1, -1};
  EXPECT_EQ(kind_of([&] { ensemble_predictions(ab, w, false); }), ErrorKind::alignment);
  try {
    ensemble_predictions(ab, w, false);
  } catch (const Error& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("2_0.mp4"), std::string::npos);
    EXPECT_NE(msg.find("3_0.mp4"), std::string::npos);
  }
  const std::vector<PredictionSet> aa{a, a};
  EXPECT_EQ(kind_of([&] { ensemble_predictions(aa, zero, false); }), ErrorKind::argument);
  EXPECT_EQ(kind_of([&] { ensemble_predictions(aa, cancel, false); }), ErrorKind::argument);
}

TEST(Ensemble, ZScore) {
  const std::vector<double> v{1, 2, 3, 4};
  const auto z = zscore(v);
  const double sd = std::sqrt(1.25);
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_NEAR(z[i], (v[i] - 2.5) / sd, 1e-15);
  const std::vector<double> c{7, 7, 7};
  EXPECT_EQ(zscore(c), (std::vector<double>{0, 0, 0}));
}

TEST(Ensemble, ParseMember) {
  const auto m = parse_member("dir/a:b.csv:0.25");
  EXPECT_EQ(m.path, "dir/a:b.csv");
  EXPECT_EQ(m.weight, 0.25);
  EXPECT_EQ(parse_member("plain.csv").weight, 1.0);
  EXPECT_EQ(kind_of([] { parse_member(":2"); }), ErrorKind::argument);
}

TEST(EnsembleFit, ExactMemberGetsUnitWeight) {
  std::mt19937_64 gen(24);
  for (int trial = 0; trial < 20; ++trial) {
    const auto target = random_set(gen, 30), other = random_set(gen, 30);
    const std::vector<PredictionSet> members{other, reversed(target)};
    const auto fit = fit_ensemble_weights(members, target);
    EXPECT_NEAR(fit.weights[1], 1.0, 1e-6);
    EXPECT_NEAR(fit.weights[0], 0.0, 1e-6);
    EXPECT_NEAR(fit.fitted_srocc, 1.0, 1e-12);
    EXPECT_EQ(fit.rank, 2);
  }
}

TEST(EnsembleFit, MatchesNormalEquations) {
  std::mt19937_64 gen(25);
  const auto t = random_set(gen, 40), a = random_set(gen, 40), b = random_set(gen, 40);
  const std::vector<PredictionSet> members{a, b};
  const auto fit = fit_ensemble_weights(members, t);
  // 2x2 normal equations solved by Cramer's rule.
  double aa = 0, ab = 0, bb = 0, at = 0, bt = 0;
  for (std::size_t i = 0; i < 40; ++i) {
    aa += a.scores[i] * a.scores[i];
    ab += a.scores[i] * b.scores[i];
    bb += b.scores[i] * b.scores[i];
    at += a.scores[i] * t.scores[i];
    bt += b.scores[i] * t.scores[i];
  }
  const double det = aa * bb - ab * ab;
  EXPECT_NEAR(fit.weights[0], (at * bb - ab * bt) / det, 1e-9);
  EXPECT_NEAR(fit.weights[1], (aa * bt - ab * at) / det, 1e-9);
}

TEST(EnsembleFit, RankDeficientGivesMinimumNorm) {
  std::mt19937_64 gen(26);
  const auto t = random_set(gen, 12);
  PredictionSet neg = t;
  for (double& s : neg.scores) s = -s;
  const std::vector<PredictionSet> members{t, neg};
  const auto fit = fit_ensemble_weights(members, t);
  EXPECT_EQ(fit.rank, 1);
  EXPECT_NEAR(fit.weights[0], 0.5, 1e-9);
  EXPECT_NEAR(fit.weights[1], -0.5, 1e-9);

  PredictionSet zero = t;
  for (double& s : zero.scores) s = 0;
  const std::vector<PredictionSet> with_zero{zero, t};
  const auto fz = fit_ensemble_weights(with_zero, t);
  EXPECT_NEAR(fz.weights[0], 0.0, 1e-12);
  EXPECT_NEAR(fz.weights[1], 1.0, 1e-9);

  const std::vector<PredictionSet> zeros{zero, zero};
  EXPECT_EQ(kind_of([&] { fit_ensemble_weights(zeros, t); }), ErrorKind::fit);
  const std::vector<PredictionSet> single{t};
  EXPECT_EQ(kind_of([&] { fit_ensemble_weights(single, t); }), ErrorKind::argument);
}

TEST(PredictionFiles, RoundTripAndSchema) {
  const auto dir = oracle::temp_dir("ensemble_files");
  const auto s = make_set({"1_0.mp4", "2_1.mp4"}, {0.1234564, 3.5});
  write_predictions(s, dir / "p.csv");
  std::ifstream in(dir / "p.csv");
  const std::string text((std::istreambuf_iterator<char>(in)), {});
  EXPECT_EQ(text, "video_name,score\n1_0.mp4,0.123456\n2_1.mp4,3.500000\n");
  const auto back = read_predictions(dir / "p.csv");
  EXPECT_EQ(back.names, s.names);
  EXPECT_EQ(back.scores[1], 3.5);

  std::ofstream(dir / "m.csv") << "video_name,prompt,mos,domain\n1_0.mp4,a cat,2.5,0\n";
  EXPECT_EQ(read_predictions(dir / "m.csv").scores[0], 2.5);
  std::ofstream(dir / "bad.csv") << "name,score\nx,1\n";
  EXPECT_EQ(kind_of([&] { read_predictions(dir / "bad.csv"); }), ErrorKind::schema);
  std::ofstream(dir / "dup.csv") << "video_name,score\nx,1\nx,2\n";
  EXPECT_EQ(kind_of([&] { read_predictions(dir / "dup.csv"); }), ErrorKind::duplicate);
}
