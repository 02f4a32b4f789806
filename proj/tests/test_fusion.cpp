// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "aigcvqa/fusion.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace aigcvqa;
using testutil::kind_of;

namespace {

Eigen::MatrixXd randn(std::mt19937_64& gen, Eigen::Index r, Eigen::Index c) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(gen);
  return m;
}

AttentionParams explicit_params(const Eigen::MatrixXd& wq, const Eigen::MatrixXd& wk,
                                const Eigen::MatrixXd& wv, int heads = 1) {
  AttentionParams p;
  p.w_q = ad::parameter(wq);
  p.w_k = ad::parameter(wk);
  p.w_v = ad::parameter(wv);
  p.head_count = heads;
  return p;
}

TokenGrid grid_of(const Eigen::MatrixXd& tokens) {
  TokenGrid g;
  g.t = 1;
  g.h = 1;
  g.w = static_cast<int>(tokens.rows());
  g.tokens = tokens;
  return g;
}

}  // namespace

TEST(ScaledDotAttention, ZeroLogitsAverageTheValues) {
  Eigen::RowVectorXd q(2);
  q << 1, 0;
  Eigen::MatrixXd k(3, 2), v(3, 2);
  k << 0, 1, 0, -2, 0, 5;  // orthogonal to q
  v << 1, 2, 3, 4, 8, 0;
  const Eigen::RowVectorXd out = scaled_dot_attention(q, k, v, 2.0);
  EXPECT_NEAR(out(0), 4.0, 1e-15);
  EXPECT_NEAR(out(1), 2.0, 1e-15);
}

TEST(ScaledDotAttention, SingleKeyReturnsItsValue) {
  Eigen::RowVectorXd q(2);
  q << 100, -7;
  Eigen::MatrixXd k(1, 2), v(1, 2);
  k << 3, 9;
  v << 0.5, -0.25;
  EXPECT_EQ(scaled_dot_attention(q, k, v, 2.0), v.row(0));
}

TEST(ScaledDotAttention, LogitsLn3AndZeroWeightThreeToOne) {
  // d_k = 1 so q.k is the logit directly.
  Eigen::RowVectorXd q(1);
  q << std::log(3.0);
  Eigen::MatrixXd k(2, 1), v(2, 2);
  k << 1, 0;
  v << 4, 0, 0, 8;
  const Eigen::RowVectorXd out = scaled_dot_attention(q, k, v, 1.0);
  EXPECT_NEAR(out(0), 0.75 * 4, 1e-15);
  EXPECT_NEAR(out(1), 0.25 * 8, 1e-15);
}

TEST(ScaledDotAttention, ShapeMismatch) {
  EXPECT_EQ(kind_of([] {
              scaled_dot_attention(Eigen::RowVectorXd::Ones(2), Eigen::MatrixXd::Ones(3, 3),
                                   Eigen::MatrixXd::Ones(3, 3), 1.0);
            }),
            ErrorKind::shape);
}

TEST(AttentionPool, IdenticalTokensGiveProjectedToken) {
  std::mt19937_64 gen(1);
  const auto p = explicit_params(randn(gen, 3, 4), randn(gen, 3, 4), randn(gen, 3, 4));
  Eigen::RowVectorXd u(3);
  u << 0.2, -1.0, 0.7;
  const Eigen::MatrixXd tokens = u.replicate(5, 1);
  const Eigen::RowVectorXd expected = u * p.w_v.value();
  EXPECT_LT((attention_pool(grid_of(tokens), p) - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(AttentionPool, ZeroQueryProjectionIsMeanOfProjectedTokens) {
  std::mt19937_64 gen(2);
  const auto p = explicit_params(Eigen::MatrixXd::Zero(3, 4), randn(gen, 3, 4), randn(gen, 3, 4));
  const Eigen::MatrixXd tokens = randn(gen, 6, 3);
  const Eigen::RowVectorXd expected = (tokens * p.w_v.value()).colwise().mean();
  EXPECT_LT((attention_pool(grid_of(tokens), p) - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(AttentionPool, MatchesLoopOracle) {
  std::mt19937_64 gen(3);
  const auto p = explicit_params(randn(gen, 4, 6), randn(gen, 4, 6), randn(gen, 4, 6));
  const Eigen::MatrixXd tokens = randn(gen, 7, 4);
  const Eigen::RowVectorXd q = tokens.colwise().mean() * p.w_q.value();
  const Eigen::RowVectorXd expected =
      oracle::attend(q, tokens * p.w_k.value(), tokens * p.w_v.value(), 6.0);
  EXPECT_LT((attention_pool(grid_of(tokens), p) - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(AttentionPool, MultiHeadSplitsWidth) {
  std::mt19937_64 gen(4);
  const auto p = explicit_params(randn(gen, 3, 4), randn(gen, 3, 4), randn(gen, 3, 4), 2);
  const Eigen::MatrixXd tokens = randn(gen, 5, 3);
  const Eigen::RowVectorXd q = tokens.colwise().mean() * p.w_q.value();
  const Eigen::MatrixXd k = tokens * p.w_k.value(), v = tokens * p.w_v.value();
  const Eigen::RowVectorXd out = attention_pool(grid_of(tokens), p);
  for (int h = 0; h < 2; ++h) {
    const Eigen::RowVectorXd head =
        oracle::attend(q.segment(2 * h, 2), k.middleCols(2 * h, 2), v.middleCols(2 * h, 2), 2.0);
    EXPECT_LT((out.segment(2 * h, 2) - head).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(AttentionPool, HeadCountMustDivideWidth) {
  std::mt19937_64 gen(5);
  const auto p = explicit_params(randn(gen, 3, 5), randn(gen, 3, 5), randn(gen, 3, 5), 2);
  EXPECT_EQ(kind_of([&] { attention_pool(grid_of(randn(gen, 2, 3)), p); }), ErrorKind::shape);
}

TEST(CrossAttention, IdenticalTokensIgnoreTheQuery) {
  std::mt19937_64 gen(6);
  const auto p = explicit_params(randn(gen, 5, 4), randn(gen, 3, 4), randn(gen, 3, 4));
  const Eigen::MatrixXd tokens = Eigen::RowVector3d(1.0, 2.0, -0.5).replicate(4, 1);
  const Eigen::RowVectorXd expected = tokens.row(0) * p.w_v.value();
  for (int trial = 0; trial < 3; ++trial) {
    const Eigen::RowVectorXd eot = randn(gen, 1, 5);
    EXPECT_LT((text2video_cross_attention(eot, grid_of(tokens), p) - expected).cwiseAbs().maxCoeff(),
              1e-12);
  }
}

TEST(CrossAttention, TwoTokensHandSetProjections) {
  Eigen::MatrixXd wq(2, 2), wk(2, 2), wv(2, 2), tokens(2, 2);
  wq << 1, 0, 0, 2;
  wk << 1, 1, 0, 1;
  wv << 2, 0, 1, 1;
  tokens << 1, 0, 0, 1;
  Eigen::RowVectorXd eot(2);
  eot << 0.5, 1.0;
  // q = (0.5, 2); keys: t1 -> (1, 1), t2 -> (0, 1); logits 2.5/sqrt2, 2/sqrt2.
  // values: t1 -> (2, 0), t2 -> (1, 1).
  const double l1 = 2.5 / std::sqrt(2.0), l2 = 2.0 / std::sqrt(2.0);
  const double w1 = std::exp(l1) / (std::exp(l1) + std::exp(l2)), w2 = 1 - w1;
  const Eigen::RowVectorXd out =
      text2video_cross_attention(eot, grid_of(tokens), explicit_params(wq, wk, wv));
  EXPECT_NEAR(out(0), w1 * 2 + w2 * 1, 1e-14);
  EXPECT_NEAR(out(1), w2 * 1, 1e-14);
}

TEST(CrossAttention, QueryWidthMismatch) {
  std::mt19937_64 gen(7);
  const auto p = explicit_params(randn(gen, 5, 4), randn(gen, 3, 4), randn(gen, 3, 4));
  EXPECT_EQ(kind_of([&] { text2video_cross_attention(randn(gen, 1, 3), grid_of(randn(gen, 2, 3)), p); }),
            ErrorKind::shape);
}

TEST(AttentionProperties, WeightsConvexHullAndPermutation) {
  std::mt19937_64 gen(8);
  for (int trial = 0; trial < 100; ++trial) {
    const int c = 1 + static_cast<int>(gen() % 6), d = 2 * (1 + static_cast<int>(gen() % 4));
    const int n = 1 + static_cast<int>(gen() % 12), heads = (gen() % 2) ? 2 : 1;
    const auto p = explicit_params(randn(gen, c, d), randn(gen, c, d), randn(gen, c, d), heads);
    const Eigen::MatrixXd tokens = randn(gen, n, c);
    const AttentionResult r = attention_pool(ad::constant(tokens), p);
    for (int h = 0; h < heads; ++h) {
      EXPECT_NEAR(r.weights.row(h).sum(), 1.0, 1e-6);
      EXPECT_GE(r.weights.row(h).minCoeff(), 0.0);
    }
    const Eigen::MatrixXd values = tokens * p.w_v.value();
    for (int j = 0; j < d; ++j) {
      EXPECT_GE(r.output.value()(0, j), values.col(j).minCoeff() - 1e-12);
      EXPECT_LE(r.output.value()(0, j), values.col(j).maxCoeff() + 1e-12);
    }
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), gen);
    Eigen::MatrixXd shuffled(n, c);
    for (int i = 0; i < n; ++i) shuffled.row(i) = tokens.row(perm[i]);
    EXPECT_LT((attention_pool(grid_of(shuffled), p) - r.output.value()).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(ScoreHead, ZeroWeightsGiveOutputBias) {
  ScoreHeadParams p;
  p.w1 = ad::parameter(Eigen::MatrixXd::Zero(4, 2));
  p.b1 = ad::parameter(Eigen::MatrixXd::Constant(1, 2, 0.3));
  p.w2 = ad::parameter(Eigen::MatrixXd::Zero(2, 1));
  p.b2 = ad::parameter(Eigen::MatrixXd::Constant(1, 1, -1.25));
  EXPECT_EQ(score_head(Eigen::RowVectorXd::Ones(4), p), -1.25);
}

TEST(ScoreHead, MatchesLoopOracleAndIsDeterministic) {
  std::mt19937_64 gen(9);
  Rng rng(3);
  const ScoreHeadParams p = ScoreHeadParams::init(6, 1, rng);
  const Eigen::RowVectorXd x = randn(gen, 1, 6);
  double expected = p.b2.value()(0, 0);
  for (int j = 0; j < 3; ++j) {
    double pre = p.b1.value()(0, j);
    for (int i = 0; i < 6; ++i) pre += x(i) * p.w1.value()(i, j);
    expected += oracle::gelu(pre) * p.w2.value()(j, 0);
  }
  EXPECT_NEAR(score_head(x, p), expected, 1e-12);
  EXPECT_EQ(score_head(x, p), score_head(x, p));
}

TEST(FuseScores, WeightedSumOverPresentBranches) {
  ScoreBundle b;
  b[Branch::aesthetic] = 1.0;
  b[Branch::technical] = 2.0;
  b[Branch::implicit_text] = 4.0;
  EXPECT_NEAR(fuse_scores(b, BranchWeights{}), 0.3 + 0.6 + 0.4, 1e-15);
  BranchWeights only_aesthetic;
  only_aesthetic.values = {1, 0, 0, 0, 0};
  EXPECT_EQ(fuse_scores(b, only_aesthetic), 1.0);
}

TEST(FusionGradients, AttentionAndHeadMatchFiniteDifferences) {
  std::mt19937_64 gen(10);
  for (int trial = 0; trial < 5; ++trial) {
    Rng rng(trial);
    const int c_text = 3 + trial, c_vis = 4, d = 4;
    AttentionParams att = AttentionParams::init(c_text, c_vis, d, trial % 2 ? 2 : 1, trial == 3, rng);
    const ScoreHeadParams head = ScoreHeadParams::init(d, 1, rng);
    ad::Var eot = ad::parameter(randn(gen, 1, c_text));
    ad::Var tokens = ad::parameter(randn(gen, 5, c_vis));
    std::vector<ad::Var> leaves{eot, tokens, att.w_q, att.w_k, att.w_v, head.w1, head.b1, head.w2,
                                head.b2};
    if (att.w_o) leaves.push_back(*att.w_o);
    const auto f = [&] { return score_head(text2video_cross_attention(eot, tokens, att).output, head); };
    EXPECT_LT(gradcheck::check(leaves, f).max_rel_error, 1e-4);
    Rng rng2(trial + 100);
    AttentionParams pool = AttentionParams::init(c_vis, c_vis, d, 1, false, rng2);
    const auto gp = [&] { return score_head(attention_pool(tokens, pool).output, head); };
    EXPECT_LT(gradcheck::check({tokens, pool.w_q, pool.w_k, pool.w_v}, gp).max_rel_error, 1e-4);
  }
}
