// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "aigcvqa/autograd.hpp"
#include "aigcvqa/encoder.hpp"
#include "aigcvqa/parameters.hpp"
#include "aigcvqa/random.hpp"

namespace aigcvqa {

/// Query/key/value projections of a single-query attention read-out.
/// Row-vector convention: q = x * w_q, with w_q of shape (c_query x d).
/// w_q may read a different width than w_k/w_v; that absorbs the alignment
/// of text width to visual width.
struct AttentionParams {
  ad::Var w_q;
  ad::Var w_k;
  ad::Var w_v;
  std::optional<ad::Var> w_o;
  int head_count = 1;

  int d() const { return static_cast<int>(w_k.cols()); }
  int d_k() const { return d() / head_count; }
  int query_width() const { return static_cast<int>(w_q.rows()); }
  int token_width() const { return static_cast<int>(w_k.rows()); }

  /// Throws ErrorKind::shape on inconsistent shapes or d % head_count != 0.
  void validate() const;
  void collect_parameters(ParameterList& out, const std::string& prefix) const;

  static AttentionParams init(int query_width, int token_width, int d, int head_count,
                              bool output_projection, Rng& rng);
};

struct AttentionResult {
  ad::Var output;           // 1 x d
  Eigen::MatrixXd weights;  // head_count x n, rows sum to 1
};

/// softmax(q k^T / sqrt(d_k)) v for one query row. Heads split d evenly.
AttentionResult scaled_dot_attention(const ad::Var& query, const ad::Var& keys,
                                     const ad::Var& values, int head_count = 1);

/// Value-only single-head form.
Eigen::RowVectorXd scaled_dot_attention(const Eigen::RowVectorXd& query,
                                        const Eigen::MatrixXd& keys,
                                        const Eigen::MatrixXd& values, double d_k);

/// Learnable pooling that replaces global average pooling: the token mean
/// is projected to the query, the tokens to keys and values.
AttentionResult attention_pool(const ad::Var& tokens, const AttentionParams& params);
Eigen::RowVectorXd attention_pool(const TokenGrid& grid, const AttentionParams& params);

/// Prompt-conditioned pooling: the end-of-text embedding is the query.
AttentionResult text2video_cross_attention(const ad::Var& eot, const ad::Var& tokens,
                                           const AttentionParams& params);
Eigen::RowVectorXd text2video_cross_attention(const Eigen::RowVectorXd& eot,
                                              const TokenGrid& grid,
                                              const AttentionParams& params);

/// Two-layer perceptron d -> d/2 -> out with GELU in between.
struct ScoreHeadParams {
  ad::Var w1;
  ad::Var b1;
  ad::Var w2;
  ad::Var b2;

  int input_width() const { return static_cast<int>(w1.rows()); }
  int output_width() const { return static_cast<int>(w2.cols()); }
  void collect_parameters(ParameterList& out, const std::string& prefix) const;

  static ScoreHeadParams init(int d, int out, Rng& rng);
};

/// 1 x out result; out = 1 for quality heads.
ad::Var score_head(const ad::Var& embedding, const ScoreHeadParams& params);
double score_head(const Eigen::RowVectorXd& embedding, const ScoreHeadParams& params);

enum class Branch { aesthetic = 0, technical, explicit_prompt, implicit_text, caption_sim };
inline constexpr std::size_t kBranchCount = 5;

std::string_view to_string(Branch branch) noexcept;

/// Late-fusion weights in Branch order.
struct BranchWeights {
  std::array<double, kBranchCount> values{0.3, 0.3, 0.2, 0.1, 0.1};

  double operator[](Branch b) const { return values[static_cast<std::size_t>(b)]; }
  double& operator[](Branch b) { return values[static_cast<std::size_t>(b)]; }
};

/// Per-branch scores of one video; absent branches are disabled.
struct ScoreBundle {
  std::array<std::optional<double>, kBranchCount> branch;
  double final_score = 0.0;

  std::optional<double> operator[](Branch b) const { return branch[static_cast<std::size_t>(b)]; }
  std::optional<double>& operator[](Branch b) { return branch[static_cast<std::size_t>(b)]; }
};

/// Weighted sum over the branches present in the bundle.
double fuse_scores(const ScoreBundle& bundle, const BranchWeights& weights);

}  // namespace aigcvqa
