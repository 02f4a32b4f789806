// SPDX-License-Identifier: Apache-2.0

#include "aigcvqa/fusion.hpp"

#include <cmath>
#include <vector>

#include "aigcvqa/error.hpp"

namespace aigcvqa {

void AttentionParams::validate() const {
  if (!w_q.defined() || !w_k.defined() || !w_v.defined())
    fail(ErrorKind::shape, "attention params are not initialised");
  if (head_count < 1) fail(ErrorKind::shape, "head_count must be >= 1");
  if (w_k.rows() != w_v.rows() || w_k.cols() != w_v.cols() || w_q.cols() != w_k.cols())
    fail(ErrorKind::shape, "attention projections disagree in shape");
  if (d() % head_count != 0)
    fail(ErrorKind::shape, "attention width " + std::to_string(d()) + " not divisible by " +
                               std::to_string(head_count) + " heads");
  if (w_o && (w_o->rows() != d() || w_o->cols() != d()))
    fail(ErrorKind::shape, "output projection must be d x d");
  if (!w_q.value().allFinite() || !w_k.value().allFinite() || !w_v.value().allFinite() ||
      (w_o && !w_o->value().allFinite()))
    fail(ErrorKind::degenerate, "attention params contain non-finite values");
}

void AttentionParams::collect_parameters(ParameterList& out, const std::string& prefix) const {
  out.push_back({prefix + ".w_q", w_q, ParamGroup::head});
  out.push_back({prefix + ".w_k", w_k, ParamGroup::head});
  out.push_back({prefix + ".w_v", w_v, ParamGroup::head});
  if (w_o) out.push_back({prefix + ".w_o", *w_o, ParamGroup::head});
}

AttentionParams AttentionParams::init(int query_width, int token_width, int d, int head_count,
                                      bool output_projection, Rng& rng) {
  AttentionParams p;
  p.head_count = head_count;
  p.w_q = ad::parameter(rng.normal_matrix(query_width, d, 1.0 / std::sqrt(double(query_width))));
  p.w_k = ad::parameter(rng.normal_matrix(token_width, d, 1.0 / std::sqrt(double(token_width))));
  p.w_v = ad::parameter(rng.normal_matrix(token_width, d, 1.0 / std::sqrt(double(token_width))));
  if (output_projection) p.w_o = ad::parameter(rng.normal_matrix(d, d, 1.0 / std::sqrt(double(d))));
  p.validate();
  return p;
}

AttentionResult scaled_dot_attention(const ad::Var& query, const ad::Var& keys,
                                     const ad::Var& values, int head_count) {
  if (query.rows() != 1) fail(ErrorKind::shape, "attention query must be a single row");
  if (keys.rows() < 1) fail(ErrorKind::shape, "attention needs at least one key");
  if (keys.rows() != values.rows() || keys.cols() != query.cols() || values.cols() != query.cols())
    fail(ErrorKind::shape, "attention query/key/value dimensions disagree");
  if (head_count < 1 || query.cols() % head_count != 0)
    fail(ErrorKind::shape, "attention width not divisible by head count");

  const ad::Index d = query.cols();
  const ad::Index dk = d / head_count;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dk));

  AttentionResult result;
  result.weights.resize(head_count, keys.rows());
  std::vector<ad::Var> heads;
  heads.reserve(static_cast<std::size_t>(head_count));
  for (int h = 0; h < head_count; ++h) {
    ad::Var q = head_count == 1 ? query : ad::slice_cols(query, h * dk, dk);
    ad::Var k = head_count == 1 ? keys : ad::slice_cols(keys, h * dk, dk);
    ad::Var v = head_count == 1 ? values : ad::slice_cols(values, h * dk, dk);
    ad::Var logits = ad::scale(ad::matmul(q, ad::transpose(k)), inv_sqrt);
    ad::Var weights = ad::softmax_rows(logits);
    result.weights.row(h) = weights.value().row(0);
    heads.push_back(ad::matmul(weights, v));
  }
  result.output = head_count == 1 ? heads.front() : ad::concat_cols(heads);
  return result;
}

Eigen::RowVectorXd scaled_dot_attention(const Eigen::RowVectorXd& query,
                                        const Eigen::MatrixXd& keys,
                                        const Eigen::MatrixXd& values, double d_k) {
  if (keys.rows() < 1) fail(ErrorKind::shape, "attention needs at least one key");
  if (keys.rows() != values.rows() || keys.cols() != query.cols())
    fail(ErrorKind::shape, "attention query/key/value dimensions disagree");
  if (!(d_k > 0)) fail(ErrorKind::shape, "d_k must be positive");
  Eigen::RowVectorXd logits = (query * keys.transpose()) / std::sqrt(d_k);
  const double peak = logits.maxCoeff();
  Eigen::RowVectorXd w = (logits.array() - peak).exp().matrix();
  w /= w.sum();
  return w * values;
}

namespace {

AttentionResult project_and_attend(const ad::Var& query_in, const ad::Var& tokens,
                                   const AttentionParams& params) {
  params.validate();
  if (tokens.rows() < 1) fail(ErrorKind::input, "attention pooling over an empty token grid");
  if (tokens.cols() != params.token_width())
    fail(ErrorKind::shape, "token width " + std::to_string(tokens.cols()) + " != key projection input " +
                               std::to_string(params.token_width()));
  if (query_in.rows() != 1 || query_in.cols() != params.query_width())
    fail(ErrorKind::shape, "query width " + std::to_string(query_in.cols()) +
                               " != query projection input " + std::to_string(params.query_width()));
  const ad::Var q = ad::matmul(query_in, params.w_q);
  const ad::Var k = ad::matmul(tokens, params.w_k);
  const ad::Var v = ad::matmul(tokens, params.w_v);
  AttentionResult r = scaled_dot_attention(q, k, v, params.head_count);
  if (params.w_o) r.output = ad::matmul(r.output, *params.w_o);
  return r;
}

}  // namespace

AttentionResult attention_pool(const ad::Var& tokens, const AttentionParams& params) {
  if (tokens.rows() < 1) fail(ErrorKind::input, "attention pooling over an empty token grid");
  return project_and_attend(ad::mean_rows(tokens), tokens, params);
}

Eigen::RowVectorXd attention_pool(const TokenGrid& grid, const AttentionParams& params) {
  return attention_pool(ad::constant(grid.tokens), params).output.value();
}

AttentionResult text2video_cross_attention(const ad::Var& eot, const ad::Var& tokens,
                                           const AttentionParams& params) {
  return project_and_attend(eot, tokens, params);
}

Eigen::RowVectorXd text2video_cross_attention(const Eigen::RowVectorXd& eot,
                                              const TokenGrid& grid,
                                              const AttentionParams& params) {
  return text2video_cross_attention(ad::constant(eot), ad::constant(grid.tokens), params)
      .output.value();
}

void ScoreHeadParams::collect_parameters(ParameterList& out, const std::string& prefix) const {
  out.push_back({prefix + ".w1", w1, ParamGroup::head});
  out.push_back({prefix + ".b1", b1, ParamGroup::head});
  out.push_back({prefix + ".w2", w2, ParamGroup::head});
  out.push_back({prefix + ".b2", b2, ParamGroup::head});
}

ScoreHeadParams ScoreHeadParams::init(int d, int out, Rng& rng) {
  if (d < 2) fail(ErrorKind::config, "score head input width must be >= 2");
  if (out < 1) fail(ErrorKind::config, "score head output width must be >= 1");
  const int hidden = d / 2;
  ScoreHeadParams p;
  p.w1 = ad::parameter(rng.normal_matrix(d, hidden, 1.0 / std::sqrt(double(d))));
  p.b1 = ad::parameter(Eigen::MatrixXd::Zero(1, hidden));
  p.w2 = ad::parameter(rng.normal_matrix(hidden, out, 1.0 / std::sqrt(double(hidden))));
  p.b2 = ad::parameter(Eigen::MatrixXd::Zero(1, out));
  return p;
}

ad::Var score_head(const ad::Var& embedding, const ScoreHeadParams& params) {
  if (embedding.rows() != 1 || embedding.cols() != params.input_width())
    fail(ErrorKind::shape, "score head expects a 1x" + std::to_string(params.input_width()) + " embedding");
  const ad::Var hidden = ad::gelu(ad::add_row(ad::matmul(embedding, params.w1), params.b1));
  return ad::add_row(ad::matmul(hidden, params.w2), params.b2);
}

double score_head(const Eigen::RowVectorXd& embedding, const ScoreHeadParams& params) {
  return score_head(ad::constant(embedding), params).value()(0, 0);
}

std::string_view to_string(Branch branch) noexcept {
  switch (branch) {
    case Branch::aesthetic: return "aesthetic";
    case Branch::technical: return "technical";
    case Branch::explicit_prompt: return "explicit_prompt";
    case Branch::implicit_text: return "implicit_text";
    case Branch::caption_sim: return "caption_sim";
  }
  return "aesthetic";
}

double fuse_scores(const ScoreBundle& bundle, const BranchWeights& weights) {
  double total = 0.0;
  for (std::size_t i = 0; i < kBranchCount; ++i)
    if (bundle.branch[i]) total += weights.values[i] * *bundle.branch[i];
  return total;
}

}  // namespace aigcvqa
