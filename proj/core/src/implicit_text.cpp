// SPDX-License-Identifier: Apache-2.0

#include "aigcvqa/implicit_text.hpp"

#include <cmath>

#include "aigcvqa/error.hpp"

namespace aigcvqa {

std::vector<TextPairSpec> default_text_pairs() {
  return {{"a high quality photo", "a low quality photo"}, {"a good photo", "a bad photo"}};
}

Eigen::RowVectorXd unit_normalized(const Eigen::RowVectorXd& v) {
  const double norm = v.norm();
  if (!(norm > 0) || !std::isfinite(norm)) fail(ErrorKind::degenerate, "cannot normalise a zero-norm embedding");
  return v / norm;
}

TextPair make_text_pair(const TextPairSpec& spec, const DualEmbedder& embedder) {
  if (spec.positive.empty() || spec.negative.empty())
    fail(ErrorKind::input, "text pair entries must be non-empty");
  return TextPair{spec.positive, spec.negative, unit_normalized(embedder.embed_text(spec.positive)),
                  unit_normalized(embedder.embed_text(spec.negative))};
}

Eigen::MatrixXd frame_features(const FrameStack& frames, const DualEmbedder& embedder) {
  if (frames.frames < 1) fail(ErrorKind::input, "frame_features: empty frame stack");
  Eigen::MatrixXd out(frames.frames, embedder.dim());
  for (int t = 0; t < frames.frames; ++t) out.row(t) = unit_normalized(embedder.embed_frame(frames, t));
  return out;
}

double affinity_score(const Eigen::MatrixXd& frame_feats, const TextPair& pair) {
  if (frame_feats.rows() == 0) fail(ErrorKind::input, "affinity_score: no frames");
  if (frame_feats.cols() != pair.f_pos.cols() || frame_feats.cols() != pair.f_neg.cols())
    fail(ErrorKind::shape, "affinity_score: frame and text embedding widths differ");
  const Eigen::VectorXd diff = frame_feats * (pair.f_pos - pair.f_neg).transpose();
  return ad::sigmoid_value(diff.mean());
}

void ImplicitScoreParams::collect_parameters(ParameterList& out, const std::string& prefix) const {
  out.push_back({prefix + ".mlp_w1", mlp_w1, ParamGroup::head});
  out.push_back({prefix + ".mlp_b1", mlp_b1, ParamGroup::head});
  out.push_back({prefix + ".mlp_w2", mlp_w2, ParamGroup::head});
  out.push_back({prefix + ".mlp_b2", mlp_b2, ParamGroup::head});
  out.push_back({prefix + ".combiner_w", combiner_w, ParamGroup::head});
  out.push_back({prefix + ".combiner_b", combiner_b, ParamGroup::head});
}

ImplicitScoreParams ImplicitScoreParams::init(int embedding_dim, Rng& rng) {
  if (embedding_dim < 1) fail(ErrorKind::config, "implicit embedding dim must be >= 1");
  const double scale = 1.0 / std::sqrt(static_cast<double>(embedding_dim));
  ImplicitScoreParams p;
  p.mlp_w1 = ad::parameter(rng.normal_matrix(embedding_dim, embedding_dim, scale));
  p.mlp_b1 = ad::parameter(Eigen::MatrixXd::Zero(1, embedding_dim));
  p.mlp_w2 = ad::parameter(rng.normal_matrix(embedding_dim, 1, scale));
  p.mlp_b2 = ad::parameter(Eigen::MatrixXd::Zero(1, 1));
  p.combiner_w = ad::parameter(Eigen::MatrixXd::Constant(1, 3, 1.0 / 3.0));
  p.combiner_b = ad::parameter(Eigen::MatrixXd::Zero(1, 1));
  return p;
}

ad::Var feature_score(const ad::Var& mean_frame_feat, const ImplicitScoreParams& params) {
  if (mean_frame_feat.rows() != 1 || mean_frame_feat.cols() != params.embedding_dim())
    fail(ErrorKind::shape, "feature_score expects a 1x" + std::to_string(params.embedding_dim()) + " input");
  const ad::Var hidden = ad::gelu(ad::add_row(ad::matmul(mean_frame_feat, params.mlp_w1), params.mlp_b1));
  const ad::Var out = ad::add_row(ad::matmul(hidden, params.mlp_w2), params.mlp_b2);
  return ad::sigmoid(ad::gelu(out));
}

double feature_score(const Eigen::RowVectorXd& mean_frame_feat, const ImplicitScoreParams& params) {
  return feature_score(ad::constant(mean_frame_feat), params).scalar();
}

ad::Var implicit_text_score(const ad::Var& s_f, double s_a0, double s_a1,
                            const ImplicitScoreParams& params) {
  if (s_f.rows() != 1 || s_f.cols() != 1) fail(ErrorKind::shape, "S_f must be a scalar");
  Eigen::MatrixXd affinities(1, 2);
  affinities << s_a0, s_a1;
  const ad::Var inputs = ad::concat_cols(std::vector<ad::Var>{s_f, ad::constant(affinities)});
  return ad::add(ad::matmul(inputs, ad::transpose(params.combiner_w)), params.combiner_b);
}

double implicit_text_score(double s_f, double s_a0, double s_a1, const ImplicitScoreParams& params) {
  Eigen::MatrixXd sf(1, 1);
  sf(0, 0) = s_f;
  return implicit_text_score(ad::constant(sf), s_a0, s_a1, params).scalar();
}

}  // namespace aigcvqa
