// SPDX-License-Identifier: Apache-2.0
//
// Implicit text guidance: frame/text affinity against positive and negative
// quality descriptions, a feature score from the mean frame embedding, and a
// linear combiner over the three resulting scores.

#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "aigcvqa/autograd.hpp"
#include "aigcvqa/encoder.hpp"
#include "aigcvqa/parameters.hpp"
#include "aigcvqa/random.hpp"
#include "aigcvqa/video.hpp"

namespace aigcvqa {

struct TextPair {
  std::string positive;
  std::string negative;
  Eigen::RowVectorXd f_pos;  // unit norm
  Eigen::RowVectorXd f_neg;  // unit norm
};

struct TextPairSpec {
  std::string positive;
  std::string negative;
};

/// ("a high quality photo", "a low quality photo"), ("a good photo", "a bad photo").
std::vector<TextPairSpec> default_text_pairs();

TextPair make_text_pair(const TextPairSpec& spec, const DualEmbedder& embedder);

/// Unit-normalises v; throws ErrorKind::degenerate on a zero vector.
Eigen::RowVectorXd unit_normalized(const Eigen::RowVectorXd& v);

/// One unit-norm row per frame, every frame of the stack.
Eigen::MatrixXd frame_features(const FrameStack& frames, const DualEmbedder& embedder);

/// sigmoid(mean_i(f_i . f_pos - f_i . f_neg)).
double affinity_score(const Eigen::MatrixXd& frame_feats, const TextPair& pair);

struct ImplicitScoreParams {
  ad::Var mlp_w1;      // e x e
  ad::Var mlp_b1;      // 1 x e
  ad::Var mlp_w2;      // e x 1
  ad::Var mlp_b2;      // 1 x 1
  ad::Var combiner_w;  // 1 x 3, applied to (S_f, S_a0, S_a1)
  ad::Var combiner_b;  // 1 x 1

  int embedding_dim() const { return static_cast<int>(mlp_w1.rows()); }
  void collect_parameters(ParameterList& out, const std::string& prefix) const;

  static ImplicitScoreParams init(int embedding_dim, Rng& rng);
};

/// sigmoid(GELU(MLP(f))) where MLP is Linear-GELU-Linear.
ad::Var feature_score(const ad::Var& mean_frame_feat, const ImplicitScoreParams& params);
double feature_score(const Eigen::RowVectorXd& mean_frame_feat, const ImplicitScoreParams& params);

/// w0*S_f + w1*S_a0 + w2*S_a1 + b.
ad::Var implicit_text_score(const ad::Var& s_f, double s_a0, double s_a1,
                            const ImplicitScoreParams& params);
double implicit_text_score(double s_f, double s_a0, double s_a1, const ImplicitScoreParams& params);

}  // namespace aigcvqa
