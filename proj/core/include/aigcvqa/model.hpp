// SPDX-License-Identifier: Apache-2.0
//
// The full quality model: two visual-harmony branches (aesthetic tokens from
// resized frames, technical tokens from fragment composites), the explicit
// prompt branch (prompt end-of-text embedding attending over visual tokens),
// the implicit text branch (frozen dual encoder with quality text pairs), an
// auxiliary generator classifier, and late fusion of the branch scores.

#pragma once

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "aigcvqa/checkpoint.hpp"
#include "aigcvqa/config.hpp"
#include "aigcvqa/dataset.hpp"
#include "aigcvqa/encoder.hpp"
#include "aigcvqa/fusion.hpp"
#include "aigcvqa/implicit_text.hpp"
#include "aigcvqa/video.hpp"

namespace aigcvqa {

/// Everything about one video that does not depend on trainable parameters.
/// Built once per video (per epoch when fragments vary by epoch).
struct PreparedSample {
  std::string video_name;
  std::uint64_t video_id = 0;
  VideoFeatures aesthetic;
  VideoFeatures technical;
  Eigen::MatrixXd prompt;                 // text encoder input rows
  Eigen::RowVectorXd implicit_mean_feat;  // mean unit frame feature
  double affinity0 = 0.5;
  double affinity1 = 0.5;
  std::optional<double> caption_similarity;  // normalised, in [0, 1]
  std::optional<double> mos;
  std::optional<int> domain_label;
};

struct PrepareOptions {
  /// Seed for fragment offsets; nullopt centers them (validation/inference).
  std::optional<std::uint64_t> fragment_seed;
};

/// Differentiable outputs for one sample.
struct ModelOutput {
  ad::Var prediction;  // 1x1 weighted sum of the enabled trainable branches
  std::array<ad::Var, kBranchCount> branch;  // undefined when disabled
  ad::Var logits;      // 1 x kDomainCount, undefined without the classifier
};

using FrameLoader = std::function<FrameSequence(const VideoRecord&)>;

/// decode_video on the record's path.
FrameSequence load_record_frames(const VideoRecord& record);

class QualityModel {
 public:
  static const std::array<std::string, 3>& encoder_names();

  explicit QualityModel(const TrainConfig& config);

  const TrainConfig& config() const { return config_; }

  PreparedSample prepare(const VideoRecord& record, const FrameSequence& frames,
                         const PrepareOptions& options = {}) const;

  ModelOutput forward(const PreparedSample& sample) const;

  /// Inference scores. The caption-similarity branch joins the fusion here
  /// when enabled; it requires sample.caption_similarity.
  ScoreBundle score(const PreparedSample& sample) const;

  /// Parameters that the enabled branches use, in a fixed order.
  ParameterList parameters() const;
  /// Every parameter array, enabled or not; this is what checkpoints carry.
  ParameterList all_parameters() const;

  /// Freezes or unfreezes one encoder ("aesthetic", "technical", "text").
  void set_encoder_trainable(const std::string& encoder, bool trainable);
  bool encoder_trainable(const std::string& encoder) const;

  std::vector<NamedTensor> state() const;
  /// Throws ErrorKind::config when a tensor is missing or has the wrong shape.
  void load_state(const std::vector<NamedTensor>& tensors);

  const VideoEncoder& aesthetic_encoder() const { return *aesthetic_; }
  const VideoEncoder& technical_encoder() const { return *technical_; }
  const TextEncoder& text_encoder() const { return *text_; }
  const DualEmbedder& dual_embedder() const { return *dual_; }

 private:
  ParameterList encoder_parameters(const std::string& encoder) const;

  TrainConfig config_;
  std::unique_ptr<VideoEncoder> aesthetic_;
  std::unique_ptr<VideoEncoder> technical_;
  std::unique_ptr<TextEncoder> text_;
  std::unique_ptr<DualEmbedder> dual_;
  std::vector<TextPair> text_pairs_;
  AttentionParams pool_aesthetic_;
  AttentionParams pool_technical_;
  AttentionParams cross_attention_;
  ScoreHeadParams head_aesthetic_;
  ScoreHeadParams head_technical_;
  ScoreHeadParams head_explicit_;
  ImplicitScoreParams implicit_;
  ScoreHeadParams classifier_;
};

Checkpoint make_checkpoint(const QualityModel& model, int epoch, const std::string& rng_state,
                           const nlohmann::json& metrics);
/// Rebuilds the model from the checkpoint's config snapshot and tensors.
QualityModel model_from_checkpoint(const Checkpoint& checkpoint);

}  // namespace aigcvqa
