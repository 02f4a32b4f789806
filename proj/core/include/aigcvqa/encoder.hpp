// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "aigcvqa/autograd.hpp"
#include "aigcvqa/parameters.hpp"
#include "aigcvqa/video.hpp"

namespace aigcvqa {

/// Visual tokens, flattened spatio-temporally: row ((ti*h)+yi)*w+xi.
struct TokenGrid {
  int t = 0;
  int h = 0;
  int w = 0;
  Eigen::MatrixXd tokens;  // (t*h*w) x channels

  int channels() const { return static_cast<int>(tokens.cols()); }
  Eigen::Index count() const { return tokens.rows(); }
  bool all_finite() const { return tokens.allFinite(); }
};

/// Text token embeddings; the final row is the end-of-text summary.
struct PromptEncoding {
  Eigen::MatrixXd token_embeddings;  // sequence_length x channels

  Eigen::RowVectorXd eot() const { return token_embeddings.bottomRows(1); }
  int channels() const { return static_cast<int>(token_embeddings.cols()); }
};

struct EncoderSpec {
  std::string kind = "toy";
  std::uint64_t seed = 0;
  int channels = 64;
  int patch = 32;
};

/// Non-trainable per-video inputs to a video encoder. Cached across epochs.
struct VideoFeatures {
  int t = 0;
  int h = 0;
  int w = 0;
  Eigen::MatrixXd cells;
};

class VideoEncoder {
 public:
  virtual ~VideoEncoder() = default;
  virtual int channels() const = 0;
  virtual VideoFeatures prepare(const FrameStack& frames) const = 0;
  /// Differentiable in the encoder's parameters; returns (t*h*w) x channels.
  virtual ad::Var forward(const VideoFeatures& features) const = 0;
  virtual void collect_parameters(ParameterList& out, const std::string& prefix) const = 0;

  TokenGrid encode(const FrameStack& frames) const;
};

class TextEncoder {
 public:
  virtual ~TextEncoder() = default;
  virtual int channels() const = 0;
  /// Non-trainable token rows, end-of-text row last.
  virtual Eigen::MatrixXd prepare(std::string_view prompt) const = 0;
  virtual ad::Var forward(const Eigen::MatrixXd& prepared) const = 0;
  virtual void collect_parameters(ParameterList& out, const std::string& prefix) const = 0;

  PromptEncoding encode(std::string_view prompt) const;
};

/// Frozen image/text dual encoder used by the implicit text branch.
class DualEmbedder {
 public:
  virtual ~DualEmbedder() = default;
  virtual int dim() const = 0;
  virtual Eigen::RowVectorXd embed_frame(const FrameStack& frames, int t) const = 0;
  virtual Eigen::RowVectorXd embed_text(std::string_view text) const = 0;
};

/// Lowercased whitespace tokenization shared by the toy text models.
std::vector<std::string> tokenize(std::string_view text);

/// Deterministic pseudo-embedding of a token: N(0, stddev^2) entries seeded
/// by (seed, fnv1a(token)).
Eigen::RowVectorXd hashed_embedding(std::string_view token, std::uint64_t seed, int dim,
                                    double stddev);

/// Per-cell channel means through a learnable affine map.
class ToyVideoEncoder final : public VideoEncoder {
 public:
  explicit ToyVideoEncoder(const EncoderSpec& spec);

  int channels() const override { return spec_.channels; }
  int patch() const { return spec_.patch; }
  VideoFeatures prepare(const FrameStack& frames) const override;
  ad::Var forward(const VideoFeatures& features) const override;
  void collect_parameters(ParameterList& out, const std::string& prefix) const override;

  const ad::Var& weight() const { return weight_; }
  const ad::Var& bias() const { return bias_; }

 private:
  EncoderSpec spec_;
  ad::Var weight_;  // 3 x channels
  ad::Var bias_;    // 1 x channels
};

/// Hashed token rows plus an end-of-text row, then a learnable square
/// projection initialised to identity. The end-of-text row is a distinguished
/// vector plus the mean of the token rows, so it summarises the prompt.
class ToyTextEncoder final : public TextEncoder {
 public:
  static constexpr std::string_view kEotToken = "<|endoftext|>";

  explicit ToyTextEncoder(const EncoderSpec& spec);

  int channels() const override { return spec_.channels; }
  Eigen::MatrixXd prepare(std::string_view prompt) const override;
  ad::Var forward(const Eigen::MatrixXd& prepared) const override;
  void collect_parameters(ParameterList& out, const std::string& prefix) const override;

 private:
  EncoderSpec spec_;
  ad::Var projection_;  // channels x channels
};

/// Frozen toy dual encoder: 7x7 cell means through a fixed random
/// projection for frames, summed hashed token vectors for text.
class ToyDualEmbedder final : public DualEmbedder {
 public:
  ToyDualEmbedder(std::uint64_t seed, int dim, int grid = 7);

  int dim() const override { return dim_; }
  Eigen::RowVectorXd embed_frame(const FrameStack& frames, int t) const override;
  Eigen::RowVectorXd embed_text(std::string_view text) const override;

 private:
  std::uint64_t seed_;
  int dim_;
  int grid_;
  Eigen::MatrixXd frame_projection_;  // (grid*grid*3) x dim
};

/// Named constructor registry keyed by EncoderSpec::kind. "toy" is built in;
/// external adapters register their own kinds.
class EncoderRegistry {
 public:
  using VideoFactory = std::function<std::unique_ptr<VideoEncoder>(const EncoderSpec&)>;
  using TextFactory = std::function<std::unique_ptr<TextEncoder>(const EncoderSpec&)>;
  using DualFactory = std::function<std::unique_ptr<DualEmbedder>(const EncoderSpec&)>;

  static EncoderRegistry& instance();

  void register_video(const std::string& kind, VideoFactory factory);
  void register_text(const std::string& kind, TextFactory factory);
  void register_dual(const std::string& kind, DualFactory factory);

  std::unique_ptr<VideoEncoder> make_video(const EncoderSpec& spec) const;
  std::unique_ptr<TextEncoder> make_text(const EncoderSpec& spec) const;
  std::unique_ptr<DualEmbedder> make_dual(const EncoderSpec& spec) const;

 private:
  EncoderRegistry();
  struct Impl;
  std::shared_ptr<Impl> impl_;
};

}  // namespace aigcvqa
