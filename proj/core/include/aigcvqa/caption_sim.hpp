// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "aigcvqa/dataset.hpp"
#include "aigcvqa/video.hpp"

namespace aigcvqa {

inline constexpr std::size_t kIclShots = 5;

/// Few-shot captioning prompt. Exemplars are real training prompts so the
/// captioner answers in prompt style rather than natural-caption style.
struct IclPromptTemplate {
  enum class VideoPosition { before_context, after_context };

  std::string instruction =
      "Describe the video in one sentence, written in the same style as the example prompts.";
  std::vector<std::string> exemplars;
  VideoPosition video_position = VideoPosition::before_context;

  static constexpr std::string_view kVideoToken = "<video>";

  /// Throws ErrorKind::argument unless there are exactly 5 distinct,
  /// non-empty exemplars.
  void validate() const;
  std::string render() const;
};

/// Renders the template with the exemplars in a seed-determined order.
std::string build_icl_prompt(std::span<const std::string> exemplars, std::uint64_t seed);

/// Draws 5 distinct prompts from a manifest.
std::vector<std::string> sample_icl_exemplars(const DatasetManifest& train, std::uint64_t seed);

class Captioner {
 public:
  virtual ~Captioner() = default;
  virtual std::string name() const = 0;
  virtual std::string caption(const FrameSequence& frames, const std::string& icl_prompt) const = 0;
};

class SentenceEmbedder {
 public:
  virtual ~SentenceEmbedder() = default;
  virtual std::string name() const = 0;
  virtual Eigen::VectorXd embed(std::string_view text) const = 0;
};

/// Keyword digest of frame statistics (brightness, dominant hue, contrast,
/// motion). Deterministic; ignores the prompt text.
class ToyCaptioner final : public Captioner {
 public:
  std::string name() const override { return "toy"; }
  std::string caption(const FrameSequence& frames, const std::string& icl_prompt) const override;
};

/// Signed feature hashing of lowercased whitespace tokens, unit-normalised.
class ToySentenceEmbedder final : public SentenceEmbedder {
 public:
  explicit ToySentenceEmbedder(int dim = 256, std::uint64_t seed = 0) : dim_(dim), seed_(seed) {}

  std::string name() const override { return "toy"; }
  Eigen::VectorXd embed(std::string_view text) const override;
  /// Bucket index and sign a token maps to.
  std::pair<int, double> bucket(std::string_view token) const;
  int dim() const { return dim_; }

 private:
  int dim_;
  std::uint64_t seed_;
};

struct SimilarityScore {
  double cosine = 0.0;      // [-1, 1]
  double normalized = 0.5;  // (cosine + 1) / 2
};

SimilarityScore similarity_from_cosine(double cosine);

/// Throws ErrorKind::degenerate when either embedding has zero norm.
SimilarityScore caption_similarity(std::string_view caption, std::string_view prompt,
                                   const SentenceEmbedder& embedder);

/// Keyed by video_name.
using CaptionCache = std::map<std::string, std::string>;

CaptionCache load_caption_cache(const std::filesystem::path& path);
void save_caption_cache(const CaptionCache& cache, const std::filesystem::path& path);

struct CaptionSimRow {
  std::string video_name;
  std::string caption;
  SimilarityScore score;
};

struct CaptionRunOptions {
  std::size_t max_in_flight = 4;
  std::uint64_t seed = 0;
};

/// Captions every record (reusing and extending `cache`), then scores each
/// caption against its prompt. At most max_in_flight captioner calls run at
/// once; rows come back in manifest order.
std::vector<CaptionSimRow> run_caption_similarity(
    const DatasetManifest& manifest, const std::string& icl_prompt, const Captioner& captioner,
    const SentenceEmbedder& embedder, CaptionCache& cache, const CaptionRunOptions& options,
    const std::function<FrameSequence(const VideoRecord&)>& load_frames);

void write_similarity_csv(std::span<const CaptionSimRow> rows, const std::filesystem::path& path);
std::map<std::string, SimilarityScore> read_similarity_csv(const std::filesystem::path& path);

}  // namespace aigcvqa
