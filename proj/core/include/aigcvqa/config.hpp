// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "aigcvqa/encoder.hpp"
#include "aigcvqa/fusion.hpp"
#include "aigcvqa/implicit_text.hpp"
#include "aigcvqa/objectives.hpp"
#include "aigcvqa/sampling.hpp"

namespace aigcvqa {

/// Ablation switches. The visual-harmony branches are always on.
struct BranchToggles {
  bool explicit_prompt = true;
  bool implicit_text = true;
  bool aux_cls = true;
  bool caption_sim = false;

  bool operator==(const BranchToggles&) const = default;
};

struct ModelConfig {
  EncoderSpec aesthetic{"toy", 11, 64, 32};
  EncoderSpec technical{"toy", 12, 64, 32};
  EncoderSpec text{"toy", 13, 64, 32};
  EncoderSpec dual{"toy", 14, 32, 32};
  int width = 64;
  int head_count = 1;
  bool output_projection = false;
  /// Which visual token grid the prompt attends over: "aesthetic" or "technical".
  std::string explicit_tokens = "aesthetic";
  BranchToggles branches;
  BranchWeights branch_weights;
  std::vector<TextPairSpec> text_pairs = default_text_pairs();
  std::uint64_t init_seed = 7;
};

struct FragmentConfig {
  int grid = 7;
  int fragment_side = 32;
  /// Re-draw fragment offsets every epoch instead of once per video.
  bool epoch_varying = false;
};

struct OptimizerConfig {
  double lr_backbone = 6.25e-5;
  double lr_heads = 6.25e-4;
  double weight_decay = 0.05;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double grad_clip = 1.0;  // global L2 norm; <= 0 disables
};

struct ScheduleConfig {
  int linear_probe_epochs = 10;
  int finetune_epochs = 15;
  /// Encoder name ("aesthetic", "technical", "text") -> its own linear-probe
  /// length, for backbones that stay frozen longer.
  std::map<std::string, int> linear_probe_overrides;

  int total_epochs() const { return linear_probe_epochs + finetune_epochs; }
  int linear_probe_for(const std::string& encoder) const;
};

struct CaptionConfig {
  std::size_t max_in_flight = 4;
  std::uint64_t icl_seed = 0;
  int embedder_dim = 256;
  /// Five in-context exemplars; filled from the training manifest when empty.
  std::vector<std::string> exemplars;
};

struct TrainConfig {
  ModelConfig model;
  int frames = 16;
  int side = kDefaultSide;
  Normalization normalization;
  FragmentConfig fragments;
  LossWeights loss;
  OptimizerConfig optimizer;
  ScheduleConfig schedule;
  int batch_size = 8;
  std::uint64_t seed = 0;
  std::size_t workers = 4;
  bool deterministic = false;
  CaptionConfig caption;

  /// Throws ErrorKind::config on inconsistent values.
  void validate() const;
  std::size_t effective_workers() const { return deterministic ? 1 : workers; }
};

nlohmann::json to_json(const TrainConfig& config);
/// Missing keys keep their defaults; unknown keys are rejected.
TrainConfig train_config_from_json(const nlohmann::json& j);
TrainConfig load_train_config(const std::filesystem::path& path);
void save_train_config(const TrainConfig& config, const std::filesystem::path& path);

}  // namespace aigcvqa
