// SPDX-License-Identifier: Apache-2.0
//
// Training (linear probe, then end-to-end fine-tuning), prediction,
// evaluation and the branch ablation ladder.

#pragma once

#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "aigcvqa/caption_sim.hpp"
#include "aigcvqa/checkpoint.hpp"
#include "aigcvqa/config.hpp"
#include "aigcvqa/dataset.hpp"
#include "aigcvqa/ensemble.hpp"
#include "aigcvqa/metrics.hpp"
#include "aigcvqa/model.hpp"
#include "aigcvqa/random.hpp"

namespace aigcvqa {

/// Shuffled mini-batches of indices. A trailing singleton batch is merged
/// into its predecessor, and batches whose MOS values are all equal swap a
/// member with another batch so every batch has >= 2 distinct targets.
/// Throws ErrorKind::degenerate when that is impossible.
std::vector<std::vector<std::size_t>> make_batches(std::span<const double> mos, int batch_size,
                                                   Rng& rng);

/// Optional extra training term computed from a batch (e.g. a caption
/// regulariser). Added to the combined loss as-is.
using ExtraLoss =
    std::function<ad::Var(std::span<const PreparedSample>, std::span<const ModelOutput>)>;

struct TrainOptions {
  FrameLoader load_frames = load_record_frames;
  /// JSON-lines sink: {"event":"step",...} per optimizer step and
  /// {"event":"epoch",...} per epoch.
  std::ostream* log = nullptr;
  /// Also score the training set after each epoch.
  bool evaluate_train = false;
  ExtraLoss extra_loss;
  /// Called after each epoch with the 0-based epoch index.
  std::function<void(int, const QualityModel&)> on_epoch_end;
};

struct StepRecord {
  long step = 0;
  int epoch = 0;
  LossBreakdown loss;
};

struct EpochSummary {
  int epoch = 0;
  int phase = 1;  // 1 = linear probe, 2 = fine-tuning
  double mean_loss = 0.0;
  std::optional<EvalReport> train;
  std::optional<EvalReport> val;
};

struct TrainResult {
  Checkpoint best;
  int best_epoch = 0;
  std::vector<StepRecord> steps;
  std::vector<EpochSummary> epochs;
};

/// The train manifest must carry MOS and domain labels. `val` may be null or
/// lack MOS; the best checkpoint is then the last epoch.
TrainResult train(const TrainConfig& config, const DatasetManifest& train_set,
                  const DatasetManifest* val_set, const TrainOptions& options = {});

/// Fills in ICL exemplars from the training manifest when the config has none.
TrainConfig with_caption_exemplars(TrainConfig config, const DatasetManifest& train_set);

struct PredictOptions {
  FrameLoader load_frames = load_record_frames;
  std::size_t workers = 1;
  /// Required when the caption-similarity branch is enabled.
  std::optional<std::map<std::string, SimilarityScore>> caption_scores;
  /// JSON-lines sink with one ScoreBundle per video.
  std::ostream* bundle_log = nullptr;
};

struct PredictRow {
  std::string video_name;
  std::optional<ScoreBundle> bundle;
  std::string error;  // non-empty when the row failed
};

struct PredictResult {
  std::vector<PredictRow> rows;  // manifest order
  std::size_t failures = 0;

  /// Successful rows only, in manifest order.
  PredictionSet predictions() const;
};

PredictResult predict(const QualityModel& model, const DatasetManifest& manifest,
                      const PredictOptions& options = {});

nlohmann::json bundle_to_json(const std::string& video_name, const ScoreBundle& bundle);

/// Aligns predictions to targets by video_name (targets: `score` column if
/// present, else `mos`). Throws ErrorKind::alignment on mismatched names.
EvalReport evaluate_predictions(const PredictionSet& predictions, const PredictionSet& targets);
EvalReport evaluate_files(const std::filesystem::path& predictions,
                          const std::filesystem::path& targets);

struct AblationSetting {
  std::string name;
  BranchToggles toggles;
};

/// baseline, +EP, +IT, +EP+IT, +EP+AC, +EP+IT+AC (EP explicit prompt, IT
/// implicit text, AC auxiliary classification).
std::vector<AblationSetting> ablation_ladder();

struct AblationRow {
  AblationSetting setting;
  EvalReport report;
};

/// Trains every ladder row from the same base config and scores it on `val_set`.
std::vector<AblationRow> run_ablation(const TrainConfig& base, const DatasetManifest& train_set,
                                      const DatasetManifest& val_set,
                                      const TrainOptions& options = {});

}  // namespace aigcvqa
