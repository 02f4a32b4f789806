// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace aigcvqa {

/// Ordered (video_name, score) pairs, as found in a prediction CSV.
struct PredictionSet {
  std::vector<std::string> names;
  std::vector<double> scores;

  std::size_t size() const noexcept { return names.size(); }
  std::unordered_map<std::string, double> as_map() const;
};

/// Reads `video_name,<column>`; when `column` is empty, uses "score" if
/// present, else "mos" (so a manifest doubles as a target file).
PredictionSet read_predictions(const std::filesystem::path& path, const std::string& column = "");

/// `video_name,score`, six decimals.
void write_predictions(const PredictionSet& predictions, const std::filesystem::path& path);

/// Reorders `other` to `reference`'s video order. Throws ErrorKind::alignment
/// naming the symmetric difference when the name sets differ.
std::vector<double> align_to(const PredictionSet& reference, const PredictionSet& other,
                             const std::string& other_label = "member");

struct EnsembleMember {
  std::filesystem::path path;
  double weight = 1.0;
};

struct EnsembleSpec {
  std::vector<EnsembleMember> members;
  bool normalize_scores = false;
};

/// Parses "path:weight" (split at the last colon). A bare path gets weight 1.
EnsembleMember parse_member(const std::string& text);

/// Z-scores over the whole set (population std). Constant sets become 0.
std::vector<double> zscore(std::span<const double> values);

/// Per video sum_m w_m s_m / sum_m w_m over aligned members; rows follow
/// the first member's order.
PredictionSet ensemble_predictions(std::span<const PredictionSet> members,
                                   std::span<const double> weights, bool normalize_scores);
PredictionSet ensemble_predictions(const EnsembleSpec& spec);

struct EnsembleFit {
  std::vector<double> weights;
  long rank = 0;
  double residual_norm = 0.0;
  double fitted_srocc = 0.0;
  std::vector<double> member_srocc;
};

/// Minimum-norm least-squares weights (no intercept) for the weighted sum of
/// member scores against targets. Rank-deficient designs return the
/// minimum-norm solution; a rank-0 design is a fit error.
EnsembleFit fit_ensemble_weights(std::span<const PredictionSet> members,
                                 const PredictionSet& targets, bool normalize_scores = false);

}  // namespace aigcvqa
