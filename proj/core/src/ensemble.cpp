// SPDX-License-Identifier: Apache-2.0

#include "aigcvqa/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <optional>
#include <set>

#include <Eigen/Dense>

#include "aigcvqa/csv.hpp"
#include "aigcvqa/error.hpp"
#include "aigcvqa/metrics.hpp"

namespace aigcvqa {

std::unordered_map<std::string, double> PredictionSet::as_map() const {
  std::unordered_map<std::string, double> out;
  for (std::size_t i = 0; i < names.size(); ++i) out[names[i]] = scores[i];
  return out;
}

PredictionSet read_predictions(const std::filesystem::path& path, const std::string& column) {
  const auto table = csv::read(path);
  const auto name_col = table.column("video_name");
  if (!name_col) fail(ErrorKind::schema, path.string() + ": missing column 'video_name'");
  std::optional<std::size_t> score_col;
  if (!column.empty()) {
    score_col = table.column(column);
  } else {
    score_col = table.column("score");
    if (!score_col) score_col = table.column("mos");
  }
  if (!score_col)
    fail(ErrorKind::schema, path.string() + ": missing score column '" +
                                (column.empty() ? std::string("score") : column) + "'");
  PredictionSet out;
  std::set<std::string> seen;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::string& name = row[*name_col];
    if (!seen.insert(name).second)
      fail(ErrorKind::duplicate, path.string() + ": duplicate video_name '" + name + "'");
    double value = 0;
    try {
      std::size_t used = 0;
      value = std::stod(row[*score_col], &used);
      if (used != row[*score_col].size()) throw std::invalid_argument("trailing");
    } catch (const std::logic_error&) {
      fail(ErrorKind::parse, path.string() + " row " + std::to_string(r + 1) + ": bad score '" +
                                 row[*score_col] + "'");
    }
    out.names.push_back(name);
    out.scores.push_back(value);
  }
  return out;
}

void write_predictions(const PredictionSet& predictions, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::io, "cannot write " + path.string());
  csv::write_row(out, {"video_name", "score"});
  for (std::size_t i = 0; i < predictions.size(); ++i)
    csv::write_row(out, {predictions.names[i], csv::format_fixed(predictions.scores[i], 6)});
}

std::vector<double> align_to(const PredictionSet& reference, const PredictionSet& other,
                             const std::string& other_label) {
  const auto lookup = other.as_map();
  std::set<std::string> ref_names(reference.names.begin(), reference.names.end());
  std::vector<std::string> only_ref, only_other;
  for (const auto& n : reference.names)
    if (!lookup.contains(n)) only_ref.push_back(n);
  for (const auto& n : other.names)
    if (!ref_names.contains(n)) only_other.push_back(n);
  if (!only_ref.empty() || !only_other.empty()) {
    std::string msg = other_label + " does not cover the same videos;";
    auto list = [&](const char* label, std::vector<std::string>& names) {
      if (names.empty()) return;
      std::sort(names.begin(), names.end());
      msg += std::string(" ") + label + ":";
      for (std::size_t i = 0; i < names.size() && i < 20; ++i) msg += " " + names[i];
      if (names.size() > 20) msg += " ... (" + std::to_string(names.size()) + " total)";
    };
    list("missing", only_ref);
    list("unexpected", only_other);
    fail(ErrorKind::alignment, msg);
  }
  std::vector<double> aligned;
  aligned.reserve(reference.size());
  for (const auto& n : reference.names) aligned.push_back(lookup.at(n));
  return aligned;
}

EnsembleMember parse_member(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos) return {text, 1.0};
  EnsembleMember m;
  m.path = text.substr(0, colon);
  const std::string weight = text.substr(colon + 1);
  try {
    std::size_t used = 0;
    m.weight = std::stod(weight, &used);
    if (used != weight.size()) throw std::invalid_argument("trailing");
  } catch (const std::logic_error&) {
    fail(ErrorKind::argument, "bad ensemble member weight in '" + text + "'");
  }
  if (m.path.empty()) fail(ErrorKind::argument, "empty ensemble member path in '" + text + "'");
  return m;
}

std::vector<double> zscore(std::span<const double> values) {
  std::vector<double> out(values.begin(), values.end());
  if (out.empty()) return out;
  const double n = static_cast<double>(out.size());
  const double mean = std::accumulate(out.begin(), out.end(), 0.0) / n;
  double var = 0;
  for (double v : out) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / n);
  for (double& v : out) v = sd > 0 ? (v - mean) / sd : 0.0;
  return out;
}

namespace {

std::vector<std::vector<double>> aligned_columns(std::span<const PredictionSet> members,
                                                 const PredictionSet& reference, bool normalize) {
  std::vector<std::vector<double>> cols;
  for (std::size_t m = 0; m < members.size(); ++m) {
    auto col = align_to(reference, members[m], "member " + std::to_string(m + 1));
    if (normalize) col = zscore(col);
    cols.push_back(std::move(col));
  }
  return cols;
}

}  // namespace

PredictionSet ensemble_predictions(std::span<const PredictionSet> members,
                                   std::span<const double> weights, bool normalize_scores) {
  if (members.empty()) fail(ErrorKind::argument, "ensemble needs at least one member");
  if (weights.size() != members.size()) fail(ErrorKind::argument, "one weight per ensemble member required");
  double weight_sum = 0;
  bool any_nonzero = false;
  for (double w : weights) {
    if (!std::isfinite(w)) fail(ErrorKind::argument, "ensemble weights must be finite");
    weight_sum += w;
    any_nonzero = any_nonzero || w != 0.0;
  }
  if (!any_nonzero) fail(ErrorKind::argument, "ensemble weights are all zero");
  if (std::abs(weight_sum) < 1e-12) fail(ErrorKind::argument, "ensemble weights sum to zero; cannot normalise");

  const PredictionSet& reference = members.front();
  const auto cols = aligned_columns(members, reference, normalize_scores);
  PredictionSet out;
  out.names = reference.names;
  out.scores.assign(reference.size(), 0.0);
  for (std::size_t i = 0; i < reference.size(); ++i) {
    double acc = 0;
    for (std::size_t m = 0; m < cols.size(); ++m) acc += weights[m] * cols[m][i];
    out.scores[i] = acc / weight_sum;
  }
  return out;
}

PredictionSet ensemble_predictions(const EnsembleSpec& spec) {
  std::vector<PredictionSet> members;
  std::vector<double> weights;
  for (const auto& m : spec.members) {
    members.push_back(read_predictions(m.path));
    weights.push_back(m.weight);
  }
  return ensemble_predictions(members, weights, spec.normalize_scores);
}

EnsembleFit fit_ensemble_weights(std::span<const PredictionSet> members,
                                 const PredictionSet& targets, bool normalize_scores) {
  if (members.size() < 2) fail(ErrorKind::argument, "weight fitting needs at least 2 members");
  const PredictionSet& reference = members.front();
  const auto cols = aligned_columns(members, reference, normalize_scores);
  const auto y = align_to(reference, targets, "target file");

  const auto n = static_cast<Eigen::Index>(reference.size());
  const auto m = static_cast<Eigen::Index>(cols.size());
  Eigen::MatrixXd design(n, m);
  for (Eigen::Index j = 0; j < m; ++j)
    for (Eigen::Index i = 0; i < n; ++i) design(i, j) = cols[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
  const Eigen::VectorXd target = Eigen::Map<const Eigen::VectorXd>(y.data(), n);

  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(design);
  EnsembleFit fit;
  fit.rank = static_cast<long>(cod.rank());
  if (fit.rank == 0)
    fail(ErrorKind::fit, "ensemble design matrix is singular (rank 0 of " + std::to_string(m) +
                             " members over " + std::to_string(n) + " videos)");
  const Eigen::VectorXd w = cod.solve(target);
  fit.weights.assign(w.data(), w.data() + w.size());
  const Eigen::VectorXd fitted = design * w;
  fit.residual_norm = (fitted - target).norm();

  const std::vector<double> fitted_v(fitted.data(), fitted.data() + fitted.size());
  try {
    fit.fitted_srocc = srocc(fitted_v, y);
  } catch (const Error&) {
    fit.fitted_srocc = 0.0;
  }
  for (const auto& col : cols) {
    try {
      fit.member_srocc.push_back(srocc(col, y));
    } catch (const Error&) {
      fit.member_srocc.push_back(0.0);
    }
  }
  return fit;
}

}  // namespace aigcvqa
