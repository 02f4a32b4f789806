// SPDX-License-Identifier: Apache-2.0

#include "aigcvqa/caption_sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "aigcvqa/csv.hpp"
#include "aigcvqa/encoder.hpp"
#include "aigcvqa/error.hpp"
#include "aigcvqa/parallel.hpp"
#include "aigcvqa/random.hpp"

namespace aigcvqa {

void IclPromptTemplate::validate() const {
  if (exemplars.size() != kIclShots)
    fail(ErrorKind::argument, "in-context prompt needs exactly 5 exemplars, got " +
                                  std::to_string(exemplars.size()));
  std::set<std::string> distinct;
  for (const auto& e : exemplars) {
    if (e.empty()) fail(ErrorKind::argument, "in-context exemplar is empty");
    if (!distinct.insert(e).second) fail(ErrorKind::argument, "duplicate in-context exemplar: " + e);
  }
}

std::string IclPromptTemplate::render() const {
  validate();
  std::ostringstream out;
  if (video_position == VideoPosition::before_context) out << kVideoToken << '\n';
  out << "Here are " << kIclShots << " example prompts that were used to generate short videos:\n";
  for (std::size_t i = 0; i < exemplars.size(); ++i) out << (i + 1) << ". " << exemplars[i] << '\n';
  if (video_position == VideoPosition::after_context) out << kVideoToken << '\n';
  out << instruction;
  return out.str();
}

std::string build_icl_prompt(std::span<const std::string> exemplars, std::uint64_t seed) {
  IclPromptTemplate tmpl;
  tmpl.exemplars.assign(exemplars.begin(), exemplars.end());
  tmpl.validate();
  Rng rng(seed);
  rng.shuffle(tmpl.exemplars);
  return tmpl.render();
}

std::vector<std::string> sample_icl_exemplars(const DatasetManifest& train, std::uint64_t seed) {
  std::vector<std::string> prompts;
  std::set<std::string> seen;
  for (const auto& r : train.records)
    if (seen.insert(r.prompt).second) prompts.push_back(r.prompt);
  if (prompts.size() < kIclShots)
    fail(ErrorKind::argument, "manifest has fewer than 5 distinct prompts for in-context exemplars");
  Rng rng(seed);
  rng.shuffle(prompts);
  prompts.resize(kIclShots);
  return prompts;
}

std::string ToyCaptioner::caption(const FrameSequence& frames, const std::string&) const {
  if (frames.empty()) fail(ErrorKind::input, "caption: empty video");
  double channel[3] = {0, 0, 0};
  double luma_sum = 0, luma_sq = 0, motion = 0;
  std::size_t pixels = 0;
  for (std::size_t t = 0; t < frames.size(); ++t) {
    const Frame& f = frames[t];
    const std::size_t count = static_cast<std::size_t>(f.height) * f.width;
    for (std::size_t p = 0; p < count; ++p) {
      const double r = f.rgb[p * 3], g = f.rgb[p * 3 + 1], b = f.rgb[p * 3 + 2];
      channel[0] += r;
      channel[1] += g;
      channel[2] += b;
      const double y = 0.299 * r + 0.587 * g + 0.114 * b;
      luma_sum += y;
      luma_sq += y * y;
    }
    pixels += count;
    if (t > 0 && frames[t - 1].rgb.size() == f.rgb.size()) {
      double diff = 0;
      for (std::size_t i = 0; i < f.rgb.size(); ++i) diff += std::abs(f.rgb[i] - frames[t - 1].rgb[i]);
      motion += diff / static_cast<double>(f.rgb.size());
    }
  }
  const double n = static_cast<double>(pixels);
  for (double& c : channel) c /= n;
  const double luma = luma_sum / n;
  const double contrast = std::sqrt(std::max(0.0, luma_sq / n - luma * luma));
  if (frames.size() > 1) motion /= static_cast<double>(frames.size() - 1);

  const char* light = luma < 0.35 ? "dark" : luma > 0.65 ? "bright" : "softly lit";
  const auto hi = std::max_element(channel, channel + 3) - channel;
  const double spread = *std::max_element(channel, channel + 3) - *std::min_element(channel, channel + 3);
  static constexpr const char* kHue[3] = {"red", "green", "blue"};
  const char* hue = spread > 0.05 ? kHue[hi] : "gray";
  const char* movement = motion > 0.05 ? "fast moving" : motion > 0.01 ? "slowly moving" : "static";
  const char* detail = contrast > 0.2 ? "high contrast" : "low contrast";

  std::ostringstream out;
  out << "a " << light << ' ' << hue << " scene, " << movement << ", " << detail;
  return out.str();
}

std::pair<int, double> ToySentenceEmbedder::bucket(std::string_view token) const {
  const std::uint64_t h = mix_seed(seed_, fnv1a(token));
  return {static_cast<int>(h % static_cast<std::uint64_t>(dim_)), (h >> 63) ? -1.0 : 1.0};
}

Eigen::VectorXd ToySentenceEmbedder::embed(std::string_view text) const {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(dim_);
  for (const auto& tok : tokenize(text)) {
    const auto [index, sign] = bucket(tok);
    v(index) += sign;
  }
  const double norm = v.norm();
  if (norm > 0) v /= norm;
  return v;
}

SimilarityScore similarity_from_cosine(double cosine) {
  const double c = std::clamp(cosine, -1.0, 1.0);
  return {c, (c + 1.0) / 2.0};
}

SimilarityScore caption_similarity(std::string_view caption, std::string_view prompt,
                                   const SentenceEmbedder& embedder) {
  if (caption.empty() || prompt.empty()) fail(ErrorKind::input, "caption_similarity: empty text");
  const Eigen::VectorXd a = embedder.embed(caption);
  const Eigen::VectorXd b = embedder.embed(prompt);
  if (a.size() != b.size()) fail(ErrorKind::shape, "sentence embeddings differ in width");
  const double na = a.norm(), nb = b.norm();
  if (!(na > 0) || !(nb > 0) || !a.allFinite() || !b.allFinite())
    fail(ErrorKind::degenerate, "zero-norm or non-finite sentence embedding");
  return similarity_from_cosine(a.dot(b) / (na * nb));
}

CaptionCache load_caption_cache(const std::filesystem::path& path) {
  CaptionCache cache;
  if (!std::filesystem::exists(path)) return cache;
  const auto table = csv::read(path);
  const auto name = table.column("video_name");
  const auto caption = table.column("caption");
  if (!name || !caption) fail(ErrorKind::schema, path.string() + ": caption cache needs video_name,caption");
  for (const auto& row : table.rows) cache[row[*name]] = row[*caption];
  return cache;
}

void save_caption_cache(const CaptionCache& cache, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::io, "cannot write " + path.string());
  csv::write_row(out, {"video_name", "caption"});
  for (const auto& [name, caption] : cache) csv::write_row(out, {name, caption});
}

std::vector<CaptionSimRow> run_caption_similarity(
    const DatasetManifest& manifest, const std::string& icl_prompt, const Captioner& captioner,
    const SentenceEmbedder& embedder, CaptionCache& cache, const CaptionRunOptions& options,
    const std::function<FrameSequence(const VideoRecord&)>& load_frames) {
  const auto& records = manifest.records;
  std::vector<std::size_t> missing;
  for (std::size_t i = 0; i < records.size(); ++i)
    if (!cache.contains(records[i].video_name)) missing.push_back(i);

  const auto fresh = parallel_map<std::string>(missing.size(), options.max_in_flight, [&](std::size_t k) {
    const VideoRecord& r = records[missing[k]];
    return captioner.caption(load_frames(r), icl_prompt);
  });
  for (std::size_t k = 0; k < missing.size(); ++k) cache[records[missing[k]].video_name] = fresh[k];

  std::vector<CaptionSimRow> rows;
  rows.reserve(records.size());
  for (const auto& r : records) {
    const std::string& caption = cache.at(r.video_name);
    rows.push_back({r.video_name, caption, caption_similarity(caption, r.prompt, embedder)});
  }
  return rows;
}

void write_similarity_csv(std::span<const CaptionSimRow> rows, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::io, "cannot write " + path.string());
  csv::write_row(out, {"video_name", "cosine", "normalized"});
  for (const auto& r : rows)
    csv::write_row(out, {r.video_name, csv::format_fixed(r.score.cosine), csv::format_fixed(r.score.normalized)});
}

std::map<std::string, SimilarityScore> read_similarity_csv(const std::filesystem::path& path) {
  const auto table = csv::read(path);
  const auto name = table.column("video_name");
  const auto cosine = table.column("cosine");
  if (!name || !cosine) fail(ErrorKind::schema, path.string() + ": expected video_name,cosine,normalized");
  std::map<std::string, SimilarityScore> out;
  for (const auto& row : table.rows) {
    try {
      out[row[*name]] = similarity_from_cosine(std::stod(row[*cosine]));
    } catch (const std::logic_error&) {
      fail(ErrorKind::parse, path.string() + ": bad cosine '" + row[*cosine] + "'");
    }
  }
  return out;
}

}  // namespace aigcvqa
