// SPDX-License-Identifier: Apache-2.0

#include "aigcvqa/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "aigcvqa/error.hpp"
#include "aigcvqa/random.hpp"

namespace aigcvqa {

namespace {

constexpr std::array<const char*, 8> kAdjectives{"serene", "vivid", "misty", "golden",
                                                 "stormy", "quiet", "neon", "ancient"};
constexpr std::array<const char*, 8> kSubjects{"forest", "city street", "ocean", "mountain lake",
                                               "cat", "robot", "garden", "desert road"};
constexpr std::array<const char*, 6> kActions{"at sunset", "in the rain", "under a clear sky",
                                              "seen from above", "in slow motion", "at night"};

// Small per-generator colour cast.
std::array<double, 3> domain_tint(int domain) {
  const double angle = 2.0 * std::numbers::pi * domain / kDomainCount;
  return {0.06 * std::cos(angle), 0.06 * std::cos(angle - 2.0944), 0.06 * std::cos(angle + 2.0944)};
}

}  // namespace

std::vector<SyntheticVideo> make_synthetic_videos(const SyntheticOptions& options) {
  if (options.count < 1 || options.frames < 1 || options.height < 1 || options.width < 1)
    fail(ErrorKind::argument, "synthetic dataset needs positive count, frames and size");
  Rng rng(options.seed);
  std::vector<double> qualities(options.count);
  for (std::size_t i = 0; i < options.count; ++i)
    qualities[i] = (static_cast<double>(i) + 0.5) / static_cast<double>(options.count);
  rng.shuffle(qualities);

  std::vector<SyntheticVideo> videos;
  videos.reserve(options.count);
  for (std::size_t i = 0; i < options.count; ++i) {
    SyntheticVideo v;
    const double q = qualities[i];
    const int domain = static_cast<int>(i % kDomainCount);
    v.quality = q;
    v.record.video_id = options.first_id + i;
    v.record.video_name = format_video_filename(v.record.video_id, domain);
    v.record.video_path = v.record.video_name;
    v.record.domain_label = domain;
    v.record.prompt = std::string("a ") + kAdjectives[rng.below(kAdjectives.size())] + " " +
                      kSubjects[rng.below(kSubjects.size())] + " " +
                      kActions[rng.below(kActions.size())];
    const double noise = options.mos_noise > 0 ? options.mos_noise * rng.normal() : 0.0;
    v.record.mos = std::clamp(1.0 + 4.0 * q + noise, 1.0, 5.0);

    const double level = 0.2 + 0.5 * q;
    const double contrast = 0.05 + 0.25 * q;
    const double flicker = 0.12 * (1.0 - q);
    const auto tint = domain_tint(domain);
    const double fx = 1.0 + static_cast<double>(rng.below(3));
    const double fy = 1.0 + static_cast<double>(rng.below(3));
    const double phase = 2.0 * std::numbers::pi * rng.uniform();
    for (int t = 0; t < options.frames; ++t) {
      Frame frame(options.height, options.width);
      const double jitter = flicker * (2.0 * rng.uniform() - 1.0);
      const double shift = 0.35 * t;
      for (int y = 0; y < options.height; ++y) {
        for (int x = 0; x < options.width; ++x) {
          const double u = static_cast<double>(x) / options.width;
          const double w = static_cast<double>(y) / options.height;
          const double pattern = std::sin(2.0 * std::numbers::pi * fx * u + phase + shift) *
                                 std::cos(2.0 * std::numbers::pi * fy * w - shift);
          for (int c = 0; c < 3; ++c)
            frame.at(y, x, c) = std::clamp(level + contrast * pattern + tint[c] + jitter, 0.0, 1.0);
        }
      }
      v.frames.push_back(std::move(frame));
    }
    videos.push_back(std::move(v));
  }
  return videos;
}

DatasetManifest to_manifest(const std::vector<SyntheticVideo>& videos, SplitTag split) {
  DatasetManifest m;
  m.split_tag = split;
  for (const auto& v : videos) m.records.push_back(v.record);
  return m;
}

DatasetManifest write_synthetic_dataset(const std::vector<SyntheticVideo>& videos,
                                        const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& v : videos) write_raw_video(dir / v.record.video_name, v.frames);
  const auto manifest_path = dir / "manifest.csv";
  write_manifest(to_manifest(videos, SplitTag::train), manifest_path);
  return load_manifest(manifest_path, SplitTag::train);
}

}  // namespace aigcvqa
