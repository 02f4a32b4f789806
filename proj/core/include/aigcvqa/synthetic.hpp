// SPDX-License-Identifier: Apache-2.0
//
// Procedural videos with a known quality knob, used for smoke runs, the
// overfit check and the ablation ladder. Higher quality means brighter,
// higher-contrast, steadier frames; the generator label tints the colours.

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "aigcvqa/dataset.hpp"
#include "aigcvqa/video.hpp"

namespace aigcvqa {

struct SyntheticOptions {
  std::size_t count = 16;
  int frames = 8;
  int height = 64;
  int width = 64;
  std::uint64_t seed = 0;
  /// Standard deviation of MOS noise on the 1..5 scale.
  double mos_noise = 0.0;
  std::uint64_t first_id = 1000;
};

struct SyntheticVideo {
  VideoRecord record;
  FrameSequence frames;
  double quality = 0.0;  // in (0, 1); mos = 1 + 4 * quality + noise
};

/// Qualities are evenly spread and assigned in a seeded order; generator
/// labels cycle through all ten domains.
std::vector<SyntheticVideo> make_synthetic_videos(const SyntheticOptions& options);

DatasetManifest to_manifest(const std::vector<SyntheticVideo>& videos, SplitTag split);

/// Writes every video as a raw container plus `manifest.csv` into `dir` and
/// returns the manifest as loaded back from disk.
DatasetManifest write_synthetic_dataset(const std::vector<SyntheticVideo>& videos,
                                        const std::filesystem::path& dir);

}  // namespace aigcvqa
