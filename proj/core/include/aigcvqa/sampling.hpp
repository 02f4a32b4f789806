// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "aigcvqa/video.hpp"

namespace aigcvqa {

inline constexpr int kDefaultSide = 224;

/// Source indices for uniform temporal sampling. With n > target the picks
/// are round(i*(n-1)/(target-1)); with n <= target every frame is taken once
/// and the last one repeats to fill the remainder.
std::vector<std::size_t> uniform_indices(std::size_t frame_count, int target_count);

FrameSequence sample_frames_uniform(const FrameSequence& video, int target_count);

/// Bilinear resize with half-pixel centers, edge-clamped.
Frame resize_bilinear(const Frame& frame, int out_height, int out_width);

FrameStack resize_frames(const FrameSequence& frames, int side = kDefaultSide,
                         std::uint64_t source_id = 0);

/// Scales the short side to `side`, then takes the central side x side crop.
FrameStack center_crop_frames(const FrameSequence& frames, int side = kDefaultSide,
                              std::uint64_t source_id = 0);

struct FragmentOffset {
  int y = 0;
  int x = 0;

  bool operator==(const FragmentOffset&) const = default;
};

/// Per-cell crop offsets, row-major over the grid, relative to each cell's
/// top-left corner. A seed draws uniform offsets; no seed centers them.
std::vector<FragmentOffset> fragment_offsets(int frame_height, int frame_width, int grid,
                                             int fragment_side,
                                             std::optional<std::uint64_t> seed);

/// Grid fragment composite. One offset per cell, shared by every frame.
/// Frames whose cells are smaller than a fragment are upscaled first.
FrameStack fragment_sample(const FrameSequence& frames, int grid = 7, int fragment_side = 32,
                           std::optional<std::uint64_t> seed = std::nullopt,
                           std::uint64_t source_id = 0);

/// Per-video seed derived from the run seed.
inline std::uint64_t video_seed(std::uint64_t global_seed, std::uint64_t video_id) noexcept {
  return global_seed ^ video_id;
}

struct Normalization {
  std::array<double, 3> mean{0.5, 0.5, 0.5};
  std::array<double, 3> stddev{0.5, 0.5, 0.5};
};

/// In-place (v - mean[c]) / stddev[c].
void normalize(FrameStack& stack, const Normalization& norm);

}  // namespace aigcvqa
