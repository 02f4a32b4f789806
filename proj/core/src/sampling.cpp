// SPDX-License-Identifier: Apache-2.0

#include "aigcvqa/sampling.hpp"

#include <algorithm>
#include <cmath>

#include "aigcvqa/error.hpp"
#include "aigcvqa/random.hpp"

namespace aigcvqa {

namespace {

void require_frames(const FrameSequence& frames, const char* op) {
  if (frames.empty()) fail(ErrorKind::input, std::string(op) + ": empty frame sequence");
  for (const auto& f : frames) {
    if (f.height <= 0 || f.width <= 0 ||
        f.rgb.size() != static_cast<std::size_t>(f.height) * f.width * 3)
      fail(ErrorKind::input, std::string(op) + ": malformed frame");
    if (f.height != frames.front().height || f.width != frames.front().width)
      fail(ErrorKind::shape, std::string(op) + ": frames differ in size");
  }
}

void copy_into(FrameStack& stack, int t, const Frame& frame) {
  std::copy(frame.rgb.begin(), frame.rgb.end(),
            stack.data.begin() + static_cast<std::ptrdiff_t>(stack.index(t, 0, 0, 0)));
}

struct Tap {
  int lo;
  int hi;
  double frac;
};

std::vector<Tap> bilinear_taps(int in_size, int out_size) {
  std::vector<Tap> taps(static_cast<std::size_t>(out_size));
  const double ratio = static_cast<double>(in_size) / out_size;
  for (int o = 0; o < out_size; ++o) {
    double src = (o + 0.5) * ratio - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(in_size - 1));
    const int lo = static_cast<int>(std::floor(src));
    const int hi = std::min(lo + 1, in_size - 1);
    taps[static_cast<std::size_t>(o)] = {lo, hi, src - lo};
  }
  return taps;
}

}  // namespace

std::vector<std::size_t> uniform_indices(std::size_t frame_count, int target_count) {
  if (frame_count == 0) fail(ErrorKind::input, "uniform sampling of an empty video");
  if (target_count < 1) fail(ErrorKind::argument, "target frame count must be >= 1");
  const auto target = static_cast<std::size_t>(target_count);
  std::vector<std::size_t> out(target);
  if (frame_count <= target) {
    for (std::size_t i = 0; i < target; ++i) out[i] = std::min(i, frame_count - 1);
    return out;
  }
  if (target == 1) {
    out[0] = 0;
    return out;
  }
  const double step = static_cast<double>(frame_count - 1) / static_cast<double>(target - 1);
  for (std::size_t i = 0; i < target; ++i)
    out[i] = static_cast<std::size_t>(std::llround(static_cast<double>(i) * step));
  return out;
}

FrameSequence sample_frames_uniform(const FrameSequence& video, int target_count) {
  const auto idx = uniform_indices(video.size(), target_count);
  FrameSequence out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(video[i]);
  return out;
}

Frame resize_bilinear(const Frame& frame, int out_height, int out_width) {
  if (out_height < 1 || out_width < 1) fail(ErrorKind::argument, "resize target must be positive");
  if (frame.height == out_height && frame.width == out_width) return frame;
  const auto ys = bilinear_taps(frame.height, out_height);
  const auto xs = bilinear_taps(frame.width, out_width);
  Frame out(out_height, out_width);
  for (int y = 0; y < out_height; ++y) {
    const Tap& ty = ys[static_cast<std::size_t>(y)];
    for (int x = 0; x < out_width; ++x) {
      const Tap& tx = xs[static_cast<std::size_t>(x)];
      for (int c = 0; c < 3; ++c) {
        const double top = frame.at(ty.lo, tx.lo, c) * (1 - tx.frac) + frame.at(ty.lo, tx.hi, c) * tx.frac;
        const double bottom = frame.at(ty.hi, tx.lo, c) * (1 - tx.frac) + frame.at(ty.hi, tx.hi, c) * tx.frac;
        out.at(y, x, c) = top * (1 - ty.frac) + bottom * ty.frac;
      }
    }
  }
  return out;
}

FrameStack resize_frames(const FrameSequence& frames, int side, std::uint64_t source_id) {
  require_frames(frames, "resize_frames");
  if (side < 1) fail(ErrorKind::argument, "resize side must be positive");
  FrameStack stack(static_cast<int>(frames.size()), side, side, SampleKind::resized, source_id);
  for (std::size_t t = 0; t < frames.size(); ++t)
    copy_into(stack, static_cast<int>(t), resize_bilinear(frames[t], side, side));
  return stack;
}

FrameStack center_crop_frames(const FrameSequence& frames, int side, std::uint64_t source_id) {
  require_frames(frames, "center_crop_frames");
  if (side < 1) fail(ErrorKind::argument, "crop side must be positive");
  const int h = frames.front().height;
  const int w = frames.front().width;
  const double scale = static_cast<double>(side) / std::min(h, w);
  const int sh = std::max(side, static_cast<int>(std::lround(h * scale)));
  const int sw = std::max(side, static_cast<int>(std::lround(w * scale)));
  const int oy = (sh - side) / 2;
  const int ox = (sw - side) / 2;
  FrameStack stack(static_cast<int>(frames.size()), side, side, SampleKind::cropped, source_id);
  for (std::size_t t = 0; t < frames.size(); ++t) {
    const Frame scaled = resize_bilinear(frames[t], sh, sw);
    for (int y = 0; y < side; ++y)
      for (int x = 0; x < side; ++x)
        for (int c = 0; c < 3; ++c) stack.at(static_cast<int>(t), y, x, c) = scaled.at(y + oy, x + ox, c);
  }
  return stack;
}

std::vector<FragmentOffset> fragment_offsets(int frame_height, int frame_width, int grid,
                                             int fragment_side,
                                             std::optional<std::uint64_t> seed) {
  if (grid < 1 || fragment_side < 1)
    fail(ErrorKind::argument, "fragment grid and side must be >= 1");
  std::vector<FragmentOffset> offsets;
  offsets.reserve(static_cast<std::size_t>(grid) * grid);
  std::optional<Rng> rng;
  if (seed) rng.emplace(*seed);
  for (int gy = 0; gy < grid; ++gy) {
    const int cell_h = (gy + 1) * frame_height / grid - gy * frame_height / grid;
    for (int gx = 0; gx < grid; ++gx) {
      const int cell_w = (gx + 1) * frame_width / grid - gx * frame_width / grid;
      const int slack_y = std::max(0, cell_h - fragment_side);
      const int slack_x = std::max(0, cell_w - fragment_side);
      FragmentOffset off;
      if (rng) {
        off.y = static_cast<int>(rng->below(static_cast<std::uint64_t>(slack_y) + 1));
        off.x = static_cast<int>(rng->below(static_cast<std::uint64_t>(slack_x) + 1));
      } else {
        off.y = slack_y / 2;
        off.x = slack_x / 2;
      }
      offsets.push_back(off);
    }
  }
  return offsets;
}

FrameStack fragment_sample(const FrameSequence& frames, int grid, int fragment_side,
                           std::optional<std::uint64_t> seed, std::uint64_t source_id) {
  if (grid < 1 || fragment_side < 1)
    fail(ErrorKind::argument, "fragment grid and side must be >= 1");
  require_frames(frames, "fragment_sample");
  const int min_extent = grid * fragment_side;
  const int h = std::max(frames.front().height, min_extent);
  const int w = std::max(frames.front().width, min_extent);
  const auto offsets = fragment_offsets(h, w, grid, fragment_side, seed);

  const int out_side = grid * fragment_side;
  FrameStack stack(static_cast<int>(frames.size()), out_side, out_side, SampleKind::fragments,
                   source_id);
  for (std::size_t t = 0; t < frames.size(); ++t) {
    const Frame src = resize_bilinear(frames[t], h, w);
    for (int gy = 0; gy < grid; ++gy) {
      const int y0 = gy * h / grid;
      for (int gx = 0; gx < grid; ++gx) {
        const int x0 = gx * w / grid;
        const auto& off = offsets[static_cast<std::size_t>(gy) * grid + gx];
        for (int dy = 0; dy < fragment_side; ++dy)
          for (int dx = 0; dx < fragment_side; ++dx)
            for (int c = 0; c < 3; ++c)
              stack.at(static_cast<int>(t), gy * fragment_side + dy, gx * fragment_side + dx, c) =
                  src.at(y0 + off.y + dy, x0 + off.x + dx, c);
      }
    }
  }
  return stack;
}

void normalize(FrameStack& stack, const Normalization& norm) {
  for (int c = 0; c < 3; ++c)
    if (!(norm.stddev[static_cast<std::size_t>(c)] > 0))
      fail(ErrorKind::config, "normalization stddev must be positive");
  for (std::size_t i = 0; i < stack.data.size(); ++i) {
    const std::size_t c = i % 3;
    stack.data[i] = (stack.data[i] - norm.mean[c]) / norm.stddev[c];
  }
}

}  // namespace aigcvqa
