// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <random>

#include "aigcvqa/sampling.hpp"
#include "test_util.hpp"

using namespace aigcvqa;
using testutil::kind_of;

namespace {

FrameSequence numbered_frames(int n, int h = 4, int w = 4) {
  FrameSequence out;
  for (int t = 0; t < n; ++t) out.emplace_back(h, w, static_cast<double>(t));
  return out;
}

Frame random_frame(std::mt19937_64& gen, int h, int w) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Frame f(h, w);
  for (auto& v : f.rgb) v = u(gen);
  return f;
}

}  // namespace

TEST(UniformIndices, IdentityWhenCountsMatch) {
  const auto idx = uniform_indices(16, 16);
  for (std::size_t i = 0; i < 16; ++i) EXPECT_EQ(idx[i], i);
}

TEST(UniformIndices, ShortVideoRepeatsLastFrameOnce) {
  const auto idx = uniform_indices(15, 16);
  ASSERT_EQ(idx.size(), 16u);
  for (std::size_t i = 0; i < 15; ++i) EXPECT_EQ(idx[i], i);
  EXPECT_EQ(idx[15], 14u);
}

TEST(UniformIndices, LongVideoRoundsEvenlySpacedPositions) {
  // n = 31, target 4: positions 0, 10, 20, 30.
  EXPECT_EQ(uniform_indices(31, 4), (std::vector<std::size_t>{0, 10, 20, 30}));
  // n = 10, target 4: i * 3 -> 0, 3, 6, 9.
  EXPECT_EQ(uniform_indices(10, 4), (std::vector<std::size_t>{0, 3, 6, 9}));
  EXPECT_EQ(uniform_indices(10, 1), (std::vector<std::size_t>{0}));
}

TEST(UniformIndices, EmptyVideoIsInputError) {
  EXPECT_EQ(kind_of([] { uniform_indices(0, 16); }), ErrorKind::input);
  EXPECT_EQ(kind_of([] { sample_frames_uniform({}, 16); }), ErrorKind::input);
}

TEST(UniformIndices, MonotoneAndInRange) {
  for (std::size_t n = 1; n < 80; ++n) {
    for (int target = 1; target < 40; ++target) {
      const auto idx = uniform_indices(n, target);
      ASSERT_EQ(idx.size(), static_cast<std::size_t>(target));
      EXPECT_EQ(idx.front(), 0u);
      for (std::size_t i = 1; i < idx.size(); ++i) EXPECT_LE(idx[i - 1], idx[i]);
      EXPECT_LT(idx.back(), n);
      if (n >= static_cast<std::size_t>(target) && target > 1) EXPECT_EQ(idx.back(), n - 1);
    }
  }
}

TEST(SampleFramesUniform, PicksSourceFrames) {
  const auto out = sample_frames_uniform(numbered_frames(10), 4);
  ASSERT_EQ(out.size(), 4u);
  EXPECT_EQ(out[1].at(0, 0, 0), 3.0);
  EXPECT_EQ(out[3].at(0, 0, 0), 9.0);
}

TEST(Resize, ConstantFrameStaysConstant) {
  const FrameStack s = resize_frames({Frame(480, 640, 0.37)}, 224);
  EXPECT_EQ(s.height, 224);
  EXPECT_EQ(s.width, 224);
  for (double v : s.data) EXPECT_DOUBLE_EQ(v, 0.37);
}

TEST(Resize, SameSizeIsIdentity) {
  std::mt19937_64 gen(3);
  const Frame f = random_frame(gen, 224, 224);
  const FrameStack s = resize_frames({f}, 224);
  EXPECT_EQ(s.data, f.rgb);
}

TEST(Resize, CheckerboardUpscaleMatchesHandBilinear) {
  Frame board(2, 2);
  for (int c = 0; c < 3; ++c) {
    board.at(0, 1, c) = 1.0;
    board.at(1, 0, c) = 1.0;
  }
  const Frame out = resize_bilinear(board, 4, 4);
  // Half-pixel centres: output i samples source (i + 0.5) / 2 - 0.5, clamped
  // to [0, 1] -> 0, 0.25, 0.75, 1. On this board f(py, px) = px + py - 2 px py.
  const double pos[4] = {0.0, 0.25, 0.75, 1.0};
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x)
      EXPECT_NEAR(out.at(y, x, 0), pos[x] + pos[y] - 2 * pos[x] * pos[y], 1e-15) << y << "," << x;
}

TEST(CenterCrop, TakesMiddleOfShortSideScaledFrame) {
  Frame f(2, 4);
  for (int x = 0; x < 4; ++x)
    for (int y = 0; y < 2; ++y)
      for (int c = 0; c < 3; ++c) f.at(y, x, c) = x;
  // Short side 2 -> 2 (no scaling), crop columns 1..2.
  const FrameStack s = center_crop_frames({f}, 2);
  EXPECT_EQ(s.sample_kind, SampleKind::cropped);
  EXPECT_EQ(s.at(0, 0, 0, 0), 1.0);
  EXPECT_EQ(s.at(0, 1, 1, 2), 2.0);
}

TEST(FragmentSample, DefaultGridGives224) {
  std::mt19937_64 gen(4);
  const FrameStack s = fragment_sample({random_frame(gen, 300, 400)}, 7, 32, 9);
  EXPECT_EQ(s.height, 224);
  EXPECT_EQ(s.width, 224);
  EXPECT_EQ(s.sample_kind, SampleKind::fragments);
}

TEST(FragmentSample, SameSeedSameOutput) {
  std::mt19937_64 gen(5);
  const FrameSequence frames{random_frame(gen, 256, 256), random_frame(gen, 256, 256)};
  EXPECT_EQ(fragment_sample(frames, 7, 32, 123).data, fragment_sample(frames, 7, 32, 123).data);
  EXPECT_NE(fragment_sample(frames, 7, 32, 123).data, fragment_sample(frames, 7, 32, 124).data);
}

TEST(FragmentSample, ConstantInputGivesConstantComposite) {
  const FrameStack s = fragment_sample({Frame(300, 500, 0.61)}, 7, 32, 1);
  for (double v : s.data) EXPECT_DOUBLE_EQ(v, 0.61);
}

TEST(FragmentSample, InvalidGrid) {
  EXPECT_EQ(kind_of([] { fragment_sample({Frame(8, 8)}, 0, 32, 1); }), ErrorKind::argument);
  EXPECT_EQ(kind_of([] { fragment_sample({Frame(8, 8)}, 7, 0, 1); }), ErrorKind::argument);
}

TEST(FragmentSample, UnseededOffsetsAreCentred) {
  const auto offsets = fragment_offsets(280, 280, 7, 32, std::nullopt);
  for (const auto& o : offsets) EXPECT_EQ(o, (FragmentOffset{4, 4}));  // (40 - 32) / 2
}

TEST(FragmentSample, ShapeForAnyGridAndSide) {
  std::mt19937_64 gen(6);
  for (int trial = 0; trial < 40; ++trial) {
    const int grid = 1 + static_cast<int>(gen() % 5);
    const int side = 1 + static_cast<int>(gen() % 9);
    const int h = 1 + static_cast<int>(gen() % 60), w = 1 + static_cast<int>(gen() % 60);
    const FrameStack s = fragment_sample({random_frame(gen, h, w), random_frame(gen, h, w)}, grid,
                                         side, gen());
    EXPECT_EQ(s.frames, 2);
    EXPECT_EQ(s.height, grid * side);
    EXPECT_EQ(s.width, grid * side);
    EXPECT_EQ(s.data.size(), static_cast<std::size_t>(2 * grid * side * grid * side * 3));
  }
}

TEST(FragmentSample, OffsetsSharedAcrossFrames) {
  // Frame t = base + t everywhere, so if every frame used the same crops the
  // composites differ by exactly t.
  std::mt19937_64 gen(7);
  const Frame base = random_frame(gen, 250, 260);
  FrameSequence frames;
  for (int t = 0; t < 4; ++t) {
    Frame f = base;
    for (auto& v : f.rgb) v += t;
    frames.push_back(f);
  }
  const FrameStack s = fragment_sample(frames, 7, 32, 42);
  for (int t = 1; t < 4; ++t)
    for (int y = 0; y < s.height; y += 5)
      for (int x = 0; x < s.width; x += 3)
        EXPECT_NEAR(s.at(t, y, x, 1) - s.at(0, y, x, 1), t, 1e-12);
}

TEST(Normalize, PerChannelAffine) {
  FrameStack s(1, 1, 1, SampleKind::resized);
  s.at(0, 0, 0, 0) = 1.0;
  s.at(0, 0, 0, 1) = 0.5;
  s.at(0, 0, 0, 2) = 0.0;
  normalize(s, Normalization{});
  EXPECT_EQ(s.data, (std::vector<double>{1.0, 0.0, -1.0}));
  Normalization bad;
  bad.stddev[1] = 0.0;
  EXPECT_EQ(kind_of([&] { normalize(s, bad); }), ErrorKind::config);
}
