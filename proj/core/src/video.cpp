// SPDX-License-Identifier: Apache-2.0

#include "aigcvqa/video.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <mutex>

#include "aigcvqa/error.hpp"

#ifdef AIGCVQA_HAVE_OPENCV
#include "opencv_decoder.hpp"
#endif

namespace aigcvqa {

namespace {

void write_u32(std::ostream& out, std::uint32_t v) {
  const std::array<char, 4> bytes{static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                                  static_cast<char>((v >> 16) & 0xff),
                                  static_cast<char>((v >> 24) & 0xff)};
  out.write(bytes.data(), 4);
}

std::uint32_t read_u32(std::istream& in) {
  std::array<unsigned char, 4> b{};
  in.read(reinterpret_cast<char*>(b.data()), 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::mutex& registry_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

std::string_view to_string(SampleKind kind) noexcept {
  switch (kind) {
    case SampleKind::resized: return "resized";
    case SampleKind::fragments: return "fragments";
    case SampleKind::cropped: return "cropped";
  }
  return "resized";
}

Frame FrameStack::frame(int t) const {
  Frame f(height, width);
  const auto begin = data.begin() + static_cast<std::ptrdiff_t>(index(t, 0, 0, 0));
  std::copy(begin, begin + static_cast<std::ptrdiff_t>(f.rgb.size()), f.rgb.begin());
  return f;
}

bool RawVideoDecoder::accepts(const std::filesystem::path&, std::string_view header) const {
  return header.starts_with(kMagic);
}

FrameSequence RawVideoDecoder::decode(const std::filesystem::path& path) const {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open video " + path.string());
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || std::string_view(magic.data(), magic.size()) != kMagic)
    fail(ErrorKind::parse, path.string() + ": not a raw video container");
  const std::uint32_t frames = read_u32(in);
  const std::uint32_t height = read_u32(in);
  const std::uint32_t width = read_u32(in);
  if (!in || frames == 0 || height == 0 || width == 0 || height > 16384 || width > 16384)
    fail(ErrorKind::parse, path.string() + ": invalid raw video header");

  FrameSequence out;
  out.reserve(frames);
  std::vector<unsigned char> bytes(static_cast<std::size_t>(height) * width * 3);
  for (std::uint32_t t = 0; t < frames; ++t) {
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!in) fail(ErrorKind::parse, path.string() + ": truncated frame " + std::to_string(t));
    Frame f(static_cast<int>(height), static_cast<int>(width));
    for (std::size_t i = 0; i < bytes.size(); ++i) f.rgb[i] = bytes[i] / 255.0;
    out.push_back(std::move(f));
  }
  return out;
}

void write_raw_video(const std::filesystem::path& path, const FrameSequence& frames) {
  if (frames.empty()) fail(ErrorKind::input, "write_raw_video: no frames");
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::io, "cannot write " + path.string());
  out.write(RawVideoDecoder::kMagic.data(), static_cast<std::streamsize>(RawVideoDecoder::kMagic.size()));
  write_u32(out, static_cast<std::uint32_t>(frames.size()));
  write_u32(out, static_cast<std::uint32_t>(frames.front().height));
  write_u32(out, static_cast<std::uint32_t>(frames.front().width));
  std::vector<char> bytes;
  for (const auto& f : frames) {
    if (f.height != frames.front().height || f.width != frames.front().width)
      fail(ErrorKind::shape, "write_raw_video: frames differ in size");
    bytes.resize(f.rgb.size());
    for (std::size_t i = 0; i < f.rgb.size(); ++i) {
      const double v = std::clamp(f.rgb[i], 0.0, 1.0);
      bytes[i] = static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0)));
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  if (!out) fail(ErrorKind::io, "write failed for " + path.string());
}

DecoderRegistry::DecoderRegistry() {
  decoders_.push_back(std::make_shared<RawVideoDecoder>());
#ifdef AIGCVQA_HAVE_OPENCV
  decoders_.push_back(make_opencv_decoder());
#endif
}

DecoderRegistry& DecoderRegistry::instance() {
  static DecoderRegistry registry;
  return registry;
}

void DecoderRegistry::add(std::shared_ptr<const VideoDecoder> decoder) {
  std::lock_guard lock(registry_mutex());
  decoders_.push_back(std::move(decoder));
}

std::vector<std::string> DecoderRegistry::names() const {
  std::lock_guard lock(registry_mutex());
  std::vector<std::string> out;
  for (const auto& d : decoders_) out.push_back(d->name());
  return out;
}

FrameSequence DecoderRegistry::decode(const std::filesystem::path& path) const {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec))
    fail(ErrorKind::io, "video file not found: " + path.string());
  std::array<char, 16> header{};
  {
    std::ifstream in(path, std::ios::binary);
    in.read(header.data(), header.size());
  }
  const std::string_view head(header.data(), header.size());
  std::vector<std::shared_ptr<const VideoDecoder>> snapshot;
  {
    std::lock_guard lock(registry_mutex());
    snapshot = decoders_;
  }
  for (const auto& d : snapshot)
    if (d->accepts(path, head)) return d->decode(path);
  fail(ErrorKind::parse, "no decoder accepts " + path.string());
}

}  // namespace aigcvqa
