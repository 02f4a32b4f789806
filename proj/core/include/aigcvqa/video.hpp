// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace aigcvqa {

/// One RGB frame, row-major HWC, values in [0, 1].
struct Frame {
  int height = 0;
  int width = 0;
  std::vector<double> rgb;

  Frame() = default;
  Frame(int h, int w, double fill = 0.0)
      : height(h), width(w), rgb(static_cast<std::size_t>(h) * w * 3, fill) {}

  double& at(int y, int x, int c) { return rgb[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
  double at(int y, int x, int c) const {
    return rgb[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
};

using FrameSequence = std::vector<Frame>;

enum class SampleKind { resized, fragments, cropped };

std::string_view to_string(SampleKind kind) noexcept;

/// Sampled frames as a dense (frames, height, width, 3) array.
struct FrameStack {
  int frames = 0;
  int height = 0;
  int width = 0;
  static constexpr int channels = 3;
  std::vector<double> data;
  SampleKind sample_kind = SampleKind::resized;
  std::uint64_t source_id = 0;

  FrameStack() = default;
  FrameStack(int t, int h, int w, SampleKind kind, std::uint64_t source = 0)
      : frames(t), height(h), width(w),
        data(static_cast<std::size_t>(t) * h * w * channels, 0.0), sample_kind(kind),
        source_id(source) {}

  std::size_t index(int t, int y, int x, int c) const {
    return ((static_cast<std::size_t>(t) * height + y) * width + x) * channels + c;
  }
  double& at(int t, int y, int x, int c) { return data[index(t, y, x, c)]; }
  double at(int t, int y, int x, int c) const { return data[index(t, y, x, c)]; }

  /// Copy of frame t as a standalone Frame.
  Frame frame(int t) const;
};

/// Decoder adapter. Implementations are looked up by file signature.
class VideoDecoder {
 public:
  virtual ~VideoDecoder() = default;
  virtual std::string name() const = 0;
  /// `header` holds up to the first 16 bytes of the file.
  virtual bool accepts(const std::filesystem::path& path, std::string_view header) const = 0;
  virtual FrameSequence decode(const std::filesystem::path& path) const = 0;
};

/// Uncompressed container: 8-byte magic "AVQRAW01", little-endian u32
/// frames/height/width, then frames*height*width*3 RGB bytes.
class RawVideoDecoder final : public VideoDecoder {
 public:
  static constexpr std::string_view kMagic = "AVQRAW01";
  std::string name() const override { return "raw"; }
  bool accepts(const std::filesystem::path& path, std::string_view header) const override;
  FrameSequence decode(const std::filesystem::path& path) const override;
};

void write_raw_video(const std::filesystem::path& path, const FrameSequence& frames);

/// Decoders tried in registration order. The raw decoder is always first;
/// the OpenCV adapter follows when the library was built with it.
class DecoderRegistry {
 public:
  static DecoderRegistry& instance();

  void add(std::shared_ptr<const VideoDecoder> decoder);
  std::vector<std::string> names() const;
  FrameSequence decode(const std::filesystem::path& path) const;

 private:
  DecoderRegistry();
  std::vector<std::shared_ptr<const VideoDecoder>> decoders_;
};

inline FrameSequence decode_video(const std::filesystem::path& path) {
  return DecoderRegistry::instance().decode(path);
}

}  // namespace aigcvqa
