// SPDX-License-Identifier: Apache-2.0

#include "opencv_decoder.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgproc.hpp>
#include <opencv2/videoio.hpp>

#include "aigcvqa/error.hpp"

namespace aigcvqa {

namespace {

class OpenCvDecoder final : public VideoDecoder {
 public:
  std::string name() const override { return "opencv"; }

  // Anything that is not one of our own containers is handed to OpenCV.
  bool accepts(const std::filesystem::path&, std::string_view header) const override {
    return !header.starts_with(RawVideoDecoder::kMagic);
  }

  FrameSequence decode(const std::filesystem::path& path) const override {
    cv::VideoCapture capture(path.string());
    if (!capture.isOpened()) fail(ErrorKind::parse, "OpenCV cannot open " + path.string());
    FrameSequence frames;
    cv::Mat bgr, rgb;
    while (capture.read(bgr)) {
      if (bgr.empty()) break;
      cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
      Frame f(rgb.rows, rgb.cols);
      for (int y = 0; y < rgb.rows; ++y) {
        const auto* row = rgb.ptr<unsigned char>(y);
        for (int x = 0; x < rgb.cols * 3; ++x)
          f.rgb[static_cast<std::size_t>(y) * rgb.cols * 3 + x] = row[x] / 255.0;
      }
      frames.push_back(std::move(f));
    }
    if (frames.empty()) fail(ErrorKind::input, path.string() + ": decoded zero frames");
    return frames;
  }
};

}  // namespace

std::shared_ptr<const VideoDecoder> make_opencv_decoder() {
  return std::make_shared<OpenCvDecoder>();
}

}  // namespace aigcvqa
