// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>

#include "aigcvqa/video.hpp"

namespace aigcvqa {

std::shared_ptr<const VideoDecoder> make_opencv_decoder();

}  // namespace aigcvqa
