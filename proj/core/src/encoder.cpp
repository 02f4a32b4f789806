// SPDX-License-Identifier: Apache-2.0

#include "aigcvqa/encoder.hpp"

#include <cctype>
#include <cmath>
#include <map>
#include <mutex>

#include "aigcvqa/error.hpp"
#include "aigcvqa/random.hpp"

namespace aigcvqa {

namespace {

constexpr std::uint64_t kWeightStream = 1;
constexpr std::uint64_t kBiasStream = 2;
constexpr std::uint64_t kDualFrameStream = 3;
constexpr std::uint64_t kDualTextStream = 4;

}  // namespace

TokenGrid VideoEncoder::encode(const FrameStack& frames) const {
  const VideoFeatures features = prepare(frames);
  TokenGrid grid;
  grid.t = features.t;
  grid.h = features.h;
  grid.w = features.w;
  grid.tokens = forward(features).value();
  return grid;
}

PromptEncoding TextEncoder::encode(std::string_view prompt) const {
  return PromptEncoding{forward(prepare(prompt)).value()};
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

Eigen::RowVectorXd hashed_embedding(std::string_view token, std::uint64_t seed, int dim,
                                    double stddev) {
  Rng rng(mix_seed(seed, fnv1a(token)));
  Eigen::RowVectorXd v(dim);
  for (int i = 0; i < dim; ++i) v(i) = stddev * rng.normal();
  return v;
}

ToyVideoEncoder::ToyVideoEncoder(const EncoderSpec& spec) : spec_(spec) {
  if (spec.channels < 1) fail(ErrorKind::config, "encoder channels must be >= 1");
  if (spec.patch < 1 || 224 % spec.patch != 0)
    fail(ErrorKind::config, "encoder patch " + std::to_string(spec.patch) + " does not divide 224");
  Rng wrng(mix_seed(spec.seed, kWeightStream));
  Rng brng(mix_seed(spec.seed, kBiasStream));
  weight_ = ad::parameter(wrng.normal_matrix(3, spec.channels, 1.0 / std::sqrt(3.0)));
  bias_ = ad::parameter(brng.normal_matrix(1, spec.channels, 0.1));
}

VideoFeatures ToyVideoEncoder::prepare(const FrameStack& frames) const {
  if (frames.frames < 1) fail(ErrorKind::input, "encode_video: empty frame stack");
  const int p = spec_.patch;
  if (frames.height % p != 0 || frames.width % p != 0)
    fail(ErrorKind::config, "encoder patch " + std::to_string(p) + " does not divide frame size " +
                                std::to_string(frames.height) + "x" + std::to_string(frames.width));
  VideoFeatures f;
  f.t = frames.frames;
  f.h = frames.height / p;
  f.w = frames.width / p;
  f.cells = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(f.t) * f.h * f.w, 3);
  const double inv_area = 1.0 / (static_cast<double>(p) * p);
  for (int t = 0; t < f.t; ++t) {
    for (int gy = 0; gy < f.h; ++gy) {
      for (int gx = 0; gx < f.w; ++gx) {
        const Eigen::Index row = (static_cast<Eigen::Index>(t) * f.h + gy) * f.w + gx;
        double acc[3] = {0, 0, 0};
        for (int y = gy * p; y < (gy + 1) * p; ++y)
          for (int x = gx * p; x < (gx + 1) * p; ++x)
            for (int c = 0; c < 3; ++c) acc[c] += frames.at(t, y, x, c);
        for (int c = 0; c < 3; ++c) f.cells(row, c) = acc[c] * inv_area;
      }
    }
  }
  return f;
}

ad::Var ToyVideoEncoder::forward(const VideoFeatures& features) const {
  return ad::add_row(ad::matmul(ad::constant(features.cells), weight_), bias_);
}

void ToyVideoEncoder::collect_parameters(ParameterList& out, const std::string& prefix) const {
  out.push_back({prefix + ".weight", weight_, ParamGroup::backbone});
  out.push_back({prefix + ".bias", bias_, ParamGroup::backbone});
}

ToyTextEncoder::ToyTextEncoder(const EncoderSpec& spec) : spec_(spec) {
  if (spec.channels < 1) fail(ErrorKind::config, "encoder channels must be >= 1");
  projection_ = ad::parameter(Eigen::MatrixXd::Identity(spec.channels, spec.channels));
}

Eigen::MatrixXd ToyTextEncoder::prepare(std::string_view prompt) const {
  const auto tokens = tokenize(prompt);
  if (tokens.empty()) fail(ErrorKind::input, "encode_text: empty prompt");
  const int c = spec_.channels;
  const double stddev = 1.0 / std::sqrt(static_cast<double>(c));
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(tokens.size()) + 1, c);
  for (std::size_t i = 0; i < tokens.size(); ++i)
    rows.row(static_cast<Eigen::Index>(i)) = hashed_embedding(tokens[i], spec_.seed, c, stddev);
  const auto n = static_cast<Eigen::Index>(tokens.size());
  rows.row(n) = hashed_embedding(kEotToken, spec_.seed, c, stddev) + rows.topRows(n).colwise().mean();
  return rows;
}

ad::Var ToyTextEncoder::forward(const Eigen::MatrixXd& prepared) const {
  return ad::matmul(ad::constant(prepared), projection_);
}

void ToyTextEncoder::collect_parameters(ParameterList& out, const std::string& prefix) const {
  out.push_back({prefix + ".projection", projection_, ParamGroup::backbone});
}

ToyDualEmbedder::ToyDualEmbedder(std::uint64_t seed, int dim, int grid)
    : seed_(seed), dim_(dim), grid_(grid) {
  if (dim < 1 || grid < 1) fail(ErrorKind::config, "dual embedder dim and grid must be >= 1");
  const int in = grid * grid * 3;
  Rng rng(mix_seed(seed, kDualFrameStream));
  frame_projection_ = rng.normal_matrix(in, dim, 1.0 / std::sqrt(static_cast<double>(in)));
}

Eigen::RowVectorXd ToyDualEmbedder::embed_frame(const FrameStack& frames, int t) const {
  if (t < 0 || t >= frames.frames) fail(ErrorKind::argument, "embed_frame: frame index out of range");
  if (frames.height < grid_ || frames.width < grid_)
    fail(ErrorKind::input, "embed_frame: frame smaller than the cell grid");
  Eigen::RowVectorXd cells = Eigen::RowVectorXd::Zero(grid_ * grid_ * 3);
  for (int gy = 0; gy < grid_; ++gy) {
    const int y0 = gy * frames.height / grid_, y1 = (gy + 1) * frames.height / grid_;
    for (int gx = 0; gx < grid_; ++gx) {
      const int x0 = gx * frames.width / grid_, x1 = (gx + 1) * frames.width / grid_;
      const double inv = 1.0 / (static_cast<double>(y1 - y0) * (x1 - x0));
      for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x)
          for (int c = 0; c < 3; ++c) cells((gy * grid_ + gx) * 3 + c) += frames.at(t, y, x, c) * inv;
    }
  }
  return cells * frame_projection_;
}

Eigen::RowVectorXd ToyDualEmbedder::embed_text(std::string_view text) const {
  const auto tokens = tokenize(text);
  if (tokens.empty()) fail(ErrorKind::input, "embed_text: empty text");
  Eigen::RowVectorXd v = Eigen::RowVectorXd::Zero(dim_);
  for (const auto& tok : tokens) v += hashed_embedding(tok, mix_seed(seed_, kDualTextStream), dim_, 1.0);
  return v;
}

struct EncoderRegistry::Impl {
  std::mutex mutex;
  std::map<std::string, VideoFactory> video;
  std::map<std::string, TextFactory> text;
  std::map<std::string, DualFactory> dual;
};

EncoderRegistry::EncoderRegistry() : impl_(std::make_shared<Impl>()) {
  impl_->video["toy"] = [](const EncoderSpec& s) { return std::make_unique<ToyVideoEncoder>(s); };
  impl_->text["toy"] = [](const EncoderSpec& s) { return std::make_unique<ToyTextEncoder>(s); };
  impl_->dual["toy"] = [](const EncoderSpec& s) {
    return std::make_unique<ToyDualEmbedder>(s.seed, s.channels);
  };
}

EncoderRegistry& EncoderRegistry::instance() {
  static EncoderRegistry registry;
  return registry;
}

void EncoderRegistry::register_video(const std::string& kind, VideoFactory factory) {
  std::lock_guard lock(impl_->mutex);
  impl_->video[kind] = std::move(factory);
}

void EncoderRegistry::register_text(const std::string& kind, TextFactory factory) {
  std::lock_guard lock(impl_->mutex);
  impl_->text[kind] = std::move(factory);
}

void EncoderRegistry::register_dual(const std::string& kind, DualFactory factory) {
  std::lock_guard lock(impl_->mutex);
  impl_->dual[kind] = std::move(factory);
}

namespace {

template <typename Map>
auto lookup(std::mutex& mutex, const Map& map, const std::string& kind, const char* what) {
  std::lock_guard lock(mutex);
  const auto it = map.find(kind);
  if (it == map.end())
    fail(ErrorKind::config, std::string("no ") + what + " encoder registered for kind '" + kind + "'");
  return it->second;
}

}  // namespace

std::unique_ptr<VideoEncoder> EncoderRegistry::make_video(const EncoderSpec& spec) const {
  return lookup(impl_->mutex, impl_->video, spec.kind, "video")(spec);
}

std::unique_ptr<TextEncoder> EncoderRegistry::make_text(const EncoderSpec& spec) const {
  return lookup(impl_->mutex, impl_->text, spec.kind, "text")(spec);
}

std::unique_ptr<DualEmbedder> EncoderRegistry::make_dual(const EncoderSpec& spec) const {
  return lookup(impl_->mutex, impl_->dual, spec.kind, "dual")(spec);
}

}  // namespace aigcvqa
