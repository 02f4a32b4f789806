// SPDX-License-Identifier: Apache-2.0
//
// Checkpoint container: 8-byte magic "AVQCKPT1", a little-endian u64 header
// length, a UTF-8 JSON header, then the raw tensor payload. Every tensor is
// float64 little-endian in row-major order; the header lists name, shape,
// byte offset (relative to the payload start) and byte count.

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace aigcvqa {

struct NamedTensor {
  std::string name;
  Eigen::MatrixXd value;
};

struct Checkpoint {
  static constexpr std::string_view kMagic = "AVQCKPT1";
  static constexpr int kVersion = 1;

  nlohmann::json config;
  int epoch = 0;
  std::string rng_state;
  nlohmann::json metrics = nlohmann::json::object();
  std::vector<NamedTensor> tensors;

  /// nullptr when absent.
  const Eigen::MatrixXd* find(std::string_view name) const;
};

std::string serialize_checkpoint(const Checkpoint& checkpoint);
/// Throws ErrorKind::parse on a malformed container.
Checkpoint deserialize_checkpoint(std::string_view bytes);

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace aigcvqa
