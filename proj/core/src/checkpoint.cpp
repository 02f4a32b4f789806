// SPDX-License-Identifier: Apache-2.0

#include "aigcvqa/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>

#include "aigcvqa/error.hpp"

namespace aigcvqa {

namespace {

using nlohmann::json;

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint64_t get_u64(std::string_view in) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[i])) << (8 * i);
  return v;
}

}  // namespace

const Eigen::MatrixXd* Checkpoint::find(std::string_view name) const {
  for (const auto& t : tensors)
    if (t.name == name) return &t.value;
  return nullptr;
}

std::string serialize_checkpoint(const Checkpoint& checkpoint) {
  std::string payload;
  json entries = json::array();
  std::set<std::string> seen;
  for (const auto& t : checkpoint.tensors) {
    if (!seen.insert(t.name).second) fail(ErrorKind::duplicate, "duplicate tensor name " + t.name);
    const std::size_t offset = payload.size();
    for (Eigen::Index r = 0; r < t.value.rows(); ++r)
      for (Eigen::Index c = 0; c < t.value.cols(); ++c)
        put_u64(payload, std::bit_cast<std::uint64_t>(t.value(r, c)));
    entries.push_back({{"name", t.name},
                       {"shape", {t.value.rows(), t.value.cols()}},
                       {"dtype", "float64"},
                       {"order", "row-major"},
                       {"offset", offset},
                       {"nbytes", payload.size() - offset}});
  }
  const json header = {{"format", std::string(Checkpoint::kMagic)},
                       {"version", Checkpoint::kVersion},
                       {"config", checkpoint.config},
                       {"epoch", checkpoint.epoch},
                       {"rng_state", checkpoint.rng_state},
                       {"metrics", checkpoint.metrics},
                       {"tensors", entries}};
  const std::string text = header.dump();
  std::string out(Checkpoint::kMagic);
  put_u64(out, text.size());
  out += text;
  out += payload;
  return out;
}

Checkpoint deserialize_checkpoint(std::string_view bytes) {
  const std::size_t prefix = Checkpoint::kMagic.size() + 8;
  if (bytes.size() < prefix || bytes.substr(0, Checkpoint::kMagic.size()) != Checkpoint::kMagic)
    fail(ErrorKind::parse, "not a checkpoint (bad magic)");
  const std::uint64_t header_len = get_u64(bytes.substr(Checkpoint::kMagic.size()));
  if (header_len > bytes.size() - prefix) fail(ErrorKind::parse, "checkpoint header truncated");
  json header;
  try {
    header = json::parse(bytes.substr(prefix, header_len));
  } catch (const json::exception& e) {
    fail(ErrorKind::parse, std::string("checkpoint header is not JSON: ") + e.what());
  }
  const std::string_view payload = bytes.substr(prefix + header_len);

  Checkpoint ck;
  try {
    if (header.at("version").get<int>() != Checkpoint::kVersion)
      fail(ErrorKind::parse, "unsupported checkpoint version");
    ck.config = header.at("config");
    ck.epoch = header.at("epoch").get<int>();
    ck.rng_state = header.at("rng_state").get<std::string>();
    ck.metrics = header.at("metrics");
    for (const auto& e : header.at("tensors")) {
      if (e.at("dtype").get<std::string>() != "float64")
        fail(ErrorKind::parse, "unsupported tensor dtype");
      const auto rows = e.at("shape").at(0).get<Eigen::Index>();
      const auto cols = e.at("shape").at(1).get<Eigen::Index>();
      const auto offset = e.at("offset").get<std::size_t>();
      const auto nbytes = e.at("nbytes").get<std::size_t>();
      if (rows < 0 || cols < 0 || nbytes != static_cast<std::size_t>(rows * cols) * 8 ||
          offset > payload.size() || nbytes > payload.size() - offset)
        fail(ErrorKind::parse, "tensor " + e.at("name").get<std::string>() + " out of bounds");
      NamedTensor t{e.at("name").get<std::string>(), Eigen::MatrixXd(rows, cols)};
      std::size_t pos = offset;
      for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c, pos += 8)
          t.value(r, c) = std::bit_cast<double>(get_u64(payload.substr(pos)));
      ck.tensors.push_back(std::move(t));
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::parse, std::string("malformed checkpoint header: ") + e.what());
  }
  return ck;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  const std::string bytes = serialize_checkpoint(checkpoint);
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::io, "cannot write checkpoint " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorKind::io, "short write to " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open checkpoint " + path.string());
  const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return deserialize_checkpoint(bytes);
}

}  // namespace aigcvqa
