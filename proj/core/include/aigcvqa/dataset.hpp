// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace aigcvqa {

inline constexpr int kDomainCount = 10;

enum class SplitTag { train, val, test };

std::string_view to_string(SplitTag tag) noexcept;
SplitTag parse_split_tag(std::string_view text);

struct VideoRecord {
  std::string video_name;             // manifest key, e.g. "213_4.mp4"
  std::filesystem::path video_path;   // resolved against the manifest directory
  std::string prompt;
  std::optional<double> mos;
  std::optional<int> domain_label;
  std::uint64_t video_id = 0;
};

struct DatasetManifest {
  std::vector<VideoRecord> records;
  SplitTag split_tag = SplitTag::train;

  std::size_t size() const noexcept { return records.size(); }
  bool has_mos() const;
  bool has_domain_labels() const;
};

struct ParsedVideoName {
  std::uint64_t video_id;
  int domain_label;

  bool operator==(const ParsedVideoName&) const = default;
};

/// Parses "<id>_<generator>.mp4". Throws ErrorKind::parse when the name does
/// not match and ErrorKind::domain_range when the generator is outside [0, 9].
ParsedVideoName parse_video_filename(std::string_view name);

/// Inverse of parse_video_filename.
std::string format_video_filename(std::uint64_t video_id, int domain_label);

/// Loads a `video_name,prompt,mos,domain` CSV. Video paths are resolved
/// against `video_root` when given, else the CSV's directory. Train
/// manifests must provide mos and a domain label (explicit column or
/// derivable from the filename) for every row.
DatasetManifest load_manifest(const std::filesystem::path& path, SplitTag split_tag,
                              const std::optional<std::filesystem::path>& video_root = {});

/// Same as load_manifest but from CSV text already in memory.
DatasetManifest parse_manifest(std::string_view csv_text, SplitTag split_tag,
                               const std::filesystem::path& video_root,
                               const std::string& source_name = "<memory>");

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

/// Deterministic shuffle-and-cut. The validation part gets
/// round(val_fraction * n) records, clamped so both parts are non-empty.
std::pair<DatasetManifest, DatasetManifest> split_manifest(const DatasetManifest& manifest,
                                                           double val_fraction,
                                                           std::uint64_t seed);

}  // namespace aigcvqa
