// SPDX-License-Identifier: Apache-2.0

#include "aigcvqa/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <unordered_set>

#include "aigcvqa/csv.hpp"
#include "aigcvqa/error.hpp"
#include "aigcvqa/random.hpp"

namespace aigcvqa {

namespace {

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s)
    if (c < '0' || c > '9') return false;
  return true;
}

std::optional<double> parse_optional_real(const std::string& text, const std::string& where) {
  if (text.empty()) return std::nullopt;
  double value = 0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || !std::isfinite(value))
    fail(ErrorKind::parse, where + ": '" + text + "' is not a finite number");
  return value;
}

std::optional<int> parse_optional_domain(const std::string& text, const std::string& where) {
  if (text.empty()) return std::nullopt;
  int value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size())
    fail(ErrorKind::parse, where + ": domain '" + text + "' is not an integer");
  if (value < 0 || value >= kDomainCount)
    fail(ErrorKind::domain_range, where + ": domain " + text + " outside [0, 9]");
  return value;
}

}  // namespace

std::string_view to_string(SplitTag tag) noexcept {
  switch (tag) {
    case SplitTag::train: return "train";
    case SplitTag::val: return "val";
    case SplitTag::test: return "test";
  }
  return "train";
}

SplitTag parse_split_tag(std::string_view text) {
  if (text == "train") return SplitTag::train;
  if (text == "val") return SplitTag::val;
  if (text == "test") return SplitTag::test;
  fail(ErrorKind::argument, "unknown split tag '" + std::string(text) + "'");
}

bool DatasetManifest::has_mos() const {
  for (const auto& r : records)
    if (!r.mos) return false;
  return !records.empty();
}

bool DatasetManifest::has_domain_labels() const {
  for (const auto& r : records)
    if (!r.domain_label) return false;
  return !records.empty();
}

ParsedVideoName parse_video_filename(std::string_view name) {
  constexpr std::string_view kExt = ".mp4";
  const auto malformed = [&] {
    fail(ErrorKind::parse, "video filename '" + std::string(name) + "' does not match <id>_<generator>.mp4");
  };
  if (!name.ends_with(kExt)) malformed();
  const std::string_view stem = name.substr(0, name.size() - kExt.size());
  const auto sep = stem.find('_');
  if (sep == std::string_view::npos) malformed();
  const std::string_view id_part = stem.substr(0, sep);
  const std::string_view domain_part = stem.substr(sep + 1);
  if (!all_digits(id_part) || !all_digits(domain_part)) malformed();

  ParsedVideoName parsed{};
  if (std::from_chars(id_part.data(), id_part.data() + id_part.size(), parsed.video_id).ec !=
      std::errc())
    malformed();
  unsigned long long domain = 0;
  if (std::from_chars(domain_part.data(), domain_part.data() + domain_part.size(), domain).ec !=
          std::errc() ||
      domain >= static_cast<unsigned long long>(kDomainCount))
    fail(ErrorKind::domain_range, "video filename '" + std::string(name) + "': generator index " +
                                      std::string(domain_part) + " outside [0, 9]");
  parsed.domain_label = static_cast<int>(domain);
  return parsed;
}

std::string format_video_filename(std::uint64_t video_id, int domain_label) {
  if (domain_label < 0 || domain_label >= kDomainCount)
    fail(ErrorKind::domain_range, "domain label " + std::to_string(domain_label) + " outside [0, 9]");
  return std::to_string(video_id) + "_" + std::to_string(domain_label) + ".mp4";
}

DatasetManifest parse_manifest(std::string_view csv_text, SplitTag split_tag,
                               const std::filesystem::path& video_root,
                               const std::string& source_name) {
  const csv::Table table = csv::parse(csv_text, source_name);
  const auto name_col = table.column("video_name");
  const auto prompt_col = table.column("prompt");
  const auto mos_col = table.column("mos");
  const auto domain_col = table.column("domain");
  if (!name_col) fail(ErrorKind::schema, source_name + ": missing required column 'video_name'");
  if (!prompt_col) fail(ErrorKind::schema, source_name + ": missing required column 'prompt'");
  const bool training = split_tag == SplitTag::train;
  if (training && !mos_col)
    fail(ErrorKind::schema, source_name + ": train manifest requires column 'mos'");

  DatasetManifest manifest;
  manifest.split_tag = split_tag;
  std::unordered_set<std::uint64_t> seen_ids;
  std::uint64_t next_synthetic_id = 0;

  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::string where = source_name + " row " + std::to_string(r + 1);
    VideoRecord record;
    record.video_name = row[*name_col];
    if (record.video_name.empty()) fail(ErrorKind::schema, where + ": empty video_name");
    record.prompt = row[*prompt_col];
    if (record.prompt.empty()) fail(ErrorKind::schema, where + ": empty prompt");
    record.video_path = video_root / record.video_name;
    if (mos_col) record.mos = parse_optional_real(row[*mos_col], where);
    if (domain_col) record.domain_label = parse_optional_domain(row[*domain_col], where);

    // Filename convention supplies the id and, when the column is empty,
    // the generator label. Names outside the convention get sequential ids.
    std::optional<ParsedVideoName> parsed;
    try {
      parsed = parse_video_filename(record.video_name);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::domain_range && !record.domain_label) throw;
    }
    if (parsed) {
      record.video_id = parsed->video_id;
      if (!record.domain_label) record.domain_label = parsed->domain_label;
    } else {
      while (seen_ids.contains(next_synthetic_id)) ++next_synthetic_id;
      record.video_id = next_synthetic_id++;
    }

    if (training) {
      if (!record.mos) fail(ErrorKind::schema, where + ": train manifest requires mos");
      if (!record.domain_label)
        fail(ErrorKind::schema, where + ": train manifest requires a domain label");
    }
    if (!seen_ids.insert(record.video_id).second)
      fail(ErrorKind::duplicate, where + ": duplicate video_id " + std::to_string(record.video_id));
    manifest.records.push_back(std::move(record));
  }
  return manifest;
}

DatasetManifest load_manifest(const std::filesystem::path& path, SplitTag split_tag,
                              const std::optional<std::filesystem::path>& video_root) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open manifest " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto root = video_root.value_or(path.parent_path());
  return parse_manifest(text, split_tag, root, path.string());
}

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::io, "cannot write " + path.string());
  csv::write_row(out, {"video_name", "prompt", "mos", "domain"});
  for (const auto& r : manifest.records) {
    csv::write_row(out, {r.video_name, r.prompt,
                         r.mos ? csv::format_fixed(*r.mos, 6) : std::string(),
                         r.domain_label ? std::to_string(*r.domain_label) : std::string()});
  }
}

std::pair<DatasetManifest, DatasetManifest> split_manifest(const DatasetManifest& manifest,
                                                           double val_fraction,
                                                           std::uint64_t seed) {
  if (!(val_fraction > 0.0 && val_fraction < 1.0))
    fail(ErrorKind::argument, "val_fraction must lie in (0, 1)");
  const std::size_t n = manifest.records.size();
  if (n < 2) fail(ErrorKind::argument, "split_manifest needs at least 2 records");

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);

  auto n_val = static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(n)));
  n_val = std::clamp<std::size_t>(n_val, 1, n - 1);

  // Both halves keep the original manifest order.
  std::vector<bool> is_val(n, false);
  for (std::size_t i = 0; i < n_val; ++i) is_val[order[i]] = true;

  DatasetManifest train, val;
  train.split_tag = manifest.split_tag;
  val.split_tag = SplitTag::val;
  for (std::size_t i = 0; i < n; ++i)
    (is_val[i] ? val : train).records.push_back(manifest.records[i]);
  return {std::move(train), std::move(val)};
}

}  // namespace aigcvqa
