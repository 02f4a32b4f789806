// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace aigcvqa::csv {

// RFC 4180 subset: comma separator, double-quoted fields with "" escapes,
// LF or CRLF line endings. The first record is the header.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> column(std::string_view name) const;
};

Table parse(std::string_view text, const std::string& source_name = "<memory>");
Table read(const std::filesystem::path& path);

std::string escape(std::string_view field);
void write_row(std::ostream& out, const std::vector<std::string>& fields);

/// Fixed-point with the given number of decimals ("%.6f" style).
std::string format_fixed(double value, int decimals = 6);

}  // namespace aigcvqa::csv
