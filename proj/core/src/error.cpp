// SPDX-License-Identifier: Apache-2.0

#include "aigcvqa/error.hpp"

namespace aigcvqa {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::parse: return "parse error";
    case ErrorKind::schema: return "schema error";
    case ErrorKind::duplicate: return "duplication error";
    case ErrorKind::domain_range: return "domain-range error";
    case ErrorKind::argument: return "argument error";
    case ErrorKind::input: return "input error";
    case ErrorKind::shape: return "shape error";
    case ErrorKind::config: return "config error";
    case ErrorKind::degenerate: return "degenerate input";
    case ErrorKind::label: return "label error";
    case ErrorKind::alignment: return "alignment error";
    case ErrorKind::divergence: return "divergence error";
    case ErrorKind::fit: return "fit error";
    case ErrorKind::io: return "i/o error";
  }
  return "error";
}

int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::parse:
    case ErrorKind::schema:
    case ErrorKind::duplicate:
    case ErrorKind::domain_range:
    case ErrorKind::config:
      return 2;
    case ErrorKind::divergence:
      return 3;
    case ErrorKind::alignment:
      return 4;
    default:
      return 1;
  }
}

}  // namespace aigcvqa
