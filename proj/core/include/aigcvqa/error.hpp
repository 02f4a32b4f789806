// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace aigcvqa {

enum class ErrorKind {
  parse,         // malformed filename or file content
  schema,        // missing/invalid column or field
  duplicate,     // repeated video_id
  domain_range,  // generator label outside [0, 9]
  argument,      // bad function argument
  input,         // empty or otherwise unusable input data
  shape,         // dimension mismatch
  config,        // invalid configuration
  degenerate,    // constant vectors, zero-norm embeddings
  label,         // class label out of range
  alignment,     // prediction/target sets disagree
  divergence,    // non-finite loss during training
  fit,           // ensemble weight fit failed
  io,            // filesystem failures
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Process exit code for the command-line tool.
/// 2 schema/config, 3 divergence, 4 alignment, 1 anything else.
int exit_code(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace aigcvqa
