// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace boolgan {

enum class ErrorKind {
  InvalidArgument,
  ShapeMismatch,
  NonFinite,
  Io,
  UnwritablePath,
  PayloadLengthMismatch,
  CorruptFile,
  DtypeMismatch,
  UnsupportedFormat,
  Parse,
  Config,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every failure surfaced by the library. `kind()` lets callers branch on the
/// failure class without string matching.
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

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) fail(kind, message);
}

}  // namespace boolgan
