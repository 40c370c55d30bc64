// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace finpref {

// Every failure raised by the core carries one of these kinds; the C API maps
// them onto finpref_status codes.
enum class ErrorKind {
  InvalidArgument,
  Domain,
  Variant,
  KindMismatch,
  Io,
  Format,
  Config,
  Transport,
  Endpoint,
  Protocol,
  FixtureMiss,
  EmptyInput,
  ParseQuality,
  Analysis,
  StageDependency,
  Integrity,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace finpref
