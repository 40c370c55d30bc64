// SPDX-License-Identifier: Apache-2.0
#include "finpref/error.hpp"

namespace finpref {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid-argument";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::Variant: return "variant";
    case ErrorKind::KindMismatch: return "kind-mismatch";
    case ErrorKind::Io: return "io";
    case ErrorKind::Format: return "format";
    case ErrorKind::Config: return "config";
    case ErrorKind::Transport: return "transport";
    case ErrorKind::Endpoint: return "endpoint";
    case ErrorKind::Protocol: return "protocol";
    case ErrorKind::FixtureMiss: return "fixture-miss";
    case ErrorKind::EmptyInput: return "empty-input";
    case ErrorKind::ParseQuality: return "parse-quality";
    case ErrorKind::Analysis: return "analysis";
    case ErrorKind::StageDependency: return "stage-dependency";
    case ErrorKind::Integrity: return "integrity";
  }
  return "unknown";
}

}  // namespace finpref
