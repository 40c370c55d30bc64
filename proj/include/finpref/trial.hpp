// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>

#include "finpref/parsing.hpp"

namespace finpref {

enum class TrialStatus { Ok, Failed, Retried };

const char* to_string(TrialStatus s) noexcept;
TrialStatus trial_status_from_string(const std::string& s);

// One question asked in one session. `retried` means the answer parsed but the
// transport needed at least one retry to obtain it.
struct TrialRecord {
  std::string run_id;
  std::string subject;
  std::string backend;  // "http" | "replay" | "synthetic"
  int trial_index = 0;
  int question_id = 0;
  std::string prompt;
  std::string raw_response;
  std::optional<ParsedAnswer> parsed;
  TrialStatus parse_status = TrialStatus::Failed;
  std::string error;  // parse or transport diagnostic; empty when ok
  int retries = 0;
  std::string timestamp;  // ISO-8601 UTC
  double temperature = 0.0;

  friend bool operator==(const TrialRecord&, const TrialRecord&) = default;
};

}  // namespace finpref
