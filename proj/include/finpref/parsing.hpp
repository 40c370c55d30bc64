// SPDX-License-Identifier: Apache-2.0
//
// Free-text answer extraction: letter choices and monetary amounts.
#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "finpref/survey.hpp"

namespace finpref {

enum class Letter { A, B };

struct Choice {
  Letter value;
  friend bool operator==(const Choice&, const Choice&) = default;
};

struct Amount {
  double value = 0.0;  // finite, >= 0
  friend bool operator==(const Amount&, const Amount&) = default;
};

using ParsedAnswer = std::variant<Choice, Amount>;

enum class ParseStatus { Ok, Unparseable, Ambiguous, OutOfDomain };

const char* to_string(ParseStatus s) noexcept;
const char* to_string(Letter l) noexcept;

// Exactly one of: a value (status Ok) or a classified failure with detail.
struct ParseOutcome {
  ParseStatus status = ParseStatus::Unparseable;
  std::optional<ParsedAnswer> value;
  std::string detail;

  bool ok() const { return status == ParseStatus::Ok; }
};

ParseOutcome parse_choice(std::string_view text);
ParseOutcome parse_amount(std::string_view text);
// Dispatches on item.kind.
ParseOutcome parse_for_item(const SurveyItem& item, std::string_view text);

// Throws Error(KindMismatch) if the answer variant disagrees with item.kind.
const ParsedAnswer& validate_answer(const SurveyItem& item, const ParsedAnswer& answer);

// Canonical text: "A"/"B" or the shortest round-trip decimal.
std::string format_answer(const ParsedAnswer& answer);

}  // namespace finpref
