// SPDX-License-Identifier: Apache-2.0
//
// Hand-labelled free-text answers: 25 letter choices and 25 amounts.
#pragma once

#include <string>
#include <vector>

#include "finpref/parsing.hpp"

namespace corpus {

enum class Kind { Choice, Amount };

struct Case {
  Kind kind;
  std::string text;
  finpref::ParseStatus status;
  double value;  // 0 = A, 1 = B for choices; the amount otherwise
};

using finpref::ParseStatus;
constexpr Kind C = Kind::Choice;
constexpr Kind M = Kind::Amount;

inline const std::vector<Case>& cases() {
  static const std::vector<Case> all = {
      {C, "B", ParseStatus::Ok, 1},
      {C, "A", ParseStatus::Ok, 0},
      {C, "a", ParseStatus::Ok, 0},
      {C, "b", ParseStatus::Ok, 1},
      {C, "**B**", ParseStatus::Ok, 1},
      {C, "(a)", ParseStatus::Ok, 0},
      {C, "[A]", ParseStatus::Ok, 0},
      {C, "  'B'  ", ParseStatus::Ok, 1},
      {C, "I would choose option A.", ParseStatus::Ok, 0},
      {C, "Option B", ParseStatus::Ok, 1},
      {C, "My answer is B.", ParseStatus::Ok, 1},
      {C, "Answer: B", ParseStatus::Ok, 1},
      {C, "Choice: a", ParseStatus::Ok, 0},
      {C, "Lottery B", ParseStatus::Ok, 1},
      {C, "Alternative A is better for me.", ParseStatus::Ok, 0},
      {C, "B. A payment of $3,800 next month.", ParseStatus::Ok, 1},
      {C, "A. A payment of $3,400 this month.", ParseStatus::Ok, 0},
      {C, "I prefer B because waiting a month is worth $400.", ParseStatus::Ok, 1},
      {C, "I'd go with A because the odds are known.", ParseStatus::Ok, 0},
      {C, "The answer is A, not B.", ParseStatus::Ok, 0},
      {C, "A or B, hard to say", ParseStatus::Ambiguous, 0},
      {C, "Both A and B seem equally good.", ParseStatus::Ambiguous, 0},
      {C, "", ParseStatus::Unparseable, 0},
      {C, "I cannot decide.", ParseStatus::Unparseable, 0},
      {C, "Neither option appeals to me.", ParseStatus::Unparseable, 0},

      {M, "$3,800", ParseStatus::Ok, 3800},
      {M, "105", ParseStatus::Ok, 105},
      {M, "I'd need at least $X = 1,000 to accept", ParseStatus::Ok, 1000},
      {M, "X = 240", ParseStatus::Ok, 240},
      {M, "240.50 dollars", ParseStatus::Ok, 240.5},
      {M, "3800", ParseStatus::Ok, 3800},
      {M, "3,800.00", ParseStatus::Ok, 3800},
      {M, "$3,800.00", ParseStatus::Ok, 3800},
      {M, "$ 60", ParseStatus::Ok, 60},
      {M, "USD 6,000", ParseStatus::Ok, 6000},
      {M, "US$1,234.56", ParseStatus::Ok, 1234.56},
      {M, "12,345,678", ParseStatus::Ok, 12345678},
      {M, ".5", ParseStatus::Ok, 0.5},
      {M, "0", ParseStatus::Ok, 0},
      {M, "The amount is 175.", ParseStatus::Ok, 175},
      {M, "I am willing to pay at most $91 to play this lottery", ParseStatus::Ok, 91},
      {M, "$25-$30", ParseStatus::Ok, 25},
      {M, "10 dollars, since 10% of $100 is $10", ParseStatus::Ok, 10},
      {M, "-50", ParseStatus::OutOfDomain, 0},
      {M, "-$25", ParseStatus::OutOfDomain, 0},
      {M, "$-25", ParseStatus::OutOfDomain, 0},
      {M, "\xE2\x88\x92" "40", ParseStatus::OutOfDomain, 0},
      {M, std::string(400, '9'), ParseStatus::OutOfDomain, 0},
      {M, "one hundred", ParseStatus::Unparseable, 0},
      {M, "No amount would make this worthwhile.", ParseStatus::Unparseable, 0},
  };
  return all;
}

}  // namespace corpus
