// SPDX-License-Identifier: Apache-2.0
//
// The 14-item financial decision-making survey: item definitions, payoff
// structures, prompt rendering, and a line-oriented export format for
// swapping in alternative surveys.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace finpref {

inline constexpr int kQuestionCount = 14;

// Exact USD amount in cents.
class Money {
 public:
  constexpr Money() = default;
  static constexpr Money from_cents(std::int64_t cents) { return Money(cents); }
  static constexpr Money dollars(std::int64_t whole) { return Money(whole * 100); }
  // Rounds to the nearest cent.
  static Money from_double(double usd);

  constexpr std::int64_t cents() const { return cents_; }
  constexpr double to_double() const { return static_cast<double>(cents_) / 100.0; }

  // "$3,400" / "$0.50" style, as used in prompts.
  std::string to_prompt_string() const;
  // Plain decimal without separators ("3400", "0.5").
  std::string to_plain_string() const;

  friend constexpr bool operator==(Money, Money) = default;
  friend constexpr auto operator<=>(Money, Money) = default;

 private:
  constexpr explicit Money(std::int64_t cents) : cents_(cents) {}
  std::int64_t cents_ = 0;
};

// Probability in basis points (1/10000), so survey percentages are exact.
class Probability {
 public:
  static constexpr std::int64_t kScale = 10000;

  constexpr Probability() = default;
  static constexpr Probability basis_points(std::int64_t bp) { return Probability(bp); }
  static constexpr Probability percent(std::int64_t pct) { return Probability(pct * 100); }

  constexpr std::int64_t bp() const { return bp_; }
  constexpr double to_double() const { return static_cast<double>(bp_) / kScale; }

  friend constexpr bool operator==(Probability, Probability) = default;

 private:
  constexpr explicit Probability(std::int64_t bp) : bp_(bp) {}
  std::int64_t bp_ = 0;
};

struct Outcome {
  Probability probability;
  Money amount;  // payout for gains, magnitude of the loss for losses
};

struct TimedPayment {
  Money amount_now;
  Money amount_later;
  int delay_months = 0;
};

// "$100 now versus $X after `delay_years`"; the answer is X.
struct IndifferenceDelay {
  Money base_amount;
  int delay_years = 0;
};

struct GainLottery {
  std::vector<Outcome> outcomes;
};

struct LossLottery {
  std::vector<Outcome> outcomes;
};

// 50/50-style gamble: lose `loss` or win an elicited amount.
struct MixedGamble {
  Money loss;
  Probability win_probability;
};

// Ellsberg urn: known-probability color versus a pool of unknown composition.
struct UrnChoice {
  Probability known_probability;
  int ambiguous_pool = 0;
  Money prize;
};

using PayoffSpec =
    std::variant<TimedPayment, IndifferenceDelay, GainLottery, LossLottery, MixedGamble, UrnChoice>;

enum class ItemKind { BinaryChoice, OpenAmount };

const char* to_string(ItemKind kind) noexcept;
ItemKind item_kind_from_string(std::string_view s);

struct SurveyItem {
  int id = 0;
  ItemKind kind = ItemKind::OpenAmount;
  std::string prompt_body;
  std::string answer_instruction;
  PayoffSpec payoff;
};

struct SessionScript {
  std::string preamble;
  std::vector<SurveyItem> items;

  // Throws Error(Domain) when `id` is not part of the script.
  const SurveyItem& item(int id) const;
};

// Throws Error(Domain) on any violated payoff invariant (probabilities outside
// [0,1] or not summing to 1, non-positive amounts).
void validate_payoff(const PayoffSpec& payoff);
// Checks ids 1..14 ascending, per-id kinds and payoff invariants.
void validate_script(const SessionScript& script);

// The compiled-in survey. Returns a reference to an immutable singleton.
const SessionScript& canonical_survey();

std::string render_prompt(const SessionScript& script, const SurveyItem& item,
                          bool include_preamble);

// Probability-weighted payoff in USD; losses are negative. MixedGamble needs
// the candidate win amount. TimedPayment, IndifferenceDelay and UrnChoice
// have no scalar expected value and raise Error(Variant).
double expected_value(const PayoffSpec& payoff, std::optional<Money> win = std::nullopt);

// One JSON object per line: {"id","kind","prompt","instruction","payoff"}.
// The first line carries {"preamble": ...}.
std::string export_survey(const SessionScript& script);
SessionScript import_survey(std::string_view text);
void save_survey(const SessionScript& script, const std::string& path);
SessionScript load_survey(const std::string& path);

}  // namespace finpref
