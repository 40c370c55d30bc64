// SPDX-License-Identifier: Apache-2.0
//
// Behavioral parameters derived from survey answers: quasi-hyperbolic time
// preference (beta, delta), certainty-equivalent and insurance ratios, loss
// aversion, and the 0/1 coding of the two letter-choice items.
#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "finpref/parsing.hpp"
#include "finpref/survey.hpp"

namespace finpref {

inline constexpr double kDefaultNeutralBand = 0.05;

struct TimePreference {
  double beta = 0.0;
  double delta = 0.0;
  bool present_biased = false;       // 0 < beta < 1
  bool normative_violation = false;  // beta or delta outside (0, 1]
};

enum class RiskClass { Averse, Neutral, Seeking };
const char* to_string(RiskClass c) noexcept;

struct RiskClassification {
  double ce_ratio = 0.0;
  RiskClass risk_class = RiskClass::Neutral;
};

// delta = (X / Y)^(1/9) from the one-year (X) and ten-year (Y) indifference amounts.
double estimate_delta(double x_one_year, double y_ten_years);
// beta = 100 / (delta * X)
double estimate_beta(double x_one_year, double delta);
TimePreference time_preference(double x_one_year, double y_ten_years);

// ce_ratio = wtp / EV; neutral when |ratio - 1| <= epsilon.
RiskClassification classify_risk(double wtp, const PayoffSpec& payoff,
                                 double epsilon = kDefaultNeutralBand);
RiskClassification classify_ratio(double ratio, double epsilon = kDefaultNeutralBand);
// premium / |expected loss|
double insurance_ratio(double premium, const PayoffSpec& loss_lottery);
// win_required / fixed_loss
double loss_aversion(double win_required, double fixed_loss);

// A -> 0, B -> 1 for items 1 and 4.
int code_binary(int item_id, Letter choice);
// Inverse of code_binary for a coded 0/1 value.
Letter decode_binary(int item_id, double coded);

struct GainItemMeasure {
  int item_id = 0;
  double wtp = 0.0;
  double ev = 0.0;
  RiskClassification classification;
};

struct LossItemMeasure {
  int item_id = 0;
  double premium = 0.0;
  double expected_loss = 0.0;  // magnitude
  RiskClassification classification;
};

// Per-subject summary. Entries are absent when the underlying answer is
// missing or a formula's domain excludes it.
struct PreferenceReport {
  std::string subject_id;
  std::optional<TimePreference> time;
  std::vector<GainItemMeasure> gains;   // items 5..10
  std::vector<LossItemMeasure> losses;  // items 11..12
  std::optional<double> lambda13;
  std::optional<double> lambda14;
  std::optional<double> lambda;  // median of available item estimates
  std::optional<int> patient_q1;
  std::optional<int> ambiguity_seeking_q4;  // coded Q4: 1 = ambiguous urn
  std::optional<int> ambiguity_averse;

  // Number of the eight risk items classified neutral, out of those available.
  int neutral_items() const;
  int risk_items() const;
};

// `values[q-1]` holds the coded answer for question q (NaN when missing).
PreferenceReport preference_report(const std::string& subject_id,
                                   const std::array<double, kQuestionCount>& values,
                                   const SessionScript& script,
                                   double epsilon = kDefaultNeutralBand);

}  // namespace finpref
