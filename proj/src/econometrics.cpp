// SPDX-License-Identifier: Apache-2.0
#include "finpref/econometrics.hpp"

#include <cmath>

#include "finpref/error.hpp"

namespace finpref {

const char* to_string(RiskClass c) noexcept {
  switch (c) {
    case RiskClass::Averse: return "averse";
    case RiskClass::Neutral: return "neutral";
    case RiskClass::Seeking: return "seeking";
  }
  return "unknown";
}

namespace {

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v))
    fail(ErrorKind::Domain, std::string(what) + " must be a positive finite number");
}

}  // namespace

double estimate_delta(double x_one_year, double y_ten_years) {
  require_positive(x_one_year, "one-year indifference amount");
  require_positive(y_ten_years, "ten-year indifference amount");
  return std::pow(x_one_year / y_ten_years, 1.0 / 9.0);
}

double estimate_beta(double x_one_year, double delta) {
  require_positive(x_one_year, "one-year indifference amount");
  require_positive(delta, "discount factor");
  return 100.0 / (delta * x_one_year);
}

TimePreference time_preference(double x_one_year, double y_ten_years) {
  TimePreference tp;
  tp.delta = estimate_delta(x_one_year, y_ten_years);
  tp.beta = estimate_beta(x_one_year, tp.delta);
  tp.present_biased = tp.beta > 0.0 && tp.beta < 1.0;
  const auto admissible = [](double v) { return v > 0.0 && v <= 1.0; };
  tp.normative_violation = !admissible(tp.beta) || !admissible(tp.delta);
  return tp;
}

RiskClassification classify_ratio(double ratio, double epsilon) {
  if (!(epsilon >= 0.0)) fail(ErrorKind::Domain, "neutral band must be non-negative");
  RiskClassification out;
  out.ce_ratio = ratio;
  // Slack keeps the band inclusive when ratio and epsilon come from decimal inputs.
  if (std::fabs(ratio - 1.0) <= epsilon + 1e-12)
    out.risk_class = RiskClass::Neutral;
  else
    out.risk_class = ratio < 1.0 ? RiskClass::Averse : RiskClass::Seeking;
  return out;
}

RiskClassification classify_risk(double wtp, const PayoffSpec& payoff, double epsilon) {
  if (!(wtp >= 0.0) || !std::isfinite(wtp))
    fail(ErrorKind::Domain, "willingness to pay must be a non-negative finite number");
  const double ev = expected_value(payoff);
  if (!(ev > 0.0)) fail(ErrorKind::Domain, "lottery expected value must be positive");
  return classify_ratio(wtp / ev, epsilon);
}

double insurance_ratio(double premium, const PayoffSpec& loss_lottery) {
  if (!std::holds_alternative<LossLottery>(loss_lottery))
    fail(ErrorKind::Variant, "insurance ratio needs a loss lottery");
  if (!(premium >= 0.0) || !std::isfinite(premium))
    fail(ErrorKind::Domain, "premium must be a non-negative finite number");
  const double expected_loss = std::fabs(expected_value(loss_lottery));
  if (!(expected_loss > 0.0)) fail(ErrorKind::Domain, "loss lottery has zero expected loss");
  return premium / expected_loss;
}

double loss_aversion(double win_required, double fixed_loss) {
  require_positive(win_required, "required win");
  require_positive(fixed_loss, "fixed loss");
  return win_required / fixed_loss;
}

int code_binary(int item_id, Letter choice) {
  if (item_id != 1 && item_id != 4)
    fail(ErrorKind::Domain, "item " + std::to_string(item_id) + " is not a letter-choice item");
  return choice == Letter::B ? 1 : 0;
}

Letter decode_binary(int item_id, double coded) {
  if (item_id != 1 && item_id != 4)
    fail(ErrorKind::Domain, "item " + std::to_string(item_id) + " is not a letter-choice item");
  if (coded == 0.0) return Letter::A;
  if (coded == 1.0) return Letter::B;
  fail(ErrorKind::Domain, "binary-coded value must be 0 or 1");
}

int PreferenceReport::neutral_items() const {
  int n = 0;
  for (const auto& g : gains) n += g.classification.risk_class == RiskClass::Neutral;
  for (const auto& l : losses) n += l.classification.risk_class == RiskClass::Neutral;
  return n;
}

int PreferenceReport::risk_items() const {
  return static_cast<int>(gains.size() + losses.size());
}

PreferenceReport preference_report(const std::string& subject_id,
                                   const std::array<double, kQuestionCount>& values,
                                   const SessionScript& script, double epsilon) {
  PreferenceReport r;
  r.subject_id = subject_id;
  auto value = [&](int q) -> std::optional<double> {
    const double v = values[static_cast<std::size_t>(q - 1)];
    if (std::isnan(v)) return std::nullopt;
    return v;
  };

  if (auto x = value(2), y = value(3); x && y && *x > 0 && *y > 0)
    r.time = time_preference(*x, *y);

  for (int q = 5; q <= 10; ++q) {
    const auto v = value(q);
    if (!v) continue;
    const auto& payoff = script.item(q).payoff;
    r.gains.push_back(GainItemMeasure{q, *v, expected_value(payoff), classify_risk(*v, payoff, epsilon)});
  }
  for (int q = 11; q <= 12; ++q) {
    const auto v = value(q);
    if (!v) continue;
    const auto& payoff = script.item(q).payoff;
    r.losses.push_back(LossItemMeasure{q, *v, std::fabs(expected_value(payoff)),
                                       classify_ratio(insurance_ratio(*v, payoff), epsilon)});
  }

  auto lambda_for = [&](int q) -> std::optional<double> {
    const auto v = value(q);
    const auto* gamble = std::get_if<MixedGamble>(&script.item(q).payoff);
    if (!v || !gamble || !(*v > 0)) return std::nullopt;
    return loss_aversion(*v, gamble->loss.to_double());
  };
  r.lambda13 = lambda_for(13);
  r.lambda14 = lambda_for(14);
  if (r.lambda13 && r.lambda14)
    r.lambda = 0.5 * (*r.lambda13 + *r.lambda14);
  else if (r.lambda13)
    r.lambda = r.lambda13;
  else if (r.lambda14)
    r.lambda = r.lambda14;

  if (auto q1 = value(1)) r.patient_q1 = code_binary(1, decode_binary(1, *q1));
  if (auto q4 = value(4)) {
    r.ambiguity_seeking_q4 = code_binary(4, decode_binary(4, *q4));
    r.ambiguity_averse = 1 - *r.ambiguity_seeking_q4;
  }
  return r;
}

}  // namespace finpref
