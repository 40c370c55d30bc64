// SPDX-License-Identifier: Apache-2.0
#include "finpref/survey.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "finpref/error.hpp"
#include "json.hpp"

namespace finpref {

using nlohmann::json;

Money Money::from_double(double usd) {
  if (!std::isfinite(usd)) fail(ErrorKind::Domain, "money amount must be finite");
  return Money(static_cast<std::int64_t>(std::llround(usd * 100.0)));
}

namespace {

std::string group_thousands(std::int64_t whole) {
  std::string digits = std::to_string(whole);
  std::string out;
  const std::size_t n = digits.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0 && (n - i) % 3 == 0) out.push_back(',');
    out.push_back(digits[i]);
  }
  return out;
}

std::string cents_suffix(std::int64_t cents, bool trim) {
  if (cents == 0) return {};
  char buf[8];
  std::snprintf(buf, sizeof buf, ".%02lld", static_cast<long long>(cents));
  std::string s(buf);
  if (trim && s.back() == '0') s.pop_back();
  return s;
}

}  // namespace

std::string Money::to_prompt_string() const {
  const std::int64_t mag = std::llabs(cents_);
  std::string s = cents_ < 0 ? "-$" : "$";
  s += group_thousands(mag / 100);
  s += cents_suffix(mag % 100, false);
  return s;
}

std::string Money::to_plain_string() const {
  const std::int64_t mag = std::llabs(cents_);
  std::string s = cents_ < 0 ? "-" : "";
  s += std::to_string(mag / 100);
  s += cents_suffix(mag % 100, true);
  return s;
}

const char* to_string(ItemKind kind) noexcept {
  return kind == ItemKind::BinaryChoice ? "binary_choice" : "open_amount";
}

ItemKind item_kind_from_string(std::string_view s) {
  if (s == "binary_choice") return ItemKind::BinaryChoice;
  if (s == "open_amount") return ItemKind::OpenAmount;
  fail(ErrorKind::Format, "unknown item kind '" + std::string(s) + "'");
}

const SurveyItem& SessionScript::item(int id) const {
  for (const auto& it : items)
    if (it.id == id) return it;
  fail(ErrorKind::Domain, "survey has no item with id " + std::to_string(id));
}

namespace {

void validate_outcomes(const std::vector<Outcome>& outcomes, bool allow_zero_amount) {
  if (outcomes.empty()) fail(ErrorKind::Domain, "lottery has no outcomes");
  std::int64_t total = 0;
  bool any_positive = false;
  for (const auto& o : outcomes) {
    if (o.probability.bp() < 0 || o.probability.bp() > Probability::kScale)
      fail(ErrorKind::Domain, "outcome probability outside [0,1]");
    if (o.amount.cents() < 0 || (!allow_zero_amount && o.amount.cents() == 0))
      fail(ErrorKind::Domain, "outcome amount must be positive");
    if (o.amount.cents() > 0) any_positive = true;
    total += o.probability.bp();
  }
  if (total != Probability::kScale) fail(ErrorKind::Domain, "outcome probabilities do not sum to 1");
  if (!any_positive) fail(ErrorKind::Domain, "lottery has no positive monetary outcome");
}

void require_positive(Money m, const char* what) {
  if (m.cents() <= 0) fail(ErrorKind::Domain, std::string(what) + " must be strictly positive");
}

struct PayoffValidator {
  void operator()(const TimedPayment& p) const {
    require_positive(p.amount_now, "amount_now");
    require_positive(p.amount_later, "amount_later");
    if (p.delay_months <= 0) fail(ErrorKind::Domain, "delay must be positive");
  }
  void operator()(const IndifferenceDelay& p) const {
    require_positive(p.base_amount, "base_amount");
    if (p.delay_years <= 0) fail(ErrorKind::Domain, "delay must be positive");
  }
  // "win $0" / "no loss" outcomes are payouts of zero, not monetary magnitudes.
  void operator()(const GainLottery& p) const { validate_outcomes(p.outcomes, true); }
  void operator()(const LossLottery& p) const { validate_outcomes(p.outcomes, true); }
  void operator()(const MixedGamble& p) const {
    require_positive(p.loss, "loss");
    if (p.win_probability.bp() <= 0 || p.win_probability.bp() >= Probability::kScale)
      fail(ErrorKind::Domain, "win probability must lie in (0,1)");
  }
  void operator()(const UrnChoice& p) const {
    require_positive(p.prize, "prize");
    if (p.known_probability.bp() < 0 || p.known_probability.bp() > Probability::kScale)
      fail(ErrorKind::Domain, "known probability outside [0,1]");
    if (p.ambiguous_pool <= 0) fail(ErrorKind::Domain, "ambiguous pool must be positive");
  }
};

}  // namespace

void validate_payoff(const PayoffSpec& payoff) { std::visit(PayoffValidator{}, payoff); }

void validate_script(const SessionScript& script) {
  if (script.items.size() != kQuestionCount)
    fail(ErrorKind::Domain, "survey must contain exactly 14 items");
  for (int i = 0; i < kQuestionCount; ++i) {
    const SurveyItem& it = script.items[static_cast<std::size_t>(i)];
    if (it.id != i + 1) fail(ErrorKind::Domain, "survey items must be numbered 1..14 in order");
    const bool binary = it.id == 1 || it.id == 4;
    if ((it.kind == ItemKind::BinaryChoice) != binary)
      fail(ErrorKind::Domain, "item " + std::to_string(it.id) + " has the wrong kind");
    validate_payoff(it.payoff);
  }
}

namespace {

constexpr const char* kPreamble =
    "Below, you are asked to make hypothetical decisions. There is no right or wrong answer. "
    "I am interested in your own preference. No calculation is needed.";

constexpr const char* kChoiceInstruction = "Please answer with a single letter.";
constexpr const char* kAmountInstruction = "Answer with a number only.";

std::string gain_lottery_body(int number, const char* a, const char* b) {
  return "Lottery " + std::to_string(number) +
         ":\n\nImagine you are offered the lottery. Please indicate the maximum amount $Z you are "
         "willing to pay to play.\n\nA. " +
         a + "\n\nB. " + b + "\n\nI am willing to pay at most $Z to play this lottery";
}

std::string loss_lottery_body(int number, const char* a) {
  return "Lottery " + std::to_string(number) +
         ":\n\nThe following lottery involve losses. Imagine you have to play this lottery, unless "
         "you pay a certain amount of money beforehand. What is the maximum amount you would be "
         "willing to pay, in order to avoid playing the lottery? This corresponds to buying an "
         "insurance that saves you from suffering potential losses.\n\nA. " +
         std::string(a) +
         "\n\nB. With 40% chance, there is no loss or win.\n\nI am willing to pay at most $K to "
         "avoid this lottery.";
}

Outcome outcome(int pct, std::int64_t dollars) {
  return Outcome{Probability::percent(pct), Money::dollars(dollars)};
}

SessionScript build_canonical() {
  SessionScript s;
  s.preamble = kPreamble;
  auto add = [&](int id, ItemKind kind, std::string body, PayoffSpec payoff) {
    s.items.push_back(SurveyItem{id, kind, std::move(body),
                                 kind == ItemKind::BinaryChoice ? kChoiceInstruction
                                                                : kAmountInstruction,
                                 std::move(payoff)});
  };

  add(1, ItemKind::BinaryChoice,
      "Question:\n\nWhich offer would you prefer? Please answer with a single letter.\n\n"
      "A. A payment of $3,400 this month.\n\nB. A payment of $3,800 next month.",
      TimedPayment{Money::dollars(3400), Money::dollars(3800), 1});
  add(2, ItemKind::OpenAmount,
      "Question:\n\nPlease consider the following alternatives. Please fill in the amount for "
      "which you consider alternatives A and B equally attractive:\n\nA. A payment of $100 "
      "now.\n\nB. A payment of $X in one year from now. $X has to be at least $..., such that B "
      "is as attractive as A.",
      IndifferenceDelay{Money::dollars(100), 1});
  add(3, ItemKind::OpenAmount,
      "Question:\n\nPlease consider the following alternatives. Please fill in the amount for "
      "which you consider alternatives A and B as equally attractive:\n\nA. A payment of $100 "
      "now.\n\nB. A payment of $Y in 10 years from now. $Y has to be at least $..., such that B "
      "is as attractive as A.",
      IndifferenceDelay{Money::dollars(100), 10});
  add(4, ItemKind::BinaryChoice,
      "Question:\n\nIn an urn, there are 100 balls in three colors: red, yellow, and blue. Thirty "
      "balls are red; the remaining 70 are yellow or blue in an unknown proportion. Imagine a "
      "ball is randomly drawn from the urn. You are offered the following two lotteries. Which "
      "lottery would you prefer, A or B? Please answer with a single letter.\n\nA. If the color "
      "of this ball is red, you win $100; otherwise, you win nothing.\n\nB. If the color of this "
      "ball is yellow, you win $100; otherwise, you win nothing.",
      UrnChoice{Probability::percent(30), 70, Money::dollars(100)});
  add(5, ItemKind::OpenAmount,
      gain_lottery_body(1, "With 10% chance, you will win $10.", "With 90% chance, you will win $100."),
      GainLottery{{outcome(10, 10), outcome(90, 100)}});
  add(6, ItemKind::OpenAmount,
      gain_lottery_body(2, "With 40% chance, you will win $0.", "With 60% chance, you will win $100."),
      GainLottery{{outcome(40, 0), outcome(60, 100)}});
  add(7, ItemKind::OpenAmount,
      gain_lottery_body(3, "With 10% chance, you will win $0.", "With 90% chance, you will win $100."),
      GainLottery{{outcome(10, 0), outcome(90, 100)}});
  add(8, ItemKind::OpenAmount,
      gain_lottery_body(4, "With a 40% chance, you will win $0.",
                        "With a 60% chance, you will win $10,000."),
      GainLottery{{outcome(40, 0), outcome(60, 10000)}});
  add(9, ItemKind::OpenAmount,
      gain_lottery_body(5, "With 90% chance, you will win $0.", "With 10% chance, you will win $100."),
      GainLottery{{outcome(90, 0), outcome(10, 100)}});
  add(10, ItemKind::OpenAmount,
      gain_lottery_body(6, "With 40% chance, you will win $0.", "With 60% chance, you will win $400."),
      GainLottery{{outcome(40, 0), outcome(60, 400)}});
  add(11, ItemKind::OpenAmount, loss_lottery_body(7, "With 60% chance, you will lose $80."),
      LossLottery{{outcome(60, 80), outcome(40, 0)}});
  add(12, ItemKind::OpenAmount, loss_lottery_body(8, "With 60% chance, you will lose $100."),
      LossLottery{{outcome(60, 100), outcome(40, 0)}});
  add(13, ItemKind::OpenAmount,
      "Lottery 9:\n\nIn the following lottery, you have a 50% chance to win. The potential loss "
      "is fixed and given. Please state the minimum amount $X for which you would be willing to "
      "accept the lottery. No calculation is needed, just write down $X.\n\nA. With 50% chance, "
      "you will lose $25\n\nB. With 50% chance, you will win $X.",
      MixedGamble{Money::dollars(25), Probability::percent(50)});
  // Option B keeps the published "lose $ Y" wording; the payoff is modeled as a win.
  add(14, ItemKind::OpenAmount,
      "Lottery 10:\n\nIn the following lottery, you have a 50% chance to win or lose money. The "
      "potential loss is given. Please state the minimum amount Y for which you would be willing "
      "to accept the lottery. No calculation is needed, just write down $Y.\n\nA. With 50% "
      "chance, you will lose $100\n\nB. With 50% chance, you will lose $ Y.",
      MixedGamble{Money::dollars(100), Probability::percent(50)});

  validate_script(s);
  return s;
}

}  // namespace

const SessionScript& canonical_survey() {
  static const SessionScript script = build_canonical();
  return script;
}

std::string render_prompt(const SessionScript& script, const SurveyItem& item,
                          bool include_preamble) {
  std::string out;
  if (include_preamble && !script.preamble.empty()) {
    out += script.preamble;
    out += "\n\n";
  }
  out += item.prompt_body;
  // Items 1 and 4 already state the instruction inside the question text.
  if (!item.answer_instruction.empty() &&
      item.prompt_body.find(item.answer_instruction) == std::string::npos) {
    out += "\n\n";
    out += item.answer_instruction;
  }
  return out;
}

namespace {

// Sum of probability_bp * cents, exact in 64-bit for survey-scale amounts.
std::int64_t weighted_cents(const std::vector<Outcome>& outcomes) {
  std::int64_t acc = 0;
  for (const auto& o : outcomes) acc += o.probability.bp() * o.amount.cents();
  return acc;
}

constexpr double kWeightedScale = static_cast<double>(Probability::kScale) * 100.0;

}  // namespace

double expected_value(const PayoffSpec& payoff, std::optional<Money> win) {
  if (const auto* g = std::get_if<GainLottery>(&payoff))
    return static_cast<double>(weighted_cents(g->outcomes)) / kWeightedScale;
  if (const auto* l = std::get_if<LossLottery>(&payoff))
    return -static_cast<double>(weighted_cents(l->outcomes)) / kWeightedScale;
  if (const auto* m = std::get_if<MixedGamble>(&payoff)) {
    if (!win) fail(ErrorKind::InvalidArgument, "mixed gamble expected value needs a win amount");
    const std::int64_t p = m->win_probability.bp();
    const std::int64_t acc = p * win->cents() - (Probability::kScale - p) * m->loss.cents();
    return static_cast<double>(acc) / kWeightedScale;
  }
  fail(ErrorKind::Variant, "payoff variant has no scalar expected value");
}

// ---------------------------------------------------------------------------
// Export / import

namespace {

json outcomes_to_json(const std::vector<Outcome>& outcomes) {
  json arr = json::array();
  for (const auto& o : outcomes)
    arr.push_back({{"probability_bp", o.probability.bp()}, {"amount_cents", o.amount.cents()}});
  return arr;
}

std::vector<Outcome> outcomes_from_json(const json& arr) {
  std::vector<Outcome> out;
  for (const auto& o : arr)
    out.push_back(Outcome{Probability::basis_points(o.at("probability_bp").get<std::int64_t>()),
                          Money::from_cents(o.at("amount_cents").get<std::int64_t>())});
  return out;
}

struct PayoffToJson {
  json operator()(const TimedPayment& p) const {
    return {{"type", "timed_payment"},
            {"amount_now_cents", p.amount_now.cents()},
            {"amount_later_cents", p.amount_later.cents()},
            {"delay_months", p.delay_months}};
  }
  json operator()(const IndifferenceDelay& p) const {
    return {{"type", "indifference_delay"},
            {"base_amount_cents", p.base_amount.cents()},
            {"delay_years", p.delay_years}};
  }
  json operator()(const GainLottery& p) const {
    return {{"type", "gain_lottery"}, {"outcomes", outcomes_to_json(p.outcomes)}};
  }
  json operator()(const LossLottery& p) const {
    return {{"type", "loss_lottery"}, {"outcomes", outcomes_to_json(p.outcomes)}};
  }
  json operator()(const MixedGamble& p) const {
    return {{"type", "mixed_gamble"},
            {"loss_cents", p.loss.cents()},
            {"win_probability_bp", p.win_probability.bp()}};
  }
  json operator()(const UrnChoice& p) const {
    return {{"type", "urn_choice"},
            {"known_probability_bp", p.known_probability.bp()},
            {"ambiguous_pool", p.ambiguous_pool},
            {"prize_cents", p.prize.cents()}};
  }
};

PayoffSpec payoff_from_json(const json& j) {
  const std::string type = j.at("type").get<std::string>();
  auto cents = [&](const char* key) { return Money::from_cents(j.at(key).get<std::int64_t>()); };
  auto bp = [&](const char* key) {
    return Probability::basis_points(j.at(key).get<std::int64_t>());
  };
  if (type == "timed_payment")
    return TimedPayment{cents("amount_now_cents"), cents("amount_later_cents"),
                        j.at("delay_months").get<int>()};
  if (type == "indifference_delay")
    return IndifferenceDelay{cents("base_amount_cents"), j.at("delay_years").get<int>()};
  if (type == "gain_lottery") return GainLottery{outcomes_from_json(j.at("outcomes"))};
  if (type == "loss_lottery") return LossLottery{outcomes_from_json(j.at("outcomes"))};
  if (type == "mixed_gamble") return MixedGamble{cents("loss_cents"), bp("win_probability_bp")};
  if (type == "urn_choice")
    return UrnChoice{bp("known_probability_bp"), j.at("ambiguous_pool").get<int>(),
                     cents("prize_cents")};
  fail(ErrorKind::Format, "unknown payoff type '" + type + "'");
}

}  // namespace

std::string export_survey(const SessionScript& script) {
  std::string out = json{{"preamble", script.preamble}}.dump() + "\n";
  for (const auto& it : script.items) {
    json rec = {{"id", it.id},
                {"kind", to_string(it.kind)},
                {"prompt", it.prompt_body},
                {"instruction", it.answer_instruction},
                {"payoff", std::visit(PayoffToJson{}, it.payoff)}};
    out += rec.dump();
    out += '\n';
  }
  return out;
}

SessionScript import_survey(std::string_view text) {
  SessionScript s;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  bool have_preamble = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      if (!have_preamble && j.contains("preamble")) {
        s.preamble = j.at("preamble").get<std::string>();
        have_preamble = true;
        continue;
      }
      s.items.push_back(SurveyItem{j.at("id").get<int>(),
                                   item_kind_from_string(j.at("kind").get<std::string>()),
                                   j.at("prompt").get<std::string>(),
                                   j.value("instruction", std::string{}),
                                   payoff_from_json(j.at("payoff"))});
    } catch (const Error& e) {
      fail(ErrorKind::Format, "survey line " + std::to_string(line_no) + ": " + e.what());
    } catch (const json::exception& e) {
      fail(ErrorKind::Format, "survey line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  validate_script(s);
  return s;
}

void save_survey(const SessionScript& script, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot open '" + path + "' for writing");
  out << export_survey(script);
  if (!out) fail(ErrorKind::Io, "write failed for '" + path + "'");
}

SessionScript load_survey(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return import_survey(ss.str());
}

}  // namespace finpref
