// SPDX-License-Identifier: Apache-2.0
#include "finpref/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

#include "finpref/econometrics.hpp"
#include "finpref/error.hpp"
#include "json.hpp"

namespace finpref {

namespace {

std::uint64_t mix(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

class Stream {
 public:
  explicit Stream(std::uint64_t key) : state_(key) {}
  double uniform() {
    state_ = mix(state_);
    return static_cast<double>(state_ >> 11) * 0x1.0p-53;
  }
  // Box-Muller; u1 is kept away from 0.
  double normal() {
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t state_;
};

}  // namespace

std::uint64_t stream_key(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return mix(mix(mix(seed) ^ a) ^ (b * 0xD1B54A32D192ED03ULL));
}

void validate_agent(const AgentParams& p) {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v))
      fail(ErrorKind::Domain, std::string("agent ") + name + " must be positive");
  };
  positive(p.beta, "beta");
  positive(p.delta_annual, "delta");
  positive(p.risk_ce_ratio, "risk_ce_ratio");
  positive(p.lambda, "lambda");
  if (!(p.noise_sd >= 0.0) || !std::isfinite(p.noise_sd))
    fail(ErrorKind::Domain, "agent noise_sd must be non-negative");
}

ParsedAnswer agent_answer(const AgentParams& p, const SurveyItem& item, int trial_index) {
  const double noise =
      p.noise_sd > 0.0
          ? std::exp(p.noise_sd * Stream(stream_key(p.seed, static_cast<std::uint64_t>(trial_index),
                                                    static_cast<std::uint64_t>(item.id)))
                                      .normal())
          : 1.0;
  auto amount = [&](double v) { return ParsedAnswer{Amount{v * noise}}; };

  return std::visit(
      [&](const auto& payoff) -> ParsedAnswer {
        using T = std::decay_t<decltype(payoff)>;
        if constexpr (std::is_same_v<T, TimedPayment>) {
          const double later = payoff.amount_later.to_double() * p.beta *
                               std::pow(p.delta_annual, payoff.delay_months / 12.0);
          return Choice{later > payoff.amount_now.to_double() ? Letter::B : Letter::A};
        } else if constexpr (std::is_same_v<T, IndifferenceDelay>) {
          return amount(payoff.base_amount.to_double() /
                        (p.beta * std::pow(p.delta_annual, payoff.delay_years)));
        } else if constexpr (std::is_same_v<T, GainLottery>) {
          return amount(p.risk_ce_ratio * expected_value(payoff));
        } else if constexpr (std::is_same_v<T, LossLottery>) {
          return amount(p.risk_ce_ratio * std::fabs(expected_value(payoff)));
        } else if constexpr (std::is_same_v<T, MixedGamble>) {
          return amount(p.lambda * payoff.loss.to_double());
        } else {
          return Choice{p.ambiguity_averse ? Letter::A : Letter::B};
        }
      },
      item.payoff);
}

namespace {

ParamRange range_from_json(const nlohmann::json& j, const char* key, ParamRange fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (v.is_number()) return ParamRange::fixed(v.get<double>());
  if (v.is_array() && v.size() == 2) {
    ParamRange r{v[0].get<double>(), v[1].get<double>()};
    if (r.hi < r.lo) fail(ErrorKind::Config, std::string("range for '") + key + "' is reversed");
    return r;
  }
  if (v.is_object() && v.contains("uniform")) return range_from_json(v, "uniform", fallback);
  fail(ErrorKind::Config, std::string("'") + key + "' must be a number or a [lo, hi] pair");
}

double sample(Stream& s, const ParamRange& r) {
  return r.lo == r.hi ? r.lo : r.lo + (r.hi - r.lo) * s.uniform();
}

}  // namespace

PopulationSpec population_spec_from_json(const std::string& text) {
  PopulationSpec spec;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
    spec.trials_per_agent = j.value("trials", 1);
    for (const auto& c : j.at("components")) {
      AgentComponent comp;
      comp.label = c.value("label", std::string("agent"));
      comp.weight = c.value("weight", 1.0);
      comp.beta = range_from_json(c, "beta", comp.beta);
      comp.delta_annual = range_from_json(c, "delta", comp.delta_annual);
      comp.risk_ce_ratio = range_from_json(c, "risk_ce_ratio", comp.risk_ce_ratio);
      comp.lambda = range_from_json(c, "lambda", comp.lambda);
      comp.ambiguity_averse_probability = c.value("ambiguity_averse_probability", 1.0);
      comp.noise_sd = c.value("noise_sd", 0.0);
      if (!(comp.weight > 0.0)) fail(ErrorKind::Config, "component weight must be positive");
      spec.components.push_back(comp);
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Config, std::string("agent spec: ") + e.what());
  }
  if (spec.components.empty()) fail(ErrorKind::Config, "agent spec has no components");
  if (spec.trials_per_agent < 1) fail(ErrorKind::Config, "agent spec trials must be >= 1");
  return spec;
}

std::vector<SyntheticSubject> generate_population(const PopulationSpec& spec, int n,
                                                  std::uint64_t seed,
                                                  const SessionScript& script) {
  if (n < 1) fail(ErrorKind::Domain, "population size must be >= 1");
  if (spec.components.empty()) fail(ErrorKind::Config, "population has no components");
  double total_weight = 0.0;
  for (const auto& c : spec.components) total_weight += c.weight;

  std::vector<SyntheticSubject> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Stream s(stream_key(seed, static_cast<std::uint64_t>(i), 0));
    const double pick = s.uniform() * total_weight;
    std::size_t ci = 0;
    double acc = spec.components[0].weight;
    while (ci + 1 < spec.components.size() && pick >= acc) acc += spec.components[++ci].weight;
    const AgentComponent& comp = spec.components[ci];

    SyntheticSubject subject;
    subject.component = static_cast<int>(ci);
    AgentParams& p = subject.params;
    p.beta = sample(s, comp.beta);
    p.delta_annual = sample(s, comp.delta_annual);
    p.risk_ce_ratio = sample(s, comp.risk_ce_ratio);
    p.lambda = sample(s, comp.lambda);
    p.ambiguity_averse = s.uniform() < comp.ambiguity_averse_probability;
    p.noise_sd = comp.noise_sd;
    p.seed = stream_key(seed, static_cast<std::uint64_t>(i), 1);
    validate_agent(p);

    char id[64];
    std::snprintf(id, sizeof id, "%s-%04d", comp.label.c_str(), i + 1);
    std::vector<TrialRecord> records;
    for (int t = 0; t < spec.trials_per_agent; ++t) {
      for (const auto& item : script.items) {
        TrialRecord r;
        r.subject = id;
        r.backend = "synthetic";
        r.trial_index = t;
        r.question_id = item.id;
        r.parsed = agent_answer(p, item, t);
        r.parse_status = TrialStatus::Ok;
        records.push_back(std::move(r));
      }
    }
    subject.profile = median_aggregate(records);
    out.push_back(std::move(subject));
  }
  return out;
}

}  // namespace finpref
