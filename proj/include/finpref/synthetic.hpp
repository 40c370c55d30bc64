// SPDX-License-Identifier: Apache-2.0
//
// Forward models of survey respondents with known preference parameters.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "finpref/parsing.hpp"
#include "finpref/profiles.hpp"
#include "finpref/survey.hpp"

namespace finpref {

struct AgentParams {
  double beta = 1.0;
  double delta_annual = 1.0;
  double risk_ce_ratio = 1.0;  // WTP = ratio * EV, premium = ratio * |expected loss|
  double lambda = 1.0;
  bool ambiguity_averse = true;
  double noise_sd = 0.0;  // sd of the log of a median-one multiplicative factor
  std::uint64_t seed = 0;
};

// Throws Error(Domain) on non-positive beta/delta/ratio/lambda or negative noise.
void validate_agent(const AgentParams& params);

ParsedAnswer agent_answer(const AgentParams& params, const SurveyItem& item, int trial_index);

// One parameter of a mixture component: either a fixed value or uniform [lo, hi].
struct ParamRange {
  double lo = 0.0;
  double hi = 0.0;

  static ParamRange fixed(double v) { return {v, v}; }
};

struct AgentComponent {
  std::string label;
  double weight = 1.0;
  ParamRange beta = ParamRange::fixed(1.0);
  ParamRange delta_annual = ParamRange::fixed(1.0);
  ParamRange risk_ce_ratio = ParamRange::fixed(1.0);
  ParamRange lambda = ParamRange::fixed(1.0);
  double ambiguity_averse_probability = 1.0;
  double noise_sd = 0.0;
};

struct PopulationSpec {
  std::vector<AgentComponent> components;
  int trials_per_agent = 1;
};

// JSON: {"trials": N, "components": [{"label", "weight", "beta": 0.7 or [lo, hi], ...}]}
PopulationSpec population_spec_from_json(const std::string& text);

struct SyntheticSubject {
  AgentParams params;
  int component = 0;
  ResponseProfile profile;
};

std::vector<SyntheticSubject> generate_population(const PopulationSpec& spec, int n,
                                                  std::uint64_t seed,
                                                  const SessionScript& script);

// Deterministic 64-bit mixing of a seed with stream coordinates.
std::uint64_t stream_key(std::uint64_t seed, std::uint64_t a, std::uint64_t b);

}  // namespace finpref
