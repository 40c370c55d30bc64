// SPDX-License-Identifier: Apache-2.0
//
// Trial logs (JSONL), median response profiles, human country baselines
// (CSV), and descriptive statistics over profile matrices.
#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "finpref/survey.hpp"
#include "finpref/trial.hpp"

namespace finpref {

enum class SubjectKind { HumanCountry, Llm, Synthetic };

const char* to_string(SubjectKind k) noexcept;
SubjectKind subject_kind_from_string(const std::string& s);

struct ResponseProfile {
  std::string subject_id;
  SubjectKind kind = SubjectKind::HumanCountry;
  std::array<double, kQuestionCount> values{};  // NaN where missing
  int n_trials = 1;
  std::set<int> missing;

  double value(int question_id) const { return values[static_cast<std::size_t>(question_id - 1)]; }
};

struct ProfileMatrix {
  std::vector<std::string> subjects;
  std::vector<SubjectKind> kinds;
  Eigen::MatrixXd matrix;  // subjects x 14
  std::vector<std::string> provenance;
  std::vector<std::string> excluded;  // subjects dropped for missing values
};

// Median of a sample; even counts average the two central order statistics.
double median(std::vector<double> values);

// Records must all belong to one subject. Failed records are ignored; letter
// choices are coded 0/1. Binary items use the lower median so the coded value
// stays in {0, 1}.
ResponseProfile median_aggregate(std::span<const TrialRecord> records);
// Groups by subject (first-appearance order) and aggregates each.
std::vector<ResponseProfile> aggregate_by_subject(std::span<const TrialRecord> records);

// Header must be exactly subject_id,Q1,...,Q14. Blank cells are missing.
std::vector<ResponseProfile> load_country_csv(const std::string& path);
std::vector<ResponseProfile> parse_profiles_csv(const std::string& text, const std::string& source);
std::string format_profiles_csv(std::span<const ResponseProfile> profiles);
// Writes `path` plus a `<path>.meta.json` sidecar holding kinds and trial counts.
void save_profiles(const std::string& path, std::span<const ResponseProfile> profiles);
// Reads `path`, applying the sidecar when present.
std::vector<ResponseProfile> load_profiles(const std::string& path);

// Subjects with missing questions are excluded unless `impute_median` is set,
// in which case missing cells take the column median of observed values.
ProfileMatrix build_matrix(std::span<const ResponseProfile> profiles, bool impute_median = false);

struct QuestionStats {
  int question_id = 0;
  std::size_t count = 0;
  double mean = 0.0;
  double sd = 0.0;  // sample sd; 0 with sd_defined=false when count == 1
  bool sd_defined = true;
  double min = 0.0;
  double median = 0.0;
  double max = 0.0;
};

std::vector<QuestionStats> descriptive_stats(const ProfileMatrix& matrix);
// Rows count/mean/sd/min/median/max (+ sd_defined), columns Q1..Q14.
std::string format_stats_csv(std::span<const QuestionStats> stats);

// JSONL trial logs.
std::string trial_to_json_line(const TrialRecord& record);
TrialRecord trial_from_json_line(const std::string& line);
void append_trials(const std::string& path, std::span<const TrialRecord> records);
void write_trials(const std::string& path, std::span<const TrialRecord> records);
std::vector<TrialRecord> load_trials(const std::string& path);

// Shortest round-trip decimal, used for every numeric cell we emit.
std::string format_number(double v);

}  // namespace finpref
