// SPDX-License-Identifier: Apache-2.0
#include "finpref/finpref.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "finpref/econometrics.hpp"
#include "finpref/error.hpp"
#include "finpref/parsing.hpp"
#include "finpref/pipeline.hpp"
#include "finpref/version.hpp"
#include "json.hpp"

struct finpref_survey {
  finpref::SessionScript script;
};

struct finpref_trials {
  std::vector<finpref::TrialRecord> records;
};

struct finpref_profiles {
  std::vector<finpref::ResponseProfile> profiles;
};

namespace {

thread_local std::string g_last_error;

finpref_status status_for(finpref::ErrorKind kind) {
  using finpref::ErrorKind;
  switch (kind) {
    case ErrorKind::InvalidArgument: return FINPREF_E_INVALID_ARGUMENT;
    case ErrorKind::Domain: return FINPREF_E_DOMAIN;
    case ErrorKind::Variant: return FINPREF_E_VARIANT;
    case ErrorKind::KindMismatch: return FINPREF_E_KIND_MISMATCH;
    case ErrorKind::Io: return FINPREF_E_IO;
    case ErrorKind::Format: return FINPREF_E_FORMAT;
    case ErrorKind::Config: return FINPREF_E_CONFIG;
    case ErrorKind::Transport: return FINPREF_E_TRANSPORT;
    case ErrorKind::Endpoint: return FINPREF_E_ENDPOINT;
    case ErrorKind::Protocol: return FINPREF_E_PROTOCOL;
    case ErrorKind::FixtureMiss: return FINPREF_E_FIXTURE_MISS;
    case ErrorKind::EmptyInput: return FINPREF_E_EMPTY_INPUT;
    case ErrorKind::ParseQuality: return FINPREF_E_PARSE_QUALITY;
    case ErrorKind::Analysis: return FINPREF_E_ANALYSIS;
    case ErrorKind::StageDependency: return FINPREF_E_STAGE_DEPENDENCY;
    case ErrorKind::Integrity: return FINPREF_E_INTEGRITY;
  }
  return FINPREF_E_INTERNAL;
}

template <typename F>
finpref_status guarded(F&& body) noexcept {
  try {
    g_last_error.clear();
    body();
    return FINPREF_OK;
  } catch (const finpref::Error& e) {
    g_last_error = e.what();
    return status_for(e.kind());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return FINPREF_E_INTERNAL;
  } catch (...) {
    g_last_error = "unknown failure";
    return FINPREF_E_INTERNAL;
  }
}

void need(const void* p, const char* name) {
  if (!p) finpref::fail(finpref::ErrorKind::InvalidArgument, std::string(name) + " must not be NULL");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

const finpref::SessionScript& script_of(const finpref_survey* s) {
  return s ? s->script : finpref::canonical_survey();
}

const finpref::SurveyItem& item_of(const finpref_survey* s, int question_id) {
  const auto& script = script_of(s);
  if (question_id < 1 || question_id > static_cast<int>(script.items.size()))
    finpref::fail(finpref::ErrorKind::InvalidArgument, "question id out of range");
  return script.item(question_id);
}

finpref::AnalysisOptions options_from(const char* options_json) {
  if (!options_json || !*options_json) return {};
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(options_json);
  } catch (const nlohmann::json::exception& e) {
    finpref::fail(finpref::ErrorKind::Config, std::string("options are not valid JSON: ") + e.what());
  }
  return finpref::config_from_json(nlohmann::json{{"analysis", j}}.dump()).analysis;
}

finpref::ProfileMatrix matrix_of(const finpref_profiles* p, const finpref::AnalysisOptions& o) {
  need(p, "profiles");
  return finpref::build_matrix(p->profiles, o.impute_median);
}

// Analysis-stage domain problems surface as analysis failures.
template <typename F>
void as_analysis(F&& body) {
  try {
    body();
  } catch (const finpref::Error& e) {
    if (e.kind() == finpref::ErrorKind::Domain) throw finpref::Error(finpref::ErrorKind::Analysis, e.what());
    throw;
  }
}

}  // namespace

extern "C" {

const char* finpref_version(void) { return finpref::kVersionString; }
const char* finpref_last_error(void) { return g_last_error.c_str(); }

const char* finpref_status_name(finpref_status status) {
  switch (status) {
    case FINPREF_OK: return "ok";
    case FINPREF_E_INTERNAL: return "internal";
    default: break;
  }
  const int v = static_cast<int>(status);
  if (v >= 1 && v <= 16) return finpref::to_string(static_cast<finpref::ErrorKind>(v - 1));
  return "unknown";
}

int finpref_exit_code(finpref_status status) {
  switch (status) {
    case FINPREF_OK: return 0;
    case FINPREF_E_CONFIG: return 2;
    case FINPREF_E_TRANSPORT:
    case FINPREF_E_ENDPOINT:
    case FINPREF_E_PROTOCOL: return 3;
    case FINPREF_E_PARSE_QUALITY: return 4;
    case FINPREF_E_ANALYSIS: return 5;
    default: return 1;
  }
}

void finpref_string_free(char* s) { std::free(s); }

// ---- survey ----

finpref_status finpref_survey_canonical(finpref_survey** out) {
  return guarded([&] {
    need(out, "out");
    *out = new finpref_survey{finpref::canonical_survey()};
  });
}

finpref_status finpref_survey_load(const char* path, finpref_survey** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new finpref_survey{finpref::load_survey(path)};
  });
}

finpref_status finpref_survey_save(const finpref_survey* survey, const char* path) {
  return guarded([&] {
    need(path, "path");
    finpref::save_survey(script_of(survey), path);
  });
}

size_t finpref_survey_count(const finpref_survey* survey) { return script_of(survey).items.size(); }

finpref_status finpref_survey_render(const finpref_survey* survey, int question_id, int include_preamble,
                                     char** out) {
  return guarded([&] {
    need(out, "out");
    *out = dup_string(finpref::render_prompt(script_of(survey), item_of(survey, question_id),
                                             include_preamble != 0));
  });
}

finpref_status finpref_survey_expected_value(const finpref_survey* survey, int question_id, double* out) {
  return guarded([&] {
    need(out, "out");
    *out = finpref::expected_value(item_of(survey, question_id).payoff);
  });
}

void finpref_survey_free(finpref_survey* survey) { delete survey; }

// ---- trials ----

finpref_status finpref_survey_run(const char* config_json, const finpref_survey* survey, finpref_trials** out) {
  return guarded([&] {
    need(config_json, "config_json");
    need(out, "out");
    const finpref::RunConfig config = finpref::config_from_json(config_json);
    *out = new finpref_trials{finpref::collect_trials(config, script_of(survey))};
  });
}

finpref_status finpref_survey_replay(const char* fixture_path, const char* config_json,
                                     const finpref_survey* survey, finpref_trials** out) {
  return guarded([&] {
    need(fixture_path, "fixture_path");
    need(out, "out");
    nlohmann::json j = config_json && *config_json ? nlohmann::json::parse(config_json) : nlohmann::json::object();
    j["backend"] = "replay";
    j["fixture"] = fixture_path;
    const finpref::RunConfig config = finpref::config_from_json(j.dump());
    *out = new finpref_trials{finpref::collect_trials(config, script_of(survey))};
  });
}

finpref_status finpref_trials_load(const char* path, finpref_trials** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    namespace fs = std::filesystem;
    if (!fs::is_directory(path)) {
      *out = new finpref_trials{finpref::load_trials(path)};
      return;
    }
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(path))
      if (entry.is_regular_file() && entry.path().extension() == ".jsonl") files.push_back(entry.path().string());
    std::sort(files.begin(), files.end());
    if (files.empty()) finpref::fail(finpref::ErrorKind::EmptyInput, std::string("no .jsonl files in ") + path);
    auto* t = new finpref_trials;
    try {
      for (const auto& f : files) {
        auto records = finpref::load_trials(f);
        t->records.insert(t->records.end(), records.begin(), records.end());
      }
    } catch (...) {
      delete t;
      throw;
    }
    *out = t;
  });
}

finpref_status finpref_trials_save(const finpref_trials* trials, const char* path) {
  return guarded([&] {
    need(trials, "trials");
    need(path, "path");
    finpref::write_trials(path, trials->records);
  });
}

size_t finpref_trials_count(const finpref_trials* trials) { return trials ? trials->records.size() : 0; }

const char* finpref_trials_run_id(const finpref_trials* trials) {
  if (!trials || trials->records.empty()) return "";
  return trials->records.front().run_id.c_str();
}

finpref_status finpref_trials_parse(finpref_trials* trials, const finpref_survey* survey, char** quality_json) {
  return guarded([&] {
    need(trials, "trials");
    const auto q = finpref::reparse_records(trials->records, script_of(survey));
    if (quality_json) *quality_json = dup_string(finpref::parse_quality_json(q));
  });
}

void finpref_trials_free(finpref_trials* trials) { delete trials; }

// ---- answers ----

finpref_status finpref_parse_answer(const finpref_survey* survey, int question_id, const char* text,
                                    char** parse_status, double* value) {
  return guarded([&] {
    need(text, "text");
    const auto& item = item_of(survey, question_id);
    const finpref::ParseOutcome o = finpref::parse_for_item(item, text);
    if (parse_status) *parse_status = dup_string(finpref::to_string(o.status));
    if (value) {
      *value = std::numeric_limits<double>::quiet_NaN();
      if (o.value) {
        if (const auto* c = std::get_if<finpref::Choice>(&*o.value))
          *value = finpref::code_binary(question_id, c->value);
        else
          *value = std::get<finpref::Amount>(*o.value).value;
      }
    }
  });
}

// ---- profiles ----

finpref_status finpref_profiles_aggregate(const finpref_trials* trials, finpref_profiles** out) {
  return guarded([&] {
    need(trials, "trials");
    need(out, "out");
    *out = new finpref_profiles{finpref::aggregate_by_subject(trials->records)};
  });
}

finpref_status finpref_profiles_load_csv(const char* path, finpref_profiles** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new finpref_profiles{finpref::load_profiles(path)};
  });
}

finpref_status finpref_profiles_save_csv(const finpref_profiles* profiles, const char* path) {
  return guarded([&] {
    need(profiles, "profiles");
    need(path, "path");
    finpref::save_profiles(path, profiles->profiles);
  });
}

finpref_status finpref_profiles_merge(finpref_profiles* into, const finpref_profiles* other) {
  return guarded([&] {
    need(into, "into");
    need(other, "other");
    std::set<std::string> ids;
    for (const auto& p : into->profiles) ids.insert(p.subject_id);
    for (const auto& p : other->profiles)
      if (ids.count(p.subject_id))
        finpref::fail(finpref::ErrorKind::Format, "duplicate subject '" + p.subject_id + "'");
    into->profiles.insert(into->profiles.end(), other->profiles.begin(), other->profiles.end());
  });
}

size_t finpref_profiles_count(const finpref_profiles* profiles) {
  return profiles ? profiles->profiles.size() : 0;
}

const char* finpref_profiles_subject_id(const finpref_profiles* profiles, size_t index) {
  if (!profiles || index >= profiles->profiles.size()) return nullptr;
  return profiles->profiles[index].subject_id.c_str();
}

finpref_status finpref_profiles_values(const finpref_profiles* profiles, size_t index, double out[14]) {
  return guarded([&] {
    need(profiles, "profiles");
    need(out, "out");
    if (index >= profiles->profiles.size())
      finpref::fail(finpref::ErrorKind::InvalidArgument, "profile index out of range");
    const auto& v = profiles->profiles[index].values;
    std::copy(v.begin(), v.end(), out);
  });
}

void finpref_profiles_free(finpref_profiles* profiles) { delete profiles; }

// ---- metrics ----

finpref_status finpref_time_preference(double x, double y, double* beta, double* delta, int* present_biased,
                                       int* normative_violation) {
  return guarded([&] {
    const finpref::TimePreference t = finpref::time_preference(x, y);
    if (beta) *beta = t.beta;
    if (delta) *delta = t.delta;
    if (present_biased) *present_biased = t.present_biased;
    if (normative_violation) *normative_violation = t.normative_violation;
  });
}

finpref_status finpref_loss_aversion(double win_required, double fixed_loss, double* lambda) {
  return guarded([&] {
    need(lambda, "lambda");
    *lambda = finpref::loss_aversion(win_required, fixed_loss);
  });
}

finpref_status finpref_stats_write(const finpref_profiles* profiles, const char* out_csv) {
  return guarded([&] {
    need(out_csv, "out_csv");
    const auto m = matrix_of(profiles, {});
    finpref::write_text_file(out_csv, finpref::format_stats_csv(finpref::descriptive_stats(m)));
  });
}

finpref_status finpref_metrics_write(const finpref_profiles* profiles, double epsilon, const char* out_csv) {
  return guarded([&] {
    need(profiles, "profiles");
    need(out_csv, "out_csv");
    const auto reports = finpref::preference_reports(profiles->profiles, finpref::canonical_survey(), epsilon);
    finpref::write_text_file(out_csv, finpref::metrics_csv(profiles->profiles, reports));
  });
}

finpref_status finpref_metrics_rank(const finpref_profiles* profiles, const char* by, const char* out_csv) {
  return guarded([&] {
    need(profiles, "profiles");
    need(by, "by");
    need(out_csv, "out_csv");
    const finpref::RankBy key = finpref::rank_by_from_string(by);
    const auto reports = finpref::preference_reports(profiles->profiles, finpref::canonical_survey(),
                                                     finpref::kDefaultNeutralBand);
    finpref::write_text_file(out_csv,
                             finpref::rank_csv(finpref::rank_subjects(profiles->profiles, reports, key), key));
  });
}

// ---- analysis ----

finpref_status finpref_analyze_cluster(const finpref_profiles* profiles, const char* options_json,
                                       const char* out_json) {
  return guarded([&] {
    need(out_json, "out_json");
    const auto o = options_from(options_json);
    const auto m = matrix_of(profiles, o);
    as_analysis([&] { finpref::write_cluster(finpref::analyze_cluster(m, o), o, out_json); });
  });
}

finpref_status finpref_analyze_pca(const finpref_profiles* profiles, const char* options_json,
                                   const char* out_dir) {
  return guarded([&] {
    need(out_dir, "out_dir");
    const auto o = options_from(options_json);
    const auto m = matrix_of(profiles, o);
    as_analysis([&] { finpref::write_pca(finpref::analyze_pca(m, o), out_dir); });
  });
}

finpref_status finpref_analyze_kmeans(const finpref_profiles* profiles, const char* options_json,
                                      const char* out_csv) {
  return guarded([&] {
    need(out_csv, "out_csv");
    const auto o = options_from(options_json);
    const auto m = matrix_of(profiles, o);
    as_analysis([&] { finpref::write_text_file(out_csv, finpref::kmeans_csv(finpref::analyze_kmeans(m, o))); });
  });
}

// ---- synthetic agents ----

finpref_status finpref_simulate(const char* spec_json, int n, int trials, uint64_t seed, finpref_profiles** out) {
  return guarded([&] {
    need(spec_json, "spec_json");
    need(out, "out");
    finpref::PopulationSpec spec = finpref::population_spec_from_json(spec_json);
    if (trials > 0) spec.trials_per_agent = trials;
    auto subjects = finpref::generate_population(spec, n, seed, finpref::canonical_survey());
    auto* p = new finpref_profiles;
    for (auto& s : subjects) p->profiles.push_back(std::move(s.profile));
    *out = p;
  });
}

// ---- pipeline ----

finpref_status finpref_pipeline(const char* config_json) {
  return guarded([&] {
    need(config_json, "config_json");
    finpref::run_pipeline(finpref::config_from_json(config_json));
  });
}

finpref_status finpref_report(const char* out_dir) {
  return guarded([&] {
    need(out_dir, "out_dir");
    finpref::write_report(out_dir);
  });
}

finpref_status finpref_manifest_verify(const char* out_dir, char** summary_json) {
  finpref::VerifyResult result;
  const finpref_status st = guarded([&] {
    need(out_dir, "out_dir");
    result = finpref::verify_manifest(out_dir);
    if (summary_json)
      *summary_json = dup_string(
          nlohmann::json{{"checked", result.checked}, {"ok", result.ok()}, {"problems", result.problems}}.dump(2) +
          "\n");
  });
  if (st != FINPREF_OK) return st;
  if (!result.ok()) {
    g_last_error = std::to_string(result.problems.size()) + " artifact(s) failed verification: " +
                   result.problems.front();
    return FINPREF_E_INTEGRITY;
  }
  return FINPREF_OK;
}

}  // extern "C"
