/* SPDX-License-Identifier: Apache-2.0 */
/*
 * C interface to the finpref library. Objects are opaque handles released
 * with their *_free function. Every call returns a finpref_status; on failure
 * finpref_last_error() describes the problem for the calling thread. Strings
 * returned through char** parameters are released with finpref_string_free.
 */
#ifndef FINPREF_FINPREF_H
#define FINPREF_FINPREF_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define FINPREF_API __declspec(dllexport)
#else
#define FINPREF_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum finpref_status {
  FINPREF_OK = 0,
  FINPREF_E_INVALID_ARGUMENT = 1,
  FINPREF_E_DOMAIN = 2,
  FINPREF_E_VARIANT = 3,
  FINPREF_E_KIND_MISMATCH = 4,
  FINPREF_E_IO = 5,
  FINPREF_E_FORMAT = 6,
  FINPREF_E_CONFIG = 7,
  FINPREF_E_TRANSPORT = 8,
  FINPREF_E_ENDPOINT = 9,
  FINPREF_E_PROTOCOL = 10,
  FINPREF_E_FIXTURE_MISS = 11,
  FINPREF_E_EMPTY_INPUT = 12,
  FINPREF_E_PARSE_QUALITY = 13,
  FINPREF_E_ANALYSIS = 14,
  FINPREF_E_STAGE_DEPENDENCY = 15,
  FINPREF_E_INTEGRITY = 16,
  FINPREF_E_INTERNAL = 99
} finpref_status;

typedef struct finpref_survey finpref_survey;
typedef struct finpref_trials finpref_trials;
typedef struct finpref_profiles finpref_profiles;

FINPREF_API const char* finpref_version(void);
FINPREF_API const char* finpref_last_error(void);
FINPREF_API const char* finpref_status_name(finpref_status status);
/* Process exit code for a status: 0 ok, 2 config, 3 transport, 4 parse quality, 5 analysis, 1 other. */
FINPREF_API int finpref_exit_code(finpref_status status);
FINPREF_API void finpref_string_free(char* s);

/* ---- survey ---- */
FINPREF_API finpref_status finpref_survey_canonical(finpref_survey** out);
FINPREF_API finpref_status finpref_survey_load(const char* path, finpref_survey** out);
FINPREF_API finpref_status finpref_survey_save(const finpref_survey* survey, const char* path);
FINPREF_API size_t finpref_survey_count(const finpref_survey* survey);
FINPREF_API finpref_status finpref_survey_render(const finpref_survey* survey, int question_id,
                                                 int include_preamble, char** out);
FINPREF_API finpref_status finpref_survey_expected_value(const finpref_survey* survey, int question_id,
                                                         double* out);
FINPREF_API void finpref_survey_free(finpref_survey* survey);

/* ---- trials ---- */
/* config_json: a run configuration document. survey may be NULL for the canonical survey. */
FINPREF_API finpref_status finpref_survey_run(const char* config_json, const finpref_survey* survey,
                                              finpref_trials** out);
/* Replays recorded answers; config_json may be NULL. */
FINPREF_API finpref_status finpref_survey_replay(const char* fixture_path, const char* config_json,
                                                 const finpref_survey* survey, finpref_trials** out);
/* path may be a JSONL file or a directory whose *.jsonl files are loaded in name order. */
FINPREF_API finpref_status finpref_trials_load(const char* path, finpref_trials** out);
FINPREF_API finpref_status finpref_trials_save(const finpref_trials* trials, const char* path);
FINPREF_API size_t finpref_trials_count(const finpref_trials* trials);
/* Run id of the first record, or "" when empty. */
FINPREF_API const char* finpref_trials_run_id(const finpref_trials* trials);
/* Re-parses raw responses in place and returns the quality summary as JSON. */
FINPREF_API finpref_status finpref_trials_parse(finpref_trials* trials, const finpref_survey* survey,
                                                char** quality_json);
FINPREF_API void finpref_trials_free(finpref_trials* trials);

/* ---- answers ---- */
/* Parses one free-text answer for a question; writes the status name and the value. */
FINPREF_API finpref_status finpref_parse_answer(const finpref_survey* survey, int question_id,
                                                const char* text, char** parse_status, double* value);

/* ---- profiles ---- */
FINPREF_API finpref_status finpref_profiles_aggregate(const finpref_trials* trials, finpref_profiles** out);
FINPREF_API finpref_status finpref_profiles_load_csv(const char* path, finpref_profiles** out);
FINPREF_API finpref_status finpref_profiles_save_csv(const finpref_profiles* profiles, const char* path);
/* Appends the subjects of `other` to `into`; duplicate ids are an error. */
FINPREF_API finpref_status finpref_profiles_merge(finpref_profiles* into, const finpref_profiles* other);
FINPREF_API size_t finpref_profiles_count(const finpref_profiles* profiles);
FINPREF_API const char* finpref_profiles_subject_id(const finpref_profiles* profiles, size_t index);
/* Question values 1..14 for one subject; NaN marks a missing answer. */
FINPREF_API finpref_status finpref_profiles_values(const finpref_profiles* profiles, size_t index,
                                                   double out[14]);
FINPREF_API void finpref_profiles_free(finpref_profiles* profiles);

/* ---- metrics ---- */
/* Output pointers of finpref_time_preference may be NULL when a value is not needed. */
FINPREF_API finpref_status finpref_time_preference(double x, double y, double* beta, double* delta,
                                                   int* present_biased, int* normative_violation);
FINPREF_API finpref_status finpref_loss_aversion(double win_required, double fixed_loss, double* lambda);
FINPREF_API finpref_status finpref_stats_write(const finpref_profiles* profiles, const char* out_csv);
FINPREF_API finpref_status finpref_metrics_write(const finpref_profiles* profiles, double epsilon,
                                                 const char* out_csv);
/* by: "beta" or "delta". */
FINPREF_API finpref_status finpref_metrics_rank(const finpref_profiles* profiles, const char* by,
                                                const char* out_csv);

/* ---- analysis (options_json may be NULL for defaults) ---- */
FINPREF_API finpref_status finpref_analyze_cluster(const finpref_profiles* profiles, const char* options_json,
                                                   const char* out_json);
FINPREF_API finpref_status finpref_analyze_pca(const finpref_profiles* profiles, const char* options_json,
                                               const char* out_dir);
FINPREF_API finpref_status finpref_analyze_kmeans(const finpref_profiles* profiles, const char* options_json,
                                                  const char* out_csv);

/* ---- synthetic agents ---- */
FINPREF_API finpref_status finpref_simulate(const char* spec_json, int n, int trials, uint64_t seed,
                                            finpref_profiles** out);

/* ---- pipeline ---- */
FINPREF_API finpref_status finpref_pipeline(const char* config_json);
FINPREF_API finpref_status finpref_report(const char* out_dir);
/* Writes a JSON verification summary; returns FINPREF_E_INTEGRITY when any artifact fails. */
FINPREF_API finpref_status finpref_manifest_verify(const char* out_dir, char** summary_json);

#ifdef __cplusplus
}
#endif

#endif /* FINPREF_FINPREF_H */
