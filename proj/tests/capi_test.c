/* SPDX-License-Identifier: Apache-2.0 */
/* Exercises the shared library through its C header only. */
#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "finpref/finpref.h"

static int failures = 0;

#define EXPECT(cond)                                                   \
  do {                                                                 \
    if (!(cond)) {                                                     \
      fprintf(stderr, "%s:%d: expectation failed: %s\n", __FILE__,     \
              __LINE__, #cond);                                        \
      ++failures;                                                      \
    }                                                                  \
  } while (0)

#define EXPECT_STATUS(call, want)                                      \
  do {                                                                 \
    finpref_status got_ = (call);                                      \
    if (got_ != (want)) {                                              \
      fprintf(stderr, "%s:%d: %s returned %s (%s), wanted %s\n",       \
              __FILE__, __LINE__, #call, finpref_status_name(got_),    \
              finpref_last_error(), finpref_status_name(want));        \
      ++failures;                                                      \
    }                                                                  \
  } while (0)

static char scratch[4096];

static const char* tmp_path(const char* name) {
  const char* base = getenv("TMPDIR");
  snprintf(scratch, sizeof scratch, "%s/finpref_capi_%s", base ? base : "/tmp", name);
  return scratch;
}

static void test_status_helpers(void) {
  EXPECT(strcmp(finpref_version(), "0.1.0") == 0);
  EXPECT(strcmp(finpref_status_name(FINPREF_OK), "ok") == 0);
  EXPECT(strcmp(finpref_status_name(FINPREF_E_CONFIG), "config") == 0);
  EXPECT(finpref_exit_code(FINPREF_OK) == 0);
  EXPECT(finpref_exit_code(FINPREF_E_CONFIG) == 2);
  EXPECT(finpref_exit_code(FINPREF_E_TRANSPORT) == 3);
  EXPECT(finpref_exit_code(FINPREF_E_ENDPOINT) == 3);
  EXPECT(finpref_exit_code(FINPREF_E_PROTOCOL) == 3);
  EXPECT(finpref_exit_code(FINPREF_E_PARSE_QUALITY) == 4);
  EXPECT(finpref_exit_code(FINPREF_E_ANALYSIS) == 5);
  EXPECT(finpref_exit_code(FINPREF_E_INTEGRITY) == 1);
  finpref_string_free(NULL);
}

static void test_metrics(void) {
  double beta = 0, delta = 0, lambda = 0;
  int pb = 0, nv = 0;
  EXPECT_STATUS(finpref_time_preference(200, 1000, &beta, &delta, &pb, &nv), FINPREF_OK);
  EXPECT(fabs(delta - 0.836255) < 1e-4 && fabs(beta - 0.597903) < 1e-4 && pb == 1 && nv == 0);
  EXPECT_STATUS(finpref_time_preference(-1, 1000, &beta, &delta, &pb, &nv), FINPREF_E_DOMAIN);
  EXPECT(strlen(finpref_last_error()) > 0);
  delta = 0;
  EXPECT_STATUS(finpref_time_preference(105, 259, NULL, &delta, NULL, &nv), FINPREF_OK);
  EXPECT(fabs(delta - 0.904549) < 1e-4 && nv == 1);
  EXPECT_STATUS(finpref_loss_aversion(50, 25, NULL), FINPREF_E_INVALID_ARGUMENT);
  EXPECT_STATUS(finpref_loss_aversion(175, 100, &lambda), FINPREF_OK);
  EXPECT(lambda == 1.75);
  EXPECT_STATUS(finpref_loss_aversion(175, 0, &lambda), FINPREF_E_DOMAIN);
}

static void test_survey(void) {
  finpref_survey* s = NULL;
  char* text = NULL;
  double ev = 0;
  EXPECT_STATUS(finpref_survey_canonical(&s), FINPREF_OK);
  EXPECT(finpref_survey_count(s) == 14);
  EXPECT_STATUS(finpref_survey_render(s, 2, 1, &text), FINPREF_OK);
  EXPECT(text && strlen(text) > 0);
  finpref_string_free(text);
  EXPECT_STATUS(finpref_survey_render(s, 15, 0, &text), FINPREF_E_INVALID_ARGUMENT);
  EXPECT_STATUS(finpref_survey_expected_value(s, 8, &ev), FINPREF_OK);
  EXPECT(ev == 6000.0);
  EXPECT_STATUS(finpref_survey_expected_value(s, 11, &ev), FINPREF_OK);
  EXPECT(ev == -48.0);
  EXPECT_STATUS(finpref_survey_expected_value(s, 2, &ev), FINPREF_E_VARIANT);

  EXPECT_STATUS(finpref_survey_save(s, tmp_path("survey.json")), FINPREF_OK);
  finpref_survey* loaded = NULL;
  EXPECT_STATUS(finpref_survey_load(tmp_path("survey.json"), &loaded), FINPREF_OK);
  EXPECT(finpref_survey_count(loaded) == 14);
  finpref_survey_free(loaded);
  EXPECT_STATUS(finpref_survey_load("/nonexistent/survey.json", &loaded), FINPREF_E_IO);

  char* status = NULL;
  double value = 0;
  EXPECT_STATUS(finpref_parse_answer(s, 8, "I'd pay $5,750.", &status, &value), FINPREF_OK);
  EXPECT(strcmp(status, "ok") == 0 && value == 5750.0);
  finpref_string_free(status);
  EXPECT_STATUS(finpref_parse_answer(NULL, 1, "Option B", &status, &value), FINPREF_OK);
  EXPECT(value == 1.0);
  finpref_string_free(status);
  EXPECT_STATUS(finpref_parse_answer(s, 1, "A or B", &status, &value), FINPREF_OK);
  EXPECT(strcmp(status, "ambiguous") == 0 && isnan(value));
  finpref_string_free(status);
  finpref_survey_free(s);
  finpref_survey_free(NULL);
}

static void test_replay_to_analysis(const char* fixtures) {
  char fixture[2048], countries[2048];
  snprintf(fixture, sizeof fixture, "%s/replay.json", fixtures);
  snprintf(countries, sizeof countries, "%s/countries.csv", fixtures);

  finpref_trials* trials = NULL;
  EXPECT_STATUS(finpref_survey_replay(fixture, NULL, NULL, &trials), FINPREF_OK);
  EXPECT(finpref_trials_count(trials) == 210);
  EXPECT(strlen(finpref_trials_run_id(trials)) == 36);

  char* quality = NULL;
  EXPECT_STATUS(finpref_trials_parse(trials, NULL, &quality), FINPREF_OK);
  EXPECT(quality && strstr(quality, "\"usable\": 209"));
  finpref_string_free(quality);

  EXPECT_STATUS(finpref_trials_save(trials, tmp_path("trials.jsonl")), FINPREF_OK);
  finpref_trials* reloaded = NULL;
  EXPECT_STATUS(finpref_trials_load(tmp_path("trials.jsonl"), &reloaded), FINPREF_OK);
  EXPECT(finpref_trials_count(reloaded) == 210);
  finpref_trials_free(reloaded);

  finpref_profiles* models = NULL;
  finpref_profiles* humans = NULL;
  EXPECT_STATUS(finpref_profiles_aggregate(trials, &models), FINPREF_OK);
  EXPECT(finpref_profiles_count(models) == 3);
  EXPECT(strcmp(finpref_profiles_subject_id(models, 0), "model-alpha") == 0);
  EXPECT(finpref_profiles_subject_id(models, 99) == NULL);
  EXPECT_STATUS(finpref_profiles_load_csv(countries, &humans), FINPREF_OK);
  EXPECT_STATUS(finpref_profiles_merge(models, humans), FINPREF_OK);
  EXPECT(finpref_profiles_count(models) == 6);
  EXPECT_STATUS(finpref_profiles_merge(models, humans), FINPREF_E_FORMAT);
  EXPECT(finpref_profiles_count(models) == 6);

  double values[14];
  EXPECT_STATUS(finpref_profiles_values(models, 3, values), FINPREF_OK);
  EXPECT(values[1] == 150.0);
  EXPECT_STATUS(finpref_profiles_values(models, 6, values), FINPREF_E_INVALID_ARGUMENT);

  EXPECT_STATUS(finpref_stats_write(models, tmp_path("table1.csv")), FINPREF_OK);
  EXPECT_STATUS(finpref_metrics_write(models, 0.05, tmp_path("params.csv")), FINPREF_OK);
  EXPECT_STATUS(finpref_metrics_rank(models, "delta", tmp_path("rank.csv")), FINPREF_OK);
  EXPECT_STATUS(finpref_metrics_rank(models, "gamma", tmp_path("rank.csv")), FINPREF_E_CONFIG);
  EXPECT_STATUS(finpref_analyze_cluster(models, NULL, tmp_path("cluster/dendro.json")), FINPREF_OK);
  EXPECT_STATUS(finpref_analyze_cluster(models, "{\"k\": 2, \"linkages\": [\"average\"]}",
                                        tmp_path("cluster/dendro2.json")),
                FINPREF_OK);
  EXPECT_STATUS(finpref_analyze_cluster(models, "{\"k\": 9}", tmp_path("cluster/dendro3.json")), FINPREF_E_ANALYSIS);
  EXPECT_STATUS(finpref_analyze_cluster(models, "{\"linkages\": [\"ward\"]}", tmp_path("x.json")), FINPREF_E_CONFIG);
  EXPECT_STATUS(finpref_analyze_pca(models, "{\"components\": 2}", tmp_path("pca")), FINPREF_OK);
  EXPECT_STATUS(finpref_analyze_kmeans(models, NULL, tmp_path("kmeans.csv")), FINPREF_OK);

  EXPECT_STATUS(finpref_profiles_save_csv(models, tmp_path("profiles.csv")), FINPREF_OK);
  finpref_profiles_free(humans);
  finpref_profiles_free(models);
  finpref_trials_free(trials);
}

static void test_simulate(void) {
  finpref_profiles* p = NULL;
  EXPECT_STATUS(finpref_simulate("{\"components\": [{\"label\": \"agent\", \"lambda\": 2}]}", 5, 3, 7, &p),
                FINPREF_OK);
  EXPECT(finpref_profiles_count(p) == 5);
  EXPECT(strcmp(finpref_profiles_subject_id(p, 0), "agent-0001") == 0);
  double v[14];
  EXPECT_STATUS(finpref_profiles_values(p, 0, v), FINPREF_OK);
  EXPECT(v[12] == 50.0 && v[13] == 200.0);
  finpref_profiles_free(p);
  EXPECT_STATUS(finpref_simulate("{}", 5, 1, 7, &p), FINPREF_E_CONFIG);
  EXPECT_STATUS(finpref_simulate("{\"components\": [{}]}", 0, 1, 7, &p), FINPREF_E_DOMAIN);
}

static void test_pipeline(const char* fixtures) {
  char config[8192];
  char out_dir[2048];
  snprintf(out_dir, sizeof out_dir, "%s", tmp_path("pipeline"));
  snprintf(config, sizeof config,
           "{\"backend\": \"replay\", \"fixture\": \"%s/replay.json\", \"parallelism\": 1,"
           " \"paths\": {\"out_dir\": \"%s\", \"human_csv\": \"%s/countries.csv\"}}",
           fixtures, out_dir, fixtures);
  EXPECT_STATUS(finpref_pipeline(config), FINPREF_OK);
  EXPECT_STATUS(finpref_report(out_dir), FINPREF_OK);
  char* summary = NULL;
  EXPECT_STATUS(finpref_manifest_verify(out_dir, &summary), FINPREF_OK);
  EXPECT(summary && strstr(summary, "\"ok\": true"));
  finpref_string_free(summary);

  char target[4096];
  snprintf(target, sizeof target, "%s/params.csv", out_dir);
  FILE* f = fopen(target, "a");
  if (f) {
    fputs("tampered\n", f);
    fclose(f);
  }
  EXPECT_STATUS(finpref_manifest_verify(out_dir, &summary), FINPREF_E_INTEGRITY);
  EXPECT(strstr(finpref_last_error(), "params.csv") != NULL);
  finpref_string_free(summary);

  EXPECT_STATUS(finpref_pipeline("{\"config_version\": 9}"), FINPREF_E_CONFIG);
  EXPECT_STATUS(finpref_pipeline(NULL), FINPREF_E_INVALID_ARGUMENT);
  EXPECT_STATUS(finpref_report("/nonexistent/out"), FINPREF_E_STAGE_DEPENDENCY);
}

int main(int argc, char** argv) {
  const char* fixtures = argc > 1 ? argv[1] : "tests/fixtures";
  test_status_helpers();
  test_metrics();
  test_survey();
  test_replay_to_analysis(fixtures);
  test_simulate();
  test_pipeline(fixtures);
  if (failures) {
    fprintf(stderr, "%d expectation(s) failed\n", failures);
    return 1;
  }
  puts("capi: all expectations passed");
  return 0;
}
