// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "finpref/pipeline.hpp"
#include "json.hpp"
#include "test_util.hpp"

using namespace finpref;
using testutil::kind_of;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("finpref_pipeline_" + name);
  fs::remove_all(p);
  return p;
}

RunConfig replay_config(const fs::path& out) {
  RunConfig c;
  c.backend = "replay";
  c.fixture = testutil::fixture("replay.json");
  c.paths.human_csv = testutil::fixture("countries.csv");
  c.paths.out_dir = out.string();
  c.parallelism = 2;
  return c;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = read_text_file(e.path().string());
  return out;
}

std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

struct EpochGuard {
  EpochGuard() { ::setenv("SOURCE_DATE_EPOCH", "1700000000", 1); }
  ~EpochGuard() { ::unsetenv("SOURCE_DATE_EPOCH"); }
};

}  // namespace

TEST_SUITE("pipeline") {
  TEST_CASE("config parsing fills defaults") {
    const RunConfig c = config_from_json(R"({
      "config_version": 1, "backend": "synthetic", "trials": 10, "temperature": 0.3,
      "paths": {"out_dir": "o"},
      "analysis": {"metric": "euclidean", "linkages": ["average"], "k": 2},
      "endpoints": [{"name": "a", "agent": {"beta": 0.8}}, {"name": "b", "temperature": 1.1}]
    })");
    CHECK(c.backend == "synthetic");
    CHECK(c.trials == 10);
    CHECK(c.paths.out_dir == "o");
    CHECK(c.paths.runs_dir == "runs");
    CHECK(c.analysis.metric == Metric::Euclidean);
    CHECK(c.analysis.linkages == std::vector<Linkage>{Linkage::Average});
    CHECK(c.analysis.components == 3);
    REQUIRE(c.endpoints.size() == 2);
    CHECK(c.endpoints[0].temperature == 0.3);
    CHECK(c.endpoints[1].temperature == 1.1);
    REQUIRE(c.endpoints[0].agent.has_value());
    CHECK(c.endpoints[0].agent->beta == 0.8);

    const RunConfig back = config_from_json(config_to_json(c));
    CHECK(config_to_json(back) == config_to_json(c));
  }

  TEST_CASE("config validation") {
    auto kind = [](const std::string& text) { return kind_of([&] { config_from_json(text); }); };
    CHECK(kind("{") == ErrorKind::Config);
    CHECK(kind(R"({"config_version": 2})") == ErrorKind::Config);
    CHECK(kind(R"({"backend": "carrier-pigeon"})") == ErrorKind::Config);
    CHECK(kind(R"({"backend": "replay"})") == ErrorKind::Config);
    CHECK(kind(R"({"trials": 0})") == ErrorKind::Config);
    CHECK(kind(R"({"parallelism": 0})") == ErrorKind::Config);
    CHECK(kind(R"({"temperature": 3})") == ErrorKind::Config);
    CHECK(kind(R"({"analysis": {"k": 0}})") == ErrorKind::Config);
    CHECK(kind(R"({"analysis": {"linkages": []}})") == ErrorKind::Config);
    CHECK(kind(R"({"analysis": {"linkages": ["ward"]}})") == ErrorKind::Config);
    CHECK(kind(R"({"analysis": {"min_usable_fraction": 1.5}})") == ErrorKind::Config);
    CHECK(kind(R"({"trials": "many"})") == ErrorKind::Config);
  }

  TEST_CASE("replay plans come from the fixture subjects") {
    const RunConfig c = replay_config(fresh_dir("plan"));
    const ReplayFixture f = ReplayFixture::load(c.fixture);
    const RunPlan plan = plan_from_config(c, &f);
    REQUIRE(plan.endpoints.size() == 3);
    CHECK(plan.endpoints[0].name == "model-alpha");
    CHECK(plan.trials_per_model == 5);
  }

  TEST_CASE("ranking") {
    const auto profiles = parse_profiles_csv(
        "subject_id,Q1,Q2,Q3,Q4,Q5,Q6,Q7,Q8,Q9,Q10,Q11,Q12,Q13,Q14\n"
        "b,1,200,1000,0,91,60,90,6000,10,240,48,60,25,100\n"
        "a,1,200,1000,0,91,60,90,6000,10,240,48,60,25,100\n"
        "c,1,105,259,0,91,60,90,6000,10,240,48,60,25,100\n"
        "d,1,,259,0,91,60,90,6000,10,240,48,60,25,100\n",
        "p");
    const auto reports = preference_reports(profiles, canonical_survey(), 0.05);
    const auto ranked = rank_subjects(profiles, reports, RankBy::Beta);
    REQUIRE(ranked.size() == 3);
    CHECK(ranked[0].subject_id == "c");
    CHECK(ranked[1].subject_id == "a");
    CHECK(ranked[2].subject_id == "b");
    CHECK(rank_csv(ranked, RankBy::Delta).rfind("rank,subject_id,kind,delta\n", 0) == 0);
    CHECK(kind_of([] { rank_by_from_string("gamma"); }) == ErrorKind::Config);
    const std::string csv = metrics_csv(profiles, reports);
    CHECK(csv.find("\nc,1.05287") != std::string::npos);
  }

  TEST_CASE("end-to-end replay run") {
    EpochGuard epoch;
    const fs::path out = fresh_dir("e2e");
    const RunConfig c = replay_config(out);
    run_pipeline(c);
    for (const char* f : {"manifest.json", "trials.jsonl", "quality.json", "profiles.csv", "profiles.csv.meta.json",
                          "table1.csv", "params.csv", "rank_beta.csv", "rank_delta.csv", "dendro.json",
                          "dendro.nwk", "silhouette.csv", "pca/scores.csv", "pca/loadings.csv",
                          "pca/contributions.csv", "pca/variance.csv", "kmeans.csv", "report.json"})
      CHECK_MESSAGE(fs::exists(out / f), f);

    const json manifest = json::parse(read_text_file((out / "manifest.json").string()));
    CHECK(manifest["tool"] == "finpref");
    CHECK(manifest["generated_at"] == "2023-11-14T22:13:20.000Z");
    std::vector<std::string> stages;
    for (const auto& s : manifest["stages"]) stages.push_back(s.is_string() ? s.get<std::string>() : s["name"].get<std::string>());
    CHECK(stages.back() == "report");
    CHECK(stages.front() == "elicit");
    CHECK(verify_manifest(out.string()).ok());
    CHECK(verify_manifest(out.string()).checked >= 18);

    const json report = json::parse(read_text_file((out / "report.json").string()));
    CHECK(report["subjects"] == 6);
    CHECK(report["nearest_neighbor"].size() == 3);
    CHECK(report["clusters"]["kmeans"]["k"] == 3);
    CHECK(load_trials((out / "trials.jsonl").string()).size() == 210);
  }

  TEST_CASE("replay runs are byte-identical") {
    EpochGuard epoch;
    const fs::path out = fresh_dir("determinism");
    const RunConfig c = replay_config(out);
    run_pipeline(c);
    const auto first = snapshot(out);
    fs::remove_all(out);
    run_pipeline(c);
    const auto second = snapshot(out);
    CHECK(first.size() == second.size());
    for (const auto& [name, bytes] : first) {
      REQUIRE_MESSAGE(second.count(name), name);
      CHECK_MESSAGE(second.at(name) == bytes, name);
    }
  }

  TEST_CASE("tampering is detected") {
    const fs::path out = fresh_dir("tamper");
    run_pipeline(replay_config(out));
    std::ofstream(out / "params.csv", std::ios::app) << "x\n";
    fs::remove(out / "kmeans.csv");
    const auto v = verify_manifest(out.string());
    CHECK_FALSE(v.ok());
    CHECK(v.problems.size() == 2);
    CHECK(kind_of([&] { write_report(out.string()); }) == ErrorKind::StageDependency);
    CHECK(kind_of([] { verify_manifest("/nonexistent/out"); }) == ErrorKind::StageDependency);
  }

  TEST_CASE("missing inputs are named") {
    RunConfig c = replay_config(fresh_dir("missing"));
    c.paths.human_csv = "/nonexistent/countries.csv";
    const std::string msg = message_of([&] { run_pipeline(c); });
    CHECK(msg.find("/nonexistent/countries.csv") != std::string::npos);
    CHECK(kind_of([&] { run_pipeline(c); }) == ErrorKind::Config);
    c = replay_config(fresh_dir("missing"));
    c.fixture = "/nonexistent/replay.json";
    CHECK(kind_of([&] { run_pipeline(c); }) != ErrorKind::InvalidArgument);
    CHECK(kind_of([] { write_report("/nonexistent/out"); }) == ErrorKind::StageDependency);
  }

  TEST_CASE("low parse quality stops the run") {
    const fs::path out = fresh_dir("quality");
    RunConfig c = replay_config(out);
    c.analysis.min_usable_fraction = 1.0;  // the fixture has one unusable answer
    const std::string msg = message_of([&] { run_pipeline(c); });
    CHECK(msg.rfind("stage parse:", 0) == 0);
    CHECK(kind_of([&] { run_pipeline(c); }) == ErrorKind::ParseQuality);
    CHECK(fs::exists(out / "quality.json"));
  }

  TEST_CASE("synthetic runs need no inputs beyond the config") {
    EpochGuard epoch;
    const fs::path out = fresh_dir("synthetic");
    const RunConfig c = config_from_json(R"({
      "backend": "synthetic", "trials": 5, "parallelism": 1,
      "paths": {"out_dir": ")" + out.string() + R"(", "human_csv": ")" + testutil::fixture("countries.csv") + R"("},
      "endpoints": [{"name": "p1", "agent": {"beta": 0.7, "delta": 0.95}},
                    {"name": "p2", "agent": {"beta": 1.0, "lambda": 2}},
                    {"name": "p3", "agent": {"risk_ce_ratio": 0.6, "noise_sd": 0.1, "seed": 4}}]
    })");
    run_pipeline(c);
    const auto profiles = load_profiles((out / "profiles.csv").string());
    REQUIRE(profiles.size() == 6);
    CHECK(profiles[0].kind == SubjectKind::Synthetic);
    CHECK(profiles[0].value(2) == doctest::Approx(100.0 / (0.7 * 0.95)).epsilon(1e-9));
  }

  TEST_CASE("too few subjects for clustering is an analysis error") {
    const auto one = parse_profiles_csv(
        "subject_id,Q1,Q2,Q3,Q4,Q5,Q6,Q7,Q8,Q9,Q10,Q11,Q12,Q13,Q14\n"
        "a,1,200,1000,0,91,60,90,6000,10,240,48,60,25,100\n",
        "p");
    CHECK(kind_of([&] { analyze_cluster(build_matrix(one), AnalysisOptions{}); }) == ErrorKind::Analysis);
  }

  TEST_CASE("sha256") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(kind_of([] { read_text_file("/nonexistent/file"); }) == ErrorKind::Io);
  }
}
