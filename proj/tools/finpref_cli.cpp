// SPDX-License-Identifier: Apache-2.0
//
// finpref command-line driver. Links only the C API.
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "finpref/finpref.h"
#include "json.hpp"

using nlohmann::json;

namespace {

struct Failure {
  finpref_status status;
};

void check(finpref_status st) {
  if (st != FINPREF_OK) throw Failure{st};
}

struct SurveyDel {
  void operator()(finpref_survey* p) const { finpref_survey_free(p); }
};
struct TrialsDel {
  void operator()(finpref_trials* p) const { finpref_trials_free(p); }
};
struct ProfilesDel {
  void operator()(finpref_profiles* p) const { finpref_profiles_free(p); }
};
using Survey = std::unique_ptr<finpref_survey, SurveyDel>;
using Trials = std::unique_ptr<finpref_trials, TrialsDel>;
using Profiles = std::unique_ptr<finpref_profiles, ProfilesDel>;

std::string take(char* s) {
  std::string out = s ? s : "";
  finpref_string_free(s);
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::cerr << "finpref: cannot read " << path << "\n";
    throw Failure{FINPREF_E_CONFIG};
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    std::cerr << "finpref: cannot write " << path << "\n";
    throw Failure{FINPREF_E_IO};
  }
  out << text;
}

// Options shared by every command that consumes a run configuration.
// Unset optionals leave the config-file value (or the library default) alone.
struct Overrides {
  std::string config_path;
  std::optional<std::string> backend, fixture, survey, out_dir, human_csv, runs_dir;
  std::optional<int> trials, parallelism;
  std::optional<double> temperature;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> metric;
  std::vector<std::string> linkages;
  std::optional<int> k, components;
  std::optional<std::uint64_t> analysis_seed;
  std::optional<double> epsilon, min_usable;
  bool standardize = false;
  bool impute = false;

  json document() const {
    json j = json::object();
    if (!config_path.empty()) {
      try {
        j = json::parse(read_file(config_path));
      } catch (const json::exception& e) {
        std::cerr << "finpref: " << config_path << ": " << e.what() << "\n";
        throw Failure{FINPREF_E_CONFIG};
      }
    }
    if (backend) j["backend"] = *backend;
    if (fixture) j["fixture"] = *fixture;
    if (survey) j["survey"] = *survey;
    if (trials) j["trials"] = *trials;
    if (parallelism) j["parallelism"] = *parallelism;
    if (seed) j["seed"] = *seed;
    if (temperature) {
      j["temperature"] = *temperature;
      if (j.contains("endpoints"))
        for (auto& e : j["endpoints"]) e["temperature"] = *temperature;
    }
    if (out_dir) j["paths"]["out_dir"] = *out_dir;
    if (human_csv) j["paths"]["human_csv"] = *human_csv;
    if (runs_dir) j["paths"]["runs_dir"] = *runs_dir;
    json& a = j["analysis"];
    if (a.is_null()) a = json::object();
    if (metric) a["metric"] = *metric;
    if (!linkages.empty()) a["linkages"] = linkages;
    if (k) a["k"] = *k;
    if (components) a["components"] = *components;
    if (analysis_seed) a["seed"] = *analysis_seed;
    if (epsilon) a["epsilon"] = *epsilon;
    if (min_usable) a["min_usable_fraction"] = *min_usable;
    if (standardize) a["standardize_for_clustering"] = true;
    if (impute) a["impute_median"] = true;
    return j;
  }

  std::string config_json() const { return document().dump(); }
  std::string analysis_json() const { return document()["analysis"].dump(); }
};

void add_run_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path, "Run configuration file (JSON)");
  cmd->add_option("--backend", o.backend, "http, replay or synthetic");
  cmd->add_option("--survey", o.survey, "Alternative survey file");
  cmd->add_option("--trials", o.trials, "Trials per endpoint");
  cmd->add_option("--temperature", o.temperature, "Sampling temperature for every endpoint");
  cmd->add_option("--parallelism", o.parallelism, "Concurrent sessions");
  cmd->add_option("--seed", o.seed, "Run seed");
}

void add_analysis_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--metric", o.metric, "correlation or euclidean");
  cmd->add_option("--linkages,--linkage", o.linkages, "Linkage methods to compare (single,complete,average)")
      ->delimiter(',');
  cmd->add_option("--k", o.k, "Number of clusters");
  cmd->add_option("--components", o.components, "Principal components to retain");
  cmd->add_option("--analysis-seed", o.analysis_seed, "K-means seed");
  // On `pipeline`, --seed already names the run seed.
  if (!cmd->get_option_no_throw("--seed"))
    cmd->add_option("--seed", o.analysis_seed, "K-means seed (alias)");
  cmd->add_option("--epsilon", o.epsilon, "Risk-neutral band half-width");
  cmd->add_option("--min-usable", o.min_usable, "Minimum usable-trial fraction");
  cmd->add_flag("--standardize", o.standardize, "Z-standardize profiles before clustering");
  cmd->add_flag("--impute-median", o.impute, "Impute missing items with column medians");
}

Survey open_survey(const std::optional<std::string>& path) {
  finpref_survey* s = nullptr;
  check(path ? finpref_survey_load(path->c_str(), &s) : finpref_survey_canonical(&s));
  return Survey(s);
}

Profiles open_profiles(const std::string& path) {
  finpref_profiles* p = nullptr;
  check(finpref_profiles_load_csv(path.c_str(), &p));
  return Profiles(p);
}

// A directory target (existing, trailing slash, or no extension) receives <run id>.jsonl.
std::string trials_output_path(const Overrides& o, std::string out, const finpref_trials* trials) {
  if (out.empty()) {
    const json doc = o.document();
    out = doc.contains("paths") ? doc["paths"].value("runs_dir", "runs") : "runs";
  }
  namespace fs = std::filesystem;
  const fs::path p(out);
  if (fs::is_directory(p) || out.back() == '/' || !p.has_extension()) {
    std::error_code ec;
    fs::create_directories(p, ec);
    const char* id = finpref_trials_run_id(trials);
    return (p / (std::string(id && *id ? id : "trials") + ".jsonl")).string();
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Financial-preference surveys for language models and their analysis"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(finpref_version()));

  Overrides o;
  std::string out, in, profiles_path, trials_path, human, spec_path, by = "beta", quality_out;
  std::optional<std::string> fixture_flag;
  int n = 50;
  int sim_trials = 0;
  std::uint64_t sim_seed = 0;
  int question = 0;

  auto* survey = app.add_subcommand("survey", "Run, replay or inspect the survey");
  survey->require_subcommand(1);
  auto* run = survey->add_subcommand("run", "Elicit answers from configured endpoints");
  add_run_flags(run, o);
  run->add_option("--out", out, "Trial records file, or a directory for runs/<run id>.jsonl");
  auto* replay = survey->add_subcommand("replay", "Re-run the protocol from recorded answers");
  add_run_flags(replay, o);
  replay->add_option("--fixture", o.fixture, "Recorded answers")->required();
  replay->add_option("--out", out, "Trial records file, or a directory for runs/<run id>.jsonl");
  auto* show = survey->add_subcommand("show", "Print rendered prompts");
  show->add_option("--survey", o.survey, "Alternative survey file");
  show->add_option("--question", question, "Only this question");
  auto* exp = survey->add_subcommand("export", "Write the survey definition");
  exp->add_option("--survey", o.survey, "Alternative survey file");
  exp->add_option("--out", out, "Output file")->required();

  auto* parse = app.add_subcommand("parse", "Re-parse raw responses and report parse quality");
  parse->add_option("--in,--trials", trials_path, "Trial records (JSONL)")->required();
  parse->add_option("--survey", o.survey, "Alternative survey file");
  parse->add_option("--out", out, "Re-parsed records output (default: in place)");
  parse->add_option("--report,--quality", quality_out, "Quality summary output (JSON)");
  parse->add_option("--min-usable", o.min_usable, "Minimum usable-trial fraction (default 0.8)");

  auto* aggregate = app.add_subcommand("aggregate", "Median-aggregate trial records into profiles");
  aggregate->add_option("--runs,--trials", trials_path, "Trial records (JSONL file or directory of them)")->required();
  aggregate->add_option("--human", human, "Human country profiles CSV to merge");
  aggregate->add_option("--out", out, "Profiles CSV output")->required();

  auto* stats = app.add_subcommand("stats", "Descriptive statistics per question");
  stats->add_option("--profiles", profiles_path, "Profiles CSV")->required();
  stats->add_option("--out", out, "Output CSV")->required();

  auto* metrics = app.add_subcommand("metrics", "Preference parameters per subject");
  metrics->add_option("--profiles", profiles_path, "Profiles CSV")->required();
  metrics->add_option("--out", out, "Output CSV")->required();
  metrics->add_option("--epsilon", o.epsilon, "Risk-neutral band half-width");
  auto* rank = metrics->add_subcommand("rank", "Rank subjects by beta or delta");
  rank->add_option("--by", by, "beta or delta")->check(CLI::IsMember({"beta", "delta"}));
  rank->fallthrough();  // --profiles/--out may follow "rank"

  auto* analyze = app.add_subcommand("analyze", "Multivariate analysis of profiles");
  analyze->require_subcommand(1);
  auto* cluster = analyze->add_subcommand("cluster", "Hierarchical clustering with silhouette selection");
  auto* pca = analyze->add_subcommand("pca", "Principal component analysis");
  auto* kmeans = analyze->add_subcommand("kmeans", "K-means on principal component scores");
  for (auto* cmd : {cluster, pca, kmeans}) {
    cmd->add_option("--config", o.config_path, "Configuration file providing analysis defaults");
    cmd->add_option("--profiles", profiles_path, "Profiles CSV (default profiles.csv)");
    add_analysis_flags(cmd, o);
  }
  cluster->add_option("--out", out, "Dendrogram JSON output (default dendro.json)");
  pca->add_option("--out,--out-dir", out, "Output directory (default pca)");
  kmeans->add_option("--out", out, "Assignments CSV output (default kmeans.csv)");

  auto* simulate = app.add_subcommand("simulate", "Generate synthetic agent profiles");
  simulate->add_option("--spec", spec_path, "Population specification (JSON)")->required();
  simulate->add_option("--n", n, "Number of agents");
  simulate->add_option("--trials", sim_trials, "Trials per agent (overrides the spec)");
  simulate->add_option("--seed", sim_seed, "Seed");
  simulate->add_option("--out", out, "Profiles CSV output")->required();

  auto* pipeline = app.add_subcommand("pipeline", "Run every stage end to end");
  add_run_flags(pipeline, o);
  add_analysis_flags(pipeline, o);
  pipeline->add_option("--fixture", o.fixture, "Recorded answers for the replay backend");
  pipeline->add_option("--human-csv", o.human_csv, "Human country profiles CSV");
  pipeline->add_option("--out-dir", o.out_dir, "Artifact directory");
  pipeline->add_option("--runs-dir", o.runs_dir, "Run log directory");

  auto* report = app.add_subcommand("report", "Rebuild report.json from pipeline artifacts");
  report->add_option("--out-dir", out, "Artifact directory")->required();

  auto* verify = app.add_subcommand("verify", "Check artifacts against the manifest hashes");
  verify->add_option("--out-dir", out, "Artifact directory")->required();

  CLI11_PARSE(app, argc, argv);

  if (analyze->parsed() && profiles_path.empty()) profiles_path = "profiles.csv";

  try {
    if (run->parsed() || replay->parsed()) {
      Survey s = open_survey(o.survey);
      finpref_trials* t = nullptr;
      if (replay->parsed()) {
        check(finpref_survey_replay(o.fixture->c_str(), o.config_json().c_str(), s.get(), &t));
      } else {
        check(finpref_survey_run(o.config_json().c_str(), s.get(), &t));
      }
      Trials trials(t);
      out = trials_output_path(o, out, trials.get());
      check(finpref_trials_save(trials.get(), out.c_str()));
      std::cout << "wrote " << finpref_trials_count(trials.get()) << " trial records to " << out << "\n";
    } else if (show->parsed()) {
      Survey s = open_survey(o.survey);
      const int count = static_cast<int>(finpref_survey_count(s.get()));
      for (int q = 1; q <= count; ++q) {
        if (question && q != question) continue;
        char* text = nullptr;
        check(finpref_survey_render(s.get(), q, q == 1, &text));
        std::cout << "--- Q" << q << " ---\n" << take(text) << "\n";
      }
    } else if (exp->parsed()) {
      Survey s = open_survey(o.survey);
      check(finpref_survey_save(s.get(), out.c_str()));
    } else if (parse->parsed()) {
      Survey s = open_survey(o.survey);
      finpref_trials* t = nullptr;
      check(finpref_trials_load(trials_path.c_str(), &t));
      Trials trials(t);
      char* qj = nullptr;
      check(finpref_trials_parse(trials.get(), s.get(), &qj));
      const std::string quality = take(qj);
      check(finpref_trials_save(trials.get(), (out.empty() ? trials_path : out).c_str()));
      if (!quality_out.empty()) write_file(quality_out, quality);
      std::cout << quality;
      const double fraction = json::parse(quality).value("usable_fraction", 0.0);
      const double minimum = o.min_usable.value_or(0.8);
      if (fraction < minimum) {
        std::cerr << "finpref: usable fraction " << fraction << " is below the minimum " << minimum << "\n";
        return finpref_exit_code(FINPREF_E_PARSE_QUALITY);
      }
    } else if (aggregate->parsed()) {
      finpref_trials* t = nullptr;
      check(finpref_trials_load(trials_path.c_str(), &t));
      Trials trials(t);
      finpref_profiles* p = nullptr;
      check(finpref_profiles_aggregate(trials.get(), &p));
      Profiles profiles(p);
      if (!human.empty()) {
        Profiles h = open_profiles(human);
        check(finpref_profiles_merge(profiles.get(), h.get()));
      }
      check(finpref_profiles_save_csv(profiles.get(), out.c_str()));
      std::cout << "wrote " << finpref_profiles_count(profiles.get()) << " profiles to " << out << "\n";
    } else if (stats->parsed()) {
      Profiles p = open_profiles(profiles_path);
      check(finpref_stats_write(p.get(), out.c_str()));
    } else if (metrics->parsed()) {
      Profiles p = open_profiles(profiles_path);
      if (rank->parsed())
        check(finpref_metrics_rank(p.get(), by.c_str(), out.c_str()));
      else
        check(finpref_metrics_write(p.get(), o.epsilon.value_or(0.05), out.c_str()));
    } else if (cluster->parsed()) {
      if (out.empty()) out = "dendro.json";
      Profiles p = open_profiles(profiles_path);
      check(finpref_analyze_cluster(p.get(), o.analysis_json().c_str(), out.c_str()));
    } else if (pca->parsed()) {
      if (out.empty()) out = "pca";
      Profiles p = open_profiles(profiles_path);
      check(finpref_analyze_pca(p.get(), o.analysis_json().c_str(), out.c_str()));
    } else if (kmeans->parsed()) {
      if (out.empty()) out = "kmeans.csv";
      Profiles p = open_profiles(profiles_path);
      check(finpref_analyze_kmeans(p.get(), o.analysis_json().c_str(), out.c_str()));
    } else if (simulate->parsed()) {
      finpref_profiles* p = nullptr;
      check(finpref_simulate(read_file(spec_path).c_str(), n, sim_trials, sim_seed, &p));
      Profiles profiles(p);
      check(finpref_profiles_save_csv(profiles.get(), out.c_str()));
      std::cout << "wrote " << finpref_profiles_count(profiles.get()) << " profiles to " << out << "\n";
    } else if (pipeline->parsed()) {
      check(finpref_pipeline(o.config_json().c_str()));
      const json doc = o.document();
      std::cout << "artifacts written to "
                << (doc.contains("paths") ? doc["paths"].value("out_dir", "out") : std::string("out")) << "\n";
    } else if (report->parsed()) {
      check(finpref_report(out.c_str()));
    } else if (verify->parsed()) {
      char* summary = nullptr;
      const finpref_status st = finpref_manifest_verify(out.c_str(), &summary);
      std::cout << take(summary);
      check(st);
    }
  } catch (const Failure& f) {
    const char* msg = finpref_last_error();
    std::cerr << "finpref: " << finpref_status_name(f.status) << ": " << (msg && *msg ? msg : "failed") << "\n";
    return finpref_exit_code(f.status);
  }
  return 0;
}
