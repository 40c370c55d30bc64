// SPDX-License-Identifier: Apache-2.0
#include "finpref/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <openssl/evp.h>

#include "finpref/error.hpp"
#include "finpref/version.hpp"
#include "json.hpp"

namespace fs = std::filesystem;

namespace finpref {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Files and hashes

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot open '" + path + "' for writing");
  out << text;
  out.flush();
  if (!out) fail(ErrorKind::Io, "write failed for '" + path + "'");
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    fail(ErrorKind::Integrity, "SHA-256 computation failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

std::string sha256_file(const std::string& path) { return sha256_hex(read_text_file(path)); }

// ---------------------------------------------------------------------------
// Configuration

namespace {

AgentParams agent_from_json(const json& j) {
  AgentParams a;
  a.beta = j.value("beta", a.beta);
  a.delta_annual = j.value("delta", a.delta_annual);
  a.risk_ce_ratio = j.value("risk_ce_ratio", a.risk_ce_ratio);
  a.lambda = j.value("lambda", a.lambda);
  a.ambiguity_averse = j.value("ambiguity_averse", a.ambiguity_averse);
  a.noise_sd = j.value("noise_sd", a.noise_sd);
  a.seed = j.value("seed", a.seed);
  return a;
}

json agent_to_json(const AgentParams& a) {
  return {{"beta", a.beta},         {"delta", a.delta_annual},
          {"risk_ce_ratio", a.risk_ce_ratio}, {"lambda", a.lambda},
          {"ambiguity_averse", a.ambiguity_averse}, {"noise_sd", a.noise_sd},
          {"seed", a.seed}};
}

}  // namespace

RunConfig config_from_json(const std::string& text) {
  RunConfig c;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorKind::Config, std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) fail(ErrorKind::Config, "config must be a JSON object");
  try {
    c.config_version = j.value("config_version", kConfigVersion);
    c.backend = j.value("backend", c.backend);
    c.fixture = j.value("fixture", c.fixture);
    c.survey = j.value("survey", c.survey);
    c.trials = j.value("trials", c.trials);
    c.temperature = j.value("temperature", c.temperature);
    c.parallelism = j.value("parallelism", c.parallelism);
    c.seed = j.value("seed", c.seed);
    c.preamble_once = j.value("preamble_once", c.preamble_once);
    if (j.contains("paths")) {
      const json& p = j.at("paths");
      c.paths.runs_dir = p.value("runs_dir", c.paths.runs_dir);
      c.paths.profiles_csv = p.value("profiles_csv", c.paths.profiles_csv);
      c.paths.human_csv = p.value("human_csv", c.paths.human_csv);
      c.paths.out_dir = p.value("out_dir", c.paths.out_dir);
    }
    if (j.contains("analysis")) {
      const json& a = j.at("analysis");
      AnalysisOptions& o = c.analysis;
      if (a.contains("metric")) o.metric = metric_from_string(a.at("metric").get<std::string>());
      o.standardize_for_clustering = a.value("standardize_for_clustering", o.standardize_for_clustering);
      if (a.contains("linkages")) {
        o.linkages.clear();
        for (const auto& l : a.at("linkages")) o.linkages.push_back(linkage_from_string(l.get<std::string>()));
      }
      o.k = a.value("k", o.k);
      o.components = a.value("components", o.components);
      o.seed = a.value("seed", o.seed);
      o.epsilon = a.value("epsilon", o.epsilon);
      o.impute_median = a.value("impute_median", o.impute_median);
      o.min_usable_fraction = a.value("min_usable_fraction", o.min_usable_fraction);
    }
    for (const auto& e : j.value("endpoints", json::array())) {
      EndpointConfig ep;
      ep.name = e.at("name").get<std::string>();
      ep.base_url = e.value("base_url", ep.base_url);
      ep.path = e.value("path", ep.path);
      ep.model_id = e.value("model", e.value("model_id", ep.name));
      ep.auth_env_var = e.value("auth_env_var", ep.auth_env_var);
      if (e.contains("headers")) ep.headers = e.at("headers").get<std::map<std::string, std::string>>();
      ep.temperature = e.value("temperature", c.temperature);
      ep.timeout_seconds = e.value("timeout", ep.timeout_seconds);
      ep.max_retries = e.value("max_retries", ep.max_retries);
      ep.retry_backoff_seconds = e.value("retry_backoff", ep.retry_backoff_seconds);
      ep.requests_per_minute = e.value("requests_per_minute", ep.requests_per_minute);
      if (e.contains("agent")) ep.agent = agent_from_json(e.at("agent"));
      c.endpoints.push_back(std::move(ep));
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::Config, std::string("config: ") + e.what());
  }
  validate_config(c);
  return c;
}

std::string config_to_json(const RunConfig& c) {
  json j;
  j["config_version"] = c.config_version;
  j["backend"] = c.backend;
  j["fixture"] = c.fixture;
  j["survey"] = c.survey;
  j["trials"] = c.trials;
  j["temperature"] = c.temperature;
  j["parallelism"] = c.parallelism;
  j["seed"] = c.seed;
  j["preamble_once"] = c.preamble_once;
  j["paths"] = {{"runs_dir", c.paths.runs_dir},
                {"profiles_csv", c.paths.profiles_csv},
                {"human_csv", c.paths.human_csv},
                {"out_dir", c.paths.out_dir}};
  json linkages = json::array();
  for (Linkage l : c.analysis.linkages) linkages.push_back(to_string(l));
  j["analysis"] = {{"metric", to_string(c.analysis.metric)},
                   {"standardize_for_clustering", c.analysis.standardize_for_clustering},
                   {"linkages", linkages},
                   {"k", c.analysis.k},
                   {"components", c.analysis.components},
                   {"seed", c.analysis.seed},
                   {"epsilon", c.analysis.epsilon},
                   {"impute_median", c.analysis.impute_median},
                   {"min_usable_fraction", c.analysis.min_usable_fraction}};
  json endpoints = json::array();
  for (const auto& e : c.endpoints) {
    json ej = {{"name", e.name},
               {"base_url", e.base_url},
               {"path", e.path},
               {"model", e.model_id},
               {"auth_env_var", e.auth_env_var},
               {"headers", e.headers},
               {"temperature", e.temperature},
               {"timeout", e.timeout_seconds},
               {"max_retries", e.max_retries},
               {"retry_backoff", e.retry_backoff_seconds},
               {"requests_per_minute", e.requests_per_minute}};
    if (e.agent) ej["agent"] = agent_to_json(*e.agent);
    endpoints.push_back(ej);
  }
  j["endpoints"] = endpoints;
  return j.dump(2) + "\n";
}

void validate_config(const RunConfig& c) {
  if (c.config_version != kConfigVersion)
    fail(ErrorKind::Config, "unsupported config_version " + std::to_string(c.config_version));
  if (c.backend != "http" && c.backend != "replay" && c.backend != "synthetic")
    fail(ErrorKind::Config, "backend must be http, replay or synthetic");
  if (c.backend == "replay" && c.fixture.empty())
    fail(ErrorKind::Config, "replay backend needs a fixture path");
  if (c.trials < 1) fail(ErrorKind::Config, "trials must be >= 1");
  if (c.parallelism < 1) fail(ErrorKind::Config, "parallelism must be >= 1");
  if (!(c.temperature >= 0.0 && c.temperature <= 2.0))
    fail(ErrorKind::Config, "temperature must lie in [0, 2]");
  const AnalysisOptions& a = c.analysis;
  if (a.k < 1) fail(ErrorKind::Config, "analysis.k must be >= 1");
  if (a.components < 1) fail(ErrorKind::Config, "analysis.components must be >= 1");
  if (!(a.epsilon >= 0.0)) fail(ErrorKind::Config, "analysis.epsilon must be >= 0");
  if (!(a.min_usable_fraction >= 0.0 && a.min_usable_fraction <= 1.0))
    fail(ErrorKind::Config, "analysis.min_usable_fraction must lie in [0, 1]");
  if (a.linkages.empty()) fail(ErrorKind::Config, "analysis.linkages must not be empty");
  for (const auto& e : c.endpoints) validate_endpoint(e);
}

RunPlan plan_from_config(const RunConfig& c, const ReplayFixture* fixture) {
  RunPlan plan;
  plan.endpoints = c.endpoints;
  plan.trials_per_model = c.trials;
  plan.parallelism = c.parallelism;
  plan.seed = c.seed;
  plan.preamble_once = c.preamble_once;
  if (plan.endpoints.empty() && fixture) {
    int trials = 0;
    for (const auto& s : fixture->subjects()) {
      EndpointConfig e;
      e.name = s;
      e.model_id = s;
      e.temperature = c.temperature;
      plan.endpoints.push_back(e);
      trials = std::max(trials, fixture->trial_count(s));
    }
    plan.trials_per_model = std::max(trials, 1);
  }
  return plan;
}

const SessionScript& script_for(const RunConfig& c, SessionScript& storage) {
  if (c.survey.empty()) return canonical_survey();
  storage = load_survey(c.survey);
  return storage;
}

std::vector<TrialRecord> collect_trials(const RunConfig& c, const SessionScript& script) {
  if (c.backend == "replay") {
    ReplayFixture fixture = ReplayFixture::load(c.fixture);
    const RunPlan plan = plan_from_config(c, &fixture);
    auto backend = replay_backend(std::move(fixture));
    return run_survey(plan, script, *backend);
  }
  const RunPlan plan = plan_from_config(c);
  auto backend = c.backend == "synthetic" ? synthetic_backend(c.seed) : http_backend();
  return run_survey(plan, script, *backend);
}

// ---------------------------------------------------------------------------
// Metrics

std::vector<PreferenceReport> preference_reports(const std::vector<ResponseProfile>& profiles,
                                                 const SessionScript& script, double epsilon) {
  std::vector<PreferenceReport> out;
  out.reserve(profiles.size());
  for (const auto& p : profiles) out.push_back(preference_report(p.subject_id, p.values, script, epsilon));
  return out;
}

namespace {

std::string opt_number(const std::optional<double>& v) { return v ? format_number(*v) : ""; }
std::string opt_int(const std::optional<int>& v) { return v ? std::to_string(*v) : ""; }

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  return out + "\"";
}

}  // namespace

std::string metrics_csv(const std::vector<ResponseProfile>& profiles,
                        const std::vector<PreferenceReport>& reports) {
  std::string out =
      "subject_id,beta,delta,present_biased,normative_violation,ce_ratio_q5,ce_ratio_q6,"
      "ce_ratio_q7,ce_ratio_q8,ce_ratio_q9,ce_ratio_q10,premium_ratio_q11,premium_ratio_q12,"
      "lambda13,lambda14,lambda,q1,q4,kind,neutral_items\n";
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const PreferenceReport& r = reports[i];
    out += csv_cell(r.subject_id);
    if (r.time) {
      out += "," + format_number(r.time->beta) + "," + format_number(r.time->delta) + "," +
             (r.time->present_biased ? "1" : "0") + "," + (r.time->normative_violation ? "1" : "0");
    } else {
      out += ",,,,";
    }
    for (int q = 5; q <= 10; ++q) {
      out += ',';
      for (const auto& g : r.gains)
        if (g.item_id == q) out += format_number(g.classification.ce_ratio);
    }
    for (int q = 11; q <= 12; ++q) {
      out += ',';
      for (const auto& l : r.losses)
        if (l.item_id == q) out += format_number(l.classification.ce_ratio);
    }
    out += "," + opt_number(r.lambda13) + "," + opt_number(r.lambda14) + "," + opt_number(r.lambda);
    out += "," + opt_int(r.patient_q1) + "," + opt_int(r.ambiguity_seeking_q4);
    out += std::string(",") + to_string(profiles[i].kind);
    out += "," + std::to_string(r.neutral_items()) + "\n";
  }
  return out;
}

RankBy rank_by_from_string(const std::string& s) {
  if (s == "beta") return RankBy::Beta;
  if (s == "delta") return RankBy::Delta;
  fail(ErrorKind::Config, "rank key must be beta or delta");
}

std::vector<RankEntry> rank_subjects(const std::vector<ResponseProfile>& profiles,
                                     const std::vector<PreferenceReport>& reports, RankBy by) {
  std::vector<RankEntry> out;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    if (!reports[i].time) continue;
    out.push_back({reports[i].subject_id, profiles[i].kind,
                   by == RankBy::Beta ? reports[i].time->beta : reports[i].time->delta});
  }
  std::stable_sort(out.begin(), out.end(), [](const RankEntry& a, const RankEntry& b) {
    if (a.value != b.value) return a.value > b.value;
    return a.subject_id < b.subject_id;
  });
  return out;
}

std::string rank_csv(const std::vector<RankEntry>& entries, RankBy by) {
  std::string out = std::string("rank,subject_id,kind,") + (by == RankBy::Beta ? "beta" : "delta") + "\n";
  for (std::size_t i = 0; i < entries.size(); ++i)
    out += std::to_string(i + 1) + "," + csv_cell(entries[i].subject_id) + "," +
           to_string(entries[i].kind) + "," + format_number(entries[i].value) + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Analysis

namespace {

Eigen::MatrixXd clustering_input(const ProfileMatrix& m, const AnalysisOptions& o,
                                 std::vector<std::string>* notices) {
  if (!o.standardize_for_clustering) return m.matrix;
  Standardized z = zscore(m.matrix);
  if (notices) notices->insert(notices->end(), z.notices.begin(), z.notices.end());
  return z.data;
}

}  // namespace

ClusterAnalysis analyze_cluster(const ProfileMatrix& m, const AnalysisOptions& o) {
  if (m.subjects.size() < 2) fail(ErrorKind::Analysis, "clustering needs at least 2 subjects");
  ClusterAnalysis a;
  a.k = o.k;
  a.distances = distance_matrix(clustering_input(m, o, nullptr), m.subjects, o.metric);
  for (Linkage l : o.linkages) a.trees.emplace(l, linkage(a.distances, l));
  a.selection = select_linkage(a.distances, o.linkages, o.k);
  a.labels = cut(a.trees.at(a.selection.best), o.k);
  a.best_silhouette = silhouette(a.distances, a.labels);
  return a;
}

namespace {

json merges_json(const Dendrogram& t) {
  json arr = json::array();
  for (const auto& m : t.merges)
    arr.push_back({{"left", m.left}, {"right", m.right}, {"height", m.height}, {"size", m.size}});
  return arr;
}

std::string with_extension(const std::string& path, const std::string& ext) {
  fs::path p(path);
  p.replace_extension(ext);
  return p.string();
}

std::string sibling(const std::string& path, const std::string& name) {
  const fs::path p(path);
  return (p.has_parent_path() ? p.parent_path() / name : fs::path(name)).string();
}

}  // namespace

void write_cluster(const ClusterAnalysis& a, const AnalysisOptions& o, const std::string& json_path) {
  const Dendrogram& best = a.trees.at(a.selection.best);
  json j;
  j["metric"] = to_string(o.metric);
  j["standardized"] = o.standardize_for_clustering;
  j["k"] = a.k;
  j["best_linkage"] = to_string(a.selection.best);
  j["labels"] = best.labels;
  json scores = json::array();
  for (const auto& s : a.selection.scores) scores.push_back({{"linkage", to_string(s.method)}, {"silhouette", s.silhouette}});
  j["silhouette"] = scores;
  json clusters = json::object();
  json per_subject = json::object();
  for (std::size_t i = 0; i < best.labels.size(); ++i) {
    clusters[best.labels[i]] = a.labels[i];
    per_subject[best.labels[i]] = a.best_silhouette.per_subject[i];
  }
  j["clusters"] = clusters;
  j["subject_silhouette"] = per_subject;
  j["tree"] = json::parse(dendrogram_to_json(best));
  json trees = json::object();
  for (const auto& [l, t] : a.trees) trees[to_string(l)] = {{"merges", merges_json(t)}};
  j["dendrograms"] = trees;
  write_text_file(json_path, j.dump(2) + "\n");
  write_text_file(with_extension(json_path, ".nwk"), dendrogram_to_newick(best));

  std::string csv = "linkage,k,metric,mean_silhouette,best\n";
  for (const auto& s : a.selection.scores)
    csv += std::string(to_string(s.method)) + "," + std::to_string(a.k) + "," + to_string(o.metric) +
           "," + format_number(s.silhouette) + "," + (s.method == a.selection.best ? "1" : "0") + "\n";
  write_text_file(sibling(json_path, "silhouette.csv"), csv);
}

PcaAnalysis analyze_pca(const ProfileMatrix& m, const AnalysisOptions& o) {
  PcaAnalysis a;
  a.subjects = m.subjects;
  a.standardized = zscore(m.matrix);
  a.notices = a.standardized.notices;
  const int rank = numerical_rank(a.standardized.data);
  int components = o.components;
  if (components > rank) {
    a.notices.push_back("requested " + std::to_string(components) + " components; data rank is " +
                        std::to_string(rank));
    components = rank;
  }
  if (components < 1) fail(ErrorKind::Analysis, "standardized profiles have rank 0");
  a.result = pca(a.standardized.data, components);
  const Eigen::MatrixXd kept = contributions(a.result);
  a.contributions = Eigen::MatrixXd::Zero(kQuestionCount, components);
  a.loadings = Eigen::MatrixXd::Zero(kQuestionCount, components);
  for (std::size_t r = 0; r < a.standardized.kept_columns.size(); ++r) {
    const int q = a.standardized.kept_columns[r];
    a.contributions.row(q) = kept.row(static_cast<Eigen::Index>(r));
    a.loadings.row(q) = a.result.loadings.row(static_cast<Eigen::Index>(r));
  }
  return a;
}

namespace {

std::string fixed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string pc_header(const char* first, Eigen::Index n) {
  std::string h = first;
  for (Eigen::Index c = 0; c < n; ++c) h += ",PC" + std::to_string(c + 1);
  return h + "\n";
}

}  // namespace

void write_pca(const PcaAnalysis& a, const std::string& dir) {
  fs::create_directories(dir);
  const Eigen::Index n_comp = a.result.loadings.cols();
  std::string scores = pc_header("subject_id", n_comp);
  for (Eigen::Index i = 0; i < a.result.scores.rows(); ++i) {
    scores += csv_cell(a.subjects[static_cast<std::size_t>(i)]);
    for (Eigen::Index c = 0; c < n_comp; ++c) scores += "," + format_number(a.result.scores(i, c));
    scores += "\n";
  }
  std::string loadings = pc_header("item", n_comp);
  std::string contrib = pc_header("item", n_comp);
  for (int q = 0; q < kQuestionCount; ++q) {
    loadings += "Q" + std::to_string(q + 1);
    contrib += "Q" + std::to_string(q + 1);
    for (Eigen::Index c = 0; c < n_comp; ++c) {
      loadings += "," + format_number(a.loadings(q, c));
      contrib += "," + fixed2(a.contributions(q, c));
    }
    loadings += "\n";
    contrib += "\n";
  }
  std::string variance = "component,eigenvalue,explained_variance_ratio,cumulative\n";
  double cumulative = 0.0;
  for (Eigen::Index c = 0; c < a.result.full_variance_ratio.size(); ++c) {
    cumulative += a.result.full_variance_ratio(c);
    const bool retained = c < n_comp;
    variance += "PC" + std::to_string(c + 1) + "," +
                (retained ? format_number(a.result.eigenvalues(c)) : std::string()) + "," +
                format_number(a.result.full_variance_ratio(c)) + "," + format_number(cumulative) + "\n";
  }
  write_text_file((fs::path(dir) / "scores.csv").string(), scores);
  write_text_file((fs::path(dir) / "loadings.csv").string(), loadings);
  write_text_file((fs::path(dir) / "contributions.csv").string(), contrib);
  write_text_file((fs::path(dir) / "variance.csv").string(), variance);
}

KMeansAnalysis analyze_kmeans(const ProfileMatrix& m, const AnalysisOptions& o) {
  const PcaAnalysis p = analyze_pca(m, o);
  KMeansAnalysis a;
  a.subjects = m.subjects;
  a.result = kmeans(p.result.scores, o.k, o.seed);
  return a;
}

std::string kmeans_csv(const KMeansAnalysis& a) {
  std::string out = "subject_id,cluster\n";
  for (std::size_t i = 0; i < a.subjects.size(); ++i)
    out += csv_cell(a.subjects[i]) + "," + std::to_string(a.result.assignments[i]) + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Manifest

namespace {

class Manifest {
 public:
  Manifest(std::string out_dir, const RunConfig& config)
      : out_dir_(std::move(out_dir)), config_(json::parse(config_to_json(config))) {
    seeds_ = {{"run", config.seed}, {"analysis", config.analysis.seed}};
  }

  void add_input(const std::string& role, const std::string& path) {
    inputs_.push_back({{"role", role}, {"path", path}, {"sha256", sha256_file(path)}});
  }

  void stage_done(const std::string& stage, const std::vector<std::string>& relative_paths) {
    stages_.push_back(stage);
    for (const auto& rel : relative_paths) artifacts_[rel] = rel;
    write();
  }

  void write() const {
    json arts = json::array();
    for (const auto& [rel, _] : artifacts_) {
      const std::string full = (fs::path(out_dir_) / rel).string();
      arts.push_back({{"path", rel},
                      {"sha256", sha256_file(full)},
                      {"bytes", static_cast<std::uint64_t>(fs::file_size(full))}});
    }
    json j = {{"manifest_version", 1},
              {"tool", "finpref"},
              {"version", kVersionString},
              {"generated_at", utc_timestamp()},
              {"config", config_},
              {"seeds", seeds_},
              {"inputs", inputs_},
              {"stages", stages_},
              {"artifacts", arts}};
    write_text_file((fs::path(out_dir_) / "manifest.json").string(), j.dump(2) + "\n");
  }

 private:
  std::string out_dir_;
  json config_;
  json seeds_;
  json inputs_ = json::array();
  std::vector<std::string> stages_;
  std::map<std::string, std::string> artifacts_;
};

template <typename F>
void stage(const char* name, F&& body) {
  try {
    body();
  } catch (const Error& e) {
    throw Error(e.kind(), std::string("stage ") + name + ": " + e.what());
  } catch (const std::exception& e) {
    throw Error(ErrorKind::Io, std::string("stage ") + name + ": " + e.what());
  }
}

}  // namespace

void run_pipeline(const RunConfig& config) {
  validate_config(config);
  const std::string& out = config.paths.out_dir;
  if (out.empty()) fail(ErrorKind::Config, "paths.out_dir must be set");
  if (config.paths.human_csv.empty()) fail(ErrorKind::Config, "paths.human_csv must be set");
  if (!fs::exists(config.paths.human_csv))
    fail(ErrorKind::Config, "human baseline CSV not found: " + config.paths.human_csv);
  if (config.backend == "replay" && !fs::exists(config.fixture))
    fail(ErrorKind::Config, "replay fixture not found: " + config.fixture);

  fs::create_directories(out);
  auto path = [&](const std::string& rel) { return (fs::path(out) / rel).string(); };
  Manifest manifest(out, config);
  manifest.add_input("human_csv", config.paths.human_csv);
  if (config.backend == "replay") manifest.add_input("fixture", config.fixture);
  if (!config.survey.empty()) manifest.add_input("survey", config.survey);

  SessionScript storage;
  const SessionScript* script = nullptr;
  stage("survey", [&] { script = &script_for(config, storage); });

  std::vector<TrialRecord> records;
  stage("elicit", [&] {
    records = collect_trials(config, *script);
    write_trials(path("trials.jsonl"), records);
  });
  manifest.stage_done("elicit", {"trials.jsonl"});

  stage("parse", [&] {
    const ParseQuality q = reparse_records(records, *script);
    write_text_file(path("quality.json"), parse_quality_json(q));
    manifest.stage_done("parse", {"quality.json"});
    if (q.usable_fraction() < config.analysis.min_usable_fraction)
      fail(ErrorKind::ParseQuality, "usable fraction " + format_number(q.usable_fraction()) +
                                        " is below the minimum " +
                                        format_number(config.analysis.min_usable_fraction));
  });

  std::vector<ResponseProfile> profiles;
  stage("aggregate", [&] {
    profiles = aggregate_by_subject(records);
    std::set<std::string> ids;
    for (const auto& p : profiles) ids.insert(p.subject_id);
    for (auto& h : load_country_csv(config.paths.human_csv)) {
      if (!ids.insert(h.subject_id).second)
        fail(ErrorKind::Format, "subject '" + h.subject_id + "' appears in both the run and the human CSV");
      profiles.push_back(std::move(h));
    }
    save_profiles(path("profiles.csv"), profiles);
  });
  manifest.stage_done("aggregate", {"profiles.csv", "profiles.csv.meta.json"});

  ProfileMatrix matrix;
  stage("stats", [&] {
    matrix = build_matrix(profiles, config.analysis.impute_median);
    const auto stats = descriptive_stats(matrix);
    write_text_file(path("table1.csv"), format_stats_csv(stats));
  });
  manifest.stage_done("stats", {"table1.csv"});

  stage("metrics", [&] {
    const auto reports = preference_reports(profiles, *script, config.analysis.epsilon);
    write_text_file(path("params.csv"), metrics_csv(profiles, reports));
    write_text_file(path("rank_beta.csv"), rank_csv(rank_subjects(profiles, reports, RankBy::Beta), RankBy::Beta));
    write_text_file(path("rank_delta.csv"), rank_csv(rank_subjects(profiles, reports, RankBy::Delta), RankBy::Delta));
  });
  manifest.stage_done("metrics", {"params.csv", "rank_beta.csv", "rank_delta.csv"});

  stage("cluster", [&] {
    try {
      write_cluster(analyze_cluster(matrix, config.analysis), config.analysis, path("dendro.json"));
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::Domain) throw Error(ErrorKind::Analysis, e.what());
      throw;
    }
  });
  manifest.stage_done("cluster", {"dendro.json", "dendro.nwk", "silhouette.csv"});

  stage("pca", [&] {
    try {
      write_pca(analyze_pca(matrix, config.analysis), path("pca"));
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::Domain) throw Error(ErrorKind::Analysis, e.what());
      throw;
    }
  });
  manifest.stage_done("pca", {"pca/scores.csv", "pca/loadings.csv", "pca/contributions.csv", "pca/variance.csv"});

  stage("kmeans", [&] {
    try {
      write_text_file(path("kmeans.csv"), kmeans_csv(analyze_kmeans(matrix, config.analysis)));
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::Domain) throw Error(ErrorKind::Analysis, e.what());
      throw;
    }
  });
  manifest.stage_done("kmeans", {"kmeans.csv"});

  stage("report", [&] { write_report(out); });
}

// ---------------------------------------------------------------------------
// Report

namespace {

std::vector<std::vector<std::string>> read_csv_rows(const std::string& path) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(read_text_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      const char ch = line[i];
      if (quoted) {
        if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else if (ch == '"') {
          quoted = false;
        } else {
          cur.push_back(ch);
        }
      } else if (ch == '"') {
        quoted = true;
      } else if (ch == ',') {
        cells.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(ch);
      }
    }
    cells.push_back(cur);
    rows.push_back(std::move(cells));
  }
  return rows;
}

json stats_json(const std::vector<QuestionStats>& stats) {
  json out = json::object();
  for (const auto& s : stats)
    out["Q" + std::to_string(s.question_id)] = {{"count", s.count}, {"mean", s.mean},
                                                {"sd", s.sd},       {"sd_defined", s.sd_defined},
                                                {"min", s.min},     {"median", s.median},
                                                {"max", s.max}};
  return out;
}

json groups_json(const std::map<int, std::vector<std::string>>& groups) {
  json arr = json::array();
  for (const auto& [id, members] : groups) arr.push_back({{"cluster", id}, {"members", members}});
  return arr;
}

}  // namespace

void write_report(const std::string& out_dir) {
  auto path = [&](const std::string& rel) { return (fs::path(out_dir) / rel).string(); };
  for (const char* required : {"manifest.json", "profiles.csv", "params.csv", "dendro.json", "kmeans.csv"})
    if (!fs::exists(path(required)))
      fail(ErrorKind::StageDependency, std::string("report needs ") + required + " in " + out_dir);

  json manifest = json::parse(read_text_file(path("manifest.json")));
  const RunConfig config = config_from_json(manifest.at("config").dump());
  SessionScript storage;
  const SessionScript& script = script_for(config, storage);
  const AnalysisOptions& o = config.analysis;

  const auto profiles = load_profiles(path("profiles.csv"));
  const ProfileMatrix matrix = build_matrix(profiles, o.impute_median);
  const auto reports = preference_reports(profiles, script, o.epsilon);

  json report;
  report["generated_at"] = utc_timestamp();
  report["subjects"] = matrix.subjects.size();
  report["excluded_subjects"] = matrix.excluded;
  report["descriptive_stats"] = stats_json(descriptive_stats(matrix));

  for (RankBy by : {RankBy::Beta, RankBy::Delta}) {
    json arr = json::array();
    const auto ranked = rank_subjects(profiles, reports, by);
    for (std::size_t i = 0; i < ranked.size(); ++i)
      arr.push_back({{"rank", i + 1}, {"subject_id", ranked[i].subject_id},
                     {"kind", to_string(ranked[i].kind)}, {"value", ranked[i].value}});
    report[by == RankBy::Beta ? "rank_beta" : "rank_delta"] = arr;
  }

  // Nearest human-country profile for every other subject.
  json neighbors = json::array();
  {
    const Eigen::MatrixXd data = o.standardize_for_clustering ? zscore(matrix.matrix).data : matrix.matrix;
    const DistanceMatrix d = distance_matrix(data, matrix.subjects, o.metric);
    for (std::size_t i = 0; i < matrix.subjects.size(); ++i) {
      if (matrix.kinds[i] == SubjectKind::HumanCountry) continue;
      std::optional<std::size_t> best;
      for (std::size_t j = 0; j < matrix.subjects.size(); ++j) {
        if (matrix.kinds[j] != SubjectKind::HumanCountry) continue;
        const double v = d.d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        if (!best || v < d.d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(*best))) best = j;
      }
      if (!best) continue;
      neighbors.push_back({{"subject_id", matrix.subjects[i]},
                           {"kind", to_string(matrix.kinds[i])},
                           {"nearest_human", matrix.subjects[*best]},
                           {"distance", d.d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(*best))},
                           {"metric", to_string(o.metric)}});
    }
  }
  report["nearest_neighbor"] = neighbors;

  json violations = json::array();
  json risk = json::array();
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const PreferenceReport& r = reports[i];
    if (r.time && r.time->normative_violation) {
      json reasons = json::array();
      if (r.time->delta > 1.0) reasons.push_back("delta>1");
      if (r.time->delta <= 0.0) reasons.push_back("delta<=0");
      if (r.time->beta > 1.0) reasons.push_back("beta>1");
      if (r.time->beta <= 0.0) reasons.push_back("beta<=0");
      violations.push_back({{"subject_id", r.subject_id}, {"kind", to_string(profiles[i].kind)},
                            {"beta", r.time->beta}, {"delta", r.time->delta}, {"reasons", reasons}});
    }
    const int neutral = r.neutral_items();
    const int total = r.risk_items();
    json entry = {{"subject_id", r.subject_id}, {"neutral_items", neutral}, {"risk_items", total}};
    if (total > 0 && neutral == total)
      entry["flag"] = "risk-neutral on " + std::to_string(neutral) + "/" + std::to_string(total) + " items";
    risk.push_back(entry);
  }
  report["normative_violations"] = violations;
  report["risk_neutrality"] = risk;

  json clusters;
  {
    const json dendro = json::parse(read_text_file(path("dendro.json")));
    std::map<int, std::vector<std::string>> groups;
    for (const auto& [label, id] : dendro.at("clusters").items()) groups[id.get<int>()].push_back(label);
    for (auto& [_, members] : groups) std::sort(members.begin(), members.end());
    clusters["hierarchical"] = {{"linkage", dendro.at("best_linkage")},
                                {"k", dendro.at("k")},
                                {"groups", groups_json(groups)}};
  }
  {
    const auto rows = read_csv_rows(path("kmeans.csv"));
    std::map<int, std::vector<std::string>> groups;
    for (std::size_t r = 1; r < rows.size(); ++r) {
      if (rows[r].size() != 2) fail(ErrorKind::Format, "kmeans.csv: malformed row " + std::to_string(r));
      groups[std::stoi(rows[r][1])].push_back(rows[r][0]);
    }
    for (auto& [_, members] : groups) std::sort(members.begin(), members.end());
    clusters["kmeans"] = {{"k", o.k}, {"seed", o.seed}, {"groups", groups_json(groups)}};
  }
  report["clusters"] = clusters;
  if (fs::exists(path("quality.json"))) report["data_quality"] = json::parse(read_text_file(path("quality.json")));

  write_text_file(path("report.json"), report.dump(2) + "\n");

  // Register the report in the manifest.
  json& arts = manifest["artifacts"];
  json updated = json::array();
  for (const auto& a : arts)
    if (a.at("path") != "report.json") updated.push_back(a);
  updated.push_back({{"path", "report.json"},
                     {"sha256", sha256_file(path("report.json"))},
                     {"bytes", static_cast<std::uint64_t>(fs::file_size(path("report.json")))}});
  std::sort(updated.begin(), updated.end(),
            [](const json& a, const json& b) { return a.at("path").get<std::string>() < b.at("path").get<std::string>(); });
  manifest["artifacts"] = updated;
  auto& stages = manifest["stages"];
  if (std::find(stages.begin(), stages.end(), json("report")) == stages.end()) stages.push_back("report");
  manifest["generated_at"] = utc_timestamp();
  write_text_file(path("manifest.json"), manifest.dump(2) + "\n");
}

VerifyResult verify_manifest(const std::string& out_dir) {
  const std::string mpath = (fs::path(out_dir) / "manifest.json").string();
  if (!fs::exists(mpath)) fail(ErrorKind::StageDependency, "no manifest.json in " + out_dir);
  json manifest;
  try {
    manifest = json::parse(read_text_file(mpath));
  } catch (const json::exception& e) {
    fail(ErrorKind::Integrity, std::string("manifest.json is not valid JSON: ") + e.what());
  }
  VerifyResult r;
  for (const auto& a : manifest.value("artifacts", json::array())) {
    ++r.checked;
    const std::string rel = a.at("path").get<std::string>();
    const std::string full = (fs::path(out_dir) / rel).string();
    if (!fs::exists(full)) {
      r.problems.push_back(rel + ": missing");
      continue;
    }
    if (sha256_file(full) != a.at("sha256").get<std::string>()) r.problems.push_back(rel + ": hash mismatch");
  }
  for (const auto& in : manifest.value("inputs", json::array())) {
    ++r.checked;
    const std::string p = in.at("path").get<std::string>();
    if (!fs::exists(p))
      r.problems.push_back("input " + p + ": missing");
    else if (sha256_file(p) != in.at("sha256").get<std::string>())
      r.problems.push_back("input " + p + ": hash mismatch");
  }
  return r;
}

}  // namespace finpref
