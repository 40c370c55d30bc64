// SPDX-License-Identifier: Apache-2.0
//
// Run configuration, per-stage artifact writers, the end-to-end pipeline,
// the consolidated report, and the artifact manifest.
#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "finpref/econometrics.hpp"
#include "finpref/elicitation.hpp"
#include "finpref/multivariate.hpp"
#include "finpref/profiles.hpp"
#include "finpref/survey.hpp"

namespace finpref {

inline constexpr int kConfigVersion = 1;

struct AnalysisOptions {
  Metric metric = Metric::Correlation;
  bool standardize_for_clustering = false;
  std::vector<Linkage> linkages{Linkage::Single, Linkage::Complete, Linkage::Average};
  int k = 3;
  int components = 3;
  std::uint64_t seed = 42;
  double epsilon = kDefaultNeutralBand;
  bool impute_median = false;
  double min_usable_fraction = 0.8;
};

struct RunConfig {
  int config_version = kConfigVersion;
  std::string backend = "http";  // http | replay | synthetic
  std::string fixture;           // replay backend input
  std::string survey;            // optional alternative survey file
  std::vector<EndpointConfig> endpoints;
  int trials = 100;
  double temperature = 0.7;
  int parallelism = 4;
  std::uint64_t seed = 42;
  bool preamble_once = true;
  struct Paths {
    std::string runs_dir = "runs";
    std::string profiles_csv;
    std::string human_csv;
    std::string out_dir = "out";
  } paths;
  AnalysisOptions analysis;
};

// Missing keys take defaults; endpoint temperatures default to the top-level one.
RunConfig config_from_json(const std::string& text);
std::string config_to_json(const RunConfig& config);
void validate_config(const RunConfig& config);

RunPlan plan_from_config(const RunConfig& config, const ReplayFixture* fixture = nullptr);
const SessionScript& script_for(const RunConfig& config, SessionScript& storage);

// Elicitation for `survey run` / `survey replay`, returning sorted records.
std::vector<TrialRecord> collect_trials(const RunConfig& config, const SessionScript& script);

// ---- metrics ---------------------------------------------------------------
std::vector<PreferenceReport> preference_reports(const std::vector<ResponseProfile>& profiles,
                                                 const SessionScript& script, double epsilon);
std::string metrics_csv(const std::vector<ResponseProfile>& profiles,
                        const std::vector<PreferenceReport>& reports);

enum class RankBy { Beta, Delta };
RankBy rank_by_from_string(const std::string& s);

struct RankEntry {
  std::string subject_id;
  SubjectKind kind;
  double value;
};

// Descending by value, ties by subject id; subjects without the estimate are skipped.
std::vector<RankEntry> rank_subjects(const std::vector<ResponseProfile>& profiles,
                                     const std::vector<PreferenceReport>& reports, RankBy by);
std::string rank_csv(const std::vector<RankEntry>& entries, RankBy by);

// ---- analysis --------------------------------------------------------------
struct ClusterAnalysis {
  DistanceMatrix distances;
  std::map<Linkage, Dendrogram> trees;
  LinkageSelection selection;
  std::vector<int> labels;  // best tree cut at k
  Silhouette best_silhouette;
  int k = 0;
};

ClusterAnalysis analyze_cluster(const ProfileMatrix& matrix, const AnalysisOptions& options);
// Writes `json_path`, the sibling .nwk, and silhouette.csv in the same directory.
void write_cluster(const ClusterAnalysis& analysis, const AnalysisOptions& options,
                   const std::string& json_path);

struct PcaAnalysis {
  Standardized standardized;
  PcaResult result;
  Eigen::MatrixXd contributions;  // 14 x components, dropped items are 0
  Eigen::MatrixXd loadings;       // 14 x components, dropped items are 0
  std::vector<std::string> subjects;
  std::vector<std::string> notices;
};

PcaAnalysis analyze_pca(const ProfileMatrix& matrix, const AnalysisOptions& options);
void write_pca(const PcaAnalysis& analysis, const std::string& dir);

struct KMeansAnalysis {
  KMeansResult result;
  std::vector<std::string> subjects;
};

// K-means on the PCA scores of the z-standardized profiles.
KMeansAnalysis analyze_kmeans(const ProfileMatrix& matrix, const AnalysisOptions& options);
std::string kmeans_csv(const KMeansAnalysis& analysis);

// ---- pipeline / report / manifest -----------------------------------------
// Throws Error with the failing stage named in the message.
void run_pipeline(const RunConfig& config);
// Rebuilds report.json from the artifacts in `out_dir`.
void write_report(const std::string& out_dir);

struct VerifyResult {
  std::size_t checked = 0;
  std::vector<std::string> problems;
  bool ok() const { return problems.empty(); }
};

VerifyResult verify_manifest(const std::string& out_dir);

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::string& path);
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace finpref
