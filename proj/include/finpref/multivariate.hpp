// SPDX-License-Identifier: Apache-2.0
//
// Analysis pipeline over profile matrices: standardization, distance
// matrices, agglomerative clustering, silhouettes, PCA and seeded K-means.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace finpref {

enum class Metric { Correlation, Euclidean };
enum class Linkage { Single, Complete, Average };

const char* to_string(Metric m) noexcept;
const char* to_string(Linkage l) noexcept;
Metric metric_from_string(const std::string& s);
Linkage linkage_from_string(const std::string& s);

struct Standardized {
  Eigen::MatrixXd data;          // rows x kept columns
  std::vector<int> kept_columns; // 0-based indices into the input
  std::vector<std::string> notices;
};

// Column-wise (x - mean) / sample sd; zero-variance columns are dropped.
Standardized zscore(const Eigen::MatrixXd& matrix);

double pearson_correlation(const Eigen::VectorXd& x, const Eigen::VectorXd& y);
// 1 - Pearson correlation, clamped to [0, 2].
double correlation_distance(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

struct DistanceMatrix {
  std::vector<std::string> labels;
  Eigen::MatrixXd d;
  Metric metric = Metric::Correlation;

  std::size_t size() const { return labels.size(); }
};

// Pairwise distances between the rows of `data`.
DistanceMatrix distance_matrix(const Eigen::MatrixXd& data, std::vector<std::string> labels,
                               Metric metric);
// Throws on asymmetry, non-zero diagonal, or negative/non-finite entries.
void validate_distance_matrix(const DistanceMatrix& dist);

// Node ids follow the usual convention: leaves are 0..n-1, the cluster made
// by merge i is n+i.
struct Merge {
  int left = 0;
  int right = 0;
  double height = 0.0;
  int size = 0;
};

struct Dendrogram {
  std::vector<std::string> labels;
  std::vector<Merge> merges;
  Linkage linkage = Linkage::Average;

  std::size_t leaf_count() const { return labels.size(); }
  // Leaves under `node`, in left-to-right tree order.
  std::vector<int> members(int node) const;
};

// Agglomerates the pair of clusters with the smallest linkage criterion. Ties
// go to the pair whose (smallest member label, smallest member label) is
// lexicographically lowest; the lower-labelled cluster becomes `left`.
Dendrogram linkage(const DistanceMatrix& dist, Linkage method);

// Labels 0..k-1 numbered by first appearance in leaf order.
std::vector<int> cut(const Dendrogram& tree, int k);

struct Silhouette {
  double mean = 0.0;
  std::vector<double> per_subject;
};

Silhouette silhouette(const DistanceMatrix& dist, const std::vector<int>& labels);

struct LinkageScore {
  Linkage method;
  double silhouette;
};

struct LinkageSelection {
  Linkage best;
  std::vector<LinkageScore> scores;  // canonical order single, complete, average
};

LinkageSelection select_linkage(const DistanceMatrix& dist, std::vector<Linkage> methods, int k);

struct PcaResult {
  Eigen::MatrixXd loadings;                 // variables x components, orthonormal columns
  Eigen::VectorXd eigenvalues;              // retained components
  Eigen::VectorXd explained_variance_ratio; // retained components
  Eigen::VectorXd full_variance_ratio;      // every component of the decomposition
  Eigen::MatrixXd scores;                   // subjects x components
  Eigen::VectorXd column_means;
  int rank = 0;
};

// Eigendecomposition of the sample covariance. Components sorted by descending
// eigenvalue; each loading column's largest-magnitude entry is positive.
PcaResult pca(const Eigen::MatrixXd& data, int n_components);
int numerical_rank(const Eigen::MatrixXd& data);

// 100 * loading^2 / column sum of loading^2; variables x components.
Eigen::MatrixXd contributions(const PcaResult& result);

struct KMeansResult {
  int k = 0;
  std::vector<int> assignments;
  Eigen::MatrixXd centroids;  // k x dims
  double inertia = 0.0;
  std::uint64_t seed = 0;
  int iterations = 0;
  std::vector<double> inertia_trace;  // after every assignment step
};

// k-means++ seeding from a SplitMix64 stream, then Lloyd iterations until the
// assignment stops changing or 300 iterations.
KMeansResult kmeans(const Eigen::MatrixXd& points, int k, std::uint64_t seed);
double within_cluster_ss(const Eigen::MatrixXd& points, const std::vector<int>& assignments,
                         const Eigen::MatrixXd& centroids);

// Fraction of point pairs on which two labelings agree (same / different).
double rand_index(const std::vector<int>& a, const std::vector<int>& b);

// Export helpers.
std::string dendrogram_to_json(const Dendrogram& tree);
std::string dendrogram_to_newick(const Dendrogram& tree);

}  // namespace finpref
