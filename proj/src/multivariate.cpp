// SPDX-License-Identifier: Apache-2.0
#include "finpref/multivariate.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include <Eigen/Eigenvalues>

#include "finpref/error.hpp"
#include "json.hpp"

namespace finpref {

const char* to_string(Metric m) noexcept {
  return m == Metric::Correlation ? "correlation" : "euclidean";
}

const char* to_string(Linkage l) noexcept {
  switch (l) {
    case Linkage::Single: return "single";
    case Linkage::Complete: return "complete";
    case Linkage::Average: return "average";
  }
  return "unknown";
}

Metric metric_from_string(const std::string& s) {
  if (s == "correlation") return Metric::Correlation;
  if (s == "euclidean") return Metric::Euclidean;
  fail(ErrorKind::Config, "unknown metric '" + s + "' (expected correlation|euclidean)");
}

Linkage linkage_from_string(const std::string& s) {
  if (s == "single") return Linkage::Single;
  if (s == "complete") return Linkage::Complete;
  if (s == "average") return Linkage::Average;
  fail(ErrorKind::Config, "unknown linkage '" + s + "' (expected single|complete|average)");
}

// ---------------------------------------------------------------------------
// Standardization and distances

Standardized zscore(const Eigen::MatrixXd& matrix) {
  const auto n = matrix.rows();
  if (n < 2) fail(ErrorKind::Domain, "z-standardization needs at least 2 subjects");
  Standardized out;
  std::vector<Eigen::VectorXd> cols;
  for (Eigen::Index j = 0; j < matrix.cols(); ++j) {
    const Eigen::VectorXd col = matrix.col(j);
    const double mean = col.mean();
    const double sd = std::sqrt((col.array() - mean).square().sum() / static_cast<double>(n - 1));
    const double scale = std::max(1.0, col.cwiseAbs().maxCoeff());
    if (!(sd > 1e-12 * scale)) {
      out.notices.push_back("column " + std::to_string(j + 1) + " has zero variance and was dropped");
      continue;
    }
    cols.push_back((col.array() - mean) / sd);
    out.kept_columns.push_back(static_cast<int>(j));
  }
  out.data.resize(n, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) out.data.col(static_cast<Eigen::Index>(c)) = cols[c];
  return out;
}

double pearson_correlation(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  if (x.size() != y.size()) fail(ErrorKind::Domain, "correlation needs equal-length vectors");
  if (x.size() < 3) fail(ErrorKind::Domain, "correlation needs vectors of length >= 3");
  const Eigen::ArrayXd xc = x.array() - x.mean();
  const Eigen::ArrayXd yc = y.array() - y.mean();
  const double sxx = xc.square().sum();
  const double syy = yc.square().sum();
  if (!(sxx > 0.0) || !(syy > 0.0))
    fail(ErrorKind::Domain, "correlation undefined for a zero-variance vector");
  return (xc * yc).sum() / std::sqrt(sxx * syy);
}

double correlation_distance(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  const double d = 1.0 - pearson_correlation(x, y);
  return std::clamp(d, 0.0, 2.0);
}

DistanceMatrix distance_matrix(const Eigen::MatrixXd& data, std::vector<std::string> labels,
                               Metric metric) {
  const auto n = data.rows();
  if (static_cast<std::size_t>(n) != labels.size())
    fail(ErrorKind::InvalidArgument, "label count does not match matrix rows");
  DistanceMatrix out;
  out.labels = std::move(labels);
  out.metric = metric;
  out.d = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const Eigen::VectorXd x = data.row(i).transpose();
      const Eigen::VectorXd y = data.row(j).transpose();
      double v = 0.0;
      if (metric == Metric::Correlation) {
        try {
          v = correlation_distance(x, y);
        } catch (const Error& e) {
          fail(e.kind(), "distance between '" + out.labels[static_cast<std::size_t>(i)] + "' and '" +
                             out.labels[static_cast<std::size_t>(j)] + "': " + e.what());
        }
      } else {
        v = (x - y).norm();
      }
      out.d(i, j) = v;
      out.d(j, i) = v;
    }
  }
  return out;
}

void validate_distance_matrix(const DistanceMatrix& dist) {
  const auto n = dist.d.rows();
  if (dist.d.cols() != n || static_cast<std::size_t>(n) != dist.labels.size())
    fail(ErrorKind::InvalidArgument, "distance matrix must be square and labelled");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (dist.d(i, i) != 0.0) fail(ErrorKind::InvalidArgument, "distance matrix diagonal must be 0");
    for (Eigen::Index j = 0; j < n; ++j) {
      const double v = dist.d(i, j);
      if (!std::isfinite(v) || v < 0.0)
        fail(ErrorKind::InvalidArgument, "distances must be finite and non-negative");
      if (v != dist.d(j, i)) fail(ErrorKind::InvalidArgument, "distance matrix must be symmetric");
    }
  }
}

// ---------------------------------------------------------------------------
// Agglomerative clustering

std::vector<int> Dendrogram::members(int node) const {
  const int n = static_cast<int>(leaf_count());
  std::vector<int> out;
  std::vector<int> stack{node};
  while (!stack.empty()) {
    const int cur = stack.back();
    stack.pop_back();
    if (cur < n) {
      out.push_back(cur);
      continue;
    }
    const Merge& m = merges[static_cast<std::size_t>(cur - n)];
    stack.push_back(m.right);
    stack.push_back(m.left);
  }
  return out;
}

namespace {

struct Cluster {
  int node;
  int rep;  // leaf index of the lexicographically smallest label
  int size;
  bool active;
};

}  // namespace

Dendrogram linkage(const DistanceMatrix& dist, Linkage method) {
  validate_distance_matrix(dist);
  const int n = static_cast<int>(dist.size());
  if (n < 2) fail(ErrorKind::Domain, "linkage needs at least 2 subjects");

  const auto& labels = dist.labels;
  auto label_less = [&](int a, int b) {
    if (labels[static_cast<std::size_t>(a)] != labels[static_cast<std::size_t>(b)])
      return labels[static_cast<std::size_t>(a)] < labels[static_cast<std::size_t>(b)];
    return a < b;
  };

  std::vector<Cluster> clusters;
  for (int i = 0; i < n; ++i) clusters.push_back({i, i, 1, true});
  // crit holds min / max / sum of pairwise distances between cluster slots.
  Eigen::MatrixXd crit = dist.d;

  auto criterion = [&](int a, int b) {
    if (method != Linkage::Average) return crit(a, b);
    return crit(a, b) / (static_cast<double>(clusters[static_cast<std::size_t>(a)].size) *
                         clusters[static_cast<std::size_t>(b)].size);
  };

  Dendrogram tree;
  tree.labels = labels;
  tree.linkage = method;
  for (int step = 0; step < n - 1; ++step) {
    int best_a = -1, best_b = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int a = 0; a < n; ++a) {
      if (!clusters[static_cast<std::size_t>(a)].active) continue;
      for (int b = a + 1; b < n; ++b) {
        if (!clusters[static_cast<std::size_t>(b)].active) continue;
        int lo = a, hi = b;
        if (label_less(clusters[static_cast<std::size_t>(hi)].rep, clusters[static_cast<std::size_t>(lo)].rep))
          std::swap(lo, hi);
        const double c = criterion(a, b);
        bool take = c < best;
        if (!take && c == best) {
          const int blo = clusters[static_cast<std::size_t>(best_a)].rep;
          const int bhi = clusters[static_cast<std::size_t>(best_b)].rep;
          const int clo = clusters[static_cast<std::size_t>(lo)].rep;
          const int chi = clusters[static_cast<std::size_t>(hi)].rep;
          take = label_less(clo, blo) || (clo == blo && label_less(chi, bhi));
        }
        if (take) {
          best = c;
          best_a = lo;
          best_b = hi;
        }
      }
    }

    Cluster& left = clusters[static_cast<std::size_t>(best_a)];
    Cluster& right = clusters[static_cast<std::size_t>(best_b)];
    tree.merges.push_back(Merge{left.node, right.node, best, left.size + right.size});

    // Fold `right` into `left`'s slot.
    for (int k = 0; k < n; ++k) {
      if (k == best_a || k == best_b || !clusters[static_cast<std::size_t>(k)].active) continue;
      double v = 0.0;
      switch (method) {
        case Linkage::Single: v = std::min(crit(best_a, k), crit(best_b, k)); break;
        case Linkage::Complete: v = std::max(crit(best_a, k), crit(best_b, k)); break;
        case Linkage::Average: v = crit(best_a, k) + crit(best_b, k); break;
      }
      crit(best_a, k) = v;
      crit(k, best_a) = v;
    }
    left.node = n + step;
    left.size += right.size;
    right.active = false;
  }
  return tree;
}

std::vector<int> cut(const Dendrogram& tree, int k) {
  const int n = static_cast<int>(tree.leaf_count());
  if (k < 1 || k > n) fail(ErrorKind::Domain, "cluster count k must lie in [1, n]");
  std::vector<int> parent(static_cast<std::size_t>(2 * n - 1));
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  };
  for (int i = 0; i < n - k; ++i) {
    const Merge& m = tree.merges[static_cast<std::size_t>(i)];
    parent[static_cast<std::size_t>(find(m.left))] = n + i;
    parent[static_cast<std::size_t>(find(m.right))] = n + i;
  }
  std::map<int, int> ids;
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (int leaf = 0; leaf < n; ++leaf) {
    const int root = find(leaf);
    auto [it, inserted] = ids.try_emplace(root, static_cast<int>(ids.size()));
    labels[static_cast<std::size_t>(leaf)] = it->second;
  }
  return labels;
}

Silhouette silhouette(const DistanceMatrix& dist, const std::vector<int>& labels) {
  const std::size_t n = dist.size();
  if (labels.size() != n) fail(ErrorKind::InvalidArgument, "one label per subject is required");
  std::map<int, std::size_t> sizes;
  for (int l : labels) ++sizes[l];
  if (sizes.size() < 2) fail(ErrorKind::Domain, "silhouette needs at least 2 clusters");

  Silhouette out;
  out.per_subject.resize(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (sizes[labels[i]] == 1) continue;  // singleton: s = 0
    std::map<int, double> sums;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) sums[labels[j]] += dist.d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    const double a = sums[labels[i]] / static_cast<double>(sizes[labels[i]] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (const auto& [label, sum] : sums)
      if (label != labels[i]) b = std::min(b, sum / static_cast<double>(sizes[label]));
    const double denom = std::max(a, b);
    out.per_subject[i] = denom > 0.0 ? (b - a) / denom : 0.0;
  }
  double total = 0.0;
  for (double s : out.per_subject) total += s;
  out.mean = total / static_cast<double>(n);
  return out;
}

LinkageSelection select_linkage(const DistanceMatrix& dist, std::vector<Linkage> methods, int k) {
  if (methods.empty()) fail(ErrorKind::InvalidArgument, "no linkage methods to compare");
  std::sort(methods.begin(), methods.end());
  methods.erase(std::unique(methods.begin(), methods.end()), methods.end());
  LinkageSelection out{methods.front(), {}};
  double best = -std::numeric_limits<double>::infinity();
  for (Linkage m : methods) {
    const double s = silhouette(dist, cut(linkage(dist, m), k)).mean;
    out.scores.push_back({m, s});
    if (s > best) {
      best = s;
      out.best = m;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// PCA

namespace {

Eigen::VectorXd sorted_eigen(const Eigen::MatrixXd& cov, Eigen::MatrixXd* vectors) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) fail(ErrorKind::Analysis, "eigendecomposition failed");
  const auto p = cov.rows();
  Eigen::VectorXd values(p);
  if (vectors) vectors->resize(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    values(i) = std::max(0.0, solver.eigenvalues()(p - 1 - i));
    if (vectors) vectors->col(i) = solver.eigenvectors().col(p - 1 - i);
  }
  return values;
}

Eigen::MatrixXd covariance(const Eigen::MatrixXd& centered) {
  const double denom = static_cast<double>(centered.rows() - 1);
  return (centered.transpose() * centered) / denom;
}

int rank_of(const Eigen::VectorXd& eigenvalues) {
  if (eigenvalues.size() == 0) return 0;
  const double tol = std::max(eigenvalues(0), 1e-300) * 1e-10;
  int r = 0;
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i)
    if (eigenvalues(i) > tol) ++r;
  return r;
}

}  // namespace

int numerical_rank(const Eigen::MatrixXd& data) {
  if (data.rows() < 2) return 0;
  const Eigen::MatrixXd centered = data.rowwise() - data.colwise().mean();
  return rank_of(sorted_eigen(covariance(centered), nullptr));
}

PcaResult pca(const Eigen::MatrixXd& data, int n_components) {
  if (data.rows() < 2) fail(ErrorKind::Domain, "PCA needs at least 2 subjects");
  if (data.cols() < 1) fail(ErrorKind::Domain, "PCA needs at least one variable");
  if (n_components < 1) fail(ErrorKind::Domain, "PCA needs at least one component");

  PcaResult out;
  out.column_means = data.colwise().mean().transpose();
  const Eigen::MatrixXd centered = data.rowwise() - out.column_means.transpose();
  Eigen::MatrixXd vectors;
  const Eigen::VectorXd values = sorted_eigen(covariance(centered), &vectors);
  out.rank = rank_of(values);
  if (n_components > out.rank)
    fail(ErrorKind::Domain, "requested " + std::to_string(n_components) +
                                " components but the data has rank " + std::to_string(out.rank));

  const double total = values.sum();
  out.full_variance_ratio = values / total;
  out.eigenvalues = values.head(n_components);
  out.explained_variance_ratio = out.full_variance_ratio.head(n_components);
  out.loadings = vectors.leftCols(n_components);
  for (int c = 0; c < n_components; ++c) {
    Eigen::Index arg = 0;
    out.loadings.col(c).cwiseAbs().maxCoeff(&arg);
    if (out.loadings(arg, c) < 0.0) out.loadings.col(c) *= -1.0;
  }
  out.scores = centered * out.loadings;
  return out;
}

Eigen::MatrixXd contributions(const PcaResult& result) {
  Eigen::MatrixXd out = result.loadings.array().square();
  for (Eigen::Index c = 0; c < out.cols(); ++c) {
    const double s = out.col(c).sum();
    if (s > 0.0) out.col(c) *= 100.0 / s;
  }
  return out;
}

// ---------------------------------------------------------------------------
// K-means

namespace {

class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }
  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

double sq_dist(const Eigen::MatrixXd& points, Eigen::Index i, const Eigen::MatrixXd& centroids,
               Eigen::Index c) {
  return (points.row(i) - centroids.row(c)).squaredNorm();
}

std::vector<int> assign(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centroids) {
  std::vector<int> a(static_cast<std::size_t>(points.rows()));
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    Eigen::Index best = 0;
    double bd = sq_dist(points, i, centroids, 0);
    for (Eigen::Index c = 1; c < centroids.rows(); ++c) {
      const double d = sq_dist(points, i, centroids, c);
      if (d < bd) {
        bd = d;
        best = c;
      }
    }
    a[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return a;
}

Eigen::MatrixXd cluster_means(const Eigen::MatrixXd& points, const std::vector<int>& a, int k,
                              const Eigen::MatrixXd& previous, std::vector<int>* counts) {
  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, points.cols());
  std::vector<int> cnt(static_cast<std::size_t>(k), 0);
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    sums.row(a[static_cast<std::size_t>(i)]) += points.row(i);
    ++cnt[static_cast<std::size_t>(a[static_cast<std::size_t>(i)])];
  }
  Eigen::MatrixXd out = previous;
  for (int c = 0; c < k; ++c)
    if (cnt[static_cast<std::size_t>(c)] > 0) out.row(c) = sums.row(c) / cnt[static_cast<std::size_t>(c)];
  if (counts) *counts = std::move(cnt);
  return out;
}

}  // namespace

double within_cluster_ss(const Eigen::MatrixXd& points, const std::vector<int>& assignments,
                         const Eigen::MatrixXd& centroids) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    total += sq_dist(points, i, centroids, assignments[static_cast<std::size_t>(i)]);
  return total;
}

KMeansResult kmeans(const Eigen::MatrixXd& points, int k, std::uint64_t seed) {
  const auto n = points.rows();
  if (k < 1 || k > n) fail(ErrorKind::Domain, "k must lie in [1, number of points]");
  constexpr int kMaxIterations = 300;

  KMeansResult out;
  out.k = k;
  out.seed = seed;
  SplitMix64 rng(seed);

  // k-means++ seeding.
  Eigen::MatrixXd centroids(k, points.cols());
  auto pick_uniform = [&] {
    return std::min<Eigen::Index>(static_cast<Eigen::Index>(rng.uniform() * static_cast<double>(n)), n - 1);
  };
  centroids.row(0) = points.row(pick_uniform());
  std::vector<double> d2(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      d2[static_cast<std::size_t>(i)] = std::min(d2[static_cast<std::size_t>(i)], sq_dist(points, i, centroids, c - 1));
      total += d2[static_cast<std::size_t>(i)];
    }
    Eigen::Index chosen = n - 1;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += d2[static_cast<std::size_t>(i)];
        if (acc > target && d2[static_cast<std::size_t>(i)] > 0.0) {
          chosen = i;
          break;
        }
      }
    } else {
      chosen = pick_uniform();
    }
    centroids.row(c) = points.row(chosen);
  }

  std::vector<int> current;
  for (int it = 0; it < kMaxIterations; ++it) {
    std::vector<int> next = assign(points, centroids);
    out.inertia_trace.push_back(within_cluster_ss(points, next, centroids));
    out.iterations = it + 1;
    const bool converged = next == current;
    current = std::move(next);
    if (converged) break;

    std::vector<int> counts;
    centroids = cluster_means(points, current, k, centroids, &counts);
    // Empty clusters take the point farthest from its own centroid.
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) continue;
      Eigen::Index far = -1;
      double fd = -1.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const int own = current[static_cast<std::size_t>(i)];
        if (counts[static_cast<std::size_t>(own)] < 2) continue;
        const double d = sq_dist(points, i, centroids, own);
        if (d > fd) {
          fd = d;
          far = i;
        }
      }
      if (far < 0) break;
      const int own = current[static_cast<std::size_t>(far)];
      current[static_cast<std::size_t>(far)] = c;
      --counts[static_cast<std::size_t>(own)];
      counts[static_cast<std::size_t>(c)] = 1;
      centroids = cluster_means(points, current, k, centroids, nullptr);
    }
  }

  out.assignments = current;
  out.centroids = cluster_means(points, current, k, centroids, nullptr);
  out.inertia = within_cluster_ss(points, current, out.centroids);
  if (out.inertia < out.inertia_trace.back()) out.inertia_trace.push_back(out.inertia);
  return out;
}

double rand_index(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) fail(ErrorKind::InvalidArgument, "labelings differ in length");
  const std::size_t n = a.size();
  if (n < 2) return 1.0;
  std::size_t agree = 0, pairs = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      ++pairs;
      agree += (a[i] == a[j]) == (b[i] == b[j]);
    }
  return static_cast<double>(agree) / static_cast<double>(pairs);
}

// ---------------------------------------------------------------------------
// Export

namespace {

std::string short_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

nlohmann::json node_json(const Dendrogram& tree, int node) {
  const int n = static_cast<int>(tree.leaf_count());
  nlohmann::json j;
  if (node < n) {
    j["label"] = tree.labels[static_cast<std::size_t>(node)];
    j["height"] = 0.0;
    j["members"] = nlohmann::json::array({tree.labels[static_cast<std::size_t>(node)]});
    return j;
  }
  const Merge& m = tree.merges[static_cast<std::size_t>(node - n)];
  j["left"] = node_json(tree, m.left);
  j["right"] = node_json(tree, m.right);
  j["height"] = m.height;
  nlohmann::json members = nlohmann::json::array();
  for (int leaf : tree.members(node)) members.push_back(tree.labels[static_cast<std::size_t>(leaf)]);
  j["members"] = members;
  return j;
}

std::string newick_label(const std::string& s) {
  if (s.find_first_of(" ()[]':;,\t\n") == std::string::npos && !s.empty()) return s;
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out.push_back('\'');
    out.push_back(c);
  }
  out.push_back('\'');
  return out;
}

double node_height(const Dendrogram& tree, int node) {
  const int n = static_cast<int>(tree.leaf_count());
  return node < n ? 0.0 : tree.merges[static_cast<std::size_t>(node - n)].height;
}

void newick_node(const Dendrogram& tree, int node, std::string& out) {
  const int n = static_cast<int>(tree.leaf_count());
  if (node < n) {
    out += newick_label(tree.labels[static_cast<std::size_t>(node)]);
    return;
  }
  const Merge& m = tree.merges[static_cast<std::size_t>(node - n)];
  out += '(';
  newick_node(tree, m.left, out);
  out += ':' + short_number(m.height - node_height(tree, m.left));
  out += ',';
  newick_node(tree, m.right, out);
  out += ':' + short_number(m.height - node_height(tree, m.right));
  out += ')';
}

int root_node(const Dendrogram& tree) {
  const int n = static_cast<int>(tree.leaf_count());
  return tree.merges.empty() ? 0 : n + static_cast<int>(tree.merges.size()) - 1;
}

}  // namespace

std::string dendrogram_to_json(const Dendrogram& tree) {
  return node_json(tree, root_node(tree)).dump();
}

std::string dendrogram_to_newick(const Dendrogram& tree) {
  std::string out;
  newick_node(tree, root_node(tree), out);
  out += ";\n";
  return out;
}

}  // namespace finpref
