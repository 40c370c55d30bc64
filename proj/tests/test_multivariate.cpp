// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include "json.hpp"
#include <random>

#include "finpref/multivariate.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace finpref;
using testutil::kind_of;

namespace {

std::vector<std::string> labels_for(int n) {
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) out.push_back("s" + std::to_string(10 + i));
  return out;
}

DistanceMatrix from_ints(const std::vector<std::vector<std::int64_t>>& m) {
  const int n = static_cast<int>(m.size());
  DistanceMatrix d;
  d.labels = labels_for(n);
  d.d.resize(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) d.d(i, j) = static_cast<double>(m[i][j]);
  return d;
}

std::vector<std::vector<std::int64_t>> random_ints(std::mt19937_64& rng, int n, int hi) {
  std::uniform_int_distribution<int> u(1, hi);
  std::vector<std::vector<std::int64_t>> m(n, std::vector<std::int64_t>(n, 0));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) m[i][j] = m[j][i] = u(rng);
  return m;
}

oracle::Method to_oracle(Linkage l) {
  switch (l) {
    case Linkage::Single: return oracle::Method::Single;
    case Linkage::Complete: return oracle::Method::Complete;
    case Linkage::Average: return oracle::Method::Average;
  }
  return oracle::Method::Average;
}

std::vector<int> sorted_members(const Dendrogram& t, int node) {
  auto m = t.members(node);
  std::sort(m.begin(), m.end());
  return m;
}

std::set<std::set<int>> as_partition(const std::vector<int>& labels) {
  std::map<int, std::set<int>> groups;
  for (std::size_t i = 0; i < labels.size(); ++i) groups[labels[i]].insert(static_cast<int>(i));
  std::set<std::set<int>> out;
  for (auto& [_, g] : groups) out.insert(g);
  return out;
}

DistanceMatrix three_point() {
  DistanceMatrix d;
  d.labels = {"A", "B", "C"};
  d.d.resize(3, 3);
  d.d << 0, 1, 4, 1, 0, 5, 4, 5, 0;
  return d;
}

std::vector<std::vector<double>> rows_of(const Eigen::MatrixXd& m) {
  std::vector<std::vector<double>> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out[static_cast<std::size_t>(i)].push_back(m(i, j));
  return out;
}

Eigen::MatrixXd blobs(std::mt19937_64& rng, int per, std::vector<int>* truth) {
  const double centers[3][2] = {{0, 0}, {20, 0}, {0, 20}};
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd p(3 * per, 2);
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < per; ++i) {
      p(c * per + i, 0) = centers[c][0] + g(rng);
      p(c * per + i, 1) = centers[c][1] + g(rng);
      truth->push_back(c);
    }
  return p;
}

// 14 items where items 5-12 load on one shared factor.
Eigen::MatrixXd risk_block(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd x(n, 14);
  for (int i = 0; i < n; ++i) {
    const double f = g(rng);
    for (int j = 0; j < 14; ++j) x(i, j) = (j >= 4 && j <= 11) ? 3.0 * f + 0.5 * g(rng) : g(rng);
  }
  return x;
}

}  // namespace

TEST_SUITE("multivariate") {
  TEST_CASE("string conversions") {
    CHECK(metric_from_string("correlation") == Metric::Correlation);
    CHECK(linkage_from_string(to_string(Linkage::Complete)) == Linkage::Complete);
    CHECK(kind_of([] { linkage_from_string("ward"); }) == ErrorKind::Config);
    CHECK(kind_of([] { metric_from_string("cosine"); }) == ErrorKind::Config);
  }

  TEST_CASE("correlation distance") {
    Eigen::VectorXd v(5), w(5);
    v << 1, 4, 2, 8, 5;
    CHECK(correlation_distance(v, v) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(correlation_distance(v, 3.0 * v.array() + 7.0) == doctest::Approx(0.0).scale(1).epsilon(1e-12));
    CHECK(correlation_distance(v, -v) == doctest::Approx(2.0));
    w << 3, 1, 4, 1, 5;
    CHECK(correlation_distance(v, w) == doctest::Approx(correlation_distance(w, v)));
    CHECK(correlation_distance(v, w) == doctest::Approx(correlation_distance(v * 2.5, w.array() + 3)));
    Eigen::VectorXd flat = Eigen::VectorXd::Constant(5, 2.0);
    CHECK(kind_of([&] { correlation_distance(v, flat); }) == ErrorKind::Domain);
    CHECK(kind_of([&] { correlation_distance(v.head(2), w.head(2)); }) == ErrorKind::Domain);
    CHECK(kind_of([&] { correlation_distance(v, w.head(4)); }) == ErrorKind::Domain);
  }

  TEST_CASE("distance matrix validation") {
    DistanceMatrix d = three_point();
    CHECK_NOTHROW(validate_distance_matrix(d));
    d.d(0, 1) = 2;
    CHECK(kind_of([&] { validate_distance_matrix(d); }) == ErrorKind::InvalidArgument);
    d = three_point();
    d.d(1, 1) = 0.5;
    CHECK(kind_of([&] { validate_distance_matrix(d); }) == ErrorKind::InvalidArgument);
    d = three_point();
    d.d(0, 2) = d.d(2, 0) = -1;
    CHECK(kind_of([&] { validate_distance_matrix(d); }) == ErrorKind::InvalidArgument);
    Eigen::MatrixXd data(2, 3);
    data << 1, 2, 3, 4, 5, 6;
    CHECK(kind_of([&] { distance_matrix(data, {"x"}, Metric::Euclidean); }) == ErrorKind::InvalidArgument);
    const auto e = distance_matrix(data, {"x", "y"}, Metric::Euclidean);
    CHECK(e.d(0, 1) == doctest::Approx(std::sqrt(27.0)));
  }

  TEST_CASE("hand-worked three-point dendrogram") {
    const auto avg = linkage(three_point(), Linkage::Average);
    REQUIRE(avg.merges.size() == 2);
    CHECK(avg.merges[0].left == 0);
    CHECK(avg.merges[0].right == 1);
    CHECK(avg.merges[0].height == 1.0);
    CHECK(avg.merges[1].height == 4.5);
    CHECK(linkage(three_point(), Linkage::Single).merges[1].height == 4.0);
    CHECK(linkage(three_point(), Linkage::Complete).merges[1].height == 5.0);
    CHECK(cut(avg, 2) == std::vector<int>{0, 0, 1});
    CHECK(cut(avg, 1) == std::vector<int>{0, 0, 0});
    CHECK(cut(avg, 3) == std::vector<int>{0, 1, 2});
    CHECK(kind_of([&] { cut(avg, 0); }) == ErrorKind::Domain);
    CHECK(kind_of([&] { cut(avg, 4); }) == ErrorKind::Domain);

    DistanceMatrix two;
    two.labels = {"p", "q"};
    two.d.resize(2, 2);
    two.d << 0, 0.25, 0.25, 0;
    CHECK(linkage(two, Linkage::Single).merges.at(0).height == 0.25);
    DistanceMatrix one;
    one.labels = {"p"};
    one.d = Eigen::MatrixXd::Zero(1, 1);
    CHECK(kind_of([&] { linkage(one, Linkage::Average); }) == ErrorKind::Domain);
  }

  TEST_CASE("ties break on the lowest label pair") {
    DistanceMatrix d;
    d.labels = {"d", "c", "b", "a"};
    d.d = Eigen::MatrixXd::Constant(4, 4, 1.0);
    d.d.diagonal().setZero();
    const auto t = linkage(d, Linkage::Single);
    // "a" (index 3) and "b" (index 2) merge first with the lower label on the left.
    CHECK(t.merges[0].left == 3);
    CHECK(t.merges[0].right == 2);
  }

  TEST_CASE("linkage matches the brute-force oracle on small integer matrices") {
    std::mt19937_64 rng(2024);
    int instances = 0;
    for (int rep = 0; rep < 120; ++rep) {
      const int n = 2 + rep % 6;
      const auto m = random_ints(rng, n, rep % 2 ? 4 : 1000);  // few values force ties
      const auto dist = from_ints(m);
      for (Linkage method : {Linkage::Single, Linkage::Complete, Linkage::Average}) {
        const auto tree = linkage(dist, method);
        const auto expect = oracle::agglomerate(m, to_oracle(method));
        REQUIRE(tree.merges.size() == expect.size());
        for (std::size_t s = 0; s < expect.size(); ++s) {
          CHECK(sorted_members(tree, tree.merges[s].left) == expect[s].left);
          CHECK(sorted_members(tree, tree.merges[s].right) == expect[s].right);
          CHECK(tree.merges[s].height == doctest::Approx(expect[s].height).epsilon(1e-12));
          if (s > 0) CHECK(tree.merges[s].height >= tree.merges[s - 1].height);
        }
        for (int k = 1; k <= n; ++k) {
          const auto labels = cut(tree, k);
          CHECK(std::set<int>(labels.begin(), labels.end()).size() == static_cast<std::size_t>(k));
          CHECK(as_partition(labels) == oracle::partition_at(n, expect, k));
        }
        ++instances;
      }
    }
    CHECK(instances == 360);
  }

  TEST_CASE("heights are monotone on real-valued inputs") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-5, 5);
    for (int rep = 0; rep < 40; ++rep) {
      const int n = 3 + rep % 20;
      Eigen::MatrixXd data(n, 14);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < 14; ++j) data(i, j) = u(rng);
      for (Metric metric : {Metric::Correlation, Metric::Euclidean}) {
        const auto dist = distance_matrix(data, labels_for(n), metric);
        for (Linkage method : {Linkage::Single, Linkage::Complete, Linkage::Average}) {
          const auto tree = linkage(dist, method);
          for (std::size_t s = 1; s < tree.merges.size(); ++s)
            CHECK(tree.merges[s].height >= tree.merges[s - 1].height - 1e-12);
          CHECK(tree.merges.back().size == n);
        }
      }
    }
  }

  TEST_CASE("silhouette") {
    // Two tight clusters far apart.
    DistanceMatrix d;
    d.labels = labels_for(10);
    d.d.resize(10, 10);
    for (int i = 0; i < 10; ++i)
      for (int j = 0; j < 10; ++j) d.d(i, j) = i == j ? 0.0 : ((i < 5) == (j < 5) ? 0.01 : 10.0);
    std::vector<int> planted = {0, 0, 0, 0, 0, 1, 1, 1, 1, 1};
    CHECK(silhouette(d, planted).mean > 0.99);

    DistanceMatrix eq = d;
    eq.d = Eigen::MatrixXd::Constant(10, 10, 3.0);
    eq.d.diagonal().setZero();
    CHECK(std::fabs(silhouette(eq, planted).mean) <= 1e-12);

    const auto single = silhouette(three_point(), {0, 0, 1});
    CHECK(single.per_subject[2] == 0.0);
    CHECK(kind_of([&] { silhouette(d, std::vector<int>(10, 0)); }) == ErrorKind::Domain);
    CHECK(kind_of([&] { silhouette(d, {0, 1}); }) == ErrorKind::InvalidArgument);

    std::mt19937_64 rng(99);
    for (int rep = 0; rep < 100; ++rep) {
      const int n = 3 + rep % 12;
      std::uniform_real_distribution<double> u(0.0, 1.0);
      std::vector<std::vector<double>> m(n, std::vector<double>(n, 0.0));
      DistanceMatrix r;
      r.labels = labels_for(n);
      r.d = Eigen::MatrixXd::Zero(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) m[i][j] = m[j][i] = r.d(i, j) = r.d(j, i) = u(rng);
      std::vector<int> labels(n);
      for (int i = 0; i < n; ++i) labels[i] = i < 2 ? i : static_cast<int>(rng() % 3);
      const auto s = silhouette(r, labels);
      for (double v : s.per_subject) CHECK((v >= -1.0 && v <= 1.0));
      CHECK(s.mean == doctest::Approx(oracle::silhouette_mean(m, labels)).epsilon(1e-12));
    }
  }

  TEST_CASE("planted clusters beat a random labeling") {
    std::mt19937_64 rng(3);
    std::vector<int> truth;
    const Eigen::MatrixXd p = blobs(rng, 10, &truth);
    const auto dist = distance_matrix(p, labels_for(30), Metric::Euclidean);
    std::vector<int> random_labels(30);
    for (int i = 0; i < 30; ++i) random_labels[i] = i % 3;
    std::shuffle(random_labels.begin(), random_labels.end(), rng);
    CHECK(silhouette(dist, truth).mean >= silhouette(dist, random_labels).mean);
  }

  TEST_CASE("select_linkage") {
    // A chain of close points bridging two groups: single linkage chains them
    // while average linkage splits the planted groups.
    Eigen::MatrixXd p(12, 1);
    p << 0, 0.1, 0.2, 0.3, 1.0, 1.7, 2.4, 3.1, 3.8, 3.9, 4.0, 4.1;
    const auto dist = distance_matrix(p, labels_for(12), Metric::Euclidean);
    const auto sel = select_linkage(dist, {Linkage::Average, Linkage::Single, Linkage::Complete}, 2);
    REQUIRE(sel.scores.size() == 3);
    CHECK(sel.scores[0].method == Linkage::Single);
    for (const auto& s : sel.scores) CHECK(s.silhouette <= sel.scores[static_cast<int>(sel.best)].silhouette);
    CHECK(sel.best != Linkage::Single);

    // All methods identical on the three-point example at k=2.
    CHECK(select_linkage(three_point(), {Linkage::Complete, Linkage::Average}, 2).best == Linkage::Complete);
    CHECK(select_linkage(three_point(), {Linkage::Average}, 2).best == Linkage::Average);
    CHECK(kind_of([] { select_linkage(three_point(), {}, 2); }) == ErrorKind::InvalidArgument);
  }

  TEST_CASE("z-score drops constant columns") {
    Eigen::MatrixXd m(3, 3);
    m << 1, 5, 10, 2, 5, 20, 3, 5, 60;
    const auto z = zscore(m);
    CHECK(z.kept_columns == std::vector<int>{0, 2});
    CHECK(z.data.cols() == 2);
    CHECK(z.notices.size() == 1);
    CHECK(z.data.col(0).mean() == doctest::Approx(0.0).scale(1));
    CHECK(std::sqrt(z.data.col(1).squaredNorm() / 2.0) == doctest::Approx(1.0));
    CHECK(kind_of([&] { zscore(m.topRows(1)); }) == ErrorKind::Domain);
  }

  TEST_CASE("PCA agrees with a Jacobi eigensolver") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int rep = 0; rep < 10; ++rep) {
      const int n = 20 + rep, p = 3 + rep % 6;
      Eigen::MatrixXd x(n, p);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < p; ++j) x(i, j) = g(rng) * (j + 1) + (j > 0 ? 0.5 * x(i, j - 1) : 0.0);
      const auto r = pca(x, p);
      const auto ref = oracle::jacobi(oracle::covariance(rows_of(x)));
      for (int c = 0; c < p; ++c) {
        CHECK(r.eigenvalues(c) == doctest::Approx(ref.values[c]).epsilon(1e-9));
        double dot = 0;
        for (int j = 0; j < p; ++j) dot += r.loadings(j, c) * ref.vectors[c][j];
        CHECK(std::fabs(dot) == doctest::Approx(1.0).epsilon(1e-8));
      }
      // Orthonormal loadings, sorted ratios summing to one.
      const Eigen::MatrixXd gram = r.loadings.transpose() * r.loadings;
      CHECK((gram - Eigen::MatrixXd::Identity(p, p)).cwiseAbs().maxCoeff() < 1e-8);
      CHECK(r.explained_variance_ratio.sum() == doctest::Approx(1.0).epsilon(1e-12));
      for (int c = 1; c < p; ++c) CHECK(r.explained_variance_ratio(c) <= r.explained_variance_ratio(c - 1));
      CHECK(r.explained_variance_ratio.minCoeff() >= 0.0);
      // Full reconstruction and centered scores.
      const Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
      CHECK((r.scores * r.loadings.transpose() - centered).cwiseAbs().maxCoeff() < 1e-8);
      CHECK(r.scores.colwise().mean().cwiseAbs().maxCoeff() < 1e-9);
      // Sign convention.
      for (int c = 0; c < p; ++c) {
        Eigen::Index arg;
        r.loadings.col(c).cwiseAbs().maxCoeff(&arg);
        CHECK(r.loadings(arg, c) > 0);
      }
      const Eigen::MatrixXd contrib = contributions(r);
      for (int c = 0; c < p; ++c) CHECK(contrib.col(c).sum() == doctest::Approx(100.0).epsilon(1e-8));
    }
  }

  TEST_CASE("PCA rank handling") {
    Eigen::MatrixXd x(6, 2);
    for (int i = 0; i < 6; ++i) {
      x(i, 0) = i * 1.5 - 2;
      x(i, 1) = 2 * x(i, 0);
    }
    CHECK(numerical_rank(x) == 1);
    const auto r = pca(x, 1);
    CHECK(r.explained_variance_ratio(0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(kind_of([&] { pca(x, 2); }) == ErrorKind::Domain);
    CHECK(kind_of([&] { pca(x, 0); }) == ErrorKind::Domain);
    CHECK(kind_of([&] { pca(x.topRows(1), 1); }) == ErrorKind::Domain);
  }

  TEST_CASE("isotropic sample splits variance evenly") {
    std::mt19937_64 rng(42);
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::MatrixXd x(10000, 2);
    for (int i = 0; i < 10000; ++i) x(i, 0) = g(rng), x(i, 1) = g(rng);
    const auto r = pca(x, 2);
    CHECK(std::fabs(r.explained_variance_ratio(0) - 0.5) < 0.05);
    CHECK(std::fabs(r.explained_variance_ratio(1) - 0.5) < 0.05);
  }

  TEST_CASE("contributions") {
    PcaResult r;
    r.loadings = Eigen::MatrixXd::Zero(14, 2);
    r.loadings(0, 0) = 1.0;
    r.loadings.col(1).setConstant(1.0 / std::sqrt(14.0));
    const Eigen::MatrixXd c = contributions(r);
    CHECK(c(0, 0) == 100.0);
    CHECK(c(5, 0) == 0.0);
    for (int j = 0; j < 14; ++j) CHECK(c(j, 1) == doctest::Approx(100.0 / 14.0));
  }

  TEST_CASE("risk-block factor dominates the first component") {
    std::mt19937_64 rng(5);
    const auto z = zscore(risk_block(rng, 300));
    const auto r = pca(z.data, 3);
    const auto ref = oracle::jacobi(oracle::covariance(rows_of(z.data)));
    CHECK(r.eigenvalues(0) == doctest::Approx(ref.values[0]).epsilon(1e-9));
    const Eigen::VectorXd c1 = contributions(r).col(0);
    std::vector<int> order(14);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return c1(a) > c1(b); });
    std::set<int> top(order.begin(), order.begin() + 8);
    CHECK(top == std::set<int>{4, 5, 6, 7, 8, 9, 10, 11});
  }

  TEST_CASE("k-means") {
    std::mt19937_64 rng(8);
    std::vector<int> truth;
    const Eigen::MatrixXd p = blobs(rng, 20, &truth);
    const auto r = kmeans(p, 3, 42);
    CHECK(rand_index(r.assignments, truth) == 1.0);
    for (std::size_t i = 1; i < r.inertia_trace.size(); ++i)
      CHECK(r.inertia_trace[i] <= r.inertia_trace[i - 1] + 1e-9);
    CHECK(r.inertia == doctest::Approx(within_cluster_ss(p, r.assignments, r.centroids)));

    const auto again = kmeans(p, 3, 42);
    CHECK(again.assignments == r.assignments);
    CHECK(again.inertia_trace == r.inertia_trace);
    CHECK((again.centroids.array() == r.centroids.array()).all());

    const auto one = kmeans(p, 1, 1);
    CHECK((one.centroids.row(0) - p.colwise().mean()).cwiseAbs().maxCoeff() < 1e-9);
    const Eigen::MatrixXd centered = p.rowwise() - p.colwise().mean();
    CHECK(one.inertia == doctest::Approx(centered.squaredNorm()));
    CHECK(kmeans(p.topRows(5), 5, 1).inertia == doctest::Approx(0.0).scale(1));
    CHECK(kind_of([&] { kmeans(p.topRows(2), 3, 1); }) == ErrorKind::Domain);
    CHECK(kind_of([&] { kmeans(p, 0, 1); }) == ErrorKind::Domain);

    // Random data: the trace still never rises.
    std::uniform_real_distribution<double> u(0, 1);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      Eigen::MatrixXd q(40, 3);
      for (int i = 0; i < 40; ++i)
        for (int j = 0; j < 3; ++j) q(i, j) = u(rng);
      const auto k = kmeans(q, 4, seed);
      for (std::size_t i = 1; i < k.inertia_trace.size(); ++i)
        CHECK(k.inertia_trace[i] <= k.inertia_trace[i - 1] + 1e-12);
    }
  }

  TEST_CASE("rand index") {
    CHECK(rand_index({0, 0, 1, 1}, {1, 1, 0, 0}) == 1.0);
    CHECK(rand_index({0, 0, 1, 1}, {0, 1, 0, 1}) == doctest::Approx(2.0 / 6.0));
    CHECK(kind_of([] { rand_index({0}, {0, 1}); }) == ErrorKind::InvalidArgument);
  }

  TEST_CASE("dendrogram export") {
    DistanceMatrix d = three_point();
    d.labels = {"Korea, Rep.", "B", "C"};
    const auto t = linkage(d, Linkage::Average);
    const auto j = nlohmann::json::parse(dendrogram_to_json(t));
    CHECK(j["height"] == 4.5);
    CHECK(j["members"].size() == 3);
    CHECK(j["left"]["left"]["label"] == "B");  // lower label on the left
    CHECK(dendrogram_to_newick(t) == "((B:1,'Korea, Rep.':1):3.5,C:4.5);\n");
  }
}
