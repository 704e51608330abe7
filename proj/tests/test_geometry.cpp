#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mailtopics/geometry.hpp"
#include "oracles.hpp"
#include "synth.hpp"

using namespace mailtopics;

namespace {

// Gaussian-ish blobs from sums of uniforms, centered on a scaled simplex.
RowMatrix blobs(synth::Rng& rng, int per_blob, int num_blobs, int dim, double spread, std::vector<int>* truth) {
  RowMatrix x(per_blob * num_blobs, dim);
  for (int i = 0; i < per_blob * num_blobs; ++i) {
    const int b = i % num_blobs;
    if (truth) truth->push_back(b);
    for (int d = 0; d < dim; ++d) {
      double noise = 0.0;
      for (int s = 0; s < 4; ++s) noise += rng.uniform() - 0.5;
      x(i, d) = (d == b % dim ? 10.0 * (1 + b / dim) : 0.0) + spread * noise;
    }
  }
  return x;
}

std::vector<std::vector<double>> to_rows(const RowMatrix& m) {
  std::vector<std::vector<double>> out(static_cast<size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) out[i].assign(m.row(i).data(), m.row(i).data() + m.cols());
  return out;
}

}  // namespace

TEST_CASE("PCA components match a Jacobi eigensolver") {
  synth::Rng rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 20 + static_cast<int>(rng.below(60));
    const int d = 3 + static_cast<int>(rng.below(6));
    RowMatrix x(n, d);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < d; ++j) x(i, j) = (rng.uniform() - 0.5) * static_cast<double>(j + 1);
    const int out = 1 + static_cast<int>(rng.below(static_cast<size_t>(d)));
    const ReducerModel m = geometry::fit_reducer(x, out, 5);

    RowMatrix centered = x.rowwise() - x.colwise().mean();
    const auto eig = oracle::jacobi(oracle::covariance(to_rows(centered)));
    for (int r = 0; r < out; ++r) {
      CHECK(m.explained_variance[r] == doctest::Approx(eig.values[r]).epsilon(1e-9));
      std::vector<double> v = eig.vectors[r];
      const auto arg = std::max_element(v.begin(), v.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });
      if (*arg < 0)
        for (double& e : v) e = -e;
      for (int j = 0; j < d; ++j) CHECK(m.components(r, j) == doctest::Approx(v[j]).epsilon(1e-6).scale(1.0));
    }
    // Rows are orthonormal.
    const Eigen::MatrixXd gram = m.components * m.components.transpose();
    CHECK((gram - Eigen::MatrixXd::Identity(out, out)).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(m.seed == 5);
  }
}

TEST_CASE("projection centers and rotates") {
  synth::Rng rng(22);
  const RowMatrix x = blobs(rng, 30, 3, 6, 1.0, nullptr);
  const ReducerModel m = geometry::fit_reducer(x, 3, 0);
  const RowMatrix p = geometry::project_batch(m, x);
  CHECK(p.rows() == x.rows());
  CHECK(p.cols() == 3);
  CHECK(p.colwise().mean().cwiseAbs().maxCoeff() < 1e-9);
  CHECK((geometry::project(m, x.row(4).transpose()) - p.row(4).transpose()).norm() < 1e-12);
  CHECK_THROWS_AS(geometry::project(m, Vector::Zero(2)), Error);
  CHECK_THROWS_AS(geometry::fit_reducer(x, 7, 0), Error);
  CHECK_THROWS_AS(geometry::fit_reducer(x.topRows(2), 3, 0), Error);
}

TEST_CASE("density clustering recovers separated blobs") {
  synth::Rng rng(23);
  std::vector<int> truth;
  const RowMatrix x = blobs(rng, 60, 3, 3, 1.0, &truth);
  ClusterConfig cfg;
  cfg.min_cluster_size = 20;
  const ClusterResult r = geometry::cluster(x, cfg);
  CHECK(r.K == 3);
  CHECK(oracle::purity(r.labels, truth) > 0.95);
  CHECK(std::accumulate(r.sizes.begin(), r.sizes.end(), 0) + r.outlier_count() == x.rows());
}

TEST_CASE("density clusters respect min_cluster_size") {
  synth::Rng rng(24);
  for (int trial = 0; trial < 12; ++trial) {
    const int nb = 1 + static_cast<int>(rng.below(4));
    const int per = 10 + static_cast<int>(rng.below(40));
    const RowMatrix x = blobs(rng, per, nb, 3, 0.5 + 3.0 * rng.uniform(), nullptr);
    ClusterConfig cfg;
    cfg.min_cluster_size = 2 + static_cast<int>(rng.below(30));
    const ClusterResult r = geometry::cluster(x, cfg);
    for (int s : r.sizes) CHECK(s >= cfg.min_cluster_size);
    for (int l : r.labels) CHECK((l >= -1 && l < r.K));
    for (int k = 0; k < r.K; ++k)
      CHECK(std::count(r.labels.begin(), r.labels.end(), k) == r.sizes[k]);
  }
}

TEST_CASE("density clustering falls back to one cluster") {
  synth::Rng rng(25);
  const RowMatrix x = blobs(rng, 40, 1, 2, 1.0, nullptr);
  ClusterConfig cfg;
  cfg.min_cluster_size = 30;
  const ClusterResult r = geometry::cluster(x, cfg);
  CHECK(r.K == 1);
  CHECK(r.outlier_count() == 0);

  cfg.min_cluster_size = 50;
  const ClusterResult none = geometry::cluster(x, cfg);
  CHECK(none.K == 0);
  CHECK(none.outlier_count() == 40);
}

TEST_CASE("density clustering is invariant to input order") {
  synth::Rng rng(26);
  const RowMatrix x = blobs(rng, 40, 3, 3, 1.0, nullptr);
  ClusterConfig cfg;
  cfg.min_cluster_size = 15;
  const ClusterResult base = geometry::cluster(x, cfg);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<int> perm(static_cast<size_t>(x.rows()));
    std::iota(perm.begin(), perm.end(), 0);
    for (size_t i = perm.size() - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
    RowMatrix y(x.rows(), x.cols());
    for (size_t i = 0; i < perm.size(); ++i) y.row(static_cast<Eigen::Index>(i)) = x.row(perm[i]);
    const ClusterResult r = geometry::cluster(y, cfg);
    std::vector<int> back(perm.size());
    for (size_t i = 0; i < perm.size(); ++i) back[perm[i]] = r.labels[i];
    CHECK(oracle::same_partition(base.labels, back));
  }
}

TEST_CASE("clustering is deterministic") {
  synth::Rng rng(27);
  const RowMatrix x = blobs(rng, 30, 4, 4, 2.0, nullptr);
  ClusterConfig cfg;
  cfg.min_cluster_size = 10;
  CHECK(geometry::cluster(x, cfg).labels == geometry::cluster(x, cfg).labels);
  cfg.algorithm = ClusterConfig::Algorithm::KMeans;
  cfg.k = 4;
  cfg.seed = 9;
  const auto a = geometry::cluster(x, cfg);
  const auto b = geometry::cluster(x, cfg);
  CHECK(a.labels == b.labels);
  CHECK(a.centroids == b.centroids);
}

TEST_CASE("k-means objective never increases and centroids are member means") {
  synth::Rng rng(28);
  for (int trial = 0; trial < 10; ++trial) {
    const RowMatrix x = blobs(rng, 25, 4, 3, 3.0, nullptr);
    ClusterConfig cfg;
    cfg.algorithm = ClusterConfig::Algorithm::KMeans;
    cfg.k = 2 + static_cast<int>(rng.below(5));
    cfg.seed = rng.next();
    const ClusterResult r = geometry::cluster(x, cfg);
    REQUIRE_FALSE(r.wcss_trace.empty());
    for (size_t i = 1; i < r.wcss_trace.size(); ++i) CHECK(r.wcss_trace[i] <= r.wcss_trace[i - 1] * (1 + 1e-12));
    CHECK(r.outlier_count() == 0);
    for (int k = 0; k < r.K; ++k) {
      Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(x.cols());
      int count = 0;
      for (Eigen::Index i = 0; i < x.rows(); ++i)
        if (r.labels[i] == k) {
          mean += x.row(i);
          ++count;
        }
      CHECK(count == r.sizes[k]);
      CHECK((mean / count - r.centroids.row(k)).norm() < 1e-9);
    }
  }
}

TEST_CASE("k-means validation") {
  const RowMatrix x = RowMatrix::Random(5, 2);
  ClusterConfig cfg;
  cfg.algorithm = ClusterConfig::Algorithm::KMeans;
  CHECK_THROWS_AS(geometry::cluster(x, cfg), Error);
  cfg.k = 6;
  CHECK_THROWS_AS(geometry::cluster(x, cfg), Error);
  CHECK_THROWS_AS(geometry::cluster(RowMatrix(0, 2), cfg), Error);
}

TEST_CASE("nearest centroid uses cosine distance, ties to the lowest id") {
  ClusterResult r;
  r.K = 3;
  r.centroids.resize(3, 2);
  r.centroids << 1, 0, 0, 1, 0, 2;
  const auto near = geometry::nearest_centroid(r, (Vector(2) << 0, 5).finished());
  CHECK(near.topic == 1);
  CHECK(near.distances[1] == doctest::Approx(0.0));
  CHECK(near.distances[0] == doctest::Approx(1.0));
  CHECK(geometry::nearest_centroid(r, (Vector(2) << 3, 0.1).finished()).topic == 0);
  CHECK_THROWS_AS(geometry::nearest_centroid(ClusterResult{}, Vector::Zero(2)), Error);
}

TEST_CASE("single linkage merges every point") {
  synth::Rng rng(29);
  RowMatrix x(12, 2);
  for (int i = 0; i < 12; ++i) x.row(i) << rng.uniform(), rng.uniform();
  const auto core = kernels::serial::core_distances(x, 2);
  const auto link = geometry::single_linkage(12, kernels::serial::mutual_reachability_mst(x, core));
  REQUIRE(link.size() == 11);
  CHECK(link.back().size == 12);
  for (size_t i = 1; i < link.size(); ++i) CHECK(link[i].distance >= link[i - 1].distance);
  const auto condensed = geometry::condense_tree(link, 12, 3);
  int points = 0;
  for (const auto& e : condensed)
    if (e.child < 12) ++points;
  CHECK(points == 12);
}
