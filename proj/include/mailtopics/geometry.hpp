#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mailtopics/kernels.hpp"
#include "mailtopics/linalg.hpp"

namespace mailtopics {

using ReducedVector = Vector;

struct ReducerModel {
  std::string kind = "pca";
  Vector mean;
  RowMatrix components;  // out_dim x in_dim, orthonormal rows
  Vector explained_variance;
  std::uint64_t seed = 0;

  int in_dim() const { return static_cast<int>(components.cols()); }
  int out_dim() const { return static_cast<int>(components.rows()); }
};

struct ClusterConfig {
  enum class Algorithm { Density, KMeans };
  Algorithm algorithm = Algorithm::Density;
  int min_cluster_size = 100;
  std::optional<int> k;  // kmeans only
  std::uint64_t seed = 0;
};

struct ClusterResult {
  std::vector<int> labels;  // -1 = outlier
  int K = 0;
  RowMatrix centroids;  // K x dim, mean of member points
  std::vector<int> sizes;
  std::vector<double> wcss_trace;  // kmeans only: within-cluster SS after each iteration

  int outlier_count() const;
};

namespace geometry {

/// Principal components of `vectors` (rows). Components are ordered by
/// decreasing variance, each sign-fixed so its largest-magnitude entry is
/// positive. PCA is deterministic; the seed is recorded for interface parity
/// with stochastic reducers.
ReducerModel fit_reducer(const RowMatrix& vectors, int out_dim, std::uint64_t seed);

ReducedVector project(const ReducerModel& model, const Vector& v);
RowMatrix project_batch(const ReducerModel& model, const RowMatrix& vectors);

/// Density: mutual-reachability MST (k = min_cluster_size), condensed tree,
/// excess-of-mass selection. When no split ever yields two clusters of
/// min_cluster_size, all points form a single cluster if n >= min_cluster_size.
/// KMeans: seeded k-means++, at most 300 Lloyd iterations, tolerance 1e-6.
ClusterResult cluster(const RowMatrix& points, const ClusterConfig& cfg);

/// Mean of each label's member rows; labels outside [0, K) are ignored.
RowMatrix label_centroids(const RowMatrix& points, const std::vector<int>& labels, int K);

struct NearestCentroid {
  int topic = -1;
  std::vector<double> distances;  // cosine distance to each centroid
};

/// Argmin cosine distance, ties to the lowest topic id.
NearestCentroid nearest_centroid(const ClusterResult& result, const ReducedVector& p);

// Building blocks of the density algorithm, exposed for testing.
struct LinkageNode {
  int left = 0;
  int right = 0;
  double distance = 0.0;
  int size = 0;
};

struct CondensedEdge {
  int parent = 0;
  int child = 0;  // < n: a point; >= n: a cluster
  double lambda = 0.0;
  int child_size = 0;
};

/// Sorts MST edges by weight (stable) and merges with union-find. Node n+i is
/// created by the i-th merge.
std::vector<LinkageNode> single_linkage(int n, std::vector<kernels::MstEdge> edges);

std::vector<CondensedEdge> condense_tree(const std::vector<LinkageNode>& linkage, int n, int min_cluster_size);

}  // namespace geometry
}  // namespace mailtopics
