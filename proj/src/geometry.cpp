#include "mailtopics/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <stdexcept>

#include "mailtopics/error.hpp"
#include "mailtopics/kernels.hpp"

namespace mailtopics {

int ClusterResult::outlier_count() const {
  return static_cast<int>(std::count(labels.begin(), labels.end(), -1));
}

namespace geometry {

ReducerModel fit_reducer(const RowMatrix& vectors, int out_dim, std::uint64_t seed) {
  if (out_dim < 1) throw Error("invalid_argument", "out_dim must be >= 1");
  if (vectors.rows() < out_dim)
    throw Error("insufficient_data", "need at least " + std::to_string(out_dim) + " samples, got " +
                                         std::to_string(vectors.rows()));
  if (vectors.cols() < out_dim) throw Error("invalid_argument", "out_dim exceeds input dimension");

  ReducerModel model;
  model.seed = seed;
  model.mean = vectors.colwise().mean().transpose();
  const RowMatrix centered = vectors.rowwise() - model.mean.transpose();
  const Eigen::MatrixXd cov = kernels::parallel::covariance(centered);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw Error("numerical_error", "eigendecomposition failed");

  const Eigen::Index d = cov.rows();
  model.components.resize(out_dim, d);
  model.explained_variance.resize(out_dim);
  for (int r = 0; r < out_dim; ++r) {
    const Eigen::Index col = d - 1 - r;
    Vector v = solver.eigenvectors().col(col);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v[arg] < 0) v = -v;
    model.components.row(r) = v.transpose();
    model.explained_variance[r] = std::max(0.0, solver.eigenvalues()[col]);
  }
  return model;
}

ReducedVector project(const ReducerModel& model, const Vector& v) {
  if (v.size() != model.in_dim())
    throw Error("dimension_mismatch", "vector dim " + std::to_string(v.size()) + " != reducer input dim " +
                                          std::to_string(model.in_dim()));
  return model.components * (v - model.mean);
}

RowMatrix project_batch(const ReducerModel& model, const RowMatrix& vectors) {
  if (vectors.cols() != model.in_dim())
    throw Error("dimension_mismatch", "batch dim " + std::to_string(vectors.cols()) + " != reducer input dim " +
                                          std::to_string(model.in_dim()));
  RowMatrix out(vectors.rows(), model.out_dim());
  for (Eigen::Index i = 0; i < vectors.rows(); ++i)
    out.row(i) = (model.components * (vectors.row(i).transpose() - model.mean)).transpose();
  return out;
}

RowMatrix label_centroids(const RowMatrix& points, const std::vector<int>& labels, int K) {
  RowMatrix c = RowMatrix::Zero(K, points.cols());
  std::vector<int> count(static_cast<size_t>(K), 0);
  for (size_t i = 0; i < labels.size(); ++i) {
    const int l = labels[i];
    if (l < 0 || l >= K) continue;
    c.row(l) += points.row(static_cast<Eigen::Index>(i));
    ++count[l];
  }
  for (int k = 0; k < K; ++k)
    if (count[k] > 0) c.row(k) /= static_cast<double>(count[k]);
  return c;
}

std::vector<LinkageNode> single_linkage(int n, std::vector<kernels::MstEdge> edges) {
  std::stable_sort(edges.begin(), edges.end(),
                   [](const kernels::MstEdge& a, const kernels::MstEdge& b) { return a.weight < b.weight; });
  std::vector<int> parent(static_cast<size_t>(2 * n - 1));
  std::iota(parent.begin(), parent.end(), 0);
  std::vector<int> size(static_cast<size_t>(2 * n - 1), 1);
  const auto find = [&](int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  std::vector<LinkageNode> out;
  out.reserve(edges.size());
  int next = n;
  for (const auto& e : edges) {
    const int a = find(e.from);
    const int b = find(e.to);
    parent[a] = parent[b] = next;
    size[next] = size[a] + size[b];
    out.push_back({a, b, e.weight, size[next]});
    ++next;
  }
  return out;
}

namespace {

// Node plus all of its descendants in the single-linkage hierarchy.
std::vector<int> subtree(const std::vector<LinkageNode>& linkage, int n, int root) {
  std::vector<int> out;
  std::deque<int> queue{root};
  while (!queue.empty()) {
    const int node = queue.front();
    queue.pop_front();
    out.push_back(node);
    if (node >= n) {
      queue.push_back(linkage[node - n].left);
      queue.push_back(linkage[node - n].right);
    }
  }
  return out;
}

}  // namespace

std::vector<CondensedEdge> condense_tree(const std::vector<LinkageNode>& linkage, int n, int min_cluster_size) {
  std::vector<CondensedEdge> out;
  if (n < 2) return out;
  double max_lambda = 0.0;
  for (const auto& node : linkage)
    if (node.distance > 0.0) max_lambda = std::max(max_lambda, 1.0 / node.distance);
  // Zero-distance merges (duplicate points) get a finite lambda beyond every real one.
  const double zero_lambda = max_lambda > 0.0 ? 2.0 * max_lambda : 1.0;

  const int root = 2 * n - 2;
  const auto size_of = [&](int node) { return node < n ? 1 : linkage[node - n].size; };
  std::vector<int> relabel(static_cast<size_t>(2 * n - 1), -1);
  std::vector<char> ignore(static_cast<size_t>(2 * n - 1), 0);
  relabel[root] = n;
  int next_label = n + 1;

  for (int node : subtree(linkage, n, root)) {
    if (ignore[node] || node < n) continue;
    const LinkageNode& ln = linkage[node - n];
    const double lambda = ln.distance > 0.0 ? 1.0 / ln.distance : zero_lambda;
    const int left = ln.left;
    const int right = ln.right;
    const int left_count = size_of(left);
    const int right_count = size_of(right);
    const auto spill = [&](int sub_root) {
      for (int sub : subtree(linkage, n, sub_root)) {
        if (sub < n) out.push_back({relabel[node], sub, lambda, 1});
        ignore[sub] = 1;
      }
    };
    if (left_count >= min_cluster_size && right_count >= min_cluster_size) {
      relabel[left] = next_label++;
      out.push_back({relabel[node], relabel[left], lambda, left_count});
      relabel[right] = next_label++;
      out.push_back({relabel[node], relabel[right], lambda, right_count});
    } else if (left_count < min_cluster_size && right_count < min_cluster_size) {
      spill(left);
      spill(right);
    } else if (left_count < min_cluster_size) {
      relabel[right] = relabel[node];
      spill(left);
    } else {
      relabel[left] = relabel[node];
      spill(right);
    }
  }
  return out;
}

namespace {

ClusterResult finish(const RowMatrix& points, std::vector<int> labels, int K) {
  ClusterResult r;
  r.K = K;
  r.sizes.assign(static_cast<size_t>(K), 0);
  for (int l : labels)
    if (l >= 0) ++r.sizes[l];
  r.centroids = label_centroids(points, labels, K);
  r.labels = std::move(labels);
  return r;
}

ClusterResult cluster_density(const RowMatrix& points, const ClusterConfig& cfg) {
  const int n = static_cast<int>(points.rows());
  const int mcs = cfg.min_cluster_size;
  if (mcs < 2) throw Error("invalid_argument", "density clustering needs min_cluster_size >= 2");
  if (n < mcs) return finish(points, std::vector<int>(static_cast<size_t>(n), -1), 0);

  const std::vector<double> core = kernels::parallel::core_distances(points, mcs);
  const auto linkage = single_linkage(n, kernels::parallel::mutual_reachability_mst(points, core));
  const auto condensed = condense_tree(linkage, n, mcs);

  // Cluster ids run from n (root) upward; children always have larger ids than parents.
  int max_cluster = n;
  for (const auto& e : condensed) max_cluster = std::max(max_cluster, std::max(e.parent, e.child_size > 1 ? e.child : n));
  const int num_clusters = max_cluster - n + 1;
  std::vector<double> birth(static_cast<size_t>(num_clusters), 0.0);
  std::vector<double> stability(static_cast<size_t>(num_clusters), 0.0);
  std::vector<int> cluster_parent(static_cast<size_t>(num_clusters), -1);
  std::vector<std::vector<int>> cluster_children(static_cast<size_t>(num_clusters));
  for (const auto& e : condensed) {
    if (e.child_size > 1) {
      birth[e.child - n] = e.lambda;
      cluster_parent[e.child - n] = e.parent;
      cluster_children[e.parent - n].push_back(e.child);
    }
  }
  for (const auto& e : condensed) stability[e.parent - n] += (e.lambda - birth[e.parent - n]) * e.child_size;

  // Excess of mass; the root is never selectable.
  std::vector<char> selected(static_cast<size_t>(num_clusters), 0);
  for (int c = num_clusters - 1; c >= 1; --c) selected[c] = 1;
  for (int c = num_clusters - 1; c >= 1; --c) {
    double subtree_stability = 0.0;
    for (int child : cluster_children[c]) subtree_stability += stability[child - n];
    if (!cluster_children[c].empty() && subtree_stability > stability[c]) {
      selected[c] = 0;
      stability[c] = subtree_stability;
    } else {
      std::deque<int> queue(cluster_children[c].begin(), cluster_children[c].end());
      while (!queue.empty()) {
        const int sub = queue.front();
        queue.pop_front();
        selected[sub - n] = 0;
        for (int g : cluster_children[sub - n]) queue.push_back(g);
      }
    }
  }

  std::vector<int> label_of_cluster(static_cast<size_t>(num_clusters), -1);
  int K = 0;
  for (int c = 1; c < num_clusters; ++c)
    if (selected[c]) label_of_cluster[c] = K++;

  std::vector<int> labels(static_cast<size_t>(n), -1);
  if (K == 0) {
    // Nothing split off the root: the whole input is one cluster.
    std::fill(labels.begin(), labels.end(), 0);
    return finish(points, std::move(labels), 1);
  }
  for (const auto& e : condensed) {
    if (e.child_size != 1 || e.child >= n) continue;
    int c = e.parent;
    while (c != n && !selected[c - n]) c = cluster_parent[c - n];
    labels[e.child] = c == n ? -1 : label_of_cluster[c - n];
  }
  return finish(points, std::move(labels), K);
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double squared_distance(const RowMatrix& a, Eigen::Index i, const RowMatrix& b, Eigen::Index j) {
  return (a.row(i) - b.row(j)).squaredNorm();
}

ClusterResult cluster_kmeans(const RowMatrix& points, const ClusterConfig& cfg) {
  if (!cfg.k || *cfg.k < 1) throw Error("invalid_config", "kmeans requires k >= 1");
  const Eigen::Index n = points.rows();
  const int k = *cfg.k;
  if (k > n) throw Error("insufficient_data", "kmeans k exceeds number of points");
  constexpr int kMaxIter = 300;
  constexpr double kTol = 1e-6;

  std::mt19937_64 rng(cfg.seed);
  RowMatrix centers(k, points.cols());
  std::vector<double> nearest(static_cast<size_t>(n), std::numeric_limits<double>::infinity());
  Eigen::Index first = std::min<Eigen::Index>(static_cast<Eigen::Index>(uniform01(rng) * static_cast<double>(n)), n - 1);
  centers.row(0) = points.row(first);
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], squared_distance(points, i, centers, c - 1));
      total += nearest[i];
    }
    Eigen::Index pick = n - 1;
    if (total > 0.0) {
      const double target = uniform01(rng) * total;
      double acc = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += nearest[i];
        if (acc > target) {
          pick = i;
          break;
        }
      }
    } else {
      pick = c;
    }
    centers.row(c) = points.row(pick);
  }

  std::vector<int> labels(static_cast<size_t>(n), 0);
  std::vector<double> trace;
  for (int iter = 0; iter < kMaxIter; ++iter) {
    double wcss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double best_d = squared_distance(points, i, centers, 0);
      for (int c = 1; c < k; ++c) {
        const double d = squared_distance(points, i, centers, c);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      labels[i] = best;
      wcss += best_d;
    }
    if (!trace.empty() && wcss > trace.back() * (1.0 + 1e-12) + 1e-12)
      throw std::logic_error("kmeans objective increased");
    trace.push_back(wcss);
    RowMatrix updated = label_centroids(points, labels, k);
    std::vector<int> count(static_cast<size_t>(k), 0);
    for (int l : labels) ++count[l];
    double shift = 0.0;
    for (int c = 0; c < k; ++c) {
      if (count[c] == 0) updated.row(c) = centers.row(c);
      shift = std::max(shift, (updated.row(c) - centers.row(c)).squaredNorm());
    }
    centers = std::move(updated);
    if (shift <= kTol) break;
  }

  // Drop empty clusters so sizes stay positive.
  std::vector<int> remap(static_cast<size_t>(k), -1);
  std::vector<int> count(static_cast<size_t>(k), 0);
  for (int l : labels) ++count[l];
  int K = 0;
  for (int c = 0; c < k; ++c)
    if (count[c] > 0) remap[c] = K++;
  for (int& l : labels) l = remap[l];
  ClusterResult r = finish(points, std::move(labels), K);
  r.wcss_trace = std::move(trace);
  return r;
}

}  // namespace

ClusterResult cluster(const RowMatrix& points, const ClusterConfig& cfg) {
  if (points.rows() == 0) throw Error("empty_input", "no points to cluster");
  if (cfg.algorithm == ClusterConfig::Algorithm::KMeans) return cluster_kmeans(points, cfg);
  return cluster_density(points, cfg);
}

NearestCentroid nearest_centroid(const ClusterResult& result, const ReducedVector& p) {
  if (result.K == 0) throw Error("no_topics", "model has no topics");
  if (p.size() != result.centroids.cols()) throw Error("dimension_mismatch", "point dim does not match centroids");
  NearestCentroid out;
  out.distances.resize(static_cast<size_t>(result.K));
  double best = std::numeric_limits<double>::infinity();
  for (int k = 0; k < result.K; ++k) {
    const double d = kernels::cosine_distance(p.data(), result.centroids.row(k).data(), p.size());
    out.distances[k] = d;
    if (d < best) {
      best = d;
      out.topic = k;
    }
  }
  return out;
}

}  // namespace geometry
}  // namespace mailtopics
