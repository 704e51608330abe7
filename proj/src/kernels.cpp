#include "mailtopics/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include "mailtopics/utf8.hpp"

namespace mailtopics::kernels {

namespace {

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

double squared_euclidean(const double* a, const double* b, Eigen::Index dim) {
  double s = 0.0;
  for (Eigen::Index d = 0; d < dim; ++d) {
    const double t = a[d] - b[d];
    s += t * t;
  }
  return s;
}

// Distance of point i to its k-th nearest neighbour, counting i itself.
double core_distance_of(const RowMatrix& points, Eigen::Index i, int k, std::vector<double>& scratch) {
  const Eigen::Index n = points.rows();
  const Eigen::Index dim = points.cols();
  scratch.resize(static_cast<size_t>(n));
  for (Eigen::Index j = 0; j < n; ++j) scratch[j] = squared_euclidean(points.row(i).data(), points.row(j).data(), dim);
  const auto kth = static_cast<size_t>(std::clamp<Eigen::Index>(k, 1, n) - 1);
  std::nth_element(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(kth), scratch.end());
  return std::sqrt(scratch[kth]);
}

double mutual_reachability(const RowMatrix& points, std::span<const double> core, Eigen::Index a, Eigen::Index b) {
  const double d = std::sqrt(squared_euclidean(points.row(a).data(), points.row(b).data(), points.cols()));
  return std::max({d, core[a], core[b]});
}

int nearest_of(const RowMatrix& points, Eigen::Index i, const RowMatrix& centroids, RowMatrix& dist) {
  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
    const double d = cosine_distance(points.row(i).data(), centroids.row(c).data(), points.cols());
    dist(i, c) = d;
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  return best;
}

template <bool Parallel>
std::vector<MstEdge> prim(const RowMatrix& points, std::span<const double> core) {
  const auto n = static_cast<std::ptrdiff_t>(points.rows());
  std::vector<MstEdge> edges;
  if (n < 2) return edges;
  edges.reserve(static_cast<size_t>(n - 1));
  std::vector<char> in_tree(static_cast<size_t>(n), 0);
  std::vector<double> best(static_cast<size_t>(n), std::numeric_limits<double>::infinity());
  std::vector<int> source(static_cast<size_t>(n), 0);
  std::ptrdiff_t current = 0;
  in_tree[0] = 1;
  for (std::ptrdiff_t step = 1; step < n; ++step) {
#pragma omp parallel for schedule(static) if (Parallel)
    for (std::ptrdiff_t j = 0; j < n; ++j) {
      if (in_tree[j]) continue;
      const double d = mutual_reachability(points, core, current, j);
      if (d < best[j]) {
        best[j] = d;
        source[j] = static_cast<int>(current);
      }
    }
    std::ptrdiff_t next = -1;
    double next_d = std::numeric_limits<double>::infinity();
    for (std::ptrdiff_t j = 0; j < n; ++j) {
      if (!in_tree[j] && (next < 0 || best[j] < next_d)) {
        next = j;
        next_d = best[j];
      }
    }
    in_tree[next] = 1;
    edges.push_back({source[next], static_cast<int>(next), next_d});
    current = next;
  }
  return edges;
}

}  // namespace

double cosine_distance(const double* a, const double* b, Eigen::Index dim) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (Eigen::Index d = 0; d < dim; ++d) {
    dot += a[d] * b[d];
    na += a[d] * a[d];
    nb += b[d] * b[d];
  }
  if (na == 0.0 || nb == 0.0) return 1.0;
  return 1.0 - dot / (std::sqrt(na) * std::sqrt(nb));
}

void hashed_trigram_embed_one(std::string_view text, int max_tokens, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  if (out.empty()) return;
  // Truncate to the first max_tokens whitespace-delimited tokens.
  std::u32string padded = U" ";
  int tokens = 0;
  bool in_word = false;
  for (char32_t cp : utf8::decode(text)) {
    const bool space = utf8::is_space(cp);
    if (!space && !in_word) {
      if (max_tokens > 0 && tokens == max_tokens) break;
      ++tokens;
      if (padded.size() > 1) padded.push_back(U' ');
    }
    if (!space) padded.push_back(cp);
    in_word = !space;
  }
  if (tokens == 0) return;
  padded.push_back(U' ');
  const auto dim = static_cast<std::uint64_t>(out.size());
  for (size_t i = 0; i + 3 <= padded.size(); ++i) {
    const std::uint64_t h = fnv1a(utf8::encode(std::u32string_view(padded).substr(i, 3)));
    out[h % dim] += (h >> 63) ? -1.0 : 1.0;
  }
  double norm = 0.0;
  for (double v : out) norm += v * v;
  if (norm == 0.0) return;
  norm = std::sqrt(norm);
  for (double& v : out) v /= norm;
}

namespace serial {

std::vector<double> core_distances(const RowMatrix& points, int k) {
  std::vector<double> core(static_cast<size_t>(points.rows()));
  std::vector<double> scratch;
  for (Eigen::Index i = 0; i < points.rows(); ++i) core[i] = core_distance_of(points, i, k, scratch);
  return core;
}

std::vector<MstEdge> mutual_reachability_mst(const RowMatrix& points, std::span<const double> core) {
  return prim<false>(points, core);
}

Eigen::MatrixXd covariance(const RowMatrix& centered) {
  const Eigen::Index n = centered.rows();
  const Eigen::Index d = centered.cols();
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index a = 0; a < d; ++a) {
    for (Eigen::Index b = a; b < d; ++b) {
      double s = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) s += centered(i, a) * centered(i, b);
      cov(a, b) = cov(b, a) = n > 1 ? s / static_cast<double>(n - 1) : 0.0;
    }
  }
  return cov;
}

RowMatrix hashed_trigram_embed(std::span<const std::string> texts, int dim, int max_tokens) {
  RowMatrix out(static_cast<Eigen::Index>(texts.size()), dim);
  for (size_t i = 0; i < texts.size(); ++i)
    hashed_trigram_embed_one(texts[i], max_tokens, std::span<double>(out.row(static_cast<Eigen::Index>(i)).data(), dim));
  return out;
}

std::vector<int> nearest_centroids(const RowMatrix& points, const RowMatrix& centroids, RowMatrix& cosine_distances) {
  cosine_distances.resize(points.rows(), centroids.rows());
  std::vector<int> out(static_cast<size_t>(points.rows()));
  for (Eigen::Index i = 0; i < points.rows(); ++i) out[i] = nearest_of(points, i, centroids, cosine_distances);
  return out;
}

}  // namespace serial

namespace parallel {

std::vector<double> core_distances(const RowMatrix& points, int k) {
  const auto n = static_cast<std::ptrdiff_t>(points.rows());
  std::vector<double> core(static_cast<size_t>(n));
#pragma omp parallel
  {
    std::vector<double> scratch;
#pragma omp for schedule(dynamic, 32)
    for (std::ptrdiff_t i = 0; i < n; ++i) core[i] = core_distance_of(points, i, k, scratch);
  }
  return core;
}

std::vector<MstEdge> mutual_reachability_mst(const RowMatrix& points, std::span<const double> core) {
  return prim<true>(points, core);
}

Eigen::MatrixXd covariance(const RowMatrix& centered) {
  const Eigen::Index n = centered.rows();
  const auto d = static_cast<std::ptrdiff_t>(centered.cols());
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t a = 0; a < d; ++a) {
    for (std::ptrdiff_t b = a; b < d; ++b) {
      double s = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) s += centered(i, a) * centered(i, b);
      cov(a, b) = cov(b, a) = n > 1 ? s / static_cast<double>(n - 1) : 0.0;
    }
  }
  return cov;
}

RowMatrix hashed_trigram_embed(std::span<const std::string> texts, int dim, int max_tokens) {
  RowMatrix out(static_cast<Eigen::Index>(texts.size()), dim);
  const auto n = static_cast<std::ptrdiff_t>(texts.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t i = 0; i < n; ++i)
    hashed_trigram_embed_one(texts[i], max_tokens, std::span<double>(out.row(i).data(), dim));
  return out;
}

std::vector<int> nearest_centroids(const RowMatrix& points, const RowMatrix& centroids, RowMatrix& cosine_distances) {
  cosine_distances.resize(points.rows(), centroids.rows());
  const auto n = static_cast<std::ptrdiff_t>(points.rows());
  std::vector<int> out(static_cast<size_t>(n));
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = nearest_of(points, i, centroids, cosine_distances);
  return out;
}

}  // namespace parallel
}  // namespace mailtopics::kernels
