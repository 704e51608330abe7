#pragma once

// Data-parallel inner loops. Every kernel has a serial reference and an
// OpenMP variant; the two produce bit-identical output because each output
// element is accumulated by exactly one thread in a fixed order.

#include <span>
#include <string>
#include <vector>

#include "mailtopics/linalg.hpp"

namespace mailtopics::kernels {

struct MstEdge {
  int from = 0;
  int to = 0;
  double weight = 0.0;
};

/// Hashed, signed character-trigram embedding of a single text (first
/// `max_tokens` whitespace tokens), L2-normalized. Empty input gives zeros.
void hashed_trigram_embed_one(std::string_view text, int max_tokens, std::span<double> out);

namespace serial {

std::vector<double> core_distances(const RowMatrix& points, int k);
std::vector<MstEdge> mutual_reachability_mst(const RowMatrix& points, std::span<const double> core);
Eigen::MatrixXd covariance(const RowMatrix& centered);
RowMatrix hashed_trigram_embed(std::span<const std::string> texts, int dim, int max_tokens);
std::vector<int> nearest_centroids(const RowMatrix& points, const RowMatrix& centroids, RowMatrix& cosine_distances);

}  // namespace serial

namespace parallel {

std::vector<double> core_distances(const RowMatrix& points, int k);
std::vector<MstEdge> mutual_reachability_mst(const RowMatrix& points, std::span<const double> core);
Eigen::MatrixXd covariance(const RowMatrix& centered);
RowMatrix hashed_trigram_embed(std::span<const std::string> texts, int dim, int max_tokens);
std::vector<int> nearest_centroids(const RowMatrix& points, const RowMatrix& centroids, RowMatrix& cosine_distances);

}  // namespace parallel

/// Cosine distance with the convention that a zero vector is at distance 1
/// from everything.
double cosine_distance(const double* a, const double* b, Eigen::Index dim);

}  // namespace mailtopics::kernels
