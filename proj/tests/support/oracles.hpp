#pragma once

// Independent reference computations used to check the library. They favor
// the most literal formulation over speed and share no code with src/.

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "mailtopics/evalkit.hpp"
#include "mailtopics/topicmodel.hpp"

namespace oracle {

// The 30-letter Serbian Cyrillic alphabet and its official Latin counterparts,
// upper and lower case.
struct Letter {
  const char* cyrillic;
  const char* latin;
};
const std::vector<Letter>& serbian_alphabet();

// W[c][t] by literal nested loops over documents, classes and terms.
std::vector<std::vector<double>> brute_ctfidf(const std::vector<std::string>& texts, const std::vector<int>& labels,
                                              const std::vector<std::string>& terms);

// Cyclic Jacobi eigendecomposition of a symmetric matrix. Eigenvalues are
// returned in descending order with matching columns of `vectors`.
struct Eigen {
  std::vector<double> values;
  std::vector<std::vector<double>> vectors;  // vectors[i] is the i-th eigenvector
};
Eigen jacobi(std::vector<std::vector<double>> a);

// Sample covariance (n - 1) by definition.
std::vector<std::vector<double>> covariance(const std::vector<std::vector<double>>& x);

// k-th nearest neighbour distance, self included, by sorting all distances.
std::vector<double> core_distances(const std::vector<std::vector<double>>& x, int k);
// Total weight of a minimum spanning tree of the complete mutual-reachability
// graph (Kruskal).
double mst_weight(const std::vector<std::vector<double>>& x, const std::vector<double>& core);

struct Metrics {
  double accuracy = 0.0;
  double wp = 0.0;
  double wr = 0.0;
  double wf1 = 0.0;
};
// Confusion matrix over an explicit class index, then per-class metrics.
Metrics brute_metrics(const std::vector<std::string>& effective_gold, const std::vector<std::string>& predicted);

// Fraction of family documents (family >= 0) whose cluster's majority family
// equals their own. Outliers count as misses.
double purity(const std::vector<int>& labels, const std::vector<int>& family);

// Same partition up to relabeling; -1 must map to -1.
bool same_partition(const std::vector<int>& a, const std::vector<int>& b);

}  // namespace oracle

namespace fixtures {

// Blob corpus (3 families x 400 plus 60 noise documents, seed 7) fitted with min_topic_size 50.
// Cached per process.
struct Blob {
  std::vector<mailtopics::CleanDocument> docs;
  std::vector<int> family;
  mailtopics::FittedTopicModel model;
};
const Blob& blob();
mailtopics::ModelConfig blob_config();

}  // namespace fixtures
