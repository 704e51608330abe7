#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace mailtopics {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

struct SparseVector {
  std::vector<std::int32_t> indices;  // ascending
  std::vector<double> values;

  double norm() const;
  bool empty() const { return indices.empty(); }
};

// Compressed sparse rows. Column indices ascend within each row.
struct CsrMatrix {
  std::int64_t rows = 0;
  std::int64_t cols = 0;
  std::vector<std::int64_t> row_ptr{0};
  std::vector<std::int32_t> col_idx;
  std::vector<double> values;

  double at(std::int64_t r, std::int32_t c) const;
  double row_norm(std::int64_t r) const;
  double row_dot(std::int64_t r, const SparseVector& v) const;
  std::vector<double> dense_row(std::int64_t r) const;
  void push_row(const SparseVector& row);

  bool operator==(const CsrMatrix&) const = default;
};

double cosine_similarity(const Vector& a, const Vector& b);
double cosine_similarity(const SparseVector& a, const SparseVector& b);

}  // namespace mailtopics
