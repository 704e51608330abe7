#include "mailtopics/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace mailtopics {

double SparseVector::norm() const {
  double s = 0.0;
  for (double v : values) s += v * v;
  return std::sqrt(s);
}

double CsrMatrix::at(std::int64_t r, std::int32_t c) const {
  const auto b = col_idx.begin() + row_ptr[r];
  const auto e = col_idx.begin() + row_ptr[r + 1];
  const auto it = std::lower_bound(b, e, c);
  if (it == e || *it != c) return 0.0;
  return values[static_cast<size_t>(it - col_idx.begin())];
}

double CsrMatrix::row_norm(std::int64_t r) const {
  double s = 0.0;
  for (auto i = row_ptr[r]; i < row_ptr[r + 1]; ++i) s += values[i] * values[i];
  return std::sqrt(s);
}

double CsrMatrix::row_dot(std::int64_t r, const SparseVector& v) const {
  double s = 0.0;
  auto i = row_ptr[r];
  const auto end = row_ptr[r + 1];
  size_t j = 0;
  while (i < end && j < v.indices.size()) {
    if (col_idx[i] < v.indices[j]) {
      ++i;
    } else if (col_idx[i] > v.indices[j]) {
      ++j;
    } else {
      s += values[i] * v.values[j];
      ++i;
      ++j;
    }
  }
  return s;
}

std::vector<double> CsrMatrix::dense_row(std::int64_t r) const {
  std::vector<double> out(static_cast<size_t>(cols), 0.0);
  for (auto i = row_ptr[r]; i < row_ptr[r + 1]; ++i) out[col_idx[i]] = values[i];
  return out;
}

void CsrMatrix::push_row(const SparseVector& row) {
  for (size_t i = 0; i < row.indices.size(); ++i) {
    col_idx.push_back(row.indices[i]);
    values.push_back(row.values[i]);
  }
  row_ptr.push_back(static_cast<std::int64_t>(col_idx.size()));
  ++rows;
}

double cosine_similarity(const Vector& a, const Vector& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return a.dot(b) / (na * nb);
}

double cosine_similarity(const SparseVector& a, const SparseVector& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  double s = 0.0;
  size_t i = 0, j = 0;
  while (i < a.indices.size() && j < b.indices.size()) {
    if (a.indices[i] < b.indices[j]) {
      ++i;
    } else if (a.indices[i] > b.indices[j]) {
      ++j;
    } else {
      s += a.values[i++] * b.values[j++];
    }
  }
  return s / (na * nb);
}

}  // namespace mailtopics
