/*******************************************************************************
 * @file:   sparse.cpp
 * @brief:  CSR construction and queries.
 ******************************************************************************/
#include "coarsegnn/sparse.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace coarsegnn {

CsrMatrix::CsrMatrix(const std::size_t rows, const std::size_t cols)
    : _rows(rows), _cols(cols), _offsets(rows + 1, 0) {}

CsrMatrix::CsrMatrix(const std::size_t rows, const std::size_t cols,
                     std::vector<std::size_t> offsets, std::vector<NodeId> indices,
                     std::vector<double> values)
    : _rows(rows), _cols(cols), _offsets(std::move(offsets)), _indices(std::move(indices)),
      _values(std::move(values)) {
  if (_offsets.size() != rows + 1 || _indices.size() != _values.size() ||
      _offsets.back() != _indices.size()) {
    throw std::invalid_argument("inconsistent CSR arrays");
  }
}

CsrMatrix CsrMatrix::from_triplets(const std::size_t rows, const std::size_t cols,
                                   std::vector<Triplet> entries) {
  for (const Triplet &t : entries) {
    if (t.row >= rows || t.col >= cols) {
      throw std::out_of_range("triplet index outside matrix bounds");
    }
  }
  std::sort(entries.begin(), entries.end(), [](const Triplet &a, const Triplet &b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });

  std::vector<std::size_t> offsets(rows + 1, 0);
  std::vector<NodeId> indices;
  std::vector<double> values;
  indices.reserve(entries.size());
  values.reserve(entries.size());

  for (std::size_t i = 0; i < entries.size();) {
    const Triplet &head = entries[i];
    double sum = 0.0;
    std::size_t j = i;
    for (; j < entries.size() && entries[j].row == head.row && entries[j].col == head.col; ++j) {
      sum += entries[j].value;
    }
    indices.push_back(head.col);
    values.push_back(sum);
    ++offsets[head.row + 1];
    i = j;
  }
  std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
  return CsrMatrix(rows, cols, std::move(offsets), std::move(indices), std::move(values));
}

double CsrMatrix::at(const std::size_t r, const std::size_t c) const {
  const auto idx = row_indices(r);
  const auto it = std::lower_bound(idx.begin(), idx.end(), static_cast<NodeId>(c));
  if (it == idx.end() || *it != c) {
    return 0.0;
  }
  return _values[_offsets[r] + static_cast<std::size_t>(it - idx.begin())];
}

double CsrMatrix::row_sum(const std::size_t r) const {
  double sum = 0.0;
  for (const double v : row_values(r)) {
    sum += v;
  }
  return sum;
}

double CsrMatrix::total() const {
  double sum = 0.0;
  for (const double v : _values) {
    sum += v;
  }
  return sum;
}

Matrix CsrMatrix::to_dense() const {
  Matrix dense = Matrix::Zero(static_cast<Eigen::Index>(_rows), static_cast<Eigen::Index>(_cols));
  for (std::size_t r = 0; r < _rows; ++r) {
    for (std::size_t e = _offsets[r]; e < _offsets[r + 1]; ++e) {
      dense(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(_indices[e])) += _values[e];
    }
  }
  return dense;
}

std::size_t CsrMatrix::storage_bytes() const {
  return _offsets.size() * sizeof(std::size_t) + _indices.size() * sizeof(NodeId) +
         _values.size() * sizeof(double);
}

} // namespace coarsegnn
