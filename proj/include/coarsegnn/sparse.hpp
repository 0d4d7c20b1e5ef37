/*******************************************************************************
 * Compressed sparse row storage shared by graphs, coarse graphs and
 * propagation operators.
 *
 * @file:   sparse.hpp
 ******************************************************************************/
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

namespace coarsegnn {

using NodeId = std::uint32_t;
using ClusterId = std::uint32_t;

inline constexpr NodeId kInvalidNode = static_cast<NodeId>(-1);

/// Row-major dense matrix used for features, activations and weights.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;

struct Triplet {
  NodeId row;
  NodeId col;
  double value;
};

/// Square or rectangular CSR matrix. Column indices within a row are sorted
/// ascending and unique.
class CsrMatrix {
public:
  CsrMatrix() = default;
  CsrMatrix(std::size_t rows, std::size_t cols);

  /// Builds from triplets; duplicate (row, col) entries are summed.
  static CsrMatrix from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> entries);

  /// Raw constructor. No sorting or merging is performed.
  CsrMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> offsets,
            std::vector<NodeId> indices, std::vector<double> values);

  [[nodiscard]] std::size_t rows() const { return _rows; }
  [[nodiscard]] std::size_t cols() const { return _cols; }
  [[nodiscard]] std::size_t nnz() const { return _indices.size(); }

  [[nodiscard]] std::span<const NodeId> row_indices(std::size_t r) const {
    return {_indices.data() + _offsets[r], _offsets[r + 1] - _offsets[r]};
  }
  [[nodiscard]] std::span<const double> row_values(std::size_t r) const {
    return {_values.data() + _offsets[r], _offsets[r + 1] - _offsets[r]};
  }
  [[nodiscard]] std::size_t row_length(std::size_t r) const {
    return _offsets[r + 1] - _offsets[r];
  }

  /// Value at (r, c) or 0 if absent. Binary search within the row.
  [[nodiscard]] double at(std::size_t r, std::size_t c) const;
  [[nodiscard]] double row_sum(std::size_t r) const;
  [[nodiscard]] double total() const;

  [[nodiscard]] const std::vector<std::size_t> &offsets() const { return _offsets; }
  [[nodiscard]] const std::vector<NodeId> &indices() const { return _indices; }
  [[nodiscard]] const std::vector<double> &values() const { return _values; }
  std::vector<double> &mutable_values() { return _values; }

  [[nodiscard]] Matrix to_dense() const;

  /// Bytes held by the CSR arrays.
  [[nodiscard]] std::size_t storage_bytes() const;

  bool operator==(const CsrMatrix &other) const = default;

private:
  std::size_t _rows = 0;
  std::size_t _cols = 0;
  std::vector<std::size_t> _offsets{0};
  std::vector<NodeId> _indices;
  std::vector<double> _values;
};

} // namespace coarsegnn
