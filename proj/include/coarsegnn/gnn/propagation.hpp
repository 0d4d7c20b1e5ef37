/*******************************************************************************
 * Symmetric-normalized propagation operator D̃^{-1/2}(A + I)D̃^{-1/2} and the
 * work/memory accounting used by the inference benchmarks.
 *
 * @file:   propagation.hpp
 ******************************************************************************/
#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "coarsegnn/sparse.hpp"

namespace coarsegnn {

struct Subgraph;
struct CoarsenedGraph;
class Graph;

/// Where the degree used for normalization comes from.
enum class DegreeMode : std::uint8_t {
  original, ///< degree carried from the full graph (exact for Extra Nodes)
  local,    ///< row sums of the local adjacency
};

[[nodiscard]] std::string to_string(DegreeMode mode);
[[nodiscard]] DegreeMode parse_degree_mode(const std::string &text);

/// Multiply-add counter and analytic live-byte tracker. Peak bytes model the
/// matrices that must coexist during inference: operator, activations and
/// parameters.
struct Workload {
  std::uint64_t macs = 0;
  std::size_t live_bytes = 0;
  std::size_t peak_bytes = 0;

  void allocate(std::size_t bytes);
  void release(std::size_t bytes);
  static std::size_t matrix_bytes(Eigen::Index rows, Eigen::Index cols) {
    return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols) * sizeof(double);
  }
};

class PropagationOperator {
public:
  PropagationOperator() = default;
  explicit PropagationOperator(CsrMatrix normalized) : _matrix(std::move(normalized)) {}

  [[nodiscard]] const CsrMatrix &matrix() const { return _matrix; }
  [[nodiscard]] std::size_t size() const { return _matrix.rows(); }

  /// Â·x. Adds nnz·cols multiply-adds to `work` when given.
  [[nodiscard]] Matrix apply(const Matrix &x, Workload *work = nullptr) const;
  /// Âᵀ·g.
  [[nodiscard]] Matrix apply_transpose(const Matrix &g) const;

private:
  CsrMatrix _matrix;
};

/// Â with entries w(u,v)/√((dᵤ+1)(dᵥ+1)) and diagonal (a_vv + 1)/(dᵥ+1).
/// Throws std::invalid_argument for negative degrees or a length mismatch.
[[nodiscard]] PropagationOperator make_operator(const CsrMatrix &adjacency,
                                                std::span<const double> degrees);

[[nodiscard]] PropagationOperator make_operator(const Graph &graph);
[[nodiscard]] PropagationOperator make_operator(const Subgraph &subgraph,
                                                DegreeMode mode = DegreeMode::original);
[[nodiscard]] PropagationOperator make_operator(const CoarsenedGraph &coarse);

} // namespace coarsegnn
