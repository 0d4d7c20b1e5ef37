/*******************************************************************************
 * @file:   propagation.cpp
 ******************************************************************************/
#include "coarsegnn/gnn/propagation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "coarsegnn/coarsen.hpp"
#include "coarsegnn/graph.hpp"
#include "coarsegnn/subgraph.hpp"

namespace coarsegnn {

std::string to_string(const DegreeMode mode) {
  return mode == DegreeMode::original ? "original" : "local";
}

DegreeMode parse_degree_mode(const std::string &text) {
  if (text == "original") {
    return DegreeMode::original;
  }
  if (text == "local") {
    return DegreeMode::local;
  }
  throw std::invalid_argument("unknown degree mode '" + text + "'");
}

void Workload::allocate(const std::size_t bytes) {
  live_bytes += bytes;
  peak_bytes = std::max(peak_bytes, live_bytes);
}

void Workload::release(const std::size_t bytes) {
  live_bytes -= std::min(bytes, live_bytes);
}

Matrix PropagationOperator::apply(const Matrix &x, Workload *work) const {
  if (static_cast<std::size_t>(x.rows()) != _matrix.cols()) {
    throw std::invalid_argument("operator/feature row mismatch");
  }
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(_matrix.rows()), x.cols());
  for (std::size_t r = 0; r < _matrix.rows(); ++r) {
    const auto idx = _matrix.row_indices(r);
    const auto val = _matrix.row_values(r);
    auto row = out.row(static_cast<Eigen::Index>(r));
    for (std::size_t e = 0; e < idx.size(); ++e) {
      row.noalias() += val[e] * x.row(idx[e]);
    }
  }
  if (work != nullptr) {
    work->macs += static_cast<std::uint64_t>(_matrix.nnz()) * static_cast<std::uint64_t>(x.cols());
  }
  return out;
}

Matrix PropagationOperator::apply_transpose(const Matrix &g) const {
  if (static_cast<std::size_t>(g.rows()) != _matrix.rows()) {
    throw std::invalid_argument("operator/gradient row mismatch");
  }
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(_matrix.cols()), g.cols());
  for (std::size_t r = 0; r < _matrix.rows(); ++r) {
    const auto idx = _matrix.row_indices(r);
    const auto val = _matrix.row_values(r);
    for (std::size_t e = 0; e < idx.size(); ++e) {
      out.row(idx[e]).noalias() += val[e] * g.row(static_cast<Eigen::Index>(r));
    }
  }
  return out;
}

PropagationOperator make_operator(const CsrMatrix &adjacency, std::span<const double> degrees) {
  const std::size_t n = adjacency.rows();
  if (adjacency.cols() != n || degrees.size() != n) {
    throw std::invalid_argument("degree vector length does not match adjacency");
  }
  std::vector<double> inv_sqrt(n);
  for (std::size_t v = 0; v < n; ++v) {
    if (!(degrees[v] >= 0.0)) {
      throw std::invalid_argument("negative degree at node " + std::to_string(v));
    }
    inv_sqrt[v] = 1.0 / std::sqrt(degrees[v] + 1.0);
  }

  std::vector<std::size_t> offsets(n + 1, 0);
  std::vector<NodeId> indices;
  std::vector<double> values;
  indices.reserve(adjacency.nnz() + n);
  values.reserve(adjacency.nnz() + n);
  for (std::size_t r = 0; r < n; ++r) {
    const auto idx = adjacency.row_indices(r);
    const auto val = adjacency.row_values(r);
    bool diagonal_done = false;
    auto emit_diagonal = [&](const double self_weight) {
      indices.push_back(static_cast<NodeId>(r));
      values.push_back((self_weight + 1.0) * inv_sqrt[r] * inv_sqrt[r]);
      diagonal_done = true;
    };
    for (std::size_t e = 0; e < idx.size(); ++e) {
      if (!diagonal_done && idx[e] >= r) {
        if (idx[e] == r) {
          emit_diagonal(val[e]);
          continue;
        }
        emit_diagonal(0.0);
      }
      indices.push_back(idx[e]);
      values.push_back(val[e] * inv_sqrt[r] * inv_sqrt[idx[e]]);
    }
    if (!diagonal_done) {
      emit_diagonal(0.0);
    }
    offsets[r + 1] = indices.size();
  }
  return PropagationOperator(
      CsrMatrix(n, n, std::move(offsets), std::move(indices), std::move(values)));
}

PropagationOperator make_operator(const Graph &graph) {
  return make_operator(graph.adjacency(), graph.degrees());
}

PropagationOperator make_operator(const Subgraph &subgraph, const DegreeMode mode) {
  if (mode == DegreeMode::original) {
    return make_operator(subgraph.adjacency, subgraph.orig_degree);
  }
  std::vector<double> local(subgraph.size());
  for (std::size_t v = 0; v < local.size(); ++v) {
    local[v] = subgraph.adjacency.row_sum(v);
  }
  return make_operator(subgraph.adjacency, local);
}

PropagationOperator make_operator(const CoarsenedGraph &coarse) {
  return make_operator(coarse.adjacency, coarse.degrees);
}

} // namespace coarsegnn
