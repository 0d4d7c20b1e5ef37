/*******************************************************************************
 * @file:   model.cpp
 ******************************************************************************/
#include "coarsegnn/gnn/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "coarsegnn/subgraph.hpp"

namespace coarsegnn {

namespace {

Matrix glorot(std::mt19937_64 &rng, const Eigen::Index rows, const Eigen::Index cols) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Matrix w(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      w(i, j) = dist(rng);
    }
  }
  return w;
}

/// Â(HW) with accounting: the product HW and the propagated result coexist
/// with the input; the input is released by the caller's next step.
Matrix layer(const PropagationOperator &op, const Matrix &h, const Matrix &w, Workload *work) {
  Matrix hw = h * w;
  if (work != nullptr) {
    work->macs += static_cast<std::uint64_t>(h.rows()) * static_cast<std::uint64_t>(h.cols()) *
                  static_cast<std::uint64_t>(w.cols());
    work->allocate(Workload::matrix_bytes(hw.rows(), hw.cols()));
  }
  Matrix out = op.apply(hw, work);
  if (work != nullptr) {
    work->allocate(Workload::matrix_bytes(out.rows(), out.cols()));
    work->release(Workload::matrix_bytes(hw.rows(), hw.cols()));
  }
  return out.cwiseMax(0.0);
}

Matrix embeddings_impl(const PropagationOperator &op, const Matrix &x, const GcnParams &params,
                       Workload *work) {
  check_params(params);
  if (x.cols() != params.input_dim()) {
    throw std::invalid_argument("feature width does not match first layer");
  }
  if (static_cast<std::size_t>(x.rows()) != op.size()) {
    throw std::invalid_argument("feature rows do not match operator size");
  }
  if (work != nullptr) {
    work->allocate(op.matrix().storage_bytes());
    work->allocate(Workload::matrix_bytes(x.rows(), x.cols()));
  }
  Matrix h = layer(op, x, params.layers.front(), work);
  if (work != nullptr) {
    work->release(Workload::matrix_bytes(x.rows(), x.cols()));
  }
  for (std::size_t l = 1; l < params.layers.size(); ++l) {
    Matrix next = layer(op, h, params.layers[l], work);
    if (work != nullptr) {
      work->release(Workload::matrix_bytes(h.rows(), h.cols()));
    }
    h = std::move(next);
  }
  if (work != nullptr) {
    work->release(op.matrix().storage_bytes());
  }
  return h;
}

RowVector column_max(const Matrix &h) {
  if (h.rows() == 0) {
    throw std::invalid_argument("max pooling over zero rows");
  }
  return h.colwise().maxCoeff();
}

RowVector apply_head(const RowVector &pooled, const GcnParams &params, Workload *work) {
  if (work != nullptr) {
    work->macs += static_cast<std::uint64_t>(params.head.rows()) *
                  static_cast<std::uint64_t>(params.head.cols());
  }
  return pooled * params.head;
}

} // namespace

std::vector<Eigen::Index> GcnParams::dims() const {
  std::vector<Eigen::Index> out;
  if (layers.empty()) {
    return out;
  }
  out.push_back(layers.front().rows());
  for (const auto &w : layers) {
    out.push_back(w.cols());
  }
  out.push_back(head.cols());
  return out;
}

std::size_t GcnParams::parameter_bytes() const {
  std::size_t bytes = 0;
  for_each([&](const Matrix &w) { bytes += Workload::matrix_bytes(w.rows(), w.cols()); });
  return bytes;
}

bool GcnParams::operator==(const GcnParams &other) const {
  if (layers.size() != other.layers.size() || seed != other.seed) {
    return false;
  }
  auto same = [](const Matrix &a, const Matrix &b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
  };
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (!same(layers[l], other.layers[l])) {
      return false;
    }
  }
  return same(head, other.head);
}

GcnParams init_params(const Eigen::Index input_dim, const Eigen::Index hidden_dim,
                      const Eigen::Index output_dim, const std::size_t depth,
                      const std::uint64_t seed) {
  if (depth < 1) {
    throw std::invalid_argument("a GCN needs at least one propagation layer");
  }
  if (input_dim < 1 || hidden_dim < 1 || output_dim < 1) {
    throw std::invalid_argument("layer widths must be positive");
  }
  std::mt19937_64 rng(seed);
  GcnParams params;
  params.seed = seed;
  params.layers.push_back(glorot(rng, input_dim, hidden_dim));
  for (std::size_t l = 1; l < depth; ++l) {
    params.layers.push_back(glorot(rng, hidden_dim, hidden_dim));
  }
  params.head = glorot(rng, hidden_dim, output_dim);
  return params;
}

GcnParams zeros_like(const GcnParams &like) {
  GcnParams out = like;
  out.for_each([](Matrix &w) { w.setZero(); });
  return out;
}

void check_params(const GcnParams &params) {
  if (params.layers.empty()) {
    throw std::invalid_argument("a GCN needs at least one propagation layer");
  }
  for (std::size_t l = 1; l < params.layers.size(); ++l) {
    if (params.layers[l].rows() != params.layers[l - 1].cols()) {
      throw std::invalid_argument("layer " + std::to_string(l) + " shape breaks the chain");
    }
  }
  if (params.head.rows() != params.layers.back().cols()) {
    throw std::invalid_argument("head shape breaks the chain");
  }
  bool finite = true;
  params.for_each([&](const Matrix &w) { finite = finite && w.allFinite(); });
  if (!finite) {
    throw std::invalid_argument("non-finite parameter entries");
  }
}

Matrix node_embeddings(const PropagationOperator &op, const Matrix &x, const GcnParams &params,
                       Workload *work) {
  return embeddings_impl(op, x, params, work);
}

Matrix node_model_forward(const PropagationOperator &op, const Matrix &x, const GcnParams &params,
                          Workload *work) {
  Matrix h = embeddings_impl(op, x, params, work);
  Matrix z = h * params.head;
  if (work != nullptr) {
    work->macs += static_cast<std::uint64_t>(h.rows()) * static_cast<std::uint64_t>(h.cols()) *
                  static_cast<std::uint64_t>(z.cols());
    work->allocate(Workload::matrix_bytes(z.rows(), z.cols()));
    work->release(Workload::matrix_bytes(h.rows(), h.cols()));
  }
  return z;
}

RowVector node_model_forward_row(const PropagationOperator &op, const Matrix &x,
                                 const GcnParams &params, const NodeId target, Workload *work) {
  check_params(params);
  if (x.cols() != params.input_dim()) {
    throw std::invalid_argument("feature width does not match first layer");
  }
  if (static_cast<std::size_t>(x.rows()) != op.size()) {
    throw std::invalid_argument("feature rows do not match operator size");
  }
  if (target >= op.size()) {
    throw std::out_of_range("target row " + std::to_string(target) + " outside operator");
  }
  const CsrMatrix &a = op.matrix();
  const std::size_t depth = params.layers.size();

  // need[l]: rows of layer-l output required; need[depth] = {target}.
  std::vector<std::vector<NodeId>> need(depth + 1);
  need[depth] = {target};
  std::vector<char> seen(op.size(), 0);
  for (std::size_t l = depth; l > 0; --l) {
    std::fill(seen.begin(), seen.end(), 0);
    std::vector<NodeId> &below = need[l - 1];
    for (const NodeId r : need[l]) {
      for (const NodeId c : a.row_indices(r)) {
        if (!seen[c]) {
          seen[c] = 1;
          below.push_back(c);
        }
      }
    }
    std::sort(below.begin(), below.end());
  }

  std::vector<std::size_t> position(op.size(), 0);
  const auto rows_of = [](const std::vector<NodeId> &ids) {
    return static_cast<Eigen::Index>(ids.size());
  };
  if (work != nullptr) {
    work->allocate(a.storage_bytes());
  }
  Matrix h(rows_of(need[0]), x.cols());
  for (std::size_t i = 0; i < need[0].size(); ++i) {
    h.row(static_cast<Eigen::Index>(i)) = x.row(need[0][i]);
  }
  if (work != nullptr) {
    work->allocate(Workload::matrix_bytes(h.rows(), h.cols()));
  }
  for (std::size_t l = 1; l <= depth; ++l) {
    const Matrix &w = params.layers[l - 1];
    for (std::size_t i = 0; i < need[l - 1].size(); ++i) {
      position[need[l - 1][i]] = i;
    }
    const Matrix hw = h * w;
    Matrix out = Matrix::Zero(rows_of(need[l]), w.cols());
    std::uint64_t nnz = 0;
    for (std::size_t i = 0; i < need[l].size(); ++i) {
      const auto idx = a.row_indices(need[l][i]);
      const auto val = a.row_values(need[l][i]);
      auto row = out.row(static_cast<Eigen::Index>(i));
      for (std::size_t e = 0; e < idx.size(); ++e) {
        row.noalias() += val[e] * hw.row(static_cast<Eigen::Index>(position[idx[e]]));
      }
      nnz += idx.size();
    }
    if (work != nullptr) {
      work->macs += static_cast<std::uint64_t>(h.rows()) * static_cast<std::uint64_t>(h.cols()) *
                        static_cast<std::uint64_t>(w.cols()) +
                    nnz * static_cast<std::uint64_t>(w.cols());
      work->allocate(Workload::matrix_bytes(hw.rows(), hw.cols()));
      work->allocate(Workload::matrix_bytes(out.rows(), out.cols()));
      work->release(Workload::matrix_bytes(hw.rows(), hw.cols()));
      work->release(Workload::matrix_bytes(h.rows(), h.cols()));
    }
    h = out.cwiseMax(0.0);
  }
  if (work != nullptr) {
    work->release(a.storage_bytes());
    work->macs += static_cast<std::uint64_t>(params.head.rows()) *
                  static_cast<std::uint64_t>(params.head.cols());
    work->allocate(Workload::matrix_bytes(1, params.head.cols()));
    work->release(Workload::matrix_bytes(h.rows(), h.cols()));
  }
  return h.row(0) * params.head;
}

RowVector graph_model_gc_forward(const PropagationOperator &op, const Matrix &x,
                                 const GcnParams &params, Workload *work) {
  const Matrix h = embeddings_impl(op, x, params, work);
  const RowVector pooled = column_max(h);
  if (work != nullptr) {
    work->release(Workload::matrix_bytes(h.rows(), h.cols()));
  }
  return apply_head(pooled, params, work);
}

RowVector graph_model_gs_forward(std::span<const SubgraphInput> parts, const GcnParams &params,
                                 Workload *work) {
  if (parts.empty()) {
    throw std::invalid_argument("graph model needs at least one subgraph");
  }
  // Global max over the row-stacked embeddings. Folding each subgraph's rows
  // into a running maximum gives the same value without materializing the
  // stack; `fmax` of a fixed order keeps it reproducible.
  RowVector pooled;
  for (const SubgraphInput &part : parts) {
    const Matrix h = embeddings_impl(*part.op, *part.features, params, work);
    if (h.rows() == 0) {
      continue;
    }
    const RowVector local = h.colwise().maxCoeff();
    pooled = pooled.size() == 0 ? local : RowVector(pooled.cwiseMax(local));
    if (work != nullptr) {
      work->release(Workload::matrix_bytes(h.rows(), h.cols()));
    }
  }
  if (pooled.size() == 0) {
    throw std::invalid_argument("max pooling over zero rows");
  }
  return apply_head(pooled, params, work);
}

RowVector graph_model_gs_forward(const SubgraphSet &set, const GcnParams &params,
                                 const DegreeMode mode, Workload *work) {
  std::vector<PropagationOperator> ops;
  ops.reserve(set.size());
  std::vector<SubgraphInput> parts;
  parts.reserve(set.size());
  for (const Subgraph &sub : set.subgraphs) {
    ops.push_back(make_operator(sub, mode));
  }
  for (std::size_t i = 0; i < set.size(); ++i) {
    parts.push_back({&ops[i], &set.subgraphs[i].features});
  }
  return graph_model_gs_forward(parts, params, work);
}

TapedParams bind_params(Tape &tape, const GcnParams &params) {
  check_params(params);
  TapedParams bound;
  for (const auto &w : params.layers) {
    bound.layers.push_back(tape.parameter(w));
  }
  bound.head = tape.parameter(params.head);
  return bound;
}

GcnParams collect_gradients(const Tape &tape, const TapedParams &bound, const GcnParams &like) {
  GcnParams grads = like;
  for (std::size_t l = 0; l < bound.layers.size(); ++l) {
    grads.layers[l] = tape.grad(bound.layers[l]);
  }
  grads.head = tape.grad(bound.head);
  return grads;
}

Tape::Var taped_node_embeddings(Tape &tape, const TapedParams &params,
                                const PropagationOperator &op, const Matrix &x) {
  Tape::Var h = tape.constant(x);
  for (const Tape::Var w : params.layers) {
    h = tape.relu(tape.propagate(op, tape.matmul(h, w)));
  }
  return h;
}

Tape::Var taped_node_model(Tape &tape, const TapedParams &params, const PropagationOperator &op,
                           const Matrix &x) {
  return tape.matmul(taped_node_embeddings(tape, params, op, x), params.head);
}

Tape::Var taped_graph_model_gc(Tape &tape, const TapedParams &params,
                               const PropagationOperator &op, const Matrix &x) {
  return tape.matmul(tape.max_pool(taped_node_embeddings(tape, params, op, x)), params.head);
}

Tape::Var taped_graph_model_gs(Tape &tape, const TapedParams &params,
                               std::span<const SubgraphInput> parts) {
  std::vector<Tape::Var> stacked;
  stacked.reserve(parts.size());
  for (const SubgraphInput &part : parts) {
    stacked.push_back(taped_node_embeddings(tape, params, *part.op, *part.features));
  }
  return tape.matmul(tape.max_pool(tape.concat_rows(stacked)), params.head);
}

double weight_decay_penalty(const GcnParams &params, const double lambda) {
  double total = 0.0;
  params.for_each([&](const Matrix &w) { total += w.squaredNorm(); });
  return lambda * total;
}

void add_weight_decay(GcnParams &grads, const GcnParams &params, const double lambda) {
  if (lambda == 0.0) {
    return;
  }
  for (std::size_t l = 0; l < grads.layers.size(); ++l) {
    grads.layers[l] += 2.0 * lambda * params.layers[l];
  }
  grads.head += 2.0 * lambda * params.head;
}

} // namespace coarsegnn
