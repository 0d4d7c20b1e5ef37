/*******************************************************************************
 * GCN parameters and the three model heads.
 *
 *   node model:        X⁽ⁱ⁾ = ReLU(Â X⁽ⁱ⁻¹⁾ W⁽ⁱ⁻¹⁾), i = 1..L;  Z = X⁽ᴸ⁾ W⁽ᴸ⁾
 *   graph model (G'):  node layers, column-wise max over nodes, head
 *   graph model (Gs):  node layers per subgraph, row-stack, max, head
 *
 * Each head exists twice: a plain evaluator that reports work and peak live
 * bytes, and a tape builder used for training. Tests pin them together.
 *
 * @file:   model.hpp
 ******************************************************************************/
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "coarsegnn/gnn/propagation.hpp"
#include "coarsegnn/gnn/tape.hpp"
#include "coarsegnn/sparse.hpp"

namespace coarsegnn {

struct SubgraphSet;

struct GcnParams {
  std::vector<Matrix> layers; ///< W⁽⁰⁾ (d×h) … W⁽ᴸ⁻¹⁾ (h×h)
  Matrix head;                ///< W⁽ᴸ⁾ (h×out)
  std::uint64_t seed = 0;

  [[nodiscard]] std::size_t depth() const { return layers.size(); }
  [[nodiscard]] Eigen::Index input_dim() const { return layers.empty() ? 0 : layers.front().rows(); }
  [[nodiscard]] Eigen::Index output_dim() const { return head.cols(); }
  /// Layer widths: [d, h, …, h, out].
  [[nodiscard]] std::vector<Eigen::Index> dims() const;
  [[nodiscard]] std::size_t parameter_bytes() const;

  /// Visits every weight matrix, layers first then head.
  template <typename Fn> void for_each(Fn &&fn) {
    for (auto &w : layers) {
      fn(w);
    }
    fn(head);
  }
  template <typename Fn> void for_each(Fn &&fn) const {
    for (const auto &w : layers) {
      fn(w);
    }
    fn(head);
  }

  bool operator==(const GcnParams &other) const;
};

/// Glorot-uniform initialization, seeded. Throws for depth < 1.
[[nodiscard]] GcnParams init_params(Eigen::Index input_dim, Eigen::Index hidden_dim,
                                    Eigen::Index output_dim, std::size_t depth,
                                    std::uint64_t seed);

/// Same shapes as `like`, all zeros.
[[nodiscard]] GcnParams zeros_like(const GcnParams &like);

/// Shape chain and finiteness. Throws std::invalid_argument.
void check_params(const GcnParams &params);

// --- plain evaluation ------------------------------------------------------

/// X⁽ᴸ⁾ for one graph.
[[nodiscard]] Matrix node_embeddings(const PropagationOperator &op, const Matrix &x,
                                     const GcnParams &params, Workload *work = nullptr);
[[nodiscard]] Matrix node_model_forward(const PropagationOperator &op, const Matrix &x,
                                        const GcnParams &params, Workload *work = nullptr);
/// Row `target` of node_model_forward, touching only its L-hop receptive field.
[[nodiscard]] RowVector node_model_forward_row(const PropagationOperator &op, const Matrix &x,
                                               const GcnParams &params, NodeId target,
                                               Workload *work = nullptr);
[[nodiscard]] RowVector graph_model_gc_forward(const PropagationOperator &op, const Matrix &x,
                                               const GcnParams &params,
                                               Workload *work = nullptr);

/// One (operator, features) pair per subgraph.
struct SubgraphInput {
  const PropagationOperator *op;
  const Matrix *features;
};

[[nodiscard]] RowVector graph_model_gs_forward(std::span<const SubgraphInput> parts,
                                               const GcnParams &params, Workload *work = nullptr);
[[nodiscard]] RowVector graph_model_gs_forward(const SubgraphSet &set, const GcnParams &params,
                                               DegreeMode mode = DegreeMode::original,
                                               Workload *work = nullptr);

// --- tape construction -----------------------------------------------------

struct TapedParams {
  std::vector<Tape::Var> layers;
  Tape::Var head = 0;
};

[[nodiscard]] TapedParams bind_params(Tape &tape, const GcnParams &params);
/// Reads parameter adjoints back after Tape::backward.
[[nodiscard]] GcnParams collect_gradients(const Tape &tape, const TapedParams &bound,
                                          const GcnParams &like);

[[nodiscard]] Tape::Var taped_node_embeddings(Tape &tape, const TapedParams &params,
                                              const PropagationOperator &op, const Matrix &x);
[[nodiscard]] Tape::Var taped_node_model(Tape &tape, const TapedParams &params,
                                         const PropagationOperator &op, const Matrix &x);
[[nodiscard]] Tape::Var taped_graph_model_gc(Tape &tape, const TapedParams &params,
                                             const PropagationOperator &op, const Matrix &x);
[[nodiscard]] Tape::Var taped_graph_model_gs(Tape &tape, const TapedParams &params,
                                             std::span<const SubgraphInput> parts);

// --- weight decay ----------------------------------------------------------

/// λ·Σ‖W‖² over all weight matrices.
[[nodiscard]] double weight_decay_penalty(const GcnParams &params, double lambda);
/// grads += 2λW.
void add_weight_decay(GcnParams &grads, const GcnParams &params, double lambda);

} // namespace coarsegnn
