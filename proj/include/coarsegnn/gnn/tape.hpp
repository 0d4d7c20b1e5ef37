/*******************************************************************************
 * Matrix-valued reverse-mode differentiation tape.
 *
 * Every operation appends a node holding its forward value and a closure
 * that pushes the node's adjoint to its inputs. `backward` seeds a scalar
 * (1x1) node with 1 and replays the closures in reverse creation order.
 * Operators passed to `propagate` are held by pointer and must outlive the
 * tape.
 *
 * @file:   tape.hpp
 ******************************************************************************/
#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "coarsegnn/gnn/propagation.hpp"
#include "coarsegnn/sparse.hpp"

namespace coarsegnn {

class Tape {
public:
  using Var = std::size_t;

  Var constant(Matrix value);
  /// Leaf whose adjoint is read back after `backward`.
  Var parameter(Matrix value);

  Var matmul(Var a, Var b);
  Var propagate(const PropagationOperator &op, Var x);
  Var relu(Var x);
  Var concat_rows(std::span<const Var> parts);
  Var select_rows(Var x, std::vector<Eigen::Index> rows);
  /// Column-wise maximum over rows (1 x cols). Ties route the adjoint to the
  /// first maximal row.
  Var max_pool(Var x);
  /// Mean softmax cross-entropy over rows; labels index columns.
  Var cross_entropy(Var logits, std::vector<int> labels);
  /// Mean absolute error over all entries.
  Var mae(Var prediction, Matrix targets);
  Var add(Var a, Var b);

  [[nodiscard]] const Matrix &value(Var v) const { return _nodes[v].value; }
  [[nodiscard]] const Matrix &grad(Var v) const { return _nodes[v].grad; }
  [[nodiscard]] std::size_t size() const { return _nodes.size(); }

  /// Reverse sweep from a 1x1 node. Throws std::runtime_error naming the
  /// offending operations if the loss or any intermediate is non-finite.
  void backward(Var loss);

private:
  struct Node {
    std::string op;
    Matrix value;
    Matrix grad;
    std::function<void(Tape &, const Matrix &)> pullback;
  };

  Var push(std::string op, Matrix value, std::function<void(Tape &, const Matrix &)> pullback);
  void accumulate(Var v, const Matrix &g);

  std::vector<Node> _nodes;
};

} // namespace coarsegnn
