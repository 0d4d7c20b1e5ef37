/*******************************************************************************
 * @file:   tape.cpp
 ******************************************************************************/
#include "coarsegnn/gnn/tape.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace coarsegnn {

Tape::Var Tape::push(std::string op, Matrix value,
                     std::function<void(Tape &, const Matrix &)> pullback) {
  Node node;
  node.op = std::move(op);
  node.grad = Matrix::Zero(value.rows(), value.cols());
  node.value = std::move(value);
  node.pullback = std::move(pullback);
  _nodes.push_back(std::move(node));
  return _nodes.size() - 1;
}

void Tape::accumulate(const Var v, const Matrix &g) {
  _nodes[v].grad.noalias() += g;
}

Tape::Var Tape::constant(Matrix value) {
  return push("constant", std::move(value), nullptr);
}

Tape::Var Tape::parameter(Matrix value) {
  return push("parameter", std::move(value), nullptr);
}

Tape::Var Tape::matmul(const Var a, const Var b) {
  if (value(a).cols() != value(b).rows()) {
    throw std::invalid_argument("matmul shape mismatch");
  }
  Matrix out = value(a) * value(b);
  return push("matmul", std::move(out), [a, b](Tape &t, const Matrix &g) {
    t.accumulate(a, g * t.value(b).transpose());
    t.accumulate(b, t.value(a).transpose() * g);
  });
}

Tape::Var Tape::propagate(const PropagationOperator &op, const Var x) {
  Matrix out = op.apply(value(x));
  const PropagationOperator *ptr = &op;
  return push("propagate", std::move(out),
              [ptr, x](Tape &t, const Matrix &g) { t.accumulate(x, ptr->apply_transpose(g)); });
}

Tape::Var Tape::relu(const Var x) {
  Matrix out = value(x).cwiseMax(0.0);
  return push("relu", std::move(out), [x](Tape &t, const Matrix &g) {
    t.accumulate(x, (t.value(x).array() > 0.0).select(g, 0.0).matrix());
  });
}

Tape::Var Tape::concat_rows(std::span<const Var> parts) {
  if (parts.empty()) {
    throw std::invalid_argument("concat_rows needs at least one part");
  }
  const Eigen::Index cols = value(parts.front()).cols();
  Eigen::Index rows = 0;
  for (const Var p : parts) {
    if (value(p).cols() != cols) {
      throw std::invalid_argument("concat_rows column mismatch");
    }
    rows += value(p).rows();
  }
  Matrix out(rows, cols);
  Eigen::Index offset = 0;
  for (const Var p : parts) {
    out.middleRows(offset, value(p).rows()) = value(p);
    offset += value(p).rows();
  }
  std::vector<Var> owned(parts.begin(), parts.end());
  return push("concat_rows", std::move(out), [owned](Tape &t, const Matrix &g) {
    Eigen::Index offset = 0;
    for (const Var p : owned) {
      const Eigen::Index r = t.value(p).rows();
      t.accumulate(p, g.middleRows(offset, r));
      offset += r;
    }
  });
}

Tape::Var Tape::select_rows(const Var x, std::vector<Eigen::Index> rows) {
  const Matrix &src = value(x);
  Matrix out(static_cast<Eigen::Index>(rows.size()), src.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = src.row(rows[i]);
  }
  return push("select_rows", std::move(out), [x, rows = std::move(rows)](Tape &t, const Matrix &g) {
    Matrix scatter = Matrix::Zero(t.value(x).rows(), t.value(x).cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      scatter.row(rows[i]) += g.row(static_cast<Eigen::Index>(i));
    }
    t.accumulate(x, scatter);
  });
}

Tape::Var Tape::max_pool(const Var x) {
  const Matrix &src = value(x);
  if (src.rows() == 0) {
    throw std::invalid_argument("max_pool over zero rows");
  }
  Matrix out(1, src.cols());
  std::vector<Eigen::Index> argmax(static_cast<std::size_t>(src.cols()), 0);
  for (Eigen::Index c = 0; c < src.cols(); ++c) {
    Eigen::Index best = 0;
    for (Eigen::Index r = 1; r < src.rows(); ++r) {
      if (src(r, c) > src(best, c)) {
        best = r;
      }
    }
    argmax[static_cast<std::size_t>(c)] = best;
    out(0, c) = src(best, c);
  }
  return push("max_pool", std::move(out), [x, argmax](Tape &t, const Matrix &g) {
    Matrix scatter = Matrix::Zero(t.value(x).rows(), t.value(x).cols());
    for (std::size_t c = 0; c < argmax.size(); ++c) {
      scatter(argmax[c], static_cast<Eigen::Index>(c)) = g(0, static_cast<Eigen::Index>(c));
    }
    t.accumulate(x, scatter);
  });
}

Tape::Var Tape::cross_entropy(const Var logits, std::vector<int> labels) {
  const Matrix &z = value(logits);
  if (static_cast<std::size_t>(z.rows()) != labels.size()) {
    throw std::invalid_argument("cross_entropy label count mismatch");
  }
  if (labels.empty()) {
    throw std::invalid_argument("no supervised nodes");
  }
  Matrix softmax(z.rows(), z.cols());
  double total = 0.0;
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    const int label = labels[static_cast<std::size_t>(r)];
    if (label < 0 || label >= z.cols()) {
      throw std::invalid_argument("class label outside output width");
    }
    const double peak = z.row(r).maxCoeff();
    const auto shifted = (z.row(r).array() - peak).exp();
    const double sum = shifted.sum();
    softmax.row(r) = shifted / sum;
    total += peak + std::log(sum) - z(r, label);
  }
  const auto rows = static_cast<double>(z.rows());
  Matrix out(1, 1);
  out(0, 0) = total / rows;
  return push("cross_entropy", std::move(out),
              [logits, labels = std::move(labels), softmax = std::move(softmax),
               rows](Tape &t, const Matrix &g) {
                Matrix d = softmax;
                for (std::size_t r = 0; r < labels.size(); ++r) {
                  d(static_cast<Eigen::Index>(r), labels[r]) -= 1.0;
                }
                t.accumulate(logits, d * (g(0, 0) / rows));
              });
}

Tape::Var Tape::mae(const Var prediction, Matrix targets) {
  const Matrix &z = value(prediction);
  if (z.rows() != targets.rows() || z.cols() != targets.cols()) {
    throw std::invalid_argument("mae shape mismatch");
  }
  if (z.rows() == 0) {
    throw std::invalid_argument("no supervised nodes");
  }
  const auto count = static_cast<double>(z.size());
  Matrix out(1, 1);
  out(0, 0) = (z - targets).cwiseAbs().sum() / count;
  return push("mae", std::move(out),
              [prediction, targets = std::move(targets), count](Tape &t, const Matrix &g) {
                const Matrix diff = t.value(prediction) - targets;
                t.accumulate(prediction, diff.unaryExpr([](double v) {
                  return static_cast<double>((v > 0.0) - (v < 0.0));
                }) * (g(0, 0) / count));
              });
}

Tape::Var Tape::add(const Var a, const Var b) {
  if (value(a).rows() != value(b).rows() || value(a).cols() != value(b).cols()) {
    throw std::invalid_argument("add shape mismatch");
  }
  Matrix out = value(a) + value(b);
  return push("add", std::move(out), [a, b](Tape &t, const Matrix &g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

void Tape::backward(const Var loss) {
  if (value(loss).rows() != 1 || value(loss).cols() != 1) {
    throw std::invalid_argument("backward needs a scalar node");
  }
  if (!std::isfinite(value(loss)(0, 0))) {
    std::ostringstream msg;
    msg << "non-finite loss; non-finite values in:";
    for (std::size_t i = 0; i <= loss; ++i) {
      if (!_nodes[i].value.allFinite()) {
        msg << " #" << i << " (" << _nodes[i].op << ")";
      }
    }
    throw std::runtime_error(msg.str());
  }
  for (auto &node : _nodes) {
    node.grad.setZero();
  }
  _nodes[loss].grad(0, 0) = 1.0;
  for (std::size_t i = loss + 1; i-- > 0;) {
    Node &node = _nodes[i];
    // Inputs always precede their consumer, so node.grad is final here.
    if (node.pullback) {
      node.pullback(*this, node.grad);
    }
  }
}

} // namespace coarsegnn
