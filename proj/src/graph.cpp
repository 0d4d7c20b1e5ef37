/*******************************************************************************
 * @file:   graph.cpp
 * @brief:  Graph construction and invariant checking.
 ******************************************************************************/
#include "coarsegnn/graph.hpp"

#include "coarsegnn/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace coarsegnn {

std::size_t Labels::size() const {
  switch (kind) {
  case LabelKind::classification:
    return classes.size();
  case LabelKind::regression:
    return static_cast<std::size_t>(targets.rows());
  case LabelKind::none:
    break;
  }
  return 0;
}

int Labels::num_classes() const {
  int max_class = -1;
  for (const int c : classes) {
    max_class = std::max(max_class, c);
  }
  return max_class + 1;
}

bool Labels::operator==(const Labels &other) const {
  return kind == other.kind && classes == other.classes &&
         targets.rows() == other.targets.rows() && targets.cols() == other.targets.cols() &&
         targets == other.targets;
}

Graph::Graph(CsrMatrix adjacency, Matrix features, Labels labels, std::vector<Split> splits,
             std::vector<double> degrees, std::vector<std::int64_t> original_ids)
    : _adjacency(std::move(adjacency)), _features(std::move(features)),
      _labels(std::move(labels)), _splits(std::move(splits)), _degrees(std::move(degrees)),
      _original_ids(std::move(original_ids)) {}

std::vector<NodeId> Graph::nodes_in(const Split split) const {
  std::vector<NodeId> out;
  for (NodeId u = 0; u < _splits.size(); ++u) {
    if (_splits[u] == split) {
      out.push_back(u);
    }
  }
  return out;
}

Graph Graph::with_splits(std::vector<Split> splits) const {
  Graph copy = *this;
  copy._splits = std::move(splits);
  return copy;
}

Graph Graph::with_labels(Labels labels) const {
  Graph copy = *this;
  copy._labels = std::move(labels);
  return copy;
}

bool Graph::operator==(const Graph &other) const {
  return _adjacency == other._adjacency && _features.rows() == other._features.rows() &&
         _features.cols() == other._features.cols() && _features == other._features &&
         _labels == other._labels && _splits == other._splits && _degrees == other._degrees &&
         _original_ids == other._original_ids;
}

GraphBuilder::GraphBuilder(const std::size_t n) : _n(n) {}

GraphBuilder &GraphBuilder::add_edge(const NodeId u, const NodeId v, const double weight) {
  if (u >= _n || v >= _n) {
    std::ostringstream msg;
    msg << "edge (" << u << "," << v << ") references a node outside [0," << _n << ")";
    throw ValidationError(msg.str());
  }
  if (u == v) {
    throw ValidationError("self-loop on node " + std::to_string(u));
  }
  if (!std::isfinite(weight) || weight < 0.0) {
    throw ValidationError("edge weight must be finite and nonnegative");
  }
  _edges.push_back({u, v, weight});
  return *this;
}

GraphBuilder &GraphBuilder::set_features(Matrix features) {
  _features = std::move(features);
  return *this;
}

GraphBuilder &GraphBuilder::set_labels(Labels labels) {
  _labels = std::move(labels);
  return *this;
}

GraphBuilder &GraphBuilder::set_splits(std::vector<Split> splits) {
  _splits = std::move(splits);
  return *this;
}

GraphBuilder &GraphBuilder::set_original_ids(std::vector<std::int64_t> ids) {
  _original_ids = std::move(ids);
  return *this;
}

Graph GraphBuilder::build() && {
  // Repeats of the same oriented pair are summed. A pair given in both
  // orientations is one undirected edge; its weight is the mean of the two.
  const CsrMatrix directed = CsrMatrix::from_triplets(_n, _n, std::move(_edges));
  std::vector<Triplet> both;
  both.reserve(2 * directed.nnz());
  for (NodeId u = 0; u < _n; ++u) {
    const auto idx = directed.row_indices(u);
    const auto val = directed.row_values(u);
    for (std::size_t e = 0; e < idx.size(); ++e) {
      const NodeId v = idx[e];
      const auto reverse = directed.row_indices(v);
      const bool has_reverse = std::binary_search(reverse.begin(), reverse.end(), u);
      if (has_reverse && v < u) {
        continue; // emitted from the smaller endpoint
      }
      const double w = has_reverse ? 0.5 * (val[e] + directed.at(v, u)) : val[e];
      both.push_back({u, v, w});
      both.push_back({v, u, w});
    }
  }
  CsrMatrix adjacency = CsrMatrix::from_triplets(_n, _n, std::move(both));

  std::vector<double> degrees(_n);
  for (NodeId u = 0; u < _n; ++u) {
    degrees[u] = adjacency.row_sum(u);
  }
  if (_features.size() == 0 && _features.rows() == 0) {
    _features = Matrix::Zero(static_cast<Eigen::Index>(_n), 0);
  }
  if (_splits.empty()) {
    _splits.assign(_n, Split::none);
  }

  Graph graph(std::move(adjacency), std::move(_features), std::move(_labels), std::move(_splits),
              std::move(degrees), std::move(_original_ids));
  const auto violations = validate(graph);
  if (!violations.empty()) {
    std::ostringstream msg;
    msg << "invalid graph:";
    for (const auto &v : violations) {
      msg << " [" << v.kind << "] " << v.detail << ";";
    }
    throw ValidationError(msg.str());
  }
  return graph;
}

std::vector<Violation> validate(const Graph &graph) {
  std::vector<Violation> out;
  const CsrMatrix &adj = graph.adjacency();
  const std::size_t n = adj.rows();

  if (adj.cols() != n) {
    out.push_back({"shape", "adjacency is not square"});
    return out;
  }

  bool asymmetric = false;
  for (NodeId u = 0; u < n && !asymmetric; ++u) {
    const auto idx = adj.row_indices(u);
    const auto val = adj.row_values(u);
    for (std::size_t e = 0; e < idx.size(); ++e) {
      if (idx[e] == u) {
        out.push_back({"self_loop", "node " + std::to_string(u)});
        continue;
      }
      if (!std::isfinite(val[e]) || val[e] < 0.0) {
        out.push_back({"weight", "edge (" + std::to_string(u) + "," + std::to_string(idx[e]) +
                                     ") has invalid weight"});
      }
      if (adj.at(idx[e], u) != val[e]) {
        out.push_back({"symmetry", "edge (" + std::to_string(u) + "," + std::to_string(idx[e]) +
                                       ") has no matching reverse edge"});
        asymmetric = true;
        break;
      }
    }
  }

  const auto &degrees = graph.degrees();
  if (degrees.size() != n) {
    out.push_back({"degree", "degree cache has wrong length"});
  } else {
    for (NodeId u = 0; u < n; ++u) {
      if (degrees[u] != adj.row_sum(u)) {
        out.push_back({"degree", "cached degree of node " + std::to_string(u) +
                                     " differs from its row sum"});
        break;
      }
    }
  }

  if (static_cast<std::size_t>(graph.features().rows()) != n) {
    out.push_back({"shape", "feature rows differ from node count"});
  }
  if (graph.labels().kind != LabelKind::none && graph.labels().size() != n) {
    out.push_back({"shape", "label count differs from node count"});
  }
  // One Split value per node makes the three masks disjoint by construction;
  // only the length can be wrong.
  if (graph.splits().size() != n) {
    out.push_back({"split", "split vector length differs from node count"});
  }
  if (!graph.original_ids().empty() && graph.original_ids().size() != n) {
    out.push_back({"shape", "original id map length differs from node count"});
  }
  return out;
}

std::vector<std::size_t> GraphDataset::indices_in(const Split split) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < splits.size(); ++i) {
    if (splits[i] == split) {
      out.push_back(i);
    }
  }
  return out;
}

std::vector<Violation> validate(const GraphDataset &dataset) {
  std::vector<Violation> out;
  if (dataset.graphs.empty()) {
    out.push_back({"shape", "empty dataset"});
  }
  if (dataset.targets.size() != dataset.graphs.size()) {
    out.push_back({"shape", "target count differs from graph count"});
  }
  if (dataset.splits.size() != dataset.graphs.size()) {
    out.push_back({"split", "split vector length differs from graph count"});
  }
  for (std::size_t i = 0; i < dataset.graphs.size(); ++i) {
    for (auto v : validate(dataset.graphs[i])) {
      v.detail = "graph " + std::to_string(i) + ": " + v.detail;
      out.push_back(std::move(v));
    }
  }
  return out;
}

std::string to_string(const Split split) {
  switch (split) {
  case Split::train:
    return "train";
  case Split::val:
    return "val";
  case Split::test:
    return "test";
  case Split::none:
    break;
  }
  return "none";
}

Split parse_split(const std::string &text) {
  if (text == "train") {
    return Split::train;
  }
  if (text == "val") {
    return Split::val;
  }
  if (text == "test") {
    return Split::test;
  }
  if (text == "none") {
    return Split::none;
  }
  throw std::invalid_argument("unknown split tag '" + text + "'");
}

} // namespace coarsegnn
