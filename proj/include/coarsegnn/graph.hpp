/*******************************************************************************
 * Immutable undirected weighted graph with node features, labels and split
 * masks, plus multi-graph datasets for graph-level tasks.
 *
 * Self-loops are never stored: propagation adds the identity analytically.
 * Degrees are weighted degrees of the original graph and are cached at
 * construction; every derived subgraph carries them forward.
 *
 * @file:   graph.hpp
 ******************************************************************************/
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "coarsegnn/sparse.hpp"

namespace coarsegnn {

enum class Split : std::uint8_t { none, train, val, test };

enum class LabelKind : std::uint8_t { none, classification, regression };

inline constexpr int kNoLabel = -1;

/// Per-node (or per-graph) supervision. Exactly one of `classes` / `targets`
/// is populated depending on `kind`.
struct Labels {
  LabelKind kind = LabelKind::none;
  std::vector<int> classes; ///< kNoLabel for unlabeled entries
  Matrix targets;           ///< rows x target_dim for regression

  [[nodiscard]] std::size_t size() const;
  [[nodiscard]] int num_classes() const;
  [[nodiscard]] std::size_t target_dim() const {
    return static_cast<std::size_t>(targets.cols());
  }
  bool operator==(const Labels &other) const;
};

struct Violation {
  std::string kind; ///< "symmetry", "self_loop", "degree", "split", "shape", "weight"
  std::string detail;
};

class Graph {
public:
  Graph() = default;

  /// Raw constructor: takes the parts as given, performs no checking. Use
  /// GraphBuilder for validated construction.
  Graph(CsrMatrix adjacency, Matrix features, Labels labels, std::vector<Split> splits,
        std::vector<double> degrees, std::vector<std::int64_t> original_ids = {});

  [[nodiscard]] std::size_t n() const { return _adjacency.rows(); }
  /// Undirected edge count.
  [[nodiscard]] std::size_t m() const { return _adjacency.nnz() / 2; }
  [[nodiscard]] std::size_t feature_dim() const {
    return static_cast<std::size_t>(_features.cols());
  }

  [[nodiscard]] const CsrMatrix &adjacency() const { return _adjacency; }
  [[nodiscard]] std::span<const NodeId> neighbors(NodeId u) const {
    return _adjacency.row_indices(u);
  }
  [[nodiscard]] std::span<const double> weights(NodeId u) const {
    return _adjacency.row_values(u);
  }
  [[nodiscard]] double degree(NodeId u) const { return _degrees[u]; }
  [[nodiscard]] const std::vector<double> &degrees() const { return _degrees; }
  [[nodiscard]] const Matrix &features() const { return _features; }
  [[nodiscard]] const Labels &labels() const { return _labels; }
  [[nodiscard]] const std::vector<Split> &splits() const { return _splits; }
  [[nodiscard]] std::vector<NodeId> nodes_in(Split split) const;
  /// Input ids before dense remapping; empty when ids were already dense.
  [[nodiscard]] const std::vector<std::int64_t> &original_ids() const { return _original_ids; }

  /// Copy with replaced split masks (graphs are otherwise immutable).
  [[nodiscard]] Graph with_splits(std::vector<Split> splits) const;
  [[nodiscard]] Graph with_labels(Labels labels) const;

  bool operator==(const Graph &other) const;

private:
  CsrMatrix _adjacency;
  Matrix _features;
  Labels _labels;
  std::vector<Split> _splits;
  std::vector<double> _degrees;
  std::vector<std::int64_t> _original_ids;
};

/// Accumulates edges and symmetrizes them. Repeated (u,v) entries are merged
/// by summing weights; (u,v) together with (v,u) is one undirected edge whose
/// weight is the mean of the two entries. Self-loops are rejected.
class GraphBuilder {
public:
  explicit GraphBuilder(std::size_t n);

  GraphBuilder &add_edge(NodeId u, NodeId v, double weight = 1.0);
  GraphBuilder &set_features(Matrix features);
  GraphBuilder &set_labels(Labels labels);
  GraphBuilder &set_splits(std::vector<Split> splits);
  GraphBuilder &set_original_ids(std::vector<std::int64_t> ids);

  /// Builds and validates. Throws ValidationError listing violations.
  [[nodiscard]] Graph build() &&;

private:
  std::size_t _n;
  std::vector<Triplet> _edges;
  Matrix _features;
  Labels _labels;
  std::vector<Split> _splits;
  std::vector<std::int64_t> _original_ids;
};

/// Empty iff every graph invariant holds.
[[nodiscard]] std::vector<Violation> validate(const Graph &graph);

/// Collection of graphs with one target per graph.
struct GraphDataset {
  std::vector<Graph> graphs;
  Labels targets;
  std::vector<Split> splits;

  [[nodiscard]] std::size_t size() const { return graphs.size(); }
  [[nodiscard]] std::vector<std::size_t> indices_in(Split split) const;
  bool operator==(const GraphDataset &other) const = default;
};

[[nodiscard]] std::vector<Violation> validate(const GraphDataset &dataset);

[[nodiscard]] std::string to_string(Split split);
[[nodiscard]] Split parse_split(const std::string &text);

} // namespace coarsegnn
