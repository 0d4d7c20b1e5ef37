/*******************************************************************************
 * Partition matrices and coarsened graphs.
 *
 * A partition assigns every node to one of k clusters (P ∈ {0,1}^{n×k}).
 * The coarsened graph has adjacency PᵀAP, degrees PᵀDP, features P̃ᵀX with
 * P̃ = PC^{-1/2}, and majority-vote labels from the training nodes.
 *
 * @file:   coarsen.hpp
 ******************************************************************************/
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "coarsegnn/graph.hpp"

namespace coarsegnn {

enum class CoarsenMethod { heavy_edge, neighborhood_growth };

[[nodiscard]] std::string to_string(CoarsenMethod method);
[[nodiscard]] CoarsenMethod parse_coarsen_method(const std::string &text);

class PartitionMatrix {
public:
  PartitionMatrix() = default;

  /// Cluster ids must cover [0, k) with no empty cluster.
  explicit PartitionMatrix(std::vector<ClusterId> assign);

  [[nodiscard]] static PartitionMatrix identity(std::size_t n);

  [[nodiscard]] std::size_t n() const { return _assign.size(); }
  [[nodiscard]] std::size_t k() const { return _sizes.size(); }
  [[nodiscard]] ClusterId cluster_of(NodeId u) const { return _assign[u]; }
  [[nodiscard]] const std::vector<ClusterId> &assign() const { return _assign; }
  [[nodiscard]] const std::vector<std::size_t> &cluster_sizes() const { return _sizes; }
  /// Members of cluster j in ascending node order.
  [[nodiscard]] std::span<const NodeId> members(ClusterId j) const {
    return {_members.data() + _member_offsets[j], _sizes[j]};
  }
  /// Entry of P̃ = PC^{-1/2} for any member of cluster j.
  [[nodiscard]] double normalized_weight(ClusterId j) const;

  bool operator==(const PartitionMatrix &other) const { return _assign == other._assign; }

private:
  std::vector<ClusterId> _assign;
  std::vector<std::size_t> _sizes;
  std::vector<std::size_t> _member_offsets;
  std::vector<NodeId> _members;
};

/// round(n·r) clamped to [1, n].
[[nodiscard]] std::size_t target_cluster_count(std::size_t n, double ratio);

/// Partitions G into round(n·r) connected clusters. Cluster ids are
/// canonical: ordered by smallest member node id. Throws std::invalid_argument
/// for r outside (0,1] or when k is below the number of connected components.
[[nodiscard]] PartitionMatrix coarsen_partition(const Graph &graph, double ratio,
                                                CoarsenMethod method, std::uint64_t seed = 0);

/// Same with an explicit cluster count k ∈ [components, n].
[[nodiscard]] PartitionMatrix coarsen_partition_k(const Graph &graph, std::size_t k,
                                                  CoarsenMethod method, std::uint64_t seed = 0);

[[nodiscard]] std::size_t connected_components(const Graph &graph);

/// Renumbers clusters by first appearance in node order.
[[nodiscard]] PartitionMatrix canonicalize(const std::vector<ClusterId> &assign);

struct CoarsenedGraph {
  std::size_t k = 0;
  CsrMatrix adjacency;         ///< PᵀAP, intra-cluster weight on the diagonal
  std::vector<double> degrees; ///< diag(PᵀDP)
  Matrix features;             ///< P̃ᵀX
  /// Majority class among train members; kNoLabel when a cluster has none.
  /// Empty unless built for classification.
  std::vector<int> labels;

  [[nodiscard]] bool has_labels() const { return !labels.empty(); }
};

[[nodiscard]] std::vector<double> coarse_degree(const Graph &graph, const PartitionMatrix &partition);

[[nodiscard]] CoarsenedGraph build_coarsened_graph(const Graph &graph,
                                                   const PartitionMatrix &partition,
                                                   LabelKind task);

/// Majority vote with ties going to the smallest class id.
[[nodiscard]] int majority_class(std::span<const int> classes);

struct PartitionFile {
  PartitionMatrix partition;
  CoarsenMethod method = CoarsenMethod::heavy_edge;
  std::uint64_t seed = 0;
};

/// Header line "k n method seed", then one cluster id per node per line.
void write_partition(const std::filesystem::path &path, const PartitionFile &file);
[[nodiscard]] PartitionFile read_partition(const std::filesystem::path &path);

} // namespace coarsegnn
