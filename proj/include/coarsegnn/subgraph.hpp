/*******************************************************************************
 * Subgraph sets built from a partition, with optional augmentation.
 *
 * Every subgraph holds its cluster's nodes ("core") and, after augmentation,
 * either the 1-hop out-of-cluster neighbors ("extra") or one representative
 * node per neighboring cluster ("cluster"). Local node order is core nodes by
 * ascending global id, followed by appended nodes by ascending global id
 * (extra) or cluster id (cluster).
 *
 * Each local node carries its degree in the original graph (cluster nodes
 * carry the coarse degree) so that propagation on a subgraph normalizes
 * exactly like propagation on the full graph.
 *
 * @file:   subgraph.hpp
 ******************************************************************************/
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "coarsegnn/coarsen.hpp"
#include "coarsegnn/graph.hpp"

namespace coarsegnn {

enum class Provenance : std::uint8_t { core, extra, cluster };
enum class Augmentation : std::uint8_t { none, extra, cluster };

[[nodiscard]] std::string to_string(Provenance provenance);
[[nodiscard]] std::string to_string(Augmentation augmentation);
[[nodiscard]] Augmentation parse_augmentation(const std::string &text);

/// How a cluster node's feature row is formed from its cluster.
enum class ClusterFeature : std::uint8_t {
  normalized_partition, ///< row of P̃ᵀX (the coarse graph's feature row)
  degree_weighted,      ///< Σ dᵢxᵢ / Σ dᵢ over the cluster's members
};

struct Subgraph {
  ClusterId cluster = 0;
  /// Global node id per local node; kInvalidNode for cluster nodes.
  std::vector<NodeId> global_ids;
  /// Represented cluster per local node; only meaningful for cluster nodes.
  std::vector<ClusterId> represented;
  std::vector<Provenance> provenance;
  CsrMatrix adjacency;
  Matrix features;
  Labels labels;
  std::vector<double> orig_degree;
  std::vector<std::uint8_t> mask;      ///< core ∧ train
  std::vector<std::uint8_t> val_mask;  ///< core ∧ val
  std::vector<std::uint8_t> test_mask; ///< core ∧ test

  [[nodiscard]] std::size_t size() const { return global_ids.size(); }
  [[nodiscard]] std::size_t core_count() const;
  /// Local index of a core node, or kInvalidNode.
  [[nodiscard]] NodeId local_of(NodeId global) const;
};

struct SubgraphSet {
  std::vector<Subgraph> subgraphs;
  std::vector<ClusterId> owner; ///< global node -> subgraph index
  std::vector<NodeId> owner_local; ///< global node -> local index in its owner
  Augmentation augmentation = Augmentation::none;

  [[nodiscard]] std::size_t size() const { return subgraphs.size(); }
  /// Largest number of appended nodes over all subgraphs (φ_max).
  [[nodiscard]] std::size_t max_appended() const;
};

[[nodiscard]] SubgraphSet induce_subgraphs(const Graph &graph, const PartitionMatrix &partition);

/// Appends 1-hop out-of-cluster neighbors and every G-edge among
/// {core ∪ extra} that touches an extra node. Throws std::invalid_argument if
/// the set was already augmented.
[[nodiscard]] SubgraphSet augment_extra_nodes(const Graph &graph, SubgraphSet set);

/// Appends one node per neighboring cluster. Boundary core nodes connect to
/// the cluster node with the summed weight of their edges into that cluster;
/// cluster nodes within one subgraph are linked with coarse-graph weights.
[[nodiscard]] SubgraphSet augment_cluster_nodes(
    const Graph &graph, const PartitionMatrix &partition, SubgraphSet set,
    const CoarsenedGraph &coarse,
    ClusterFeature feature_mode = ClusterFeature::normalized_partition);

/// Sets mask = core ∧ train, and the val/test variants.
[[nodiscard]] SubgraphSet build_masks(SubgraphSet set, const Graph &graph);

/// |E_Gi| for cluster i: out-of-cluster 1-hop neighbors of its members.
[[nodiscard]] std::vector<NodeId> extra_nodes_of(const Graph &graph,
                                                 const PartitionMatrix &partition, ClusterId i);

/// Nodes whose information is lost after one layer on the unaugmented
/// subgraph i.
[[nodiscard]] std::size_t info_loss_l1(const Graph &graph, const PartitionMatrix &partition,
                                       ClusterId i);

/// Nodes whose information is lost after two layers. N₂(v) is the set of
/// nodes within distance 2 of v; the union runs over members with at least
/// one out-of-cluster neighbor. With `augmented`, the extra nodes of the
/// cluster are excluded as well.
[[nodiscard]] std::size_t info_loss_l2(const Graph &graph, const PartitionMatrix &partition,
                                       ClusterId i, bool augmented);

/// Index of the subgraph in which `node` is core. Throws std::out_of_range for
/// unknown ids.
[[nodiscard]] std::size_t locate_subgraph(const SubgraphSet &set, NodeId node);

/// {cluster, global_ids, provenance, edges, mask} per subgraph. Cluster nodes
/// appear as null in global_ids with their cluster id under "represents".
[[nodiscard]] nlohmann::json dump_subgraphs(const SubgraphSet &set);

} // namespace coarsegnn
