/*******************************************************************************
 * @file:   subgraph.cpp
 * @brief:  Induced subgraphs, Extra-Node / Cluster-Node augmentation, masks
 *          and information-loss counts.
 ******************************************************************************/
#include "coarsegnn/subgraph.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace coarsegnn {

namespace {

/// Local triplets of the subgraph's current adjacency.
std::vector<Triplet> triplets_of(const CsrMatrix &adj) {
  std::vector<Triplet> out;
  out.reserve(adj.nnz());
  for (NodeId r = 0; r < adj.rows(); ++r) {
    const auto idx = adj.row_indices(r);
    const auto val = adj.row_values(r);
    for (std::size_t e = 0; e < idx.size(); ++e) {
      out.push_back({r, idx[e], val[e]});
    }
  }
  return out;
}

void resize_labels(Labels &labels, const Labels &source, const std::size_t rows) {
  labels.kind = source.kind;
  if (source.kind == LabelKind::classification) {
    labels.classes.resize(rows, kNoLabel);
  } else if (source.kind == LabelKind::regression) {
    const Eigen::Index old_rows = labels.targets.rows();
    Matrix grown = Matrix::Zero(static_cast<Eigen::Index>(rows), source.targets.cols());
    if (old_rows > 0) {
      grown.topRows(old_rows) = labels.targets;
    }
    labels.targets = std::move(grown);
  }
}

void copy_label(Labels &dst, const NodeId local, const Labels &src, const NodeId global) {
  if (src.kind == LabelKind::classification) {
    dst.classes[local] = src.classes[global];
  } else if (src.kind == LabelKind::regression) {
    dst.targets.row(local) = src.targets.row(global);
  }
}

/// Grows `sub` by `count` rows with default (cluster-like) contents.
void grow(Subgraph &sub, const Graph &graph, const std::size_t count) {
  const std::size_t rows = sub.size() + count;
  sub.global_ids.resize(rows, kInvalidNode);
  sub.represented.resize(rows, 0);
  sub.provenance.resize(rows, Provenance::cluster);
  sub.orig_degree.resize(rows, 0.0);
  sub.mask.resize(rows, 0);
  sub.val_mask.resize(rows, 0);
  sub.test_mask.resize(rows, 0);
  Matrix features = Matrix::Zero(static_cast<Eigen::Index>(rows), graph.features().cols());
  if (sub.features.rows() > 0) {
    features.topRows(sub.features.rows()) = sub.features;
  }
  sub.features = std::move(features);
  resize_labels(sub.labels, graph.labels(), rows);
}

void check_unaugmented(const SubgraphSet &set, const Graph &graph,
                       const PartitionMatrix *partition) {
  if (set.augmentation != Augmentation::none) {
    throw std::invalid_argument("subgraph set is already augmented");
  }
  if (set.owner.size() != graph.n()) {
    throw std::invalid_argument("subgraph set does not match graph size");
  }
  if (partition != nullptr && partition->k() != set.size()) {
    throw std::invalid_argument("subgraph set does not match partition");
  }
}

} // namespace

std::string to_string(const Provenance provenance) {
  switch (provenance) {
  case Provenance::core:
    return "core";
  case Provenance::extra:
    return "extra";
  case Provenance::cluster:
    break;
  }
  return "cluster";
}

std::string to_string(const Augmentation augmentation) {
  switch (augmentation) {
  case Augmentation::none:
    return "none";
  case Augmentation::extra:
    return "extra";
  case Augmentation::cluster:
    break;
  }
  return "cluster";
}

Augmentation parse_augmentation(const std::string &text) {
  if (text == "none") {
    return Augmentation::none;
  }
  if (text == "extra") {
    return Augmentation::extra;
  }
  if (text == "cluster") {
    return Augmentation::cluster;
  }
  throw std::invalid_argument("unknown augmentation '" + text + "'");
}

std::size_t Subgraph::core_count() const {
  return static_cast<std::size_t>(
      std::count(provenance.begin(), provenance.end(), Provenance::core));
}

NodeId Subgraph::local_of(const NodeId global) const {
  // Core nodes occupy a sorted prefix.
  const auto cores = core_count();
  const auto begin = global_ids.begin();
  const auto end = begin + static_cast<std::ptrdiff_t>(cores);
  const auto it = std::lower_bound(begin, end, global);
  if (it == end || *it != global) {
    return kInvalidNode;
  }
  return static_cast<NodeId>(it - begin);
}

std::size_t SubgraphSet::max_appended() const {
  std::size_t best = 0;
  for (const auto &sub : subgraphs) {
    best = std::max(best, sub.size() - sub.core_count());
  }
  return best;
}

SubgraphSet induce_subgraphs(const Graph &graph, const PartitionMatrix &partition) {
  if (partition.n() != graph.n()) {
    throw std::invalid_argument("partition does not match graph size");
  }
  SubgraphSet set;
  set.owner = partition.assign();
  set.owner_local.assign(graph.n(), kInvalidNode);
  set.subgraphs.resize(partition.k());

  for (ClusterId i = 0; i < partition.k(); ++i) {
    const auto members = partition.members(i);
    for (NodeId local = 0; local < members.size(); ++local) {
      set.owner_local[members[local]] = local;
    }

    Subgraph &sub = set.subgraphs[i];
    sub.cluster = i;
    sub.global_ids.assign(members.begin(), members.end());
    sub.represented.assign(members.size(), i);
    sub.provenance.assign(members.size(), Provenance::core);
    sub.mask.assign(members.size(), 0);
    sub.val_mask.assign(members.size(), 0);
    sub.test_mask.assign(members.size(), 0);
    sub.orig_degree.resize(members.size());
    sub.features.resize(static_cast<Eigen::Index>(members.size()), graph.features().cols());
    resize_labels(sub.labels, graph.labels(), members.size());

    std::vector<Triplet> edges;
    for (NodeId local = 0; local < members.size(); ++local) {
      const NodeId u = members[local];
      sub.orig_degree[local] = graph.degree(u);
      sub.features.row(local) = graph.features().row(u);
      copy_label(sub.labels, local, graph.labels(), u);
      const auto nbrs = graph.neighbors(u);
      const auto ws = graph.weights(u);
      for (std::size_t e = 0; e < nbrs.size(); ++e) {
        if (partition.cluster_of(nbrs[e]) == i) {
          edges.push_back({local, set.owner_local[nbrs[e]], ws[e]});
        }
      }
    }
    sub.adjacency = CsrMatrix::from_triplets(members.size(), members.size(), std::move(edges));
  }
  return set;
}

std::vector<NodeId> extra_nodes_of(const Graph &graph, const PartitionMatrix &partition,
                                   const ClusterId i) {
  std::vector<NodeId> extra;
  for (const NodeId u : partition.members(i)) {
    for (const NodeId v : graph.neighbors(u)) {
      if (partition.cluster_of(v) != i) {
        extra.push_back(v);
      }
    }
  }
  std::sort(extra.begin(), extra.end());
  extra.erase(std::unique(extra.begin(), extra.end()), extra.end());
  return extra;
}

SubgraphSet augment_extra_nodes(const Graph &graph, SubgraphSet set) {
  check_unaugmented(set, graph, nullptr);
  const PartitionMatrix partition(set.owner);
  std::vector<NodeId> local_index(graph.n(), kInvalidNode);

  for (Subgraph &sub : set.subgraphs) {
    const std::vector<NodeId> extra = extra_nodes_of(graph, partition, sub.cluster);
    if (extra.empty()) {
      continue;
    }
    const std::size_t cores = sub.size();
    grow(sub, graph, extra.size());
    for (NodeId local = 0; local < cores; ++local) {
      local_index[sub.global_ids[local]] = local;
    }
    for (std::size_t e = 0; e < extra.size(); ++e) {
      const auto local = static_cast<NodeId>(cores + e);
      const NodeId u = extra[e];
      local_index[u] = local;
      sub.global_ids[local] = u;
      sub.represented[local] = partition.cluster_of(u);
      sub.provenance[local] = Provenance::extra;
      sub.orig_degree[local] = graph.degree(u);
      sub.features.row(local) = graph.features().row(u);
      copy_label(sub.labels, local, graph.labels(), u);
    }

    // Core-core edges already exist; add every edge with an extra endpoint
    // whose other endpoint is also in the subgraph.
    std::vector<Triplet> edges = triplets_of(sub.adjacency);
    for (std::size_t e = 0; e < extra.size(); ++e) {
      const auto local = static_cast<NodeId>(cores + e);
      const NodeId u = extra[e];
      const auto nbrs = graph.neighbors(u);
      const auto ws = graph.weights(u);
      for (std::size_t k = 0; k < nbrs.size(); ++k) {
        const NodeId other = local_index[nbrs[k]];
        if (other == kInvalidNode) {
          continue;
        }
        edges.push_back({local, other, ws[k]});
        if (other < cores) {
          edges.push_back({other, local, ws[k]});
        }
      }
    }
    sub.adjacency = CsrMatrix::from_triplets(sub.size(), sub.size(), std::move(edges));

    for (const NodeId g : sub.global_ids) {
      local_index[g] = kInvalidNode;
    }
  }
  set.augmentation = Augmentation::extra;
  return set;
}

SubgraphSet augment_cluster_nodes(const Graph &graph, const PartitionMatrix &partition,
                                  SubgraphSet set, const CoarsenedGraph &coarse,
                                  const ClusterFeature feature_mode) {
  check_unaugmented(set, graph, &partition);
  if (coarse.k != partition.k()) {
    throw std::invalid_argument("coarse graph does not match partition");
  }

  Matrix cluster_features = coarse.features;
  if (feature_mode == ClusterFeature::degree_weighted) {
    cluster_features = Matrix::Zero(static_cast<Eigen::Index>(partition.k()),
                                    graph.features().cols());
    for (ClusterId t = 0; t < partition.k(); ++t) {
      double total = 0.0;
      for (const NodeId u : partition.members(t)) {
        cluster_features.row(t) += graph.degree(u) * graph.features().row(u);
        total += graph.degree(u);
      }
      if (total > 0.0) {
        cluster_features.row(t) /= total;
      } else {
        // Isolated members only: fall back to the plain mean.
        cluster_features.row(t).setZero();
        for (const NodeId u : partition.members(t)) {
          cluster_features.row(t) += graph.features().row(u);
        }
        cluster_features.row(t) /= static_cast<double>(partition.cluster_sizes()[t]);
      }
    }
  }

  std::vector<NodeId> slot_of(partition.k(), kInvalidNode);
  for (Subgraph &sub : set.subgraphs) {
    const ClusterId i = sub.cluster;
    const std::size_t cores = sub.size();

    // Boundary weights: (core local, neighboring cluster) -> summed weight.
    std::map<std::pair<NodeId, ClusterId>, double> boundary;
    std::vector<ClusterId> neighbors;
    for (NodeId local = 0; local < cores; ++local) {
      const NodeId u = sub.global_ids[local];
      const auto nbrs = graph.neighbors(u);
      const auto ws = graph.weights(u);
      for (std::size_t e = 0; e < nbrs.size(); ++e) {
        const ClusterId t = partition.cluster_of(nbrs[e]);
        if (t != i) {
          boundary[{local, t}] += ws[e];
          neighbors.push_back(t);
        }
      }
    }
    if (neighbors.empty()) {
      continue;
    }
    std::sort(neighbors.begin(), neighbors.end());
    neighbors.erase(std::unique(neighbors.begin(), neighbors.end()), neighbors.end());

    grow(sub, graph, neighbors.size());
    for (std::size_t c = 0; c < neighbors.size(); ++c) {
      const auto local = static_cast<NodeId>(cores + c);
      const ClusterId t = neighbors[c];
      slot_of[t] = local;
      sub.represented[local] = t;
      sub.provenance[local] = Provenance::cluster;
      sub.orig_degree[local] = coarse.degrees[t];
      sub.features.row(local) = cluster_features.row(t);
    }

    std::vector<Triplet> edges = triplets_of(sub.adjacency);
    for (const auto &[key, weight] : boundary) {
      const NodeId cluster_local = slot_of[key.second];
      edges.push_back({key.first, cluster_local, weight});
      edges.push_back({cluster_local, key.first, weight});
    }
    for (const ClusterId t1 : neighbors) {
      const auto idx = coarse.adjacency.row_indices(t1);
      const auto val = coarse.adjacency.row_values(t1);
      for (std::size_t e = 0; e < idx.size(); ++e) {
        const ClusterId t2 = idx[e];
        if (t2 != t1 && slot_of[t2] != kInvalidNode && val[e] != 0.0) {
          edges.push_back({slot_of[t1], slot_of[t2], val[e]});
        }
      }
    }
    sub.adjacency = CsrMatrix::from_triplets(sub.size(), sub.size(), std::move(edges));

    for (const ClusterId t : neighbors) {
      slot_of[t] = kInvalidNode;
    }
  }
  set.augmentation = Augmentation::cluster;
  return set;
}

SubgraphSet build_masks(SubgraphSet set, const Graph &graph) {
  if (set.owner.size() != graph.n()) {
    throw std::invalid_argument("subgraph set does not match graph size");
  }
  for (Subgraph &sub : set.subgraphs) {
    for (std::size_t v = 0; v < sub.size(); ++v) {
      const bool core = sub.provenance[v] == Provenance::core;
      const Split split = core ? graph.splits()[sub.global_ids[v]] : Split::none;
      sub.mask[v] = core && split == Split::train;
      sub.val_mask[v] = core && split == Split::val;
      sub.test_mask[v] = core && split == Split::test;
    }
  }
  return set;
}

std::size_t info_loss_l1(const Graph &graph, const PartitionMatrix &partition, const ClusterId i) {
  // Members with an out-of-cluster neighbor contribute exactly those
  // neighbors; the union is the extra-node set.
  std::vector<NodeId> lost;
  for (const NodeId v : partition.members(i)) {
    bool boundary = false;
    for (const NodeId u : graph.neighbors(v)) {
      boundary = boundary || partition.cluster_of(u) != i;
    }
    if (!boundary) {
      continue;
    }
    for (const NodeId u : graph.neighbors(v)) {
      if (partition.cluster_of(u) != i) {
        lost.push_back(u);
      }
    }
  }
  std::sort(lost.begin(), lost.end());
  return static_cast<std::size_t>(std::unique(lost.begin(), lost.end()) - lost.begin());
}

std::size_t info_loss_l2(const Graph &graph, const PartitionMatrix &partition, const ClusterId i,
                         const bool augmented) {
  std::vector<NodeId> lost;
  for (const NodeId v : partition.members(i)) {
    bool boundary = false;
    for (const NodeId u : graph.neighbors(v)) {
      boundary = boundary || partition.cluster_of(u) != i;
    }
    if (!boundary) {
      continue;
    }
    for (const NodeId u : graph.neighbors(v)) {
      lost.push_back(u);
      for (const NodeId w : graph.neighbors(u)) {
        lost.push_back(w);
      }
    }
  }
  std::sort(lost.begin(), lost.end());
  lost.erase(std::unique(lost.begin(), lost.end()), lost.end());

  const std::vector<NodeId> extra =
      augmented ? extra_nodes_of(graph, partition, i) : std::vector<NodeId>{};
  std::size_t count = 0;
  for (const NodeId u : lost) {
    if (partition.cluster_of(u) == i) {
      continue;
    }
    if (augmented && std::binary_search(extra.begin(), extra.end(), u)) {
      continue;
    }
    ++count;
  }
  return count;
}

std::size_t locate_subgraph(const SubgraphSet &set, const NodeId node) {
  if (node >= set.owner.size()) {
    throw std::out_of_range("unknown node id " + std::to_string(node));
  }
  return set.owner[node];
}

nlohmann::json dump_subgraphs(const SubgraphSet &set) {
  nlohmann::json out = nlohmann::json::array();
  for (const Subgraph &sub : set.subgraphs) {
    nlohmann::json entry;
    entry["cluster"] = sub.cluster;
    nlohmann::json ids = nlohmann::json::array();
    nlohmann::json represents = nlohmann::json::object();
    nlohmann::json provenance = nlohmann::json::array();
    for (std::size_t v = 0; v < sub.size(); ++v) {
      if (sub.provenance[v] == Provenance::cluster) {
        ids.push_back(nullptr);
        represents[std::to_string(v)] = sub.represented[v];
      } else {
        ids.push_back(sub.global_ids[v]);
      }
      provenance.push_back(to_string(sub.provenance[v]));
    }
    nlohmann::json edges = nlohmann::json::array();
    for (NodeId r = 0; r < sub.adjacency.rows(); ++r) {
      const auto idx = sub.adjacency.row_indices(r);
      const auto val = sub.adjacency.row_values(r);
      for (std::size_t e = 0; e < idx.size(); ++e) {
        if (r < idx[e]) {
          edges.push_back({r, idx[e], val[e]});
        }
      }
    }
    nlohmann::json mask = nlohmann::json::array();
    for (const auto m : sub.mask) {
      mask.push_back(m != 0);
    }
    entry["global_ids"] = std::move(ids);
    entry["provenance"] = std::move(provenance);
    entry["edges"] = std::move(edges);
    entry["mask"] = std::move(mask);
    if (!represents.empty()) {
      entry["represents"] = std::move(represents);
    }
    out.push_back(std::move(entry));
  }
  return out;
}

} // namespace coarsegnn
