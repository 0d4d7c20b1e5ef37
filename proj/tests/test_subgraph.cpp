#include <doctest.h>

#include <set>

#include "coarsegnn/subgraph.hpp"
#include "coarsegnn/synth.hpp"
#include "support/oracles.hpp"

using namespace coarsegnn;

namespace {

Graph path_graph(std::size_t n) {
  GraphBuilder b(n);
  for (NodeId u = 0; u + 1 < n; ++u) {
    b.add_edge(u, u + 1);
  }
  Matrix x(static_cast<Eigen::Index>(n), 2);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    x(i, 0) = static_cast<double>(i);
    x(i, 1) = 1.0;
  }
  b.set_features(x);
  return std::move(b).build();
}

const PartitionMatrix kPathPairs(std::vector<ClusterId>{0, 0, 1, 1, 2, 2});

std::size_t edge_count(const Subgraph &s) { return s.adjacency.nnz() / 2; }

std::set<NodeId> globals(const Subgraph &s, Provenance which) {
  std::set<NodeId> out;
  for (std::size_t l = 0; l < s.size(); ++l) {
    if (s.provenance[l] == which) {
      out.insert(s.global_ids[l]);
    }
  }
  return out;
}

struct Instance {
  Graph graph;
  PartitionMatrix partition;
};

/// 50 graphs mixing SBM/ER with both coarsening methods and random partitions.
std::vector<Instance> random_instances() {
  std::vector<Instance> out;
  for (std::uint64_t s = 0; s < 50; ++s) {
    Graph g = (s % 2 == 0) ? synth_sbm({10 + s % 7, 12}, 0.35, 0.05, 3, s)
                           : synth_erdos_renyi(20 + s % 11, 0.15, 3, s);
    PartitionMatrix p;
    if (s % 3 == 0) {
      p = PartitionMatrix(oracle::random_assign(g.n(), 2 + s % 6, s));
    } else {
      const std::size_t k = std::max(connected_components(g), target_cluster_count(g.n(), 0.3));
      p = coarsen_partition_k(g, k, s % 3 == 1 ? CoarsenMethod::heavy_edge : CoarsenMethod::neighborhood_growth, s);
    }
    out.push_back({std::move(g), std::move(p)});
  }
  return out;
}

} // namespace

TEST_CASE("identity partition gives single-node subgraphs") {
  const Graph g = path_graph(5);
  const SubgraphSet set = induce_subgraphs(g, PartitionMatrix::identity(5));
  REQUIRE(set.size() == 5);
  for (NodeId v = 0; v < 5; ++v) {
    CHECK(set.subgraphs[v].size() == 1);
    CHECK(edge_count(set.subgraphs[v]) == 0);
    CHECK(locate_subgraph(set, v) == v);
    CHECK(set.subgraphs[v].orig_degree[0] == g.degree(v));
  }
}

TEST_CASE("6-path pairs induce three single-edge subgraphs") {
  const Graph g = path_graph(6);
  const SubgraphSet set = induce_subgraphs(g, kPathPairs);
  REQUIRE(set.size() == 3);
  for (const Subgraph &s : set.subgraphs) {
    CHECK(s.size() == 2);
    CHECK(edge_count(s) == 1);
  }
  CHECK(set.augmentation == Augmentation::none);
  CHECK(set.max_appended() == 0);
}

TEST_CASE("extra nodes on the 6-path middle cluster") {
  const Graph g = path_graph(6);
  const SubgraphSet set = augment_extra_nodes(g, induce_subgraphs(g, kPathPairs));
  const Subgraph &mid = set.subgraphs[1];
  CHECK(globals(mid, Provenance::core) == std::set<NodeId>{2, 3});
  CHECK(globals(mid, Provenance::extra) == std::set<NodeId>{1, 4});
  CHECK(edge_count(mid) == 3);
  CHECK(extra_nodes_of(g, kPathPairs, 1) == std::vector<NodeId>{1, 4});
  const NodeId local1 = 2; // appended after the two core nodes, ascending id
  REQUIRE(mid.global_ids[local1] == 1);
  CHECK(mid.features.row(local1) == g.features().row(1));
  CHECK(mid.orig_degree[local1] == 2.0);
  CHECK(set.max_appended() == 2);
}

TEST_CASE("cluster nodes on the 6-path middle cluster") {
  const Graph g = path_graph(6);
  const CoarsenedGraph coarse = build_coarsened_graph(g, kPathPairs, LabelKind::none);
  const SubgraphSet set = augment_cluster_nodes(g, kPathPairs, induce_subgraphs(g, kPathPairs), coarse);
  const Subgraph &mid = set.subgraphs[1];
  REQUIRE(mid.size() == 4);
  CHECK(mid.provenance[2] == Provenance::cluster);
  CHECK(mid.represented[2] == 0);
  CHECK(mid.represented[3] == 2);
  CHECK(mid.global_ids[2] == kInvalidNode);
  // Local: 0→node 2, 1→node 3, 2→cluster {0,1}, 3→cluster {4,5}.
  CHECK(mid.adjacency.at(0, 2) == 1.0);
  CHECK(mid.adjacency.at(1, 3) == 1.0);
  CHECK(mid.adjacency.at(0, 3) == 0.0);
  CHECK(mid.adjacency.at(2, 3) == 0.0);
  CHECK(edge_count(mid) == 3);
  CHECK(mid.orig_degree[2] == coarse.degrees[0]);
  CHECK(mid.orig_degree[3] == coarse.degrees[2]);
  CHECK(mid.features.row(2) == coarse.features.row(0));
  CHECK(mid.mask[2] == 0);
}

TEST_CASE("degree weighted cluster features") {
  const Graph g = path_graph(6);
  const CoarsenedGraph coarse = build_coarsened_graph(g, kPathPairs, LabelKind::none);
  const SubgraphSet set = augment_cluster_nodes(g, kPathPairs, induce_subgraphs(g, kPathPairs),
                                                coarse, ClusterFeature::degree_weighted);
  // Cluster {0,1}: degrees 1,2, features (0,1),(1,1) → (2/3, 1).
  const Subgraph &mid = set.subgraphs[1];
  CHECK(mid.features(2, 0) == doctest::Approx(2.0 / 3.0));
  CHECK(mid.features(2, 1) == doctest::Approx(1.0));
}

TEST_CASE("isolated cluster gains nothing") {
  GraphBuilder b(4);
  b.add_edge(0, 1).add_edge(2, 3);
  const Graph g = std::move(b).build();
  const PartitionMatrix p(std::vector<ClusterId>{0, 0, 1, 1});
  const SubgraphSet extra = augment_extra_nodes(g, induce_subgraphs(g, p));
  const SubgraphSet cluster =
      augment_cluster_nodes(g, p, induce_subgraphs(g, p), build_coarsened_graph(g, p, LabelKind::none));
  for (ClusterId i = 0; i < 2; ++i) {
    CHECK(extra.subgraphs[i].size() == 2);
    CHECK(cluster.subgraphs[i].size() == 2);
    CHECK(info_loss_l1(g, p, i) == 0);
    CHECK(info_loss_l2(g, p, i, false) == 0);
  }
}

TEST_CASE("augmenting twice is rejected") {
  const Graph g = path_graph(6);
  const SubgraphSet once = augment_extra_nodes(g, induce_subgraphs(g, kPathPairs));
  CHECK_THROWS_AS((void)augment_extra_nodes(g, once), std::invalid_argument);
  const CoarsenedGraph coarse = build_coarsened_graph(g, kPathPairs, LabelKind::none);
  CHECK_THROWS_AS((void)augment_cluster_nodes(g, kPathPairs, once, coarse), std::invalid_argument);
}

TEST_CASE("information loss on the 6-path") {
  const Graph g = path_graph(6);
  CHECK(info_loss_l1(g, kPathPairs, 1) == 2);
  CHECK(info_loss_l2(g, kPathPairs, 1, false) == 4);
  CHECK(info_loss_l2(g, kPathPairs, 1, true) == 2);
}

TEST_CASE("clique as one cluster loses nothing") {
  const Graph g = synth_sbm({7}, 1.0, 0.0, 2, 0);
  const PartitionMatrix p(std::vector<ClusterId>(7, 0));
  CHECK(info_loss_l2(g, p, 0, false) == 0);
  CHECK(info_loss_l1(g, p, 0) == 0);
}

TEST_CASE("set oracles on 50 random graphs") {
  std::size_t total_extra = 0;
  std::size_t total_cluster = 0;
  for (const Instance &inst : random_instances()) {
    const Graph &g = inst.graph;
    const PartitionMatrix &p = inst.partition;
    const SubgraphSet base = induce_subgraphs(g, p);
    const SubgraphSet extra = augment_extra_nodes(g, base);
    const SubgraphSet cluster =
        augment_cluster_nodes(g, p, base, build_coarsened_graph(g, p, LabelKind::classification));

    std::size_t cores = 0;
    for (ClusterId i = 0; i < p.k(); ++i) {
      const std::set<NodeId> members = oracle::cluster_set(p, i);
      const std::set<NodeId> e = oracle::extra_nodes(g, p, i);
      const std::set<ClusterId> c = oracle::neighbor_clusters(g, p, i);

      CHECK(globals(extra.subgraphs[i], Provenance::extra) == e);
      CHECK(globals(extra.subgraphs[i], Provenance::core) == members);
      CHECK(cluster.subgraphs[i].size() - members.size() == c.size());
      CHECK(c.size() <= e.size());
      total_extra += e.size();
      total_cluster += c.size();
      cores += members.size();

      // I¹ = |E| via the boundary union oracle.
      std::set<NodeId> lost1;
      std::set<NodeId> lost2;
      for (const NodeId v : members) {
        const auto nb = oracle::neighbors(g, v);
        const bool boundary = std::any_of(nb.begin(), nb.end(), [&](NodeId u) { return !members.contains(u); });
        if (!boundary) {
          continue;
        }
        for (const NodeId u : nb) {
          if (!members.contains(u)) {
            lost1.insert(u);
          }
        }
        for (const NodeId u : oracle::ball(g, v, 2)) {
          if (!members.contains(u)) {
            lost2.insert(u);
          }
        }
      }
      CHECK(info_loss_l1(g, p, i) == lost1.size());
      CHECK(info_loss_l1(g, p, i) == e.size());
      CHECK(info_loss_l2(g, p, i, false) == lost2.size());
      std::size_t lost2_aug = 0;
      for (const NodeId u : lost2) {
        lost2_aug += e.contains(u) ? 0 : 1;
      }
      CHECK(info_loss_l2(g, p, i, true) == lost2_aug);
      CHECK(info_loss_l2(g, p, i, true) <= info_loss_l2(g, p, i, false));

      // Degree preservation of core nodes in the extra-augmented subgraph.
      const Subgraph &s = extra.subgraphs[i];
      for (std::size_t l = 0; l < s.size(); ++l) {
        if (s.provenance[l] != Provenance::core) {
          continue;
        }
        double local = 0.0;
        for (const double w : s.adjacency.row_values(static_cast<NodeId>(l))) {
          local += w;
        }
        CHECK(local == doctest::Approx(g.degree(s.global_ids[l])));
        CHECK(s.orig_degree[l] == g.degree(s.global_ids[l]));
      }
      // Extra-augmented edges: every G-edge among core∪extra touching extra.
      std::set<NodeId> nodes = members;
      nodes.insert(e.begin(), e.end());
      std::size_t expect_edges = 0;
      for (const NodeId u : nodes) {
        for (const NodeId w : g.neighbors(u)) {
          expect_edges += (u < w && nodes.contains(w)) ? 1 : 0;
        }
      }
      CHECK(edge_count(s) == expect_edges);
    }
    CHECK(cores == g.n());
  }
  CHECK(total_extra >= total_cluster);
}

TEST_CASE("locate agrees with a linear scan") {
  for (const Instance &inst : random_instances()) {
    const SubgraphSet set = augment_extra_nodes(inst.graph, induce_subgraphs(inst.graph, inst.partition));
    for (NodeId v = 0; v < inst.graph.n(); ++v) {
      std::size_t found = set.size();
      for (std::size_t i = 0; i < set.size(); ++i) {
        const Subgraph &s = set.subgraphs[i];
        for (std::size_t l = 0; l < s.size(); ++l) {
          if (s.global_ids[l] == v && s.provenance[l] == Provenance::core) {
            found = i;
          }
        }
      }
      const std::size_t idx = locate_subgraph(set, v);
      CHECK(idx == found);
      CHECK(set.subgraphs[idx].provenance[set.owner_local[v]] == Provenance::core);
      CHECK(set.subgraphs[idx].local_of(v) == set.owner_local[v]);
    }
    CHECK_THROWS_AS((void)locate_subgraph(set, static_cast<NodeId>(inst.graph.n())), std::out_of_range);
  }
}

TEST_CASE("masks count the train split exactly") {
  std::uint64_t s = 0;
  for (const Instance &inst : random_instances()) {
    if (s++ >= 20) {
      break;
    }
    GraphBuilder b(inst.graph.n());
    for (NodeId u = 0; u < inst.graph.n(); ++u) {
      for (const NodeId v : inst.graph.neighbors(u)) {
        if (u < v) {
          b.add_edge(u, v);
        }
      }
    }
    b.set_features(inst.graph.features());
    b.set_splits(random_splits(inst.graph.n(), 0.5, 0.25, s));
    const Graph g = std::move(b).build();
    const SubgraphSet set = build_masks(augment_extra_nodes(g, induce_subgraphs(g, inst.partition)), g);
    std::size_t masked = 0;
    std::size_t val = 0;
    for (const Subgraph &sub : set.subgraphs) {
      for (std::size_t l = 0; l < sub.size(); ++l) {
        masked += sub.mask[l];
        val += sub.val_mask[l];
        if (sub.provenance[l] != Provenance::core) {
          CHECK(sub.mask[l] == 0);
          CHECK(sub.val_mask[l] == 0);
          CHECK(sub.test_mask[l] == 0);
        }
      }
    }
    const auto &sp = g.splits();
    CHECK(masked == static_cast<std::size_t>(std::count(sp.begin(), sp.end(), Split::train)));
    CHECK(val == static_cast<std::size_t>(std::count(sp.begin(), sp.end(), Split::val)));
  }
}

TEST_CASE("all-train graph masks every core node") {
  GraphBuilder b(6);
  for (NodeId u = 0; u + 1 < 6; ++u) {
    b.add_edge(u, u + 1);
  }
  b.set_splits(std::vector<Split>(6, Split::train));
  const Graph g = std::move(b).build();
  const SubgraphSet set = build_masks(induce_subgraphs(g, kPathPairs), g);
  for (const Subgraph &s : set.subgraphs) {
    for (const auto m : s.mask) {
      CHECK(m == 1);
    }
  }
}

TEST_CASE("dump lists cluster nodes as null ids") {
  const Graph g = path_graph(6);
  const SubgraphSet set = augment_cluster_nodes(g, kPathPairs, induce_subgraphs(g, kPathPairs),
                                                build_coarsened_graph(g, kPathPairs, LabelKind::none));
  const auto doc = dump_subgraphs(set);
  REQUIRE(doc.size() == 3);
  CHECK(doc[1].at("cluster") == 1);
  CHECK(doc[1].at("global_ids")[2].is_null());
  CHECK(doc[1].at("provenance")[2] == "cluster");
  CHECK(doc[1].at("edges").size() == 3);
}
