/*******************************************************************************
 * @file:   coarsen.cpp
 * @brief:  Heavy-edge matching and BFS region growing partitioners; coarse
 *          graph contraction.
 ******************************************************************************/
#include "coarsegnn/coarsen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <queue>
#include <random>
#include <sstream>
#include <stdexcept>

#include "coarsegnn/errors.hpp"

namespace coarsegnn {

namespace {

constexpr ClusterId kUnassigned = static_cast<ClusterId>(-1);

/// Cluster-level adjacency induced by `assign` (self pairs dropped).
CsrMatrix contract_adjacency(const Graph &graph, const std::vector<ClusterId> &assign,
                             const std::size_t clusters) {
  std::vector<Triplet> entries;
  entries.reserve(graph.adjacency().nnz());
  for (NodeId u = 0; u < graph.n(); ++u) {
    const auto nbrs = graph.neighbors(u);
    const auto ws = graph.weights(u);
    for (std::size_t e = 0; e < nbrs.size(); ++e) {
      const ClusterId a = assign[u];
      const ClusterId b = assign[nbrs[e]];
      if (a != b) {
        entries.push_back({a, b, ws[e]});
      }
    }
  }
  return CsrMatrix::from_triplets(clusters, clusters, std::move(entries));
}

std::size_t count_components(const Graph &graph) {
  std::vector<bool> seen(graph.n(), false);
  std::size_t components = 0;
  std::vector<NodeId> stack;
  for (NodeId s = 0; s < graph.n(); ++s) {
    if (seen[s]) {
      continue;
    }
    ++components;
    seen[s] = true;
    stack.push_back(s);
    while (!stack.empty()) {
      const NodeId u = stack.back();
      stack.pop_back();
      for (const NodeId v : graph.neighbors(u)) {
        if (!seen[v]) {
          seen[v] = true;
          stack.push_back(v);
        }
      }
    }
  }
  return components;
}

[[noreturn]] void throw_too_few_clusters(const std::size_t k, const std::size_t components) {
  throw std::invalid_argument("cannot form " + std::to_string(k) +
                              " connected clusters: graph has " + std::to_string(components) +
                              " connected components");
}

/// Repeatedly merges the adjacent pair with the smallest combined size until
/// `k` clusters remain. `assign` must be canonical.
std::vector<ClusterId> merge_smallest_adjacent(const Graph &graph, std::vector<ClusterId> assign,
                                               std::size_t clusters, const std::size_t k) {
  while (clusters > k) {
    std::vector<std::size_t> sizes(clusters, 0);
    for (const ClusterId c : assign) {
      ++sizes[c];
    }
    const CsrMatrix adj = contract_adjacency(graph, assign, clusters);
    ClusterId best_a = kUnassigned;
    ClusterId best_b = kUnassigned;
    std::size_t best_size = 0;
    for (ClusterId a = 0; a < clusters; ++a) {
      for (const NodeId b : adj.row_indices(a)) {
        if (b <= a) {
          continue;
        }
        const std::size_t combined = sizes[a] + sizes[b];
        if (best_a == kUnassigned || combined < best_size) {
          best_a = a;
          best_b = b;
          best_size = combined;
        }
      }
    }
    if (best_a == kUnassigned) {
      throw_too_few_clusters(k, count_components(graph));
    }
    for (ClusterId &c : assign) {
      if (c == best_b) {
        c = best_a;
      }
    }
    assign = canonicalize(assign).assign();
    --clusters;
  }
  return assign;
}

/// Splits the largest cluster by detaching a BFS-tree leaf until `k`
/// clusters exist. The remainder of the cluster stays connected.
std::vector<ClusterId> split_largest(const Graph &graph, std::vector<ClusterId> assign,
                                     std::size_t clusters, const std::size_t k) {
  while (clusters < k) {
    std::vector<std::size_t> sizes(clusters, 0);
    for (const ClusterId c : assign) {
      ++sizes[c];
    }
    const auto largest = static_cast<ClusterId>(
        std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
    NodeId root = kInvalidNode;
    for (NodeId u = 0; u < graph.n(); ++u) {
      if (assign[u] == largest) {
        root = u;
        break;
      }
    }
    std::vector<bool> seen(graph.n(), false);
    std::queue<NodeId> queue;
    queue.push(root);
    seen[root] = true;
    NodeId last = root;
    while (!queue.empty()) {
      const NodeId u = queue.front();
      queue.pop();
      last = u;
      for (const NodeId v : graph.neighbors(u)) {
        if (!seen[v] && assign[v] == largest) {
          seen[v] = true;
          queue.push(v);
        }
      }
    }
    assign[last] = static_cast<ClusterId>(clusters);
    assign = canonicalize(assign).assign();
    ++clusters;
  }
  return assign;
}

std::vector<ClusterId> heavy_edge_partition(const Graph &graph, const std::size_t k) {
  const std::size_t n = graph.n();
  std::vector<ClusterId> assign(n);
  std::iota(assign.begin(), assign.end(), 0);
  std::size_t clusters = n;

  while (clusters > k) {
    const CsrMatrix adj = contract_adjacency(graph, assign, clusters);
    std::vector<ClusterId> merged_into(clusters);
    std::iota(merged_into.begin(), merged_into.end(), 0);
    std::vector<bool> matched(clusters, false);
    std::size_t remaining = clusters;

    for (ClusterId c = 0; c < clusters && remaining > k; ++c) {
      if (matched[c]) {
        continue;
      }
      const auto nbrs = adj.row_indices(c);
      const auto ws = adj.row_values(c);
      ClusterId partner = kUnassigned;
      double heaviest = 0.0;
      for (std::size_t e = 0; e < nbrs.size(); ++e) {
        // Strict comparison keeps the smallest id among equal weights.
        if (!matched[nbrs[e]] && (partner == kUnassigned || ws[e] > heaviest)) {
          partner = nbrs[e];
          heaviest = ws[e];
        }
      }
      if (partner == kUnassigned) {
        continue;
      }
      matched[c] = true;
      matched[partner] = true;
      merged_into[partner] = c;
      --remaining;
    }

    if (remaining == clusters) {
      // No two distinct clusters touch: only whole components are left.
      assign = merge_smallest_adjacent(graph, std::move(assign), clusters, k);
      break;
    }
    for (ClusterId &c : assign) {
      c = merged_into[c];
    }
    assign = canonicalize(assign).assign();
    clusters = remaining;
  }
  return assign;
}

std::vector<ClusterId> neighborhood_growth_partition(const Graph &graph, const std::size_t k,
                                                     const std::uint64_t seed) {
  const std::size_t n = graph.n();
  const std::size_t target = (n + k - 1) / k;

  // Seeds in descending degree order; equal degrees in a seeded random order.
  std::vector<std::uint64_t> priority(n);
  std::mt19937_64 rng(seed);
  for (auto &p : priority) {
    p = rng();
  }
  std::vector<NodeId> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](const NodeId a, const NodeId b) {
    if (graph.degree(a) != graph.degree(b)) {
      return graph.degree(a) > graph.degree(b);
    }
    if (priority[a] != priority[b]) {
      return priority[a] < priority[b];
    }
    return a < b;
  });

  std::vector<ClusterId> assign(n, kUnassigned);
  ClusterId clusters = 0;
  std::queue<NodeId> queue;
  for (const NodeId seed_node : order) {
    if (assign[seed_node] != kUnassigned) {
      continue;
    }
    const ClusterId id = clusters++;
    std::size_t size = 1;
    assign[seed_node] = id;
    queue = {};
    queue.push(seed_node);
    while (!queue.empty() && size < target) {
      const NodeId u = queue.front();
      queue.pop();
      for (const NodeId v : graph.neighbors(u)) {
        if (size >= target) {
          break;
        }
        if (assign[v] == kUnassigned) {
          assign[v] = id;
          ++size;
          queue.push(v);
        }
      }
    }
  }

  assign = canonicalize(assign).assign();
  if (clusters > k) {
    assign = merge_smallest_adjacent(graph, std::move(assign), clusters, k);
  } else if (clusters < k) {
    assign = split_largest(graph, std::move(assign), clusters, k);
  }
  return assign;
}

} // namespace

std::string to_string(const CoarsenMethod method) {
  return method == CoarsenMethod::heavy_edge ? "heavy_edge" : "neighborhood_growth";
}

CoarsenMethod parse_coarsen_method(const std::string &text) {
  if (text == "heavy_edge") {
    return CoarsenMethod::heavy_edge;
  }
  if (text == "neighborhood_growth") {
    return CoarsenMethod::neighborhood_growth;
  }
  throw std::invalid_argument("unknown coarsening method '" + text + "'");
}

PartitionMatrix::PartitionMatrix(std::vector<ClusterId> assign) : _assign(std::move(assign)) {
  ClusterId max_id = 0;
  for (const ClusterId c : _assign) {
    if (c == kUnassigned) {
      throw std::invalid_argument("unassigned node in partition");
    }
    max_id = std::max(max_id, c);
  }
  const std::size_t k = _assign.empty() ? 0 : static_cast<std::size_t>(max_id) + 1;
  _sizes.assign(k, 0);
  for (const ClusterId c : _assign) {
    ++_sizes[c];
  }
  for (std::size_t j = 0; j < k; ++j) {
    if (_sizes[j] == 0) {
      throw std::invalid_argument("cluster " + std::to_string(j) + " is empty");
    }
  }
  _member_offsets.assign(k + 1, 0);
  for (std::size_t j = 0; j < k; ++j) {
    _member_offsets[j + 1] = _member_offsets[j] + _sizes[j];
  }
  _members.resize(_assign.size());
  std::vector<std::size_t> cursor(_member_offsets.begin(), _member_offsets.end() - 1);
  for (NodeId u = 0; u < _assign.size(); ++u) {
    _members[cursor[_assign[u]]++] = u;
  }
}

PartitionMatrix PartitionMatrix::identity(const std::size_t n) {
  std::vector<ClusterId> assign(n);
  std::iota(assign.begin(), assign.end(), 0);
  return PartitionMatrix(std::move(assign));
}

double PartitionMatrix::normalized_weight(const ClusterId j) const {
  return 1.0 / std::sqrt(static_cast<double>(_sizes[j]));
}

PartitionMatrix canonicalize(const std::vector<ClusterId> &assign) {
  std::vector<ClusterId> relabel;
  std::vector<ClusterId> out(assign.size());
  ClusterId max_id = 0;
  for (const ClusterId c : assign) {
    max_id = std::max(max_id, c);
  }
  relabel.assign(assign.empty() ? 0 : static_cast<std::size_t>(max_id) + 1, kUnassigned);
  ClusterId next = 0;
  for (std::size_t u = 0; u < assign.size(); ++u) {
    ClusterId &slot = relabel[assign[u]];
    if (slot == kUnassigned) {
      slot = next++;
    }
    out[u] = slot;
  }
  return PartitionMatrix(std::move(out));
}

std::size_t target_cluster_count(const std::size_t n, const double ratio) {
  const auto k = static_cast<long long>(std::llround(static_cast<double>(n) * ratio));
  return static_cast<std::size_t>(std::clamp<long long>(k, 1, static_cast<long long>(std::max<std::size_t>(n, 1))));
}

PartitionMatrix coarsen_partition(const Graph &graph, const double ratio,
                                  const CoarsenMethod method, const std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio <= 1.0)) {
    throw std::invalid_argument("coarsening ratio must lie in (0,1]");
  }
  if (graph.n() == 0) {
    throw std::invalid_argument("cannot partition an empty graph");
  }
  return coarsen_partition_k(graph, target_cluster_count(graph.n(), ratio), method, seed);
}

PartitionMatrix coarsen_partition_k(const Graph &graph, const std::size_t k,
                                    const CoarsenMethod method, const std::uint64_t seed) {
  if (k < 1 || k > graph.n()) {
    throw std::invalid_argument("cluster count must lie in [1, n]");
  }
  if (k == graph.n()) {
    return PartitionMatrix::identity(graph.n());
  }
  const std::size_t components = count_components(graph);
  if (k < components) {
    throw_too_few_clusters(k, components);
  }
  std::vector<ClusterId> assign = method == CoarsenMethod::heavy_edge
                                      ? heavy_edge_partition(graph, k)
                                      : neighborhood_growth_partition(graph, k, seed);
  return canonicalize(assign);
}

std::size_t connected_components(const Graph &graph) {
  return count_components(graph);
}

std::vector<double> coarse_degree(const Graph &graph, const PartitionMatrix &partition) {
  if (partition.n() != graph.n()) {
    throw std::invalid_argument("partition does not match graph size");
  }
  std::vector<double> degrees(partition.k(), 0.0);
  for (NodeId u = 0; u < graph.n(); ++u) {
    degrees[partition.cluster_of(u)] += graph.degree(u);
  }
  return degrees;
}

int majority_class(const std::span<const int> classes) {
  int best = kNoLabel;
  std::size_t best_count = 0;
  std::vector<std::size_t> counts;
  for (const int c : classes) {
    if (c < 0) {
      continue;
    }
    if (static_cast<std::size_t>(c) >= counts.size()) {
      counts.resize(static_cast<std::size_t>(c) + 1, 0);
    }
    ++counts[static_cast<std::size_t>(c)];
  }
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] > best_count) {
      best_count = counts[c];
      best = static_cast<int>(c);
    }
  }
  return best;
}

CoarsenedGraph build_coarsened_graph(const Graph &graph, const PartitionMatrix &partition,
                                     const LabelKind task) {
  if (partition.n() != graph.n()) {
    throw std::invalid_argument("partition does not match graph size");
  }
  CoarsenedGraph coarse;
  coarse.k = partition.k();

  std::vector<Triplet> entries;
  entries.reserve(graph.adjacency().nnz());
  for (NodeId u = 0; u < graph.n(); ++u) {
    const auto nbrs = graph.neighbors(u);
    const auto ws = graph.weights(u);
    for (std::size_t e = 0; e < nbrs.size(); ++e) {
      entries.push_back({partition.cluster_of(u), partition.cluster_of(nbrs[e]), ws[e]});
    }
  }
  coarse.adjacency = CsrMatrix::from_triplets(coarse.k, coarse.k, std::move(entries));
  coarse.degrees = coarse_degree(graph, partition);

  const Matrix &x = graph.features();
  coarse.features = Matrix::Zero(static_cast<Eigen::Index>(coarse.k), x.cols());
  for (ClusterId j = 0; j < coarse.k; ++j) {
    const double scale = partition.normalized_weight(j);
    for (const NodeId u : partition.members(j)) {
      coarse.features.row(j) += scale * x.row(u);
    }
  }

  if (task == LabelKind::classification) {
    if (graph.labels().kind != LabelKind::classification) {
      throw std::invalid_argument("classification coarsening requires class labels");
    }
    coarse.labels.assign(coarse.k, kNoLabel);
    std::vector<int> votes;
    for (ClusterId j = 0; j < coarse.k; ++j) {
      votes.clear();
      for (const NodeId u : partition.members(j)) {
        if (graph.splits()[u] == Split::train) {
          votes.push_back(graph.labels().classes[u]);
        }
      }
      coarse.labels[j] = majority_class(votes);
    }
  }
  return coarse;
}

void write_partition(const std::filesystem::path &path, const PartitionFile &file) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write " + path.string());
  }
  out << file.partition.k() << ' ' << file.partition.n() << ' ' << to_string(file.method) << ' '
      << file.seed << '\n';
  for (const ClusterId c : file.partition.assign()) {
    out << c << '\n';
  }
}

PartitionFile read_partition(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) {
    throw FormatError("cannot open " + path.string());
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw FormatError(path.string(), 1, "missing header 'k n method seed'");
  }
  std::istringstream header(line);
  std::size_t k = 0;
  std::size_t n = 0;
  std::string method;
  std::uint64_t seed = 0;
  if (!(header >> k >> n >> method >> seed)) {
    throw FormatError(path.string(), 1, "malformed header, expected 'k n method seed'");
  }
  PartitionFile file;
  try {
    file.method = parse_coarsen_method(method);
  } catch (const std::invalid_argument &e) {
    throw FormatError(path.string(), 1, e.what());
  }
  file.seed = seed;
  std::vector<ClusterId> assign;
  assign.reserve(n);
  std::size_t number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) {
      continue;
    }
    std::istringstream row(line);
    long long c = -1;
    if (!(row >> c) || c < 0 || static_cast<std::size_t>(c) >= k) {
      throw FormatError(path.string(), number, "cluster id outside [0,k)");
    }
    assign.push_back(static_cast<ClusterId>(c));
  }
  if (assign.size() != n) {
    throw ValidationError("partition file lists " + std::to_string(assign.size()) +
                          " nodes, header says " + std::to_string(n));
  }
  file.partition = PartitionMatrix(std::move(assign));
  if (file.partition.k() != k) {
    throw ValidationError("partition uses " + std::to_string(file.partition.k()) +
                          " clusters, header says " + std::to_string(k));
  }
  return file;
}

} // namespace coarsegnn
