/*******************************************************************************
 * @file:   synth.cpp
 * @brief:  SBM / Erdős–Rényi generators using geometric edge skipping.
 ******************************************************************************/
#include "coarsegnn/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace coarsegnn {

namespace {

using Rng = std::mt19937_64;

/// Number of failures before the next success of a Bernoulli(p) sequence.
std::uint64_t geometric_skip(Rng &rng, const double log_q) {
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const double r = uniform(rng);
  return static_cast<std::uint64_t>(std::floor(std::log1p(-r) / log_q));
}

/// Samples each unordered pair inside [begin, begin + size) with probability p.
void sample_within(Rng &rng, const NodeId begin, const std::size_t size, const double p,
                   GraphBuilder &builder) {
  if (p <= 0.0 || size < 2) {
    return;
  }
  if (p >= 1.0) {
    for (std::size_t v = 1; v < size; ++v) {
      for (std::size_t w = 0; w < v; ++w) {
        builder.add_edge(begin + static_cast<NodeId>(v), begin + static_cast<NodeId>(w));
      }
    }
    return;
  }
  // Batagelj & Brandes: walk the lower triangle row by row.
  const double log_q = std::log1p(-p);
  std::int64_t v = 1;
  std::int64_t w = -1;
  const auto n = static_cast<std::int64_t>(size);
  while (v < n) {
    w += 1 + static_cast<std::int64_t>(geometric_skip(rng, log_q));
    while (w >= v && v < n) {
      w -= v;
      ++v;
    }
    if (v < n) {
      builder.add_edge(begin + static_cast<NodeId>(v), begin + static_cast<NodeId>(w));
    }
  }
}

/// Samples each pair in [a, a + size_a) x [b, b + size_b) with probability p.
void sample_between(Rng &rng, const NodeId a, const std::size_t size_a, const NodeId b,
                    const std::size_t size_b, const double p, GraphBuilder &builder) {
  if (p <= 0.0 || size_a == 0 || size_b == 0) {
    return;
  }
  const std::uint64_t total = static_cast<std::uint64_t>(size_a) * size_b;
  if (p >= 1.0) {
    for (std::uint64_t idx = 0; idx < total; ++idx) {
      builder.add_edge(a + static_cast<NodeId>(idx / size_b), b + static_cast<NodeId>(idx % size_b));
    }
    return;
  }
  const double log_q = std::log1p(-p);
  std::uint64_t idx = geometric_skip(rng, log_q);
  while (idx < total) {
    builder.add_edge(a + static_cast<NodeId>(idx / size_b), b + static_cast<NodeId>(idx % size_b));
    idx += 1 + geometric_skip(rng, log_q);
  }
}

void check_probability(const double p, const char *name) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::invalid_argument(std::string(name) + " must lie in [0,1]");
  }
}

} // namespace

std::vector<Split> random_splits(const std::size_t n, const double train_fraction,
                                 const double val_fraction, const std::uint64_t seed) {
  if (train_fraction < 0.0 || val_fraction < 0.0 || train_fraction + val_fraction > 1.0) {
    throw std::invalid_argument("split fractions must be nonnegative and sum to at most 1");
  }
  std::vector<NodeId> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed ^ 0x5eedf00dULL);
  std::shuffle(order.begin(), order.end(), rng);
  const auto train = static_cast<std::size_t>(std::round(train_fraction * static_cast<double>(n)));
  const auto val = static_cast<std::size_t>(std::round(val_fraction * static_cast<double>(n)));
  std::vector<Split> splits(n, Split::test);
  for (std::size_t i = 0; i < n; ++i) {
    if (i < train) {
      splits[order[i]] = Split::train;
    } else if (i < train + val) {
      splits[order[i]] = Split::val;
    }
  }
  return splits;
}

Graph synth_sbm(const SbmConfig &config) {
  check_probability(config.p_in, "p_in");
  check_probability(config.p_out, "p_out");
  if (config.block_sizes.empty()) {
    throw std::invalid_argument("at least one block is required");
  }
  for (const std::size_t s : config.block_sizes) {
    if (s == 0) {
      throw std::invalid_argument("block sizes must be positive");
    }
  }

  const std::size_t blocks = config.block_sizes.size();
  std::vector<NodeId> begin(blocks + 1, 0);
  for (std::size_t b = 0; b < blocks; ++b) {
    begin[b + 1] = begin[b] + static_cast<NodeId>(config.block_sizes[b]);
  }
  const std::size_t n = begin.back();

  Rng rng(config.seed);
  GraphBuilder builder(n);
  for (std::size_t a = 0; a < blocks; ++a) {
    sample_within(rng, begin[a], config.block_sizes[a], config.p_in, builder);
    for (std::size_t b = a + 1; b < blocks; ++b) {
      sample_between(rng, begin[a], config.block_sizes[a], begin[b], config.block_sizes[b],
                     config.p_out, builder);
    }
  }

  Labels labels;
  labels.kind = LabelKind::classification;
  labels.classes.resize(n);
  const auto d = static_cast<Eigen::Index>(config.feature_dim);
  Matrix x(static_cast<Eigen::Index>(n), d);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t b = 0; b < blocks; ++b) {
    for (NodeId u = begin[b]; u < begin[b + 1]; ++u) {
      labels.classes[u] = static_cast<int>(b);
      for (Eigen::Index j = 0; j < d; ++j) {
        const double shift =
            static_cast<std::size_t>(j) % blocks == b ? config.feature_shift : 0.0;
        x(u, j) = shift + config.feature_noise * normal(rng);
      }
    }
  }

  builder.set_features(std::move(x));
  builder.set_labels(std::move(labels));
  builder.set_splits(random_splits(n, config.train_fraction, config.val_fraction, config.seed));
  return std::move(builder).build();
}

Graph synth_sbm(const std::vector<std::size_t> &block_sizes, const double p_in,
                const double p_out, const std::size_t feature_dim, const std::uint64_t seed) {
  SbmConfig config;
  config.block_sizes = block_sizes;
  config.p_in = p_in;
  config.p_out = p_out;
  config.feature_dim = feature_dim;
  config.seed = seed;
  return synth_sbm(config);
}

Graph synth_erdos_renyi(const std::size_t n, const double p, const std::size_t feature_dim,
                        const std::uint64_t seed, const int classes) {
  check_probability(p, "p");
  if (classes < 1) {
    throw std::invalid_argument("classes must be positive");
  }
  Rng rng(seed);
  GraphBuilder builder(n);
  sample_within(rng, 0, n, p, builder);

  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<int> pick(0, classes - 1);
  Matrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(feature_dim));
  Labels labels;
  labels.kind = LabelKind::classification;
  for (std::size_t u = 0; u < n; ++u) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      x(static_cast<Eigen::Index>(u), j) = normal(rng);
    }
    labels.classes.push_back(pick(rng));
  }
  builder.set_features(std::move(x));
  builder.set_labels(std::move(labels));
  builder.set_splits(random_splits(n, 0.6, 0.2, seed));
  return std::move(builder).build();
}

std::size_t count_triangles(const Graph &graph) {
  std::size_t count = 0;
  for (NodeId u = 0; u < graph.n(); ++u) {
    const auto nu = graph.neighbors(u);
    for (const NodeId v : nu) {
      if (v <= u) {
        continue;
      }
      const auto nv = graph.neighbors(v);
      // Common neighbors w > v, both lists sorted.
      auto a = std::upper_bound(nu.begin(), nu.end(), v);
      auto b = std::upper_bound(nv.begin(), nv.end(), v);
      while (a != nu.end() && b != nv.end()) {
        if (*a < *b) {
          ++a;
        } else if (*b < *a) {
          ++b;
        } else {
          ++count;
          ++a;
          ++b;
        }
      }
    }
  }
  return count;
}

GraphDataset synth_triangle_dataset(const TriangleTaskConfig &config) {
  if (config.graphs == 0) {
    throw std::invalid_argument("empty dataset");
  }
  if (config.feature_dim < 2) {
    throw std::invalid_argument("triangle task needs at least 2 feature columns");
  }
  Rng rng(config.seed);
  std::uniform_real_distribution<double> density(config.p_min, config.p_max);
  std::normal_distribution<double> normal(0.0, 1.0);

  GraphDataset dataset;
  dataset.targets.kind =
      config.regression ? LabelKind::regression : LabelKind::classification;
  if (config.regression) {
    dataset.targets.targets.resize(static_cast<Eigen::Index>(config.graphs), 1);
  }
  for (std::size_t g = 0; g < config.graphs; ++g) {
    const double p = density(rng);
    GraphBuilder builder(config.nodes);
    sample_within(rng, 0, config.nodes, p, builder);
    Graph topology = std::move(builder).build();

    Matrix x(static_cast<Eigen::Index>(config.nodes),
             static_cast<Eigen::Index>(config.feature_dim));
    for (NodeId u = 0; u < config.nodes; ++u) {
      x(u, 0) = 1.0;
      x(u, 1) = topology.degree(u);
      for (Eigen::Index j = 2; j < x.cols(); ++j) {
        x(u, j) = normal(rng);
      }
    }
    const std::size_t triangles = count_triangles(topology);
    dataset.graphs.emplace_back(topology.adjacency(), std::move(x), Labels{},
                                std::vector<Split>(config.nodes, Split::none), topology.degrees());
    if (config.regression) {
      dataset.targets.targets(static_cast<Eigen::Index>(g), 0) = static_cast<double>(triangles);
    } else {
      dataset.targets.classes.push_back(triangles > config.threshold ? 1 : 0);
    }
  }
  dataset.splits = random_splits(config.graphs, 0.6, 0.2, config.seed);
  return dataset;
}

} // namespace coarsegnn
