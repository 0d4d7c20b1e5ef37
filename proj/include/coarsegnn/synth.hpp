/*******************************************************************************
 * Seeded synthetic graph generators.
 *
 * @file:   synth.hpp
 ******************************************************************************/
#pragma once

#include <cstdint>
#include <vector>

#include "coarsegnn/graph.hpp"

namespace coarsegnn {

struct SbmConfig {
  std::vector<std::size_t> block_sizes;
  double p_in = 0.1;
  double p_out = 0.01;
  std::size_t feature_dim = 16;
  std::uint64_t seed = 0;
  /// Node features are N(0, noise^2) plus `shift` on coordinates j with
  /// j % blocks == block id.
  double feature_shift = 1.0;
  double feature_noise = 1.0;
  double train_fraction = 0.6;
  double val_fraction = 0.2;
};

/// Stochastic block model. Block id is the class label; splits are a seeded
/// random train/val/test assignment. Pure function of the config.
[[nodiscard]] Graph synth_sbm(const SbmConfig &config);

[[nodiscard]] Graph synth_sbm(const std::vector<std::size_t> &block_sizes, double p_in,
                              double p_out, std::size_t feature_dim, std::uint64_t seed);

/// G(n, p) with Gaussian features and random class labels in [0, classes).
[[nodiscard]] Graph synth_erdos_renyi(std::size_t n, double p, std::size_t feature_dim,
                                      std::uint64_t seed, int classes = 2);

/// Seeded permutation split: the first `train_fraction` of a shuffled order is
/// train, the next `val_fraction` val, the remainder test.
[[nodiscard]] std::vector<Split> random_splits(std::size_t n, double train_fraction,
                                               double val_fraction, std::uint64_t seed);

struct TriangleTaskConfig {
  std::size_t graphs = 200;
  std::size_t nodes = 12;
  double p_min = 0.1;
  double p_max = 0.6;
  std::size_t feature_dim = 4;
  std::uint64_t seed = 0;
  /// Classification: label 1 iff triangle count > threshold. Regression:
  /// target is the triangle count.
  bool regression = false;
  std::size_t threshold = 10;
};

/// Graph-level dataset of G(n, p) graphs with p drawn per graph. Node
/// features are [1, degree, noise…].
[[nodiscard]] GraphDataset synth_triangle_dataset(const TriangleTaskConfig &config);

[[nodiscard]] std::size_t count_triangles(const Graph &graph);

} // namespace coarsegnn
