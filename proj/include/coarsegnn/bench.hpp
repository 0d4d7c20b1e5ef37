/*******************************************************************************
 * Inference benchmarks.
 *
 * Each row times one inference mode with the same parameters. Latency is
 * wall clock around the inference call; operation counts (propagation and
 * dense multiply-adds) and analytic peak live bytes come from Workload and
 * are what comparisons should rely on.
 *
 * @file:   bench.hpp
 ******************************************************************************/
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "coarsegnn/pipelines.hpp"

namespace coarsegnn {

enum class BenchMode : std::uint8_t { full, subgraphs, single_node, coarse };

[[nodiscard]] std::string to_string(BenchMode mode);
[[nodiscard]] BenchMode parse_bench_mode(const std::string &text);

inline constexpr std::size_t kMinRepetitions = 5;

struct BenchConfig {
  std::size_t repetitions = kMinRepetitions;
  /// Nodes (node tasks) or graphs (graph tasks) per repetition for the
  /// per-item modes.
  std::size_t samples = 1000;
  std::uint64_t seed = 0;
  DegreeMode degree_mode = DegreeMode::original;
  std::string scenario = "default";
  double ratio = 0.0;
  Augmentation augmentation = Augmentation::none;
};

struct BenchRow {
  std::string scenario;
  BenchMode mode = BenchMode::full;
  double ratio = 0.0;
  Augmentation augmentation = Augmentation::none;
  double latency_mean_s = 0.0;   ///< per prediction unit, mean over repetitions
  double latency_median_s = 0.0; ///< per prediction unit, median over repetitions
  std::uint64_t opcount = 0;     ///< multiply-adds per prediction unit
  std::size_t peak_bytes = 0;    ///< largest analytic live set observed
  std::size_t repetitions = 0;
};

struct BenchReport {
  std::vector<BenchRow> rows;

  /// Columns: scenario, mode, r, augment, latency_mean_s, latency_median_s,
  /// opcount, peak_bytes.
  [[nodiscard]] std::string to_csv() const;
  [[nodiscard]] nlohmann::json to_json() const;
  /// Row for `mode`, or nullptr.
  [[nodiscard]] const BenchRow *find(BenchMode mode) const;
};

/// Node task. full / subgraphs / coarse time one whole pass per repetition;
/// single_node times `samples` sampled nodes (with replacement when
/// n < samples) and reports the mean per-node cost. Throws
/// std::invalid_argument for fewer than kMinRepetitions repetitions.
[[nodiscard]] BenchRow bench_inference(const Graph &graph, const NodeTaskData &data,
                                       const GcnParams &params, BenchMode mode,
                                       const BenchConfig &config);

/// Graph task. Samples `samples` dataset graphs per repetition; full runs the
/// graph model on the original graph, subgraphs on the subgraph set, coarse
/// on the coarsened graph. single_node is rejected.
[[nodiscard]] BenchRow bench_graph_inference(const PreparedDataset &data, const GcnParams &params,
                                             BenchMode mode, const BenchConfig &config);

} // namespace coarsegnn
