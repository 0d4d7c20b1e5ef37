/*******************************************************************************
 * Training and inference pipelines.
 *
 * Four setups combine where the model is trained (coarsened graph Gc or
 * subgraph set Gs) with where it is evaluated:
 *
 *   gc-train-gs-train   train on Gc, continue on Gs from those weights, infer on Gs
 *   gc-train-gs-infer   train on Gc, infer on Gs
 *   gs-train-gs-infer   train on Gs, infer on Gs
 *   gc-train-gc-infer   train on Gc, infer on Gc (graph tasks only)
 *
 * Node tasks train full-batch: one loss over the masked rows of every
 * subgraph, one optimizer step per epoch.
 *
 * @file:   pipelines.hpp
 ******************************************************************************/
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "coarsegnn/coarsen.hpp"
#include "coarsegnn/gnn/model.hpp"
#include "coarsegnn/gnn/propagation.hpp"
#include "coarsegnn/graph.hpp"
#include "coarsegnn/subgraph.hpp"

namespace coarsegnn {

enum class Task : std::uint8_t { node_class, node_reg, graph_class, graph_reg };
enum class Setup : std::uint8_t { gc_train_gs_train, gc_train_gs_infer, gs_train_gs_infer, gc_train_gc_infer };
enum class LossKind : std::uint8_t { cross_entropy, mae };

[[nodiscard]] std::string to_string(Task task);
[[nodiscard]] std::string to_string(Setup setup);
[[nodiscard]] std::string to_string(LossKind loss);
[[nodiscard]] Task parse_task(const std::string &text);
[[nodiscard]] Setup parse_setup(const std::string &text);
[[nodiscard]] LossKind parse_loss(const std::string &text);

[[nodiscard]] inline bool is_graph_task(const Task t) {
  return t == Task::graph_class || t == Task::graph_reg;
}
[[nodiscard]] inline bool is_classification(const Task t) {
  return t == Task::node_class || t == Task::graph_class;
}

struct TrainConfig {
  std::size_t epochs = 300;
  std::size_t layers = 2;
  std::size_t hidden = 512;
  /// Unset: 0.01 for node tasks, 1e-4 for graph tasks.
  std::optional<double> lr;
  double weight_decay = 5e-4;
  bool decoupled_decay = false;
  std::optional<LossKind> loss; ///< unset: follows the task
  std::uint64_t seed = 0;
  /// Share of epochs spent on Gc in gc-train-gs-train.
  double gc_epoch_fraction = 0.5;
  DegreeMode degree_mode = DegreeMode::original;
  /// One optimizer step per subgraph instead of one per epoch.
  bool per_subgraph_steps = false;
  /// Graphs per optimizer step for graph tasks; 0 means the whole train split.
  std::size_t batch_size = 32;

  [[nodiscard]] double learning_rate(Task task) const;
  [[nodiscard]] LossKind loss_for(Task task) const;
  /// Throws ValidationError for non-positive sizes or a loss/task mismatch.
  void validate(Task task) const;
};

struct ExperimentSpec {
  Task task = Task::node_class;
  Setup setup = Setup::gs_train_gs_infer;
  double ratio = 0.1;
  Augmentation augmentation = Augmentation::cluster;
  CoarsenMethod method = CoarsenMethod::heavy_edge;
  ClusterFeature cluster_feature = ClusterFeature::normalized_partition;
  TrainConfig train;
  std::size_t trials = 20;
  std::size_t keep = 10;

  /// Enforces the setup gating (node_reg only with gs-train-gs-infer,
  /// gc-train-gc-infer only for graph tasks) and value ranges. Throws
  /// ValidationError.
  void validate() const;
};

/// Flat "key = value" file; '#' starts a comment. Throws FormatError with the
/// offending line for unknown keys or malformed values.
[[nodiscard]] ExperimentSpec parse_spec(const std::string &text, const std::string &where = "spec");
[[nodiscard]] ExperimentSpec load_spec(const std::filesystem::path &path);
[[nodiscard]] std::string format_spec(const ExperimentSpec &spec);

// --- node tasks ------------------------------------------------------------

/// Partition, coarsened graph and augmented subgraph set of one graph.
struct NodeTaskData {
  PartitionMatrix partition;
  CoarsenedGraph coarse;
  SubgraphSet subgraphs;
};

[[nodiscard]] NodeTaskData prepare_node_task(const Graph &graph, double ratio,
                                             CoarsenMethod method, Augmentation augmentation,
                                             std::uint64_t seed = 0,
                                             ClusterFeature feature = ClusterFeature::normalized_partition);

struct TrainResult {
  GcnParams params;
  std::vector<double> losses; ///< loss (without decay) per optimizer step
};

/// Full-batch training on (A', D', X', Y') over clusters that have a label.
/// Throws std::invalid_argument if the coarse graph has no class labels.
[[nodiscard]] TrainResult train_on_gc(const CoarsenedGraph &coarse, Eigen::Index output_dim,
                                      const TrainConfig &config,
                                      const std::optional<GcnParams> &init = std::nullopt);
[[nodiscard]] TrainResult train_on_gc(const Graph &graph, double ratio, const TrainConfig &config,
                                      CoarsenMethod method = CoarsenMethod::heavy_edge);

/// Training over the masked core rows of every subgraph. `init` warm-starts.
/// Throws std::invalid_argument("no supervised nodes") when every mask is
/// empty.
[[nodiscard]] TrainResult train_on_gs(const SubgraphSet &set, Eigen::Index output_dim,
                                      const TrainConfig &config, LossKind loss,
                                      const std::optional<GcnParams> &init = std::nullopt);

[[nodiscard]] Matrix infer_full(const Graph &graph, const GcnParams &params,
                                Workload *work = nullptr);
/// One row per global node, taken from the subgraph where it is core.
[[nodiscard]] Matrix infer_subgraphs(const SubgraphSet &set, const GcnParams &params,
                                     DegreeMode mode = DegreeMode::original,
                                     Workload *work = nullptr);
/// Forward on the owning subgraph only. Throws std::out_of_range for unknown
/// nodes.
[[nodiscard]] RowVector infer_single_node(const SubgraphSet &set, const GcnParams &params,
                                          NodeId node, DegreeMode mode = DegreeMode::original,
                                          Workload *work = nullptr);
/// Node model on the coarsened graph; one row per cluster.
[[nodiscard]] Matrix infer_coarse(const CoarsenedGraph &coarse, const GcnParams &params,
                                  Workload *work = nullptr);

/// Output width needed for a graph's labels (classes or target columns).
[[nodiscard]] Eigen::Index output_width(const Labels &labels);

// --- graph tasks -----------------------------------------------------------

/// Per-graph partition, coarsened graph and subgraphs with their operators.
/// Graphs with more components than round(n·r) keep one cluster per
/// component.
class PreparedDataset {
public:
  PreparedDataset(const GraphDataset &dataset, double ratio, CoarsenMethod method,
                  Augmentation augmentation, DegreeMode mode, std::uint64_t seed = 0,
                  ClusterFeature feature = ClusterFeature::normalized_partition);

  [[nodiscard]] std::size_t size() const { return _entries.size(); }
  [[nodiscard]] const GraphDataset &dataset() const { return *_dataset; }
  [[nodiscard]] const CoarsenedGraph &coarse(std::size_t g) const { return _entries[g].coarse; }
  [[nodiscard]] const PropagationOperator &coarse_operator(std::size_t g) const {
    return _entries[g].coarse_op;
  }
  [[nodiscard]] const SubgraphSet &subgraphs(std::size_t g) const { return _entries[g].subgraphs; }
  [[nodiscard]] std::span<const SubgraphInput> parts(std::size_t g) const {
    return _entries[g].parts;
  }

private:
  struct Entry {
    CoarsenedGraph coarse;
    PropagationOperator coarse_op;
    SubgraphSet subgraphs;
    std::vector<PropagationOperator> ops;
    std::vector<SubgraphInput> parts;
  };
  const GraphDataset *_dataset;
  std::vector<Entry> _entries;
};

enum class GraphView : std::uint8_t { coarse, subgraphs };

[[nodiscard]] TrainResult train_graph_model(const PreparedDataset &data, GraphView view,
                                            const TrainConfig &config, Task task,
                                            const std::optional<GcnParams> &init = std::nullopt);
/// Trains per the spec's setup (both phases for gc-train-gs-train).
[[nodiscard]] TrainResult train_graph_task(const PreparedDataset &data, const ExperimentSpec &spec);
/// One output row per dataset graph.
[[nodiscard]] Matrix infer_graph_task(const PreparedDataset &data, const ExperimentSpec &spec,
                                      const GcnParams &params, Workload *work = nullptr);

/// Trains per the spec's setup on a node task.
[[nodiscard]] TrainResult train_node_task(const Graph &graph, const NodeTaskData &data,
                                          const ExperimentSpec &spec);

// --- experiments -----------------------------------------------------------

struct TrialResult {
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  double val_metric = 0.0;
  double test_metric = 0.0;
  double final_loss = 0.0;
  double train_seconds = 0.0;
  double infer_seconds = 0.0;
  std::size_t peak_bytes = 0;
  bool kept = false;
};

struct RunReport {
  ExperimentSpec spec;
  std::string metric; ///< "accuracy" or "normalized_mae"
  std::vector<TrialResult> trials;
  double mean = 0.0; ///< over kept trials' test metric
  double std = 0.0;  ///< population standard deviation over kept trials

  [[nodiscard]] std::size_t kept_count() const;
  [[nodiscard]] nlohmann::json to_json() const;
  /// Header plus one row per trial and one aggregate row.
  [[nodiscard]] std::string to_csv() const;
};

/// Trial t uses seed spec.train.seed + t. Keeps the best `keep` trials by
/// validation metric (ties by trial order).
[[nodiscard]] RunReport run_experiment(const Graph &graph, const ExperimentSpec &spec);
[[nodiscard]] RunReport run_experiment(const GraphDataset &dataset, const ExperimentSpec &spec);

/// Population standard deviation of the dataset's train-split targets.
[[nodiscard]] double train_target_sigma(const Matrix &targets, std::span<const Split> splits);

} // namespace coarsegnn
