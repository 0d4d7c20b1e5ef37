/*******************************************************************************
 * @file:   pipelines.cpp
 ******************************************************************************/
#include "coarsegnn/pipelines.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "coarsegnn/errors.hpp"
#include "coarsegnn/gnn/loss.hpp"
#include "coarsegnn/gnn/optimizer.hpp"

namespace coarsegnn {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(const Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::vector<std::uint8_t> split_mask(std::span<const Split> splits, const Split which) {
  std::vector<std::uint8_t> mask(splits.size());
  for (std::size_t i = 0; i < splits.size(); ++i) {
    mask[i] = splits[i] == which ? 1 : 0;
  }
  return mask;
}

AdamConfig adam_for(const TrainConfig &config, const Task task) {
  AdamConfig adam;
  adam.lr = config.learning_rate(task);
  adam.weight_decay = config.weight_decay;
  adam.decoupled = config.decoupled_decay;
  return adam;
}

GcnParams fresh_params(const Eigen::Index input_dim, const Eigen::Index output_dim,
                       const TrainConfig &config, const std::optional<GcnParams> &init) {
  if (init) {
    if (init->input_dim() != input_dim || init->output_dim() != output_dim) {
      throw std::invalid_argument("warm-start parameters have the wrong shape");
    }
    return *init;
  }
  return init_params(input_dim, static_cast<Eigen::Index>(config.hidden), output_dim,
                     config.layers, config.seed);
}

/// Loss node over stacked rows. `labels` or `targets` is used per `loss`.
Tape::Var loss_node(Tape &tape, const Tape::Var out, const LossKind loss,
                    const std::vector<int> &labels, const Matrix &targets) {
  return loss == LossKind::cross_entropy ? tape.cross_entropy(out, labels)
                                         : tape.mae(out, targets);
}

void optimizer_step(Tape &tape, const Tape::Var loss, const TapedParams &bound, GcnParams &params,
                    AdamState &state, const AdamConfig &adam, std::vector<double> &losses) {
  tape.backward(loss);
  const GcnParams grads = collect_gradients(tape, bound, params);
  adam_step(params, grads, state, adam);
  losses.push_back(tape.value(loss)(0, 0));
}

Task task_for_loss(const LossKind loss) {
  return loss == LossKind::cross_entropy ? Task::node_class : Task::node_reg;
}

Task node_task_of(const Labels &labels) {
  if (labels.kind == LabelKind::classification) {
    return Task::node_class;
  }
  if (labels.kind == LabelKind::regression) {
    return Task::node_reg;
  }
  throw std::invalid_argument("graph has no labels");
}

std::size_t gc_epochs(const TrainConfig &config) {
  const auto e = static_cast<std::size_t>(
      std::llround(config.gc_epoch_fraction * static_cast<double>(config.epochs)));
  return std::min(e, config.epochs);
}

std::string trim(const std::string &s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

bool parse_bool(const std::string &v) {
  if (v == "true" || v == "1" || v == "yes") {
    return true;
  }
  if (v == "false" || v == "0" || v == "no") {
    return false;
  }
  throw std::invalid_argument("expected a boolean, got '" + v + "'");
}

std::size_t parse_count(const std::string &v) {
  std::size_t used = 0;
  const long long value = std::stoll(v, &used);
  if (used != v.size() || value < 0) {
    throw std::invalid_argument("expected a non-negative integer, got '" + v + "'");
  }
  return static_cast<std::size_t>(value);
}

double parse_real(const std::string &v) {
  std::size_t used = 0;
  const double value = std::stod(v, &used);
  if (used != v.size()) {
    throw std::invalid_argument("expected a number, got '" + v + "'");
  }
  return value;
}

std::string to_string(const ClusterFeature f) {
  return f == ClusterFeature::normalized_partition ? "normalized_partition" : "degree_weighted";
}

ClusterFeature parse_cluster_feature(const std::string &v) {
  if (v == "normalized_partition") {
    return ClusterFeature::normalized_partition;
  }
  if (v == "degree_weighted") {
    return ClusterFeature::degree_weighted;
  }
  throw std::invalid_argument("unknown cluster feature mode '" + v + "'");
}

bool better(const double a, const double b, const bool higher_is_better) {
  return higher_is_better ? a > b : a < b;
}

void finish_report(RunReport &report, const bool higher_is_better) {
  std::vector<std::size_t> order(report.trials.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](const std::size_t a, const std::size_t b) {
    return better(report.trials[a].val_metric, report.trials[b].val_metric, higher_is_better);
  });
  const std::size_t keep = std::min(report.spec.keep, order.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < keep; ++i) {
    report.trials[order[i]].kept = true;
    sum += report.trials[order[i]].test_metric;
  }
  report.mean = keep > 0 ? sum / static_cast<double>(keep) : 0.0;
  double sq = 0.0;
  for (std::size_t i = 0; i < keep; ++i) {
    const double d = report.trials[order[i]].test_metric - report.mean;
    sq += d * d;
  }
  report.std = keep > 0 ? std::sqrt(sq / static_cast<double>(keep)) : 0.0;
}

} // namespace

// --- names -----------------------------------------------------------------

std::string to_string(const Task task) {
  switch (task) {
  case Task::node_class:
    return "node_class";
  case Task::node_reg:
    return "node_reg";
  case Task::graph_class:
    return "graph_class";
  case Task::graph_reg:
    return "graph_reg";
  }
  return "?";
}

std::string to_string(const Setup setup) {
  switch (setup) {
  case Setup::gc_train_gs_train:
    return "gc-train-gs-train";
  case Setup::gc_train_gs_infer:
    return "gc-train-gs-infer";
  case Setup::gs_train_gs_infer:
    return "gs-train-gs-infer";
  case Setup::gc_train_gc_infer:
    return "gc-train-gc-infer";
  }
  return "?";
}

std::string to_string(const LossKind loss) {
  return loss == LossKind::cross_entropy ? "cross_entropy" : "mae";
}

Task parse_task(const std::string &text) {
  for (const Task t : {Task::node_class, Task::node_reg, Task::graph_class, Task::graph_reg}) {
    if (text == to_string(t)) {
      return t;
    }
  }
  throw std::invalid_argument("unknown task '" + text + "'");
}

Setup parse_setup(const std::string &text) {
  for (const Setup s : {Setup::gc_train_gs_train, Setup::gc_train_gs_infer,
                        Setup::gs_train_gs_infer, Setup::gc_train_gc_infer}) {
    if (text == to_string(s)) {
      return s;
    }
  }
  throw std::invalid_argument("unknown setup '" + text + "'");
}

LossKind parse_loss(const std::string &text) {
  if (text == "cross_entropy") {
    return LossKind::cross_entropy;
  }
  if (text == "mae") {
    return LossKind::mae;
  }
  throw std::invalid_argument("unknown loss '" + text + "'");
}

// --- configuration ---------------------------------------------------------

double TrainConfig::learning_rate(const Task task) const {
  if (lr) {
    return *lr;
  }
  return is_graph_task(task) ? 1e-4 : 0.01;
}

LossKind TrainConfig::loss_for(const Task task) const {
  if (loss) {
    return *loss;
  }
  return is_classification(task) ? LossKind::cross_entropy : LossKind::mae;
}

void TrainConfig::validate(const Task task) const {
  if (epochs == 0 || layers == 0 || hidden == 0) {
    throw ValidationError("epochs, layers and hidden must be positive");
  }
  if (!(learning_rate(task) > 0.0)) {
    throw ValidationError("learning rate must be positive");
  }
  if (!(weight_decay >= 0.0)) {
    throw ValidationError("weight decay must be non-negative");
  }
  if (!(gc_epoch_fraction >= 0.0 && gc_epoch_fraction <= 1.0)) {
    throw ValidationError("gc_epoch_fraction must lie in [0,1]");
  }
  if (loss && (*loss == LossKind::cross_entropy) != is_classification(task)) {
    throw ValidationError("loss " + to_string(*loss) + " does not fit task " + to_string(task));
  }
}

void ExperimentSpec::validate() const {
  if (task == Task::node_reg && setup != Setup::gs_train_gs_infer) {
    throw ValidationError("node_reg only supports gs-train-gs-infer (no coarse labels)");
  }
  if (setup == Setup::gc_train_gc_infer && !is_graph_task(task)) {
    throw ValidationError("gc-train-gc-infer is only defined for graph tasks");
  }
  if (!(ratio > 0.0 && ratio <= 1.0)) {
    throw ValidationError("ratio must lie in (0,1]");
  }
  if (trials == 0 || keep == 0) {
    throw ValidationError("trials and keep must be positive");
  }
  train.validate(task);
}

ExperimentSpec parse_spec(const std::string &text, const std::string &where) {
  ExperimentSpec spec;
  std::istringstream in(text);
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string content = trim(raw.substr(0, raw.find('#')));
    if (content.empty()) {
      continue;
    }
    const auto eq = content.find('=');
    if (eq == std::string::npos) {
      throw FormatError(where, line, "expected key = value");
    }
    const std::string key = trim(content.substr(0, eq));
    const std::string value = trim(content.substr(eq + 1));
    try {
      if (key == "task") {
        spec.task = parse_task(value);
      } else if (key == "setup") {
        spec.setup = parse_setup(value);
      } else if (key == "ratio") {
        spec.ratio = parse_real(value);
      } else if (key == "augment") {
        spec.augmentation = parse_augmentation(value);
      } else if (key == "method") {
        spec.method = parse_coarsen_method(value);
      } else if (key == "cluster_feature") {
        spec.cluster_feature = parse_cluster_feature(value);
      } else if (key == "trials") {
        spec.trials = parse_count(value);
      } else if (key == "keep") {
        spec.keep = parse_count(value);
      } else if (key == "epochs") {
        spec.train.epochs = parse_count(value);
      } else if (key == "layers") {
        spec.train.layers = parse_count(value);
      } else if (key == "hidden") {
        spec.train.hidden = parse_count(value);
      } else if (key == "lr") {
        spec.train.lr = parse_real(value);
      } else if (key == "weight_decay") {
        spec.train.weight_decay = parse_real(value);
      } else if (key == "decoupled_decay") {
        spec.train.decoupled_decay = parse_bool(value);
      } else if (key == "loss") {
        spec.train.loss = parse_loss(value);
      } else if (key == "seed") {
        spec.train.seed = parse_count(value);
      } else if (key == "gc_epoch_fraction") {
        spec.train.gc_epoch_fraction = parse_real(value);
      } else if (key == "degree_mode") {
        spec.train.degree_mode = parse_degree_mode(value);
      } else if (key == "per_subgraph_steps") {
        spec.train.per_subgraph_steps = parse_bool(value);
      } else if (key == "batch_size") {
        spec.train.batch_size = parse_count(value);
      } else {
        throw std::invalid_argument("unknown key '" + key + "'");
      }
    } catch (const std::invalid_argument &e) {
      throw FormatError(where, line, e.what());
    } catch (const std::out_of_range &) {
      throw FormatError(where, line, "value out of range for '" + key + "'");
    }
  }
  spec.validate();
  return spec;
}

ExperimentSpec load_spec(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_spec(buffer.str(), path.string());
}

std::string format_spec(const ExperimentSpec &spec) {
  std::ostringstream out;
  out.precision(17);
  out << "task = " << to_string(spec.task) << '\n'
      << "setup = " << to_string(spec.setup) << '\n'
      << "ratio = " << spec.ratio << '\n'
      << "augment = " << to_string(spec.augmentation) << '\n'
      << "method = " << to_string(spec.method) << '\n'
      << "cluster_feature = " << to_string(spec.cluster_feature) << '\n'
      << "trials = " << spec.trials << '\n'
      << "keep = " << spec.keep << '\n'
      << "epochs = " << spec.train.epochs << '\n'
      << "layers = " << spec.train.layers << '\n'
      << "hidden = " << spec.train.hidden << '\n';
  if (spec.train.lr) {
    out << "lr = " << *spec.train.lr << '\n';
  }
  out << "weight_decay = " << spec.train.weight_decay << '\n'
      << "decoupled_decay = " << (spec.train.decoupled_decay ? "true" : "false") << '\n';
  if (spec.train.loss) {
    out << "loss = " << to_string(*spec.train.loss) << '\n';
  }
  out << "seed = " << spec.train.seed << '\n'
      << "gc_epoch_fraction = " << spec.train.gc_epoch_fraction << '\n'
      << "degree_mode = " << to_string(spec.train.degree_mode) << '\n'
      << "per_subgraph_steps = " << (spec.train.per_subgraph_steps ? "true" : "false") << '\n'
      << "batch_size = " << spec.train.batch_size << '\n';
  return out.str();
}

// --- node tasks ------------------------------------------------------------

NodeTaskData prepare_node_task(const Graph &graph, const double ratio, const CoarsenMethod method,
                               const Augmentation augmentation, const std::uint64_t seed,
                               const ClusterFeature feature) {
  NodeTaskData data;
  data.partition = coarsen_partition(graph, ratio, method, seed);
  const LabelKind kind = graph.labels().kind == LabelKind::classification
                             ? LabelKind::classification
                             : LabelKind::none;
  data.coarse = build_coarsened_graph(graph, data.partition, kind);
  SubgraphSet set = induce_subgraphs(graph, data.partition);
  if (augmentation == Augmentation::extra) {
    set = augment_extra_nodes(graph, std::move(set));
  } else if (augmentation == Augmentation::cluster) {
    set = augment_cluster_nodes(graph, data.partition, std::move(set), data.coarse, feature);
  }
  data.subgraphs = build_masks(std::move(set), graph);
  return data;
}

Eigen::Index output_width(const Labels &labels) {
  if (labels.kind == LabelKind::classification) {
    return labels.num_classes();
  }
  if (labels.kind == LabelKind::regression) {
    return static_cast<Eigen::Index>(labels.target_dim());
  }
  throw std::invalid_argument("no labels to size the output layer");
}

TrainResult train_on_gc(const CoarsenedGraph &coarse, const Eigen::Index output_dim,
                        const TrainConfig &config, const std::optional<GcnParams> &init) {
  if (!coarse.has_labels()) {
    throw std::invalid_argument("training on the coarsened graph needs class labels");
  }
  std::vector<Eigen::Index> rows;
  std::vector<int> labels;
  for (std::size_t j = 0; j < coarse.labels.size(); ++j) {
    if (coarse.labels[j] != kNoLabel) {
      rows.push_back(static_cast<Eigen::Index>(j));
      labels.push_back(coarse.labels[j]);
    }
  }
  if (rows.empty()) {
    throw std::invalid_argument("no supervised nodes");
  }
  const PropagationOperator op = make_operator(coarse);
  TrainResult result{fresh_params(coarse.features.cols(), output_dim, config, init), {}};
  AdamState state = AdamState::for_params(result.params);
  const AdamConfig adam = adam_for(config, Task::node_class);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    Tape tape;
    const TapedParams bound = bind_params(tape, result.params);
    const Tape::Var z = taped_node_model(tape, bound, op, coarse.features);
    const Tape::Var loss = tape.cross_entropy(tape.select_rows(z, rows), labels);
    optimizer_step(tape, loss, bound, result.params, state, adam, result.losses);
  }
  return result;
}

TrainResult train_on_gc(const Graph &graph, const double ratio, const TrainConfig &config,
                        const CoarsenMethod method) {
  const PartitionMatrix partition = coarsen_partition(graph, ratio, method, config.seed);
  const CoarsenedGraph coarse =
      build_coarsened_graph(graph, partition, LabelKind::classification);
  return train_on_gc(coarse, output_width(graph.labels()), config);
}

TrainResult train_on_gs(const SubgraphSet &set, const Eigen::Index output_dim,
                        const TrainConfig &config, const LossKind loss,
                        const std::optional<GcnParams> &init) {
  struct Active {
    std::size_t index;
    PropagationOperator op;
    std::vector<Eigen::Index> rows;
    std::vector<int> labels;
    Matrix targets;
  };
  std::vector<Active> active;
  std::size_t supervised = 0;
  for (std::size_t i = 0; i < set.size(); ++i) {
    const Subgraph &sub = set.subgraphs[i];
    auto rows = masked_rows(sub.mask);
    if (rows.empty()) {
      continue;
    }
    Active a{i, make_operator(sub, config.degree_mode), std::move(rows), {}, {}};
    if (loss == LossKind::cross_entropy) {
      for (const Eigen::Index r : a.rows) {
        const int c = sub.labels.classes.at(static_cast<std::size_t>(r));
        if (c < 0) {
          throw std::invalid_argument("masked node without a class label");
        }
        a.labels.push_back(c);
      }
    } else {
      a.targets.resize(static_cast<Eigen::Index>(a.rows.size()), sub.labels.targets.cols());
      for (std::size_t j = 0; j < a.rows.size(); ++j) {
        a.targets.row(static_cast<Eigen::Index>(j)) = sub.labels.targets.row(a.rows[j]);
      }
    }
    supervised += a.rows.size();
    active.push_back(std::move(a));
  }
  if (active.empty()) {
    throw std::invalid_argument("no supervised nodes");
  }

  const Eigen::Index input_dim = set.subgraphs[active.front().index].features.cols();
  TrainResult result{fresh_params(input_dim, output_dim, config, init), {}};
  AdamState state = AdamState::for_params(result.params);
  const AdamConfig adam = adam_for(config, task_for_loss(loss));

  if (config.per_subgraph_steps) {
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
      for (const Active &a : active) {
        Tape tape;
        const TapedParams bound = bind_params(tape, result.params);
        const Tape::Var z = taped_node_model(tape, bound, a.op, set.subgraphs[a.index].features);
        const Tape::Var l =
            loss_node(tape, tape.select_rows(z, a.rows), loss, a.labels, a.targets);
        optimizer_step(tape, l, bound, result.params, state, adam, result.losses);
      }
    }
    return result;
  }

  std::vector<int> labels;
  Matrix targets;
  if (loss == LossKind::cross_entropy) {
    for (const Active &a : active) {
      labels.insert(labels.end(), a.labels.begin(), a.labels.end());
    }
  } else {
    targets.resize(static_cast<Eigen::Index>(supervised), active.front().targets.cols());
    Eigen::Index offset = 0;
    for (const Active &a : active) {
      targets.middleRows(offset, a.targets.rows()) = a.targets;
      offset += a.targets.rows();
    }
  }
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    Tape tape;
    const TapedParams bound = bind_params(tape, result.params);
    std::vector<Tape::Var> picked;
    picked.reserve(active.size());
    for (const Active &a : active) {
      const Tape::Var z = taped_node_model(tape, bound, a.op, set.subgraphs[a.index].features);
      picked.push_back(tape.select_rows(z, a.rows));
    }
    const Tape::Var l = loss_node(tape, tape.concat_rows(picked), loss, labels, targets);
    optimizer_step(tape, l, bound, result.params, state, adam, result.losses);
  }
  return result;
}

Matrix infer_full(const Graph &graph, const GcnParams &params, Workload *work) {
  const PropagationOperator op = make_operator(graph);
  if (work != nullptr) {
    work->allocate(params.parameter_bytes());
  }
  Matrix z = node_model_forward(op, graph.features(), params, work);
  if (work != nullptr) {
    work->release(params.parameter_bytes());
  }
  return z;
}

Matrix infer_subgraphs(const SubgraphSet &set, const GcnParams &params, const DegreeMode mode,
                       Workload *work) {
  const std::size_t n = set.owner.size();
  Matrix out(static_cast<Eigen::Index>(n), params.output_dim());
  if (work != nullptr) {
    work->allocate(params.parameter_bytes());
    work->allocate(Workload::matrix_bytes(out.rows(), out.cols()));
  }
  for (const Subgraph &sub : set.subgraphs) {
    const PropagationOperator op = make_operator(sub, mode);
    const Matrix z = node_model_forward(op, sub.features, params, work);
    const std::size_t core = sub.core_count();
    for (std::size_t local = 0; local < core; ++local) {
      out.row(sub.global_ids[local]) = z.row(static_cast<Eigen::Index>(local));
    }
    if (work != nullptr) {
      work->release(Workload::matrix_bytes(z.rows(), z.cols()));
    }
  }
  if (work != nullptr) {
    work->release(params.parameter_bytes());
  }
  return out;
}

RowVector infer_single_node(const SubgraphSet &set, const GcnParams &params, const NodeId node,
                            const DegreeMode mode, Workload *work) {
  const std::size_t index = locate_subgraph(set, node);
  const Subgraph &sub = set.subgraphs[index];
  const PropagationOperator op = make_operator(sub, mode);
  if (work != nullptr) {
    work->allocate(params.parameter_bytes());
  }
  RowVector z = node_model_forward_row(op, sub.features, params, set.owner_local[node], work);
  if (work != nullptr) {
    work->release(Workload::matrix_bytes(1, z.cols()));
    work->release(params.parameter_bytes());
  }
  return z;
}

Matrix infer_coarse(const CoarsenedGraph &coarse, const GcnParams &params, Workload *work) {
  const PropagationOperator op = make_operator(coarse);
  if (work != nullptr) {
    work->allocate(params.parameter_bytes());
  }
  Matrix z = node_model_forward(op, coarse.features, params, work);
  if (work != nullptr) {
    work->release(params.parameter_bytes());
  }
  return z;
}

TrainResult train_node_task(const Graph &graph, const NodeTaskData &data,
                            const ExperimentSpec &spec) {
  spec.validate();
  if (is_graph_task(spec.task)) {
    throw std::invalid_argument("train_node_task needs a node task");
  }
  if (node_task_of(graph.labels()) != spec.task) {
    throw std::invalid_argument("graph labels do not match task " + to_string(spec.task));
  }
  const Eigen::Index out = output_width(graph.labels());
  const LossKind loss = spec.train.loss_for(spec.task);
  switch (spec.setup) {
  case Setup::gs_train_gs_infer:
    return train_on_gs(data.subgraphs, out, spec.train, loss);
  case Setup::gc_train_gs_infer:
    return train_on_gc(data.coarse, out, spec.train);
  case Setup::gc_train_gs_train: {
    TrainConfig first = spec.train;
    first.epochs = gc_epochs(spec.train);
    TrainConfig second = spec.train;
    second.epochs = spec.train.epochs - first.epochs;
    TrainResult result;
    std::optional<GcnParams> warm;
    if (first.epochs > 0) {
      result = train_on_gc(data.coarse, out, first);
      warm = result.params;
    }
    if (second.epochs > 0) {
      TrainResult tail = train_on_gs(data.subgraphs, out, second, loss, warm);
      result.params = std::move(tail.params);
      result.losses.insert(result.losses.end(), tail.losses.begin(), tail.losses.end());
    }
    return result;
  }
  case Setup::gc_train_gc_infer:
    break;
  }
  throw std::invalid_argument("setup not available for node tasks");
}

// --- graph tasks -----------------------------------------------------------

PreparedDataset::PreparedDataset(const GraphDataset &dataset, const double ratio,
                                 const CoarsenMethod method, const Augmentation augmentation,
                                 const DegreeMode mode, const std::uint64_t seed,
                                 const ClusterFeature feature)
    : _dataset(&dataset) {
  if (!(ratio > 0.0 && ratio <= 1.0)) {
    throw std::invalid_argument("coarsening ratio must lie in (0,1]");
  }
  _entries.resize(dataset.graphs.size());
  for (std::size_t g = 0; g < dataset.graphs.size(); ++g) {
    const Graph &graph = dataset.graphs[g];
    Entry &entry = _entries[g];
    const std::size_t k = std::max(target_cluster_count(graph.n(), ratio),
                                   connected_components(graph));
    const PartitionMatrix partition = coarsen_partition_k(graph, k, method, seed);
    entry.coarse = build_coarsened_graph(graph, partition, LabelKind::none);
    entry.coarse_op = make_operator(entry.coarse);
    SubgraphSet set = induce_subgraphs(graph, partition);
    if (augmentation == Augmentation::extra) {
      set = augment_extra_nodes(graph, std::move(set));
    } else if (augmentation == Augmentation::cluster) {
      set = augment_cluster_nodes(graph, partition, std::move(set), entry.coarse, feature);
    }
    entry.subgraphs = std::move(set);
    for (const Subgraph &sub : entry.subgraphs.subgraphs) {
      entry.ops.push_back(make_operator(sub, mode));
    }
    for (std::size_t i = 0; i < entry.ops.size(); ++i) {
      entry.parts.push_back({&entry.ops[i], &entry.subgraphs.subgraphs[i].features});
    }
  }
}

TrainResult train_graph_model(const PreparedDataset &data, const GraphView view,
                              const TrainConfig &config, const Task task,
                              const std::optional<GcnParams> &init) {
  if (!is_graph_task(task)) {
    throw std::invalid_argument("train_graph_model needs a graph task");
  }
  const GraphDataset &ds = data.dataset();
  const LossKind loss = config.loss_for(task);
  std::vector<std::size_t> train = ds.indices_in(Split::train);
  if (train.empty()) {
    throw std::invalid_argument("no supervised graphs");
  }
  const Eigen::Index input_dim = ds.graphs.front().feature_dim();
  TrainResult result{fresh_params(input_dim, output_width(ds.targets), config, init), {}};
  AdamState state = AdamState::for_params(result.params);
  const AdamConfig adam = adam_for(config, task);
  const std::size_t batch = config.batch_size == 0 ? train.size() : config.batch_size;
  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(train.begin(), train.end(), rng);
    for (std::size_t first = 0; first < train.size(); first += batch) {
      const std::size_t last = std::min(first + batch, train.size());
      Tape tape;
      const TapedParams bound = bind_params(tape, result.params);
      std::vector<Tape::Var> outputs;
      std::vector<int> labels;
      Matrix targets(loss == LossKind::mae ? static_cast<Eigen::Index>(last - first) : 0,
                     loss == LossKind::mae ? ds.targets.targets.cols() : 0);
      for (std::size_t i = first; i < last; ++i) {
        const std::size_t g = train[i];
        outputs.push_back(view == GraphView::coarse
                              ? taped_graph_model_gc(tape, bound, data.coarse_operator(g),
                                                     data.coarse(g).features)
                              : taped_graph_model_gs(tape, bound, data.parts(g)));
        if (loss == LossKind::cross_entropy) {
          labels.push_back(ds.targets.classes.at(g));
        } else {
          targets.row(static_cast<Eigen::Index>(i - first)) =
              ds.targets.targets.row(static_cast<Eigen::Index>(g));
        }
      }
      const Tape::Var l = loss_node(tape, tape.concat_rows(outputs), loss, labels, targets);
      optimizer_step(tape, l, bound, result.params, state, adam, result.losses);
    }
  }
  return result;
}

TrainResult train_graph_task(const PreparedDataset &data, const ExperimentSpec &spec) {
  spec.validate();
  switch (spec.setup) {
  case Setup::gs_train_gs_infer:
    return train_graph_model(data, GraphView::subgraphs, spec.train, spec.task);
  case Setup::gc_train_gs_infer:
  case Setup::gc_train_gc_infer:
    return train_graph_model(data, GraphView::coarse, spec.train, spec.task);
  case Setup::gc_train_gs_train: {
    TrainConfig first = spec.train;
    first.epochs = gc_epochs(spec.train);
    TrainConfig second = spec.train;
    second.epochs = spec.train.epochs - first.epochs;
    TrainResult result;
    std::optional<GcnParams> warm;
    if (first.epochs > 0) {
      result = train_graph_model(data, GraphView::coarse, first, spec.task);
      warm = result.params;
    }
    if (second.epochs > 0) {
      TrainResult tail = train_graph_model(data, GraphView::subgraphs, second, spec.task, warm);
      result.params = std::move(tail.params);
      result.losses.insert(result.losses.end(), tail.losses.begin(), tail.losses.end());
    }
    return result;
  }
  }
  throw std::invalid_argument("unknown setup");
}

Matrix infer_graph_task(const PreparedDataset &data, const ExperimentSpec &spec,
                        const GcnParams &params, Workload *work) {
  Matrix out(static_cast<Eigen::Index>(data.size()), params.output_dim());
  for (std::size_t g = 0; g < data.size(); ++g) {
    out.row(static_cast<Eigen::Index>(g)) =
        spec.setup == Setup::gc_train_gc_infer
            ? graph_model_gc_forward(data.coarse_operator(g), data.coarse(g).features, params,
                                     work)
            : graph_model_gs_forward(data.parts(g), params, work);
  }
  return out;
}

// --- experiments -----------------------------------------------------------

double train_target_sigma(const Matrix &targets, std::span<const Split> splits) {
  return target_sigma(targets, split_mask(splits, Split::train));
}

std::size_t RunReport::kept_count() const {
  return static_cast<std::size_t>(
      std::count_if(trials.begin(), trials.end(), [](const TrialResult &t) { return t.kept; }));
}

nlohmann::json RunReport::to_json() const {
  nlohmann::json doc;
  doc["task"] = to_string(spec.task);
  doc["setup"] = to_string(spec.setup);
  doc["ratio"] = spec.ratio;
  doc["augment"] = to_string(spec.augmentation);
  doc["method"] = to_string(spec.method);
  doc["degree_mode"] = to_string(spec.train.degree_mode);
  doc["metric"] = metric;
  doc["mean"] = mean;
  doc["std"] = std;
  doc["kept"] = kept_count();
  doc["trials"] = nlohmann::json::array();
  for (const TrialResult &t : trials) {
    doc["trials"].push_back({{"trial", t.trial},
                             {"seed", t.seed},
                             {"val", t.val_metric},
                             {"test", t.test_metric},
                             {"final_loss", t.final_loss},
                             {"train_seconds", t.train_seconds},
                             {"infer_seconds", t.infer_seconds},
                             {"peak_bytes", t.peak_bytes},
                             {"kept", t.kept}});
  }
  return doc;
}

std::string RunReport::to_csv() const {
  std::ostringstream out;
  out.precision(10);
  const std::string prefix = to_string(spec.task) + ',' + to_string(spec.setup) + ',' +
                             std::to_string(spec.ratio) + ',' + to_string(spec.augmentation) +
                             ',' + metric + ',';
  out << "task,setup,ratio,augment,metric,trial,seed,val,test,std,train_seconds,infer_seconds,"
         "peak_bytes,kept\n";
  for (const TrialResult &t : trials) {
    out << prefix << t.trial << ',' << t.seed << ',' << t.val_metric << ',' << t.test_metric
        << ",," << t.train_seconds << ',' << t.infer_seconds << ',' << t.peak_bytes << ','
        << (t.kept ? 1 : 0) << '\n';
  }
  out << prefix << "aggregate,,," << mean << ',' << std << ",,,," << kept_count() << '\n';
  return out.str();
}

RunReport run_experiment(const Graph &graph, const ExperimentSpec &spec) {
  spec.validate();
  if (is_graph_task(spec.task)) {
    throw std::invalid_argument("node experiment needs a node task");
  }
  const NodeTaskData data = prepare_node_task(graph, spec.ratio, spec.method, spec.augmentation,
                                              spec.train.seed, spec.cluster_feature);
  const bool classify = is_classification(spec.task);
  const auto val_mask = split_mask(graph.splits(), Split::val);
  const auto test_mask = split_mask(graph.splits(), Split::test);
  const double sigma =
      classify ? 1.0 : train_target_sigma(graph.labels().targets, graph.splits());

  RunReport report;
  report.spec = spec;
  report.metric = classify ? "accuracy" : "normalized_mae";
  for (std::size_t t = 0; t < spec.trials; ++t) {
    ExperimentSpec trial = spec;
    trial.train.seed = spec.train.seed + t;
    TrialResult r;
    r.trial = t;
    r.seed = trial.train.seed;
    auto start = Clock::now();
    const TrainResult trained = train_node_task(graph, data, trial);
    r.train_seconds = seconds_since(start);
    r.final_loss = trained.losses.empty() ? 0.0 : trained.losses.back();
    Workload work;
    start = Clock::now();
    const Matrix z = infer_subgraphs(data.subgraphs, trained.params, spec.train.degree_mode, &work);
    r.infer_seconds = seconds_since(start);
    r.peak_bytes = work.peak_bytes;
    if (classify) {
      r.val_metric = accuracy(z, graph.labels().classes, val_mask);
      r.test_metric = accuracy(z, graph.labels().classes, test_mask);
    } else {
      r.val_metric = normalized_mae(z, graph.labels().targets, val_mask, sigma);
      r.test_metric = normalized_mae(z, graph.labels().targets, test_mask, sigma);
    }
    report.trials.push_back(r);
  }
  finish_report(report, classify);
  return report;
}

RunReport run_experiment(const GraphDataset &dataset, const ExperimentSpec &spec) {
  spec.validate();
  if (!is_graph_task(spec.task)) {
    throw std::invalid_argument("dataset experiment needs a graph task");
  }
  const PreparedDataset data(dataset, spec.ratio, spec.method, spec.augmentation,
                             spec.train.degree_mode, spec.train.seed, spec.cluster_feature);
  const bool classify = is_classification(spec.task);
  const auto val_mask = split_mask(dataset.splits, Split::val);
  const auto test_mask = split_mask(dataset.splits, Split::test);
  const double sigma = classify ? 1.0 : train_target_sigma(dataset.targets.targets, dataset.splits);

  RunReport report;
  report.spec = spec;
  report.metric = classify ? "accuracy" : "normalized_mae";
  for (std::size_t t = 0; t < spec.trials; ++t) {
    ExperimentSpec trial = spec;
    trial.train.seed = spec.train.seed + t;
    TrialResult r;
    r.trial = t;
    r.seed = trial.train.seed;
    auto start = Clock::now();
    const TrainResult trained = train_graph_task(data, trial);
    r.train_seconds = seconds_since(start);
    r.final_loss = trained.losses.empty() ? 0.0 : trained.losses.back();
    Workload work;
    start = Clock::now();
    const Matrix z = infer_graph_task(data, trial, trained.params, &work);
    r.infer_seconds = seconds_since(start);
    r.peak_bytes = work.peak_bytes;
    if (classify) {
      r.val_metric = accuracy(z, dataset.targets.classes, val_mask);
      r.test_metric = accuracy(z, dataset.targets.classes, test_mask);
    } else {
      r.val_metric = normalized_mae(z, dataset.targets.targets, val_mask, sigma);
      r.test_metric = normalized_mae(z, dataset.targets.targets, test_mask, sigma);
    }
    report.trials.push_back(r);
  }
  finish_report(report, classify);
  return report;
}

} // namespace coarsegnn
