/*******************************************************************************
 * Command-line front end: synth, partition, coarsen, augment, train, infer,
 * bench, feasibility, report. Every subcommand writes its artifacts into
 * --out-dir and exits non-zero with a message on error.
 *
 * @file:   coarsegnn.cpp
 ******************************************************************************/
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "coarsegnn/bench.hpp"
#include "coarsegnn/coarsen.hpp"
#include "coarsegnn/feasibility.hpp"
#include "coarsegnn/gnn/checkpoint.hpp"
#include "coarsegnn/gnn/loss.hpp"
#include "coarsegnn/graph_io.hpp"
#include "coarsegnn/pipelines.hpp"
#include "coarsegnn/subgraph.hpp"
#include "coarsegnn/synth.hpp"

namespace fs = std::filesystem;
using namespace coarsegnn;

namespace {

/// Flags shared by every pipeline subcommand. Strings stay empty unless set
/// so a config file's values survive.
struct Shared {
  std::uint64_t seed = 0;
  std::optional<double> ratio;
  std::string method;
  std::string augment;
  std::string setup;
  std::string task;
  std::string out_dir = ".";
  std::string graph;
  std::string dataset;
  std::string config;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> hidden;
  std::optional<std::size_t> layers;
  std::optional<double> lr;
  std::optional<double> weight_decay;
  std::string degree_mode;
  CLI::Option *seed_opt = nullptr;
};

void add_shared(CLI::App *cmd, Shared &s) {
  s.seed_opt = cmd->add_option("--seed", s.seed, "Random seed");
  cmd->add_option("--ratio", s.ratio, "Coarsening ratio r in (0,1]");
  cmd->add_option("--method", s.method, "heavy_edge | neighborhood_growth");
  cmd->add_option("--augment", s.augment, "none | extra | cluster");
  cmd->add_option("--setup", s.setup,
                  "gc-train-gs-train | gc-train-gs-infer | gs-train-gs-infer | gc-train-gc-infer");
  cmd->add_option("--task", s.task, "node_class | node_reg | graph_class | graph_reg");
  cmd->add_option("--out-dir", s.out_dir, "Directory for artifacts");
}

void add_inputs(CLI::App *cmd, Shared &s) {
  cmd->add_option("--graph", s.graph, "Graph file (node tasks)");
  cmd->add_option("--dataset", s.dataset, "Dataset JSON (graph tasks)");
  cmd->add_option("--config", s.config, "Experiment config (key = value)");
}

void add_training(CLI::App *cmd, Shared &s) {
  cmd->add_option("--epochs", s.epochs);
  cmd->add_option("--hidden", s.hidden);
  cmd->add_option("--layers", s.layers);
  cmd->add_option("--lr", s.lr);
  cmd->add_option("--weight-decay", s.weight_decay);
  cmd->add_option("--degree-mode", s.degree_mode, "original | local");
}

ExperimentSpec build_spec(const Shared &s) {
  ExperimentSpec spec = s.config.empty() ? ExperimentSpec{} : load_spec(s.config);
  if (s.config.empty() && !s.dataset.empty()) {
    spec.task = Task::graph_class;
  }
  if (!s.task.empty()) {
    spec.task = parse_task(s.task);
  }
  if (!s.setup.empty()) {
    spec.setup = parse_setup(s.setup);
  }
  if (s.ratio) {
    spec.ratio = *s.ratio;
  }
  if (!s.method.empty()) {
    spec.method = parse_coarsen_method(s.method);
  }
  if (!s.augment.empty()) {
    spec.augmentation = parse_augmentation(s.augment);
  }
  if (s.seed_opt != nullptr && s.seed_opt->count() > 0) {
    spec.train.seed = s.seed;
  }
  if (s.epochs) {
    spec.train.epochs = *s.epochs;
  }
  if (s.hidden) {
    spec.train.hidden = *s.hidden;
  }
  if (s.layers) {
    spec.train.layers = *s.layers;
  }
  if (s.lr) {
    spec.train.lr = *s.lr;
  }
  if (s.weight_decay) {
    spec.train.weight_decay = *s.weight_decay;
  }
  if (!s.degree_mode.empty()) {
    spec.train.degree_mode = parse_degree_mode(s.degree_mode);
  }
  spec.validate();
  return spec;
}

fs::path out_path(const Shared &s, const std::string &name) {
  fs::create_directories(s.out_dir);
  return fs::path(s.out_dir) / name;
}

void write_text(const fs::path &path, const std::string &text) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write " + path.string());
  }
  out << text;
}

Graph load_node_graph(const Shared &s) {
  if (s.graph.empty()) {
    throw std::invalid_argument("--graph is required");
  }
  return load_graph(s.graph, format_from_path(s.graph));
}

GraphDataset load_dataset(const Shared &s) {
  if (s.dataset.empty()) {
    throw std::invalid_argument("--dataset is required for graph tasks");
  }
  return load_graph_dataset(s.dataset);
}

PartitionMatrix partition_for(const Graph &graph, const Shared &s, const std::string &file) {
  if (!file.empty()) {
    PartitionMatrix p = read_partition(file).partition;
    if (p.n() != graph.n()) {
      throw std::invalid_argument("partition file does not match graph size");
    }
    return p;
  }
  const double ratio = s.ratio.value_or(0.1);
  const CoarsenMethod method =
      s.method.empty() ? CoarsenMethod::heavy_edge : parse_coarsen_method(s.method);
  return coarsen_partition(graph, ratio, method, s.seed);
}

std::string predictions_csv(const Matrix &z, const std::string &id_name) {
  std::ostringstream out;
  out.precision(17);
  out << id_name;
  for (Eigen::Index c = 0; c < z.cols(); ++c) {
    out << ",out" << c;
  }
  out << '\n';
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    out << r;
    for (Eigen::Index c = 0; c < z.cols(); ++c) {
      out << ',' << z(r, c);
    }
    out << '\n';
  }
  return out.str();
}

std::vector<std::size_t> parse_sizes(const std::string &text) {
  std::vector<std::size_t> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) {
      out.push_back(static_cast<std::size_t>(std::stoull(item)));
    }
  }
  return out;
}

std::vector<double> parse_reals(const std::string &text) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) {
      out.push_back(std::stod(item));
    }
  }
  return out;
}

void print_metric(const std::string &name, const double value) {
  std::printf("%s %.6f\n", name.c_str(), value);
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Coarsening and subgraph-based GNN training and inference"};
  app.require_subcommand(1);

  // synth
  Shared synth_s;
  std::string kind = "sbm";
  std::string blocks = "100,100";
  double p_in = 0.1;
  double p_out = 0.01;
  std::size_t n_nodes = 100;
  double p_edge = 0.05;
  std::size_t feature_dim = 16;
  std::size_t graphs = 200;
  std::size_t graph_nodes = 12;
  bool regression = false;
  auto *synth = app.add_subcommand("synth", "Generate a synthetic graph or dataset");
  add_shared(synth, synth_s);
  synth->add_option("--kind", kind, "sbm | er | triangles");
  synth->add_option("--blocks", blocks, "SBM block sizes, comma separated");
  synth->add_option("--p-in", p_in);
  synth->add_option("--p-out", p_out);
  synth->add_option("--n", n_nodes, "Node count for er");
  synth->add_option("--p", p_edge, "Edge probability for er");
  synth->add_option("--feature-dim", feature_dim);
  synth->add_option("--graphs", graphs, "Graph count for triangles");
  synth->add_option("--nodes", graph_nodes, "Nodes per graph for triangles");
  synth->add_flag("--regression", regression, "Triangle counts as regression targets");

  // partition / coarsen / augment
  Shared part_s;
  auto *partition = app.add_subcommand("partition", "Partition a graph into clusters");
  add_shared(partition, part_s);
  add_inputs(partition, part_s);

  Shared coarsen_s;
  std::string coarsen_partition_file;
  auto *coarsen = app.add_subcommand("coarsen", "Build the coarsened graph");
  add_shared(coarsen, coarsen_s);
  add_inputs(coarsen, coarsen_s);
  coarsen->add_option("--partition", coarsen_partition_file, "Existing partition file");

  Shared augment_s;
  std::string augment_partition_file;
  auto *augment = app.add_subcommand("augment", "Build the augmented subgraph set");
  add_shared(augment, augment_s);
  add_inputs(augment, augment_s);
  augment->add_option("--partition", augment_partition_file, "Existing partition file");

  // train / infer / report
  Shared train_s;
  auto *train = app.add_subcommand("train", "Train a model and write a checkpoint");
  add_shared(train, train_s);
  add_inputs(train, train_s);
  add_training(train, train_s);

  Shared infer_s;
  std::string infer_ckpt;
  std::string infer_mode = "subgraphs";
  auto *infer = app.add_subcommand("infer", "Predict with a checkpoint");
  add_shared(infer, infer_s);
  add_inputs(infer, infer_s);
  add_training(infer, infer_s);
  infer->add_option("--checkpoint", infer_ckpt)->required();
  infer->add_option("--mode", infer_mode, "full | subgraphs | coarse");

  Shared report_s;
  std::optional<std::size_t> trials;
  std::optional<std::size_t> keep;
  auto *report = app.add_subcommand("report", "Run repeated trials and aggregate");
  add_shared(report, report_s);
  add_inputs(report, report_s);
  add_training(report, report_s);
  report->add_option("--trials", trials);
  report->add_option("--keep", keep);

  // bench
  Shared bench_s;
  std::string bench_ckpt;
  std::string bench_modes = "full,subgraphs,single_node";
  std::size_t repetitions = kMinRepetitions;
  std::size_t samples = 1000;
  std::string scenario = "default";
  auto *bench = app.add_subcommand("bench", "Benchmark inference modes");
  add_shared(bench, bench_s);
  add_inputs(bench, bench_s);
  add_training(bench, bench_s);
  bench->add_option("--checkpoint", bench_ckpt, "Trained parameters");
  bench->add_option("--modes", bench_modes, "Comma separated: full, subgraphs, single_node, coarse");
  bench->add_option("--repetitions", repetitions);
  bench->add_option("--samples", samples);
  bench->add_option("--scenario", scenario);

  // feasibility
  Shared feas_s;
  double feas_d = 0.0;
  double feas_r = 0.0;
  std::optional<double> feas_phi;
  std::optional<std::size_t> feas_n;
  std::string feas_sizes;
  std::optional<double> feas_alpha;
  bool region = false;
  std::string region_ns = "100,1000,10000";
  std::string region_rs = "0.1,0.3,0.5,0.7";
  auto *feas = app.add_subcommand("feasibility", "Evaluate the subgraph-inference cost bounds");
  add_shared(feas, feas_s);
  feas->add_option("--d", feas_d, "Feature dimension")->required();
  feas->add_option("--r", feas_r, "Coarsening ratio");
  feas->add_option("--phi", feas_phi, "Appended nodes per subgraph");
  feas->add_option("--n", feas_n, "Node count");
  feas->add_option("--sizes", feas_sizes, "Cluster sizes, comma separated");
  feas->add_option("--alpha", feas_alpha, "Largest cluster is n/alpha");
  feas->add_flag("--region", region, "Write feasibility.csv over --ns x --rs");
  feas->add_option("--ns", region_ns);
  feas->add_option("--rs", region_rs);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) {
      if (kind == "sbm") {
        SbmConfig cfg;
        cfg.block_sizes = parse_sizes(blocks);
        cfg.p_in = p_in;
        cfg.p_out = p_out;
        cfg.feature_dim = feature_dim;
        cfg.seed = synth_s.seed;
        const Graph g = synth_sbm(cfg);
        const auto path = out_path(synth_s, "graph.json");
        store_graph(g, path, GraphFormat::json);
        std::printf("wrote %s (n=%zu m=%zu)\n", path.c_str(), g.n(), g.m());
      } else if (kind == "er") {
        const Graph g = synth_erdos_renyi(n_nodes, p_edge, feature_dim, synth_s.seed);
        const auto path = out_path(synth_s, "graph.json");
        store_graph(g, path, GraphFormat::json);
        std::printf("wrote %s (n=%zu m=%zu)\n", path.c_str(), g.n(), g.m());
      } else if (kind == "triangles") {
        TriangleTaskConfig cfg;
        cfg.graphs = graphs;
        cfg.nodes = graph_nodes;
        cfg.feature_dim = feature_dim;
        cfg.seed = synth_s.seed;
        cfg.regression = regression;
        const GraphDataset ds = synth_triangle_dataset(cfg);
        const auto path = out_path(synth_s, "dataset.json");
        store_graph_dataset(ds, path);
        std::printf("wrote %s (%zu graphs)\n", path.c_str(), ds.size());
      } else {
        throw std::invalid_argument("unknown --kind '" + kind + "'");
      }
    } else if (*partition) {
      const Graph g = load_node_graph(part_s);
      const PartitionMatrix p = partition_for(g, part_s, "");
      const CoarsenMethod method =
          part_s.method.empty() ? CoarsenMethod::heavy_edge : parse_coarsen_method(part_s.method);
      const auto path = out_path(part_s, "partition.txt");
      write_partition(path, {p, method, part_s.seed});
      std::printf("k %zu n %zu\n", p.k(), p.n());
    } else if (*coarsen) {
      const Graph g = load_node_graph(coarsen_s);
      const PartitionMatrix p = partition_for(g, coarsen_s, coarsen_partition_file);
      const LabelKind kind_for_labels = g.labels().kind == LabelKind::classification
                                            ? LabelKind::classification
                                            : LabelKind::none;
      const CoarsenedGraph c = build_coarsened_graph(g, p, kind_for_labels);
      nlohmann::json doc;
      doc["k"] = c.k;
      doc["edges"] = nlohmann::json::array();
      for (std::size_t u = 0; u < c.k; ++u) {
        const auto idx = c.adjacency.row_indices(u);
        const auto val = c.adjacency.row_values(u);
        for (std::size_t e = 0; e < idx.size(); ++e) {
          if (idx[e] >= u) {
            doc["edges"].push_back({u, idx[e], val[e]});
          }
        }
      }
      doc["degrees"] = c.degrees;
      doc["x"] = nlohmann::json::array();
      for (Eigen::Index r = 0; r < c.features.rows(); ++r) {
        doc["x"].push_back(std::vector<double>(c.features.row(r).begin(), c.features.row(r).end()));
      }
      if (c.has_labels()) {
        doc["y"] = c.labels;
      }
      std::ofstream(out_path(coarsen_s, "coarse.json")) << doc.dump() << '\n';
      const CoarsenMethod method = coarsen_s.method.empty() ? CoarsenMethod::heavy_edge
                                                            : parse_coarsen_method(coarsen_s.method);
      write_partition(out_path(coarsen_s, "partition.txt"), {p, method, coarsen_s.seed});
      std::printf("k %zu n %zu\n", c.k, g.n());
    } else if (*augment) {
      const Graph g = load_node_graph(augment_s);
      const PartitionMatrix p = partition_for(g, augment_s, augment_partition_file);
      const Augmentation aug =
          augment_s.augment.empty() ? Augmentation::cluster : parse_augmentation(augment_s.augment);
      const LabelKind kind_for_labels = g.labels().kind == LabelKind::classification
                                            ? LabelKind::classification
                                            : LabelKind::none;
      SubgraphSet set = induce_subgraphs(g, p);
      if (aug == Augmentation::extra) {
        set = augment_extra_nodes(g, std::move(set));
      } else if (aug == Augmentation::cluster) {
        set = augment_cluster_nodes(g, p, std::move(set), build_coarsened_graph(g, p, kind_for_labels));
      }
      set = build_masks(std::move(set), g);
      std::ofstream(out_path(augment_s, "subgraphs.json")) << dump_subgraphs(set).dump() << '\n';
      std::printf("subgraphs %zu phi_max %zu\n", set.size(), set.max_appended());
    } else if (*train) {
      const ExperimentSpec spec = build_spec(train_s);
      TrainResult result;
      if (is_graph_task(spec.task)) {
        const GraphDataset ds = load_dataset(train_s);
        const PreparedDataset data(ds, spec.ratio, spec.method, spec.augmentation,
                                   spec.train.degree_mode, spec.train.seed, spec.cluster_feature);
        result = train_graph_task(data, spec);
      } else {
        const Graph g = load_node_graph(train_s);
        const NodeTaskData data = prepare_node_task(g, spec.ratio, spec.method, spec.augmentation,
                                                    spec.train.seed, spec.cluster_feature);
        result = train_node_task(g, data, spec);
      }
      save_checkpoint(result.params, out_path(train_s, "params.ckpt"));
      write_text(out_path(train_s, "spec.cfg"), format_spec(spec));
      std::ostringstream losses;
      losses.precision(17);
      losses << "step,loss\n";
      for (std::size_t i = 0; i < result.losses.size(); ++i) {
        losses << i << ',' << result.losses[i] << '\n';
      }
      write_text(out_path(train_s, "losses.csv"), losses.str());
      print_metric("final_loss", result.losses.empty() ? 0.0 : result.losses.back());
    } else if (*infer) {
      const ExperimentSpec spec = build_spec(infer_s);
      const GcnParams params = load_checkpoint(infer_ckpt);
      Matrix z;
      if (is_graph_task(spec.task)) {
        const GraphDataset ds = load_dataset(infer_s);
        const PreparedDataset data(ds, spec.ratio, spec.method, spec.augmentation,
                                   spec.train.degree_mode, spec.train.seed, spec.cluster_feature);
        z = infer_graph_task(data, spec, params);
        write_text(out_path(infer_s, "predictions.csv"), predictions_csv(z, "graph"));
      } else {
        const Graph g = load_node_graph(infer_s);
        if (infer_mode == "full") {
          z = infer_full(g, params);
        } else {
          const NodeTaskData data = prepare_node_task(g, spec.ratio, spec.method,
                                                      spec.augmentation, spec.train.seed,
                                                      spec.cluster_feature);
          if (infer_mode == "subgraphs") {
            z = infer_subgraphs(data.subgraphs, params, spec.train.degree_mode);
          } else if (infer_mode == "coarse") {
            z = infer_coarse(data.coarse, params);
          } else {
            throw std::invalid_argument("unknown --mode '" + infer_mode + "'");
          }
        }
        write_text(out_path(infer_s, "predictions.csv"), predictions_csv(z, "node"));
        if (infer_mode != "coarse" && g.labels().kind == LabelKind::classification) {
          std::vector<std::uint8_t> test(g.n());
          for (std::size_t v = 0; v < g.n(); ++v) {
            test[v] = g.splits()[v] == Split::test ? 1 : 0;
          }
          if (!masked_rows(test).empty()) {
            print_metric("test_accuracy", accuracy(z, g.labels().classes, test));
          }
        }
      }
      std::printf("rows %ld\n", static_cast<long>(z.rows()));
    } else if (*report) {
      ExperimentSpec spec = build_spec(report_s);
      if (trials) {
        spec.trials = *trials;
      }
      if (keep) {
        spec.keep = *keep;
      }
      spec.validate();
      RunReport r;
      if (is_graph_task(spec.task)) {
        const GraphDataset ds = load_dataset(report_s);
        r = run_experiment(ds, spec);
      } else {
        r = run_experiment(load_node_graph(report_s), spec);
      }
      std::ofstream(out_path(report_s, "report.json")) << r.to_json().dump(2) << '\n';
      write_text(out_path(report_s, "report.csv"), r.to_csv());
      std::printf("%s %.4f +- %.4f over %zu kept of %zu trials\n", r.metric.c_str(), r.mean, r.std,
                  r.kept_count(), r.trials.size());
    } else if (*bench) {
      if (bench_ckpt.empty()) {
        throw std::invalid_argument("--checkpoint is required for bench");
      }
      if (!fs::exists(bench_ckpt)) {
        throw std::runtime_error("checkpoint not found: " + bench_ckpt);
      }
      const ExperimentSpec spec = build_spec(bench_s);
      const GcnParams params = load_checkpoint(bench_ckpt);
      BenchConfig cfg;
      cfg.repetitions = repetitions;
      cfg.samples = samples;
      cfg.seed = spec.train.seed;
      cfg.degree_mode = spec.train.degree_mode;
      cfg.scenario = scenario;
      cfg.ratio = spec.ratio;
      cfg.augmentation = spec.augmentation;
      BenchReport out;
      std::stringstream modes(bench_modes);
      std::string mode;
      if (is_graph_task(spec.task)) {
        const GraphDataset ds = load_dataset(bench_s);
        const PreparedDataset data(ds, spec.ratio, spec.method, spec.augmentation,
                                   spec.train.degree_mode, spec.train.seed, spec.cluster_feature);
        while (std::getline(modes, mode, ',')) {
          out.rows.push_back(bench_graph_inference(data, params, parse_bench_mode(mode), cfg));
        }
      } else {
        const Graph g = load_node_graph(bench_s);
        const NodeTaskData data = prepare_node_task(g, spec.ratio, spec.method, spec.augmentation,
                                                    spec.train.seed, spec.cluster_feature);
        while (std::getline(modes, mode, ',')) {
          out.rows.push_back(bench_inference(g, data, params, parse_bench_mode(mode), cfg));
        }
      }
      write_text(out_path(bench_s, "bench.csv"), out.to_csv());
      std::ofstream(out_path(bench_s, "bench.json")) << out.to_json().dump(2) << '\n';
      std::cout << out.to_csv();
    } else if (*feas) {
      if (region) {
        if (!feas_phi) {
          throw std::invalid_argument("--region needs --phi");
        }
        const auto ns = parse_sizes(region_ns);
        const auto rs = parse_reals(region_rs);
        const auto points = feasibility_region(ns, rs, feas_d, *feas_phi);
        const auto path = out_path(feas_s, "feasibility.csv");
        write_text(path, feasibility_csv(points));
        std::printf("wrote %s (%zu points)\n", path.c_str(), points.size());
      } else if (feas_n && feas_alpha) {
        std::printf("%.3f\n", time_diff_T(static_cast<double>(*feas_n), feas_d, *feas_alpha,
                                          feas_phi.value_or(0.0)));
      } else if (feas_n && !feas_sizes.empty()) {
        const auto sizes = parse_sizes(feas_sizes);
        const double phi = feas_phi.value_or(0.0);
        const CostComparison res = compare_costs(*feas_n, feas_d, sizes, phi);
        std::printf("lhs %.3f rhs %.3f holds %s conditions_met %s\n", res.lhs, res.rhs,
                    res.holds ? "true" : "false", res.conditions_met ? "true" : "false");
        std::printf("phi_second_bound %.3f\n", phi_second_bound(*feas_n, feas_d, sizes));
      } else if (feas_phi) {
        std::printf("%.3f\n", ratio_bound(feas_d, *feas_phi));
      } else {
        std::printf("%.3f\n", phi_max_bound(feas_d, feas_r));
      }
    }
  } catch (const std::exception &e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
