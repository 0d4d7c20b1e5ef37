#include <doctest.h>

#include <cmath>
#include <set>

#include "coarsegnn/errors.hpp"
#include "coarsegnn/gnn/loss.hpp"
#include "coarsegnn/gnn/optimizer.hpp"
#include "coarsegnn/gnn/tape.hpp"
#include "coarsegnn/pipelines.hpp"
#include "coarsegnn/synth.hpp"
#include "support/oracles.hpp"

using namespace coarsegnn;

namespace {

TrainConfig small_config(std::size_t epochs, std::size_t hidden = 16, std::size_t layers = 2) {
  TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.hidden = hidden;
  cfg.layers = layers;
  cfg.seed = 3;
  return cfg;
}

std::vector<std::uint8_t> split_mask(const std::vector<Split> &splits, Split which) {
  std::vector<std::uint8_t> out(splits.size());
  for (std::size_t i = 0; i < splits.size(); ++i) {
    out[i] = splits[i] == which ? 1 : 0;
  }
  return out;
}

/// Full-graph training loop on G written against the tape directly: CE over
/// the train split, coupled decay, Adam.
std::vector<double> classical_losses(const Graph &g, const TrainConfig &cfg, GcnParams &params) {
  const auto op = make_operator(g);
  std::vector<Eigen::Index> rows;
  std::vector<int> labels;
  for (NodeId v = 0; v < g.n(); ++v) {
    if (g.splits()[v] == Split::train) {
      rows.push_back(static_cast<Eigen::Index>(v));
      labels.push_back(g.labels().classes[v]);
    }
  }
  AdamConfig adam;
  adam.lr = cfg.learning_rate(Task::node_class);
  adam.weight_decay = cfg.weight_decay;
  AdamState st = AdamState::for_params(params);
  std::vector<double> losses;
  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    Tape tape;
    const TapedParams b = bind_params(tape, params);
    const auto loss = tape.cross_entropy(tape.select_rows(taped_node_model(tape, b, op, g.features()), rows), labels);
    tape.backward(loss);
    adam_step(params, collect_gradients(tape, b, params), st, adam);
    losses.push_back(tape.value(loss)(0, 0));
  }
  return losses;
}

Graph with_regression_targets(const Graph &g) {
  GraphBuilder b(g.n());
  for (NodeId u = 0; u < g.n(); ++u) {
    for (const NodeId v : g.neighbors(u)) {
      if (u < v) {
        b.add_edge(u, v);
      }
    }
  }
  Labels labels;
  labels.kind = LabelKind::regression;
  labels.targets = g.features().rowwise().sum();
  b.set_features(g.features()).set_labels(labels).set_splits(g.splits());
  return std::move(b).build();
}

} // namespace

TEST_CASE("setup gating") {
  ExperimentSpec spec;
  spec.task = Task::node_reg;
  for (const Setup s : {Setup::gc_train_gs_train, Setup::gc_train_gs_infer, Setup::gc_train_gc_infer}) {
    spec.setup = s;
    CHECK_THROWS_AS(spec.validate(), ValidationError);
  }
  spec.setup = Setup::gs_train_gs_infer;
  CHECK_NOTHROW(spec.validate());

  spec.task = Task::node_class;
  spec.setup = Setup::gc_train_gc_infer;
  CHECK_THROWS_AS(spec.validate(), ValidationError);
  spec.task = Task::graph_reg;
  CHECK_NOTHROW(spec.validate());

  spec.train.loss = LossKind::cross_entropy;
  CHECK_THROWS_AS(spec.validate(), ValidationError);
  spec.train.loss.reset();
  spec.ratio = 0.0;
  CHECK_THROWS_AS(spec.validate(), ValidationError);
}

TEST_CASE("default hyperparameters") {
  const TrainConfig cfg;
  CHECK(cfg.epochs == 300);
  CHECK(cfg.layers == 2);
  CHECK(cfg.hidden == 512);
  CHECK(cfg.weight_decay == 5e-4);
  CHECK(cfg.learning_rate(Task::node_class) == 0.01);
  CHECK(cfg.learning_rate(Task::graph_reg) == 1e-4);
  CHECK(cfg.loss_for(Task::node_reg) == LossKind::mae);
  CHECK(cfg.loss_for(Task::graph_class) == LossKind::cross_entropy);
}

TEST_CASE("spec files") {
  SUBCASE("parse") {
    const ExperimentSpec s = parse_spec("# demo\ntask = graph_reg\nsetup=gc-train-gc-infer\nratio=0.3  # r\n"
                                        "augment=extra\nmethod=neighborhood_growth\nhidden=64\nlr=0.001\n"
                                        "trials=4\nkeep=2\nseed=9\ndegree_mode=local\n");
    CHECK(s.task == Task::graph_reg);
    CHECK(s.setup == Setup::gc_train_gc_infer);
    CHECK(s.ratio == 0.3);
    CHECK(s.augmentation == Augmentation::extra);
    CHECK(s.method == CoarsenMethod::neighborhood_growth);
    CHECK(s.train.hidden == 64);
    CHECK(s.train.lr == 0.001);
    CHECK(s.trials == 4);
    CHECK(s.keep == 2);
    CHECK(s.train.seed == 9);
    CHECK(s.train.degree_mode == DegreeMode::local);
    CHECK(format_spec(parse_spec(format_spec(s))) == format_spec(s));
  }
  SUBCASE("errors carry line numbers") {
    try {
      (void)parse_spec("task=node_class\nbogus=1\n", "x.cfg");
      FAIL("expected an error");
    } catch (const FormatError &e) {
      CHECK(e.line() == 2);
    }
    CHECK_THROWS((void)parse_spec("task=node_class\nratio=abc\n"));
    CHECK_THROWS((void)parse_spec("setup=sideways\n"));
    CHECK_THROWS_AS((void)parse_spec("no equals sign\n"), FormatError);
  }
}

TEST_CASE("coarse training separates two cliques") {
  SbmConfig sbm;
  sbm.block_sizes = {20, 20};
  sbm.p_in = 1.0;
  sbm.p_out = 0.0;
  sbm.feature_dim = 4;
  sbm.seed = 1;
  const Graph g = synth_sbm(sbm);
  const TrainResult res = train_on_gc(g, 0.5, small_config(300));
  REQUIRE(res.losses.size() == 300);
  CHECK(res.losses.back() < 0.1);
  const TrainResult again = train_on_gc(g, 0.5, small_config(300));
  CHECK(again.params == res.params);
  CHECK(again.losses == res.losses);
}

TEST_CASE("coarse training at r=1 is classical training") {
  const Graph g = synth_sbm({15, 15}, 0.3, 0.05, 4, 2);
  const TrainConfig cfg = small_config(25);
  const TrainResult coarse = train_on_gc(g, 1.0, cfg);
  GcnParams params = init_params(4, 16, 2, 2, cfg.seed);
  const std::vector<double> classical = classical_losses(g, cfg, params);
  REQUIRE(coarse.losses.size() == classical.size());
  for (std::size_t e = 0; e < classical.size(); ++e) {
    CHECK(coarse.losses[e] == doctest::Approx(classical[e]).epsilon(1e-12));
  }
  CHECK(oracle::relative_error(coarse.params.head, params.head) <= 1e-10);
}

TEST_CASE("subgraph training with one cluster is classical training") {
  const Graph g = synth_sbm({15, 15}, 0.3, 0.05, 4, 5);
  const TrainConfig cfg = small_config(25, 8, 1);
  const SubgraphSet set = build_masks(induce_subgraphs(g, PartitionMatrix(std::vector<ClusterId>(g.n(), 0))), g);
  const TrainResult gs = train_on_gs(set, 2, cfg, LossKind::cross_entropy);
  GcnParams params = init_params(4, 8, 2, 1, cfg.seed);
  const std::vector<double> classical = classical_losses(g, cfg, params);
  for (std::size_t e = 0; e < classical.size(); ++e) {
    CHECK(gs.losses[e] == doctest::Approx(classical[e]).epsilon(1e-12));
  }
}

TEST_CASE("coarse training rejects regression graphs") {
  const Graph g = with_regression_targets(synth_sbm({10, 10}, 0.4, 0.05, 3, 0));
  CHECK_THROWS((void)train_on_gc(g, 0.5, small_config(5)));
}

TEST_CASE("subgraph training without supervision") {
  GraphBuilder b(4);
  b.add_edge(0, 1).add_edge(2, 3);
  Labels labels;
  labels.kind = LabelKind::classification;
  labels.classes = {0, 1, 0, 1};
  b.set_labels(labels).set_splits(std::vector<Split>(4, Split::test));
  const Graph g = std::move(b).build();
  const SubgraphSet set = build_masks(induce_subgraphs(g, PartitionMatrix::identity(4)), g);
  CHECK_THROWS_WITH((void)train_on_gs(set, 2, small_config(3), LossKind::cross_entropy),
                    doctest::Contains("no supervised nodes"));
}

TEST_CASE("inference paths agree") {
  SUBCASE("one cluster: subgraph inference is byte-identical to full inference") {
    const Graph g = synth_erdos_renyi(40, 0.1, 3, 1);
    const SubgraphSet set = induce_subgraphs(g, PartitionMatrix(std::vector<ClusterId>(g.n(), 0)));
    const GcnParams p = init_params(3, 8, 2, 2, 0);
    CHECK(infer_subgraphs(set, p) == infer_full(g, p));
  }
  SUBCASE("one layer with extra nodes equals full inference on 20 graphs") {
    for (std::uint64_t s = 0; s < 20; ++s) {
      const Graph g = synth_sbm({20 + s, 25}, 0.2, 0.03, 5, s);
      const NodeTaskData data = prepare_node_task(g, 0.1 + 0.02 * static_cast<double>(s % 10),
                                                  s % 2 ? CoarsenMethod::heavy_edge : CoarsenMethod::neighborhood_growth,
                                                  Augmentation::extra, s);
      const GcnParams p = init_params(5, 12, 2, 1, s);
      const Matrix full = infer_full(g, p);
      const Matrix sub = infer_subgraphs(data.subgraphs, p);
      CHECK((full - sub).cwiseAbs().maxCoeff() <= 1e-5);
    }
  }
  SUBCASE("single node agrees with the subgraph path on 20 graphs") {
    for (std::uint64_t s = 0; s < 20; ++s) {
      const Graph g = synth_erdos_renyi(30, 0.1, 3, s);
      const auto aug = static_cast<Augmentation>(s % 3);
      const double r = std::max(0.3, static_cast<double>(connected_components(g)) / 30.0);
      const NodeTaskData data = prepare_node_task(g, r, CoarsenMethod::heavy_edge, aug, s);
      const GcnParams p = init_params(3, 6, 2, 2, s);
      const Matrix sub = infer_subgraphs(data.subgraphs, p);
      for (NodeId v = 0; v < g.n(); ++v) {
        CHECK(infer_single_node(data.subgraphs, p, v) == sub.row(v));
      }
      CHECK_THROWS((void)infer_single_node(data.subgraphs, p, static_cast<NodeId>(g.n())));
    }
  }
  SUBCASE("identity partition uses one-node subgraphs") {
    const Graph g = synth_erdos_renyi(12, 0.3, 2, 0);
    const SubgraphSet set = induce_subgraphs(g, PartitionMatrix::identity(12));
    const GcnParams p = init_params(2, 4, 2, 1, 0);
    Workload w;
    (void)infer_single_node(set, p, 5, DegreeMode::original, &w);
    CHECK(w.macs == 2 * 4 + 1 * 4 + 4 * 2);
  }
  SUBCASE("completeness: every node is core exactly once") {
    const Graph g = synth_sbm({30, 30}, 0.2, 0.02, 3, 7);
    const NodeTaskData data = prepare_node_task(g, 0.2, CoarsenMethod::heavy_edge, Augmentation::cluster, 7);
    std::vector<int> seen(g.n(), 0);
    for (const Subgraph &s : data.subgraphs.subgraphs) {
      for (std::size_t l = 0; l < s.size(); ++l) {
        if (s.provenance[l] == Provenance::core) {
          ++seen[s.global_ids[l]];
        }
      }
    }
    CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
    CHECK(infer_subgraphs(data.subgraphs, init_params(3, 4, 2, 2, 0)).rows() == static_cast<Eigen::Index>(g.n()));
  }
  SUBCASE("coarse inference at r=1 equals full inference") {
    const Graph g = synth_erdos_renyi(25, 0.2, 3, 9);
    const CoarsenedGraph c = build_coarsened_graph(g, PartitionMatrix::identity(g.n()), LabelKind::classification);
    const GcnParams p = init_params(3, 5, 2, 2, 1);
    CHECK(infer_coarse(c, p) == infer_full(g, p));
  }
}

TEST_CASE("single-node work scales with the subgraph, not the graph") {
  const GcnParams p = init_params(4, 16, 2, 2, 0);
  for (const std::size_t blocks : {4u, 40u}) {
    const Graph g = synth_sbm(std::vector<std::size_t>(blocks, 25), 1.0, 0.0, 4, 1);
    const NodeTaskData data = prepare_node_task(g, 0.04, CoarsenMethod::heavy_edge, Augmentation::cluster);
    Workload full;
    (void)infer_full(g, p, &full);
    std::uint64_t worst = 0;
    for (NodeId v = 0; v < g.n(); v += 7) {
      const Subgraph &s = data.subgraphs.subgraphs[locate_subgraph(data.subgraphs, v)];
      Workload w;
      (void)infer_single_node(data.subgraphs, p, v, DegreeMode::original, &w);
      const std::uint64_t size = s.size();
      const std::uint64_t nnz = s.adjacency.nnz() + size;
      // Two layers of dense products and propagation plus the head row.
      CHECK(w.macs <= size * 4 * 16 + nnz * 16 + size * 16 * 16 + nnz * 16 + 16 * 2 + size * 16 * 2);
      CHECK(size <= 25);
      worst = std::max(worst, w.macs);
    }
    // Per-node work depends on the 25-node blocks only, so a graph with 40
    // blocks costs at least 10x more to infer in full.
    if (blocks == 40) {
      CHECK(worst * 10 <= full.macs);
    }
  }
}

TEST_CASE("graph tasks") {
  SUBCASE("two one-node graphs separate") {
    GraphDataset ds;
    for (int i = 0; i < 2; ++i) {
      GraphBuilder b(1);
      b.set_features(Matrix::Constant(1, 2, i == 0 ? 1.0 : -1.0));
      ds.graphs.push_back(std::move(b).build());
    }
    ds.targets.kind = LabelKind::classification;
    ds.targets.classes = {0, 1};
    ds.splits = {Split::train, Split::train};
    ExperimentSpec spec;
    spec.task = Task::graph_class;
    spec.setup = Setup::gs_train_gs_infer;
    spec.ratio = 0.5;
    spec.train = small_config(300);
    spec.train.lr = 0.01;
    const PreparedDataset data(ds, spec.ratio, spec.method, spec.augmentation, DegreeMode::original);
    const TrainResult res = train_graph_task(data, spec);
    CHECK(res.losses.back() < 0.01);
  }
  SUBCASE("gc at r=1 is the classical per-graph model") {
    TriangleTaskConfig tc;
    tc.graphs = 12;
    tc.nodes = 10;
    tc.threshold = 3;
    const GraphDataset ds = synth_triangle_dataset(tc);
    ExperimentSpec spec;
    spec.task = Task::graph_class;
    spec.setup = Setup::gc_train_gc_infer;
    spec.ratio = 1.0;
    const PreparedDataset data(ds, 1.0, spec.method, spec.augmentation, DegreeMode::original);
    const GcnParams p = init_params(static_cast<Eigen::Index>(tc.feature_dim), 8, 2, 2, 4);
    const Matrix out = infer_graph_task(data, spec, p);
    for (std::size_t g = 0; g < ds.size(); ++g) {
      const RowVector expect = graph_model_gc_forward(make_operator(ds.graphs[g]), ds.graphs[g].features(), p);
      CHECK(out.row(static_cast<Eigen::Index>(g)) == expect);
    }

    // Full-batch training on G' matches a hand loop over the original graphs.
    TrainConfig cfg = small_config(15, 8);
    cfg.batch_size = 0;
    const TrainResult trained = train_graph_model(data, GraphView::coarse, cfg, Task::graph_class);
    GcnParams q = init_params(static_cast<Eigen::Index>(tc.feature_dim), 8, 2, 2, cfg.seed);
    AdamConfig adam;
    adam.lr = cfg.learning_rate(Task::graph_class);
    adam.weight_decay = cfg.weight_decay;
    AdamState st = AdamState::for_params(q);
    std::vector<PropagationOperator> ops;
    for (const Graph &g : ds.graphs) {
      ops.push_back(make_operator(g));
    }
    for (std::size_t e = 0; e < cfg.epochs; ++e) {
      Tape tape;
      const TapedParams b = bind_params(tape, q);
      std::vector<Tape::Var> outs;
      std::vector<int> labels;
      for (const std::size_t g : ds.indices_in(Split::train)) {
        outs.push_back(taped_graph_model_gc(tape, b, ops[g], ds.graphs[g].features()));
        labels.push_back(ds.targets.classes[g]);
      }
      const auto loss = tape.cross_entropy(tape.concat_rows(outs), labels);
      tape.backward(loss);
      adam_step(q, collect_gradients(tape, b, q), st, adam);
      CHECK(trained.losses[e] == doctest::Approx(tape.value(loss)(0, 0)).epsilon(1e-10));
    }
  }
  SUBCASE("triangle threshold task beats the majority rate") {
    TriangleTaskConfig tc;
    tc.graphs = 200;
    tc.nodes = 12;
    tc.seed = 1;
    const GraphDataset ds = synth_triangle_dataset(tc);
    ExperimentSpec spec;
    spec.task = Task::graph_class;
    spec.setup = Setup::gs_train_gs_infer;
    spec.ratio = 0.5;
    spec.augmentation = Augmentation::extra;
    spec.train = small_config(100, 32);
    spec.train.lr = 0.01;
    const PreparedDataset data(ds, spec.ratio, spec.method, spec.augmentation, DegreeMode::original);
    const TrainResult res = train_graph_task(data, spec);
    const Matrix out = infer_graph_task(data, spec, res.params);
    const auto test = split_mask(ds.splits, Split::test);
    std::size_t ones = 0;
    std::size_t total = 0;
    for (std::size_t g = 0; g < ds.size(); ++g) {
      if (test[g] != 0) {
        ones += ds.targets.classes[g] == 1 ? 1 : 0;
        ++total;
      }
    }
    const double majority = static_cast<double>(std::max(ones, total - ones)) / static_cast<double>(total);
    const double acc = accuracy(out, ds.targets.classes, test);
    MESSAGE("triangle accuracy " << acc << " majority " << majority);
    CHECK(acc > majority);
  }
  SUBCASE("single-node graphs clamp to one cluster") {
    GraphDataset ds;
    GraphBuilder b(1);
    b.set_features(Matrix::Ones(1, 2));
    ds.graphs.push_back(std::move(b).build());
    ds.targets.kind = LabelKind::regression;
    ds.targets.targets = Matrix::Constant(1, 1, 2.0);
    ds.splits = {Split::train};
    const PreparedDataset data(ds, 0.1, CoarsenMethod::heavy_edge, Augmentation::cluster, DegreeMode::original);
    CHECK(data.coarse(0).k == 1);
    CHECK(data.subgraphs(0).size() == 1);
  }
}

TEST_CASE("experiments") {
  const Graph g = synth_sbm({30, 30}, 0.2, 0.02, 4, 11);
  ExperimentSpec spec;
  spec.task = Task::node_class;
  spec.ratio = 0.2;
  spec.train = small_config(20);
  SUBCASE("a single trial is its own report") {
    spec.trials = 1;
    spec.keep = 10;
    const RunReport r = run_experiment(g, spec);
    REQUIRE(r.trials.size() == 1);
    CHECK(r.kept_count() == 1);
    CHECK(r.mean == r.trials[0].test_metric);
    CHECK(r.std == 0.0);
    CHECK(r.metric == "accuracy");
  }
  SUBCASE("fixed seeds reproduce the report") {
    spec.trials = 3;
    spec.keep = 2;
    const RunReport a = run_experiment(g, spec);
    const RunReport b = run_experiment(g, spec);
    for (std::size_t t = 0; t < 3; ++t) {
      CHECK(a.trials[t].test_metric == b.trials[t].test_metric);
      CHECK(a.trials[t].val_metric == b.trials[t].val_metric);
      CHECK(a.trials[t].final_loss == b.trials[t].final_loss);
      CHECK(a.trials[t].kept == b.trials[t].kept);
    }
    CHECK(a.mean == b.mean);
  }
  SUBCASE("twenty trials keep ten with a finite spread") {
    spec.trials = 20;
    spec.keep = 10;
    spec.train.epochs = 10;
    const RunReport r = run_experiment(g, spec);
    CHECK(r.kept_count() == 10);
    CHECK(std::isfinite(r.std));
    double worst_kept = 1.0;
    double best_dropped = 0.0;
    std::vector<double> kept;
    for (const TrialResult &t : r.trials) {
      if (t.kept) {
        worst_kept = std::min(worst_kept, t.val_metric);
        kept.push_back(t.test_metric);
      } else {
        best_dropped = std::max(best_dropped, t.val_metric);
      }
    }
    CHECK(worst_kept >= best_dropped);
    double mean = 0.0;
    for (const double x : kept) {
      mean += x / 10.0;
    }
    double var = 0.0;
    for (const double x : kept) {
      var += (x - mean) * (x - mean) / 10.0;
    }
    CHECK(r.mean == doctest::Approx(mean));
    CHECK(r.std == doctest::Approx(std::sqrt(var)));
    const std::string csv = r.to_csv();
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 22);
    CHECK(r.to_json().at("trials").size() == 20);
  }
  SUBCASE("all four node setups run") {
    spec.trials = 1;
    for (const Setup s : {Setup::gc_train_gs_train, Setup::gc_train_gs_infer, Setup::gs_train_gs_infer}) {
      spec.setup = s;
      const RunReport r = run_experiment(g, spec);
      CHECK(r.trials[0].test_metric >= 0.0);
      CHECK(r.trials[0].test_metric <= 1.0);
    }
  }
  SUBCASE("node regression reports normalized mae") {
    spec.task = Task::node_reg;
    spec.trials = 2;
    spec.keep = 1;
    const RunReport r = run_experiment(with_regression_targets(g), spec);
    CHECK(r.metric == "normalized_mae");
    CHECK(std::isfinite(r.mean));
  }
}
