#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "coarsegnn/errors.hpp"
#include "coarsegnn/gnn/checkpoint.hpp"
#include "coarsegnn/gnn/loss.hpp"
#include "coarsegnn/gnn/model.hpp"
#include "coarsegnn/gnn/optimizer.hpp"
#include "coarsegnn/gnn/propagation.hpp"
#include "coarsegnn/gnn/tape.hpp"
#include "coarsegnn/subgraph.hpp"
#include "coarsegnn/synth.hpp"
#include "support/oracles.hpp"

using namespace coarsegnn;

namespace {

Graph path_graph(std::size_t n, std::size_t d, std::uint64_t seed) {
  GraphBuilder b(n);
  for (NodeId u = 0; u + 1 < n; ++u) {
    b.add_edge(u, u + 1);
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Matrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    x.data()[i] = normal(rng);
  }
  b.set_features(x);
  return std::move(b).build();
}

Matrix random_matrix(Eigen::Index r, Eigen::Index c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    m.data()[i] = normal(rng);
  }
  return m;
}

Matrix dense_op(const Graph &g) { return oracle::dense_gcn_operator(oracle::dense_adjacency(g), g.degrees()); }

Matrix dense_op(const Subgraph &s) { return oracle::dense_gcn_operator(s.adjacency.to_dense(), s.orig_degree); }

std::vector<int> random_labels(std::size_t n, int classes, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, classes - 1);
  std::vector<int> out(n);
  for (auto &y : out) {
    y = pick(rng);
  }
  return out;
}

/// Checks every parameter's tape gradient against central differences of
/// `loss_of` within a norm-wise relative error of 1e-4.
void check_gradients(GcnParams params, const std::function<Tape::Var(Tape &, const TapedParams &)> &build,
                     const std::function<double(const GcnParams &)> &loss_of) {
  Tape tape;
  const TapedParams bound = bind_params(tape, params);
  tape.backward(build(tape, bound));
  const GcnParams grads = collect_gradients(tape, bound, params);

  std::vector<Matrix *> slots;
  params.for_each([&](Matrix &w) { slots.push_back(&w); });
  std::vector<const Matrix *> gslots;
  grads.for_each([&](const Matrix &w) { gslots.push_back(&w); });
  for (std::size_t s = 0; s < slots.size(); ++s) {
    const Matrix numeric = oracle::numeric_gradient(*slots[s], [&] { return loss_of(params); }, 1e-5);
    CHECK(oracle::relative_error(*gslots[s], numeric) <= 1e-4);
  }
}

} // namespace

TEST_CASE("operator hand examples") {
  SUBCASE("isolated node") {
    const std::vector<double> deg{0.0};
    const auto op = make_operator(CsrMatrix::from_triplets(1, 1, {}), deg);
    CHECK(op.matrix().to_dense()(0, 0) == 1.0);
  }
  SUBCASE("single edge") {
    const std::vector<double> deg{1.0, 1.0};
    const auto op = make_operator(CsrMatrix::from_triplets(2, 2, {{0, 1, 1.0}, {1, 0, 1.0}}), deg);
    CHECK((op.matrix().to_dense() - Matrix::Constant(2, 2, 0.5)).cwiseAbs().maxCoeff() <= 1e-15);
  }
  SUBCASE("triangle") {
    const Graph g = synth_sbm({3}, 1.0, 0.0, 1, 0);
    const Matrix a = make_operator(g).matrix().to_dense();
    CHECK((a - Matrix::Constant(3, 3, 1.0 / 3.0)).cwiseAbs().maxCoeff() <= 1e-15);
  }
  SUBCASE("negative degree") {
    const std::vector<double> deg{-1.0};
    CHECK_THROWS_AS((void)make_operator(CsrMatrix::from_triplets(1, 1, {}), deg), std::invalid_argument);
  }
  SUBCASE("random graphs vs dense oracle, symmetric") {
    for (std::uint64_t s = 0; s < 10; ++s) {
      const Graph g = synth_erdos_renyi(25, 0.2, 2, s);
      const Matrix a = make_operator(g).matrix().to_dense();
      CHECK((a - dense_op(g)).cwiseAbs().maxCoeff() <= 1e-14);
      CHECK(a == a.transpose());
    }
  }
}

TEST_CASE("node model forward") {
  const Graph g = path_graph(6, 3, 1);
  const auto op = make_operator(g);
  SUBCASE("zero weights give zero output") {
    const GcnParams p = zeros_like(init_params(3, 4, 2, 2, 0));
    CHECK(node_model_forward(op, g.features(), p) == Matrix::Zero(6, 2));
  }
  SUBCASE("depth zero is rejected") {
    CHECK_THROWS_AS((void)init_params(3, 4, 2, 0, 0), std::invalid_argument);
    GcnParams p;
    p.head = Matrix::Ones(3, 2);
    CHECK_THROWS_AS((void)node_model_forward(op, g.features(), p), std::invalid_argument);
  }
  SUBCASE("single node scalar chain") {
    const std::vector<double> deg{0.0};
    const auto one = make_operator(CsrMatrix::from_triplets(1, 1, {}), deg);
    GcnParams p;
    p.layers = {Matrix::Constant(1, 1, -0.5)};
    p.head = Matrix::Constant(1, 1, 3.0);
    CHECK(node_model_forward(one, Matrix::Constant(1, 1, 2.0), p)(0, 0) == 0.0);
    p.layers[0](0, 0) = 0.75;
    CHECK(node_model_forward(one, Matrix::Constant(1, 1, 2.0), p)(0, 0) == doctest::Approx(2.0 * 0.75 * 3.0));
  }
  SUBCASE("dense oracle on random graphs") {
    for (std::uint64_t s = 0; s < 10; ++s) {
      const Graph h = synth_sbm({8, 9}, 0.4, 0.1, 5, s);
      const GcnParams p = init_params(5, 6, 3, 1 + s % 3, s);
      const Matrix z = node_model_forward(make_operator(h), h.features(), p);
      CHECK((z - oracle::dense_node_model(dense_op(h), h.features(), p)).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
  SUBCASE("shape mismatch") {
    const GcnParams p = init_params(5, 4, 2, 2, 0);
    CHECK_THROWS_AS((void)node_model_forward(op, g.features(), p), std::invalid_argument);
  }
}

TEST_CASE("single row forward matches the dense oracle") {
  SUBCASE("path of 6 at depth 2 only reads two hops") {
    const Graph g = path_graph(6, 3, 7);
    const GcnParams p = init_params(3, 4, 2, 2, 3);
    Workload w;
    const RowVector z = node_model_forward_row(make_operator(g), g.features(), p, 0, &w);
    CHECK((z - node_model_forward(make_operator(g), g.features(), p).row(0)).cwiseAbs().maxCoeff() <= 1e-12);
    // Layer 1 reads rows {0,1,2} and emits {0,1}: 3*3*4 + (2+3)*4; layer 2 emits {0}: 2*4*4 + 2*4; head 4*2.
    CHECK(w.macs == 36 + 20 + 32 + 8 + 8);
  }
  SUBCASE("random graphs and depths") {
    for (std::uint64_t s = 0; s < 15; ++s) {
      const Graph h = synth_sbm({12, 10}, 0.25, 0.05, 5, s);
      const GcnParams p = init_params(5, 6, 3, 1 + s % 3, s);
      const Matrix dense = oracle::dense_node_model(dense_op(h), h.features(), p);
      const auto op = make_operator(h);
      for (NodeId v = 0; v < h.n(); ++v) {
        CHECK((node_model_forward_row(op, h.features(), p, v) - dense.row(v)).cwiseAbs().maxCoeff() <= 1e-12);
      }
    }
  }
  SUBCASE("target out of range") {
    const Graph g = path_graph(4, 3, 1);
    CHECK_THROWS_AS((void)node_model_forward_row(make_operator(g), g.features(), init_params(3, 4, 2, 1, 0), 4),
                    std::out_of_range);
  }
}

TEST_CASE("init is seeded and glorot bounded") {
  const GcnParams a = init_params(10, 20, 3, 2, 7);
  CHECK(a == init_params(10, 20, 3, 2, 7));
  CHECK_FALSE(a == init_params(10, 20, 3, 2, 8));
  CHECK(a.dims() == std::vector<Eigen::Index>{10, 20, 20, 3});
  CHECK(a.layers[0].cwiseAbs().maxCoeff() <= std::sqrt(6.0 / 30.0));
  CHECK_NOTHROW(check_params(a));
}

TEST_CASE("graph model over the coarse graph") {
  const Graph g = path_graph(5, 3, 2);
  const GcnParams p = init_params(3, 4, 2, 2, 3);
  SUBCASE("single node equals node model then pool") {
    const std::vector<double> deg{0.0};
    const auto one = make_operator(CsrMatrix::from_triplets(1, 1, {}), deg);
    const Matrix x = g.features().topRows(1);
    const RowVector out = graph_model_gc_forward(one, x, p);
    CHECK((out - node_model_forward(one, x, p).row(0)).cwiseAbs().maxCoeff() <= 1e-15);
  }
  SUBCASE("two identical components pool identically") {
    GraphBuilder b(10);
    for (NodeId u = 0; u + 1 < 5; ++u) {
      b.add_edge(u, u + 1).add_edge(u + 5, u + 6);
    }
    Matrix x2(10, 3);
    x2 << g.features(), g.features();
    b.set_features(x2);
    const Graph twice = std::move(b).build();
    const RowVector a = graph_model_gc_forward(make_operator(g), g.features(), p);
    const RowVector c = graph_model_gc_forward(make_operator(twice), twice.features(), p);
    CHECK((a - c).cwiseAbs().maxCoeff() <= 1e-14);
  }
  SUBCASE("dense oracle") {
    const Matrix emb = oracle::dense_embeddings(dense_op(g), g.features(), p);
    const Matrix expect = oracle::column_max(emb) * p.head;
    CHECK((graph_model_gc_forward(make_operator(g), g.features(), p) - expect).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("graph model over subgraphs") {
  const Graph g = path_graph(6, 3, 4);
  const GcnParams p = init_params(3, 5, 2, 2, 9);
  SUBCASE("one cluster equals the coarse-graph model on G") {
    const SubgraphSet set = induce_subgraphs(g, PartitionMatrix(std::vector<ClusterId>(6, 0)));
    const RowVector gs = graph_model_gs_forward(set, p);
    const RowVector gc = graph_model_gc_forward(make_operator(g), g.features(), p);
    CHECK((gs - gc).cwiseAbs().maxCoeff() <= 1e-14);
  }
  SUBCASE("6-path with three clusters vs stacked dense oracle") {
    const PartitionMatrix part(std::vector<ClusterId>{0, 0, 1, 1, 2, 2});
    for (const bool extra : {false, true}) {
      SubgraphSet set = induce_subgraphs(g, part);
      if (extra) {
        set = augment_extra_nodes(g, std::move(set));
      }
      Matrix stacked(0, 5);
      for (const Subgraph &s : set.subgraphs) {
        const Matrix emb = oracle::dense_embeddings(dense_op(s), s.features, p);
        Matrix grown(stacked.rows() + emb.rows(), 5);
        grown << stacked, emb;
        stacked = grown;
      }
      const Matrix expect = oracle::column_max(stacked) * p.head;
      CHECK((graph_model_gs_forward(set, p) - expect).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
  SUBCASE("subgraph order does not matter") {
    const PartitionMatrix part(std::vector<ClusterId>{0, 0, 1, 1, 2, 2});
    const SubgraphSet set = augment_extra_nodes(g, induce_subgraphs(g, part));
    std::vector<PropagationOperator> ops;
    for (const Subgraph &s : set.subgraphs) {
      ops.push_back(make_operator(s));
    }
    std::vector<SubgraphInput> fwd;
    std::vector<SubgraphInput> rev;
    for (std::size_t i = 0; i < ops.size(); ++i) {
      fwd.push_back({&ops[i], &set.subgraphs[i].features});
      rev.insert(rev.begin(), {&ops[i], &set.subgraphs[i].features});
    }
    CHECK(graph_model_gs_forward(fwd, p) == graph_model_gs_forward(rev, p));
  }
}

TEST_CASE("loss values") {
  SUBCASE("scaled one-hot logits drive cross entropy to zero") {
    const std::vector<int> labels{0, 2, 1};
    Matrix z = Matrix::Zero(3, 3);
    for (Eigen::Index r = 0; r < 3; ++r) {
      z(r, labels[static_cast<std::size_t>(r)]) = 1e3;
    }
    const std::vector<std::uint8_t> mask(3, 1);
    CHECK(cross_entropy(z, labels, mask) <= 1e-6);
  }
  SUBCASE("mae of targets is zero") {
    const Matrix t = random_matrix(4, 2, 1);
    const std::vector<std::uint8_t> mask(4, 1);
    CHECK(mae(t, t, mask) == 0.0);
  }
  SUBCASE("three-row hand case with a mask") {
    Matrix z(3, 2);
    z << 1.0, 2.0, 0.5, -0.5, 3.0, 3.0;
    const std::vector<int> labels{1, 0, 1};
    const std::vector<std::uint8_t> mask{1, 0, 1};
    const double row0 = std::log(std::exp(1.0) + std::exp(2.0)) - 2.0;
    const double row2 = std::log(2.0 * std::exp(3.0)) - 3.0;
    CHECK(cross_entropy(z, labels, mask) == doctest::Approx((row0 + row2) / 2.0));
    Matrix t(3, 2);
    t << 0.0, 0.0, 9.0, 9.0, 1.0, 4.0;
    CHECK(mae(z, t, mask) == doctest::Approx((1.0 + 2.0 + 2.0 + 1.0) / 4.0));
  }
  SUBCASE("large logits stay finite") {
    Matrix z(1, 2);
    z << 800.0, -800.0;
    const std::vector<int> labels{1};
    const std::vector<std::uint8_t> mask{1};
    CHECK(cross_entropy(z, labels, mask) == doctest::Approx(1600.0));
  }
  SUBCASE("empty mask") {
    const Matrix z = Matrix::Zero(2, 2);
    const std::vector<int> labels{0, 1};
    const std::vector<std::uint8_t> mask{0, 0};
    CHECK_THROWS_WITH((void)cross_entropy(z, labels, mask), doctest::Contains("no supervised nodes"));
    CHECK_THROWS_WITH((void)mae(z, z, mask), doctest::Contains("no supervised nodes"));
    Tape tape;
    const auto v = tape.constant(Matrix::Zero(0, 2));
    CHECK_THROWS_WITH((void)tape.cross_entropy(v, {}), doctest::Contains("no supervised nodes"));
  }
}

TEST_CASE("cross entropy gradient at uniform softmax") {
  Tape tape;
  const auto z = tape.parameter(Matrix::Zero(4, 3));
  const std::vector<int> labels{0, 2, 2, 1};
  tape.backward(tape.cross_entropy(z, labels));
  Matrix expect = Matrix::Constant(4, 3, 1.0 / 3.0);
  for (Eigen::Index r = 0; r < 4; ++r) {
    expect(r, labels[static_cast<std::size_t>(r)]) -= 1.0;
  }
  expect /= 4.0;
  CHECK((tape.grad(z) - expect).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("zero inputs give a zero head gradient") {
  const GcnParams p = init_params(3, 4, 2, 2, 1);
  Tape tape;
  const TapedParams bound = bind_params(tape, p);
  const Graph g = path_graph(5, 3, 0);
  const auto op = make_operator(g);
  const auto z = taped_node_model(tape, bound, op, Matrix::Zero(5, 3));
  tape.backward(tape.cross_entropy(z, {0, 1, 0, 1, 1}));
  CHECK(collect_gradients(tape, bound, p).head == Matrix::Zero(4, 2));
}

TEST_CASE("non-finite loss is reported") {
  Tape tape;
  const auto a = tape.parameter(Matrix::Constant(1, 1, std::nan("")));
  CHECK_THROWS_WITH(tape.backward(tape.mae(a, Matrix::Zero(1, 1))), doctest::Contains("non-finite"));
}

TEST_CASE("finite difference gradients") {
  for (std::uint64_t s = 0; s < 5; ++s) {
    SUBCASE("cross entropy through the node model") {
      const Graph g = synth_erdos_renyi(8, 0.35, 4, s);
      const auto op = make_operator(g);
      const std::vector<int> labels = random_labels(8, 3, s);
      check_gradients(
          init_params(4, 5, 3, 2, s),
          [&](Tape &t, const TapedParams &b) { return t.cross_entropy(taped_node_model(t, b, op, g.features()), labels); },
          [&](const GcnParams &p) { return oracle::cross_entropy(oracle::dense_node_model(dense_op(g), g.features(), p), labels); });
    }
    SUBCASE("mae through the subgraph graph model") {
      const Graph g = synth_sbm({6, 6}, 0.6, 0.15, 3, s);
      const SubgraphSet set = augment_extra_nodes(g, induce_subgraphs(g, coarsen_partition_k(g, std::max<std::size_t>(3, connected_components(g)), CoarsenMethod::heavy_edge)));
      std::vector<PropagationOperator> ops;
      std::vector<SubgraphInput> parts;
      for (const Subgraph &sub : set.subgraphs) {
        ops.push_back(make_operator(sub));
      }
      for (std::size_t i = 0; i < ops.size(); ++i) {
        parts.push_back({&ops[i], &set.subgraphs[i].features});
      }
      const Matrix target = random_matrix(1, 2, s + 50);
      check_gradients(
          init_params(3, 4, 2, 2, s),
          [&](Tape &t, const TapedParams &b) { return t.mae(taped_graph_model_gs(t, b, parts), target); },
          [&](const GcnParams &p) { return oracle::mae(graph_model_gs_forward(parts, p), target); });
    }
    SUBCASE("cross entropy through the coarse graph model with weight decay") {
      const Graph g = synth_erdos_renyi(10, 0.3, 3, s);
      const auto op = make_operator(g);
      const double lambda = 5e-3;
      GcnParams p = init_params(3, 4, 2, 1, s);
      Tape tape;
      const TapedParams bound = bind_params(tape, p);
      tape.backward(tape.cross_entropy(taped_graph_model_gc(tape, bound, op, g.features()), {1}));
      GcnParams grads = collect_gradients(tape, bound, p);
      add_weight_decay(grads, p, lambda);
      const auto loss = [&] {
        const Matrix z = graph_model_gc_forward(op, g.features(), p);
        return oracle::cross_entropy(z, {1}) + weight_decay_penalty(p, lambda);
      };
      CHECK(oracle::relative_error(grads.head, oracle::numeric_gradient(p.head, loss, 1e-5)) <= 1e-4);
      CHECK(oracle::relative_error(grads.layers[0], oracle::numeric_gradient(p.layers[0], loss, 1e-5)) <= 1e-4);
    }
  }
}

TEST_CASE("adam") {
  GcnParams p;
  p.layers = {Matrix::Constant(1, 1, 0.5)};
  p.head = Matrix::Constant(1, 1, -0.25);
  SUBCASE("zero gradient leaves parameters unchanged") {
    AdamState st = AdamState::for_params(p);
    GcnParams q = p;
    adam_step(q, zeros_like(p), st, {});
    CHECK(q == p);
  }
  SUBCASE("first step with unit gradient moves by the learning rate") {
    AdamState st = AdamState::for_params(p);
    GcnParams q = p;
    GcnParams g = zeros_like(p);
    g.layers[0](0, 0) = 1.0;
    AdamConfig cfg;
    cfg.lr = 0.1;
    adam_step(q, g, st, cfg);
    CHECK(q.layers[0](0, 0) - 0.5 == doctest::Approx(-0.1).epsilon(1e-6));
  }
  SUBCASE("two steps match a hand-rolled scalar trace with coupled decay") {
    AdamConfig cfg;
    cfg.lr = 0.05;
    cfg.weight_decay = 0.1;
    const double grads[2] = {0.3, -0.7};
    double w = 0.5;
    double m = 0.0;
    double v = 0.0;
    for (int t = 1; t <= 2; ++t) {
      const double g = grads[t - 1] + 2.0 * cfg.weight_decay * w;
      m = 0.9 * m + 0.1 * g;
      v = 0.999 * v + 0.001 * g * g;
      const double mh = m / (1.0 - std::pow(0.9, t));
      const double vh = v / (1.0 - std::pow(0.999, t));
      w -= cfg.lr * mh / (std::sqrt(vh) + 1e-8);
    }
    AdamState st = AdamState::for_params(p);
    GcnParams q = p;
    for (const double gv : grads) {
      GcnParams g = zeros_like(p);
      g.layers[0](0, 0) = gv;
      adam_step(q, g, st, cfg);
    }
    CHECK(q.layers[0](0, 0) == doctest::Approx(w).epsilon(1e-12));
  }
  SUBCASE("decoupled decay shrinks after the moment update") {
    AdamConfig cfg;
    cfg.lr = 0.1;
    cfg.weight_decay = 0.5;
    cfg.decoupled = true;
    AdamState st = AdamState::for_params(p);
    GcnParams q = p;
    adam_step(q, zeros_like(p), st, cfg);
    CHECK(q.layers[0](0, 0) == doctest::Approx(0.5 * (1.0 - 0.1 * 2.0 * 0.5)));
  }
}

TEST_CASE("metrics") {
  SUBCASE("accuracy") {
    Matrix z(4, 2);
    z << 1, 0, 0, 1, 2, 2, 0, 5;
    const std::vector<int> labels{0, 1, 0, 0};
    const std::vector<std::uint8_t> all(4, 1);
    CHECK(accuracy(z, labels, all) == doctest::Approx(0.75));
    const std::vector<std::uint8_t> three{1, 1, 1, 0};
    CHECK(accuracy(z, labels, three) == 1.0);
  }
  SUBCASE("mean predictor stays below one") {
    for (std::uint64_t s = 0; s < 10; ++s) {
      const Matrix t = random_matrix(30, 1, s);
      const std::vector<std::uint8_t> mask(30, 1);
      const double sigma = target_sigma(t, mask);
      const Matrix pred = Matrix::Constant(30, 1, t.mean());
      const double direct = (t.array() - t.mean()).abs().mean() / sigma;
      CHECK(normalized_mae(pred, t, mask, sigma) == doctest::Approx(direct));
      CHECK(direct <= 1.0);
    }
  }
  SUBCASE("four-row hand case") {
    Matrix t(4, 1);
    t << 1, 2, 3, 4;
    Matrix pred(4, 1);
    pred << 1, 1, 1, 1;
    const std::vector<std::uint8_t> mask(4, 1);
    const double sigma = target_sigma(t, mask);
    CHECK(sigma == doctest::Approx(std::sqrt(1.25)));
    CHECK(normalized_mae(pred, t, mask, sigma) == doctest::Approx(1.5 / std::sqrt(1.25)));
    CHECK_THROWS((void)normalized_mae(pred, t, mask, 0.0));
  }
}

TEST_CASE("checkpoint round trip") {
  const auto dir = oracle::temp_dir("checkpoint");
  const GcnParams p = init_params(7, 9, 3, 3, 42);
  save_checkpoint(p, dir / "p.ckpt");
  CHECK(load_checkpoint(dir / "p.ckpt") == p);

  std::ofstream(dir / "bad.ckpt", std::ios::binary) << "NOTACKPT0000";
  CHECK_THROWS_AS((void)load_checkpoint(dir / "bad.ckpt"), FormatError);

  {
    std::ifstream in(dir / "p.ckpt", std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    bytes.resize(bytes.size() - 8);
    std::ofstream(dir / "short.ckpt", std::ios::binary) << bytes;
  }
  CHECK_THROWS_AS((void)load_checkpoint(dir / "short.ckpt"), FormatError);
  CHECK_THROWS((void)load_checkpoint(dir / "missing.ckpt"));
}

TEST_CASE("one layer on extra-augmented subgraphs reproduces the full forward") {
  for (std::uint64_t s = 0; s < 30; ++s) {
    const Graph g = (s % 2 == 0) ? synth_sbm({10, 15}, 0.3, 0.05, 4, s) : synth_erdos_renyi(30, 0.12, 4, s);
    const PartitionMatrix part(oracle::random_assign(g.n(), 2 + s % 8, s));
    const SubgraphSet set = augment_extra_nodes(g, induce_subgraphs(g, part));
    const GcnParams p = init_params(4, 6, 3, 1, s);
    const Matrix full = node_model_forward(make_operator(g), g.features(), p);
    double worst = 0.0;
    for (const Subgraph &sub : set.subgraphs) {
      const Matrix z = node_model_forward(make_operator(sub), sub.features, p);
      for (std::size_t l = 0; l < sub.size(); ++l) {
        if (sub.provenance[l] == Provenance::core) {
          worst = std::max(worst, (z.row(static_cast<Eigen::Index>(l)) - full.row(sub.global_ids[l])).cwiseAbs().maxCoeff());
        }
      }
    }
    CHECK(worst <= 1e-5);
  }
}

TEST_CASE("relabeling nodes permutes output rows") {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const Graph g = synth_erdos_renyi(20, 0.2, 3, s);
    std::vector<NodeId> perm(g.n());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), std::mt19937_64(s));
    GraphBuilder b(g.n());
    Matrix x(g.features().rows(), g.features().cols());
    for (NodeId u = 0; u < g.n(); ++u) {
      x.row(perm[u]) = g.features().row(u);
      const auto nb = g.neighbors(u);
      const auto ws = g.weights(u);
      for (std::size_t e = 0; e < nb.size(); ++e) {
        if (u < nb[e]) {
          b.add_edge(perm[u], perm[nb[e]], ws[e]);
        }
      }
    }
    b.set_features(x);
    const Graph h = std::move(b).build();
    const GcnParams p = init_params(3, 5, 2, 2, s);
    const Matrix zg = node_model_forward(make_operator(g), g.features(), p);
    const Matrix zh = node_model_forward(make_operator(h), h.features(), p);
    for (NodeId u = 0; u < g.n(); ++u) {
      CHECK((zg.row(u) - zh.row(perm[u])).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
}

TEST_CASE("workload counts propagation and dense products") {
  const Graph g = path_graph(6, 3, 0);
  const auto op = make_operator(g);
  const GcnParams p = init_params(3, 4, 2, 1, 0);
  Workload w;
  (void)node_model_forward(op, g.features(), p, &w);
  const std::uint64_t nnz = op.matrix().nnz();
  CHECK(w.macs == 6 * 3 * 4 + nnz * 4 + 6 * 4 * 2);
  CHECK(w.peak_bytes > 0);
}
