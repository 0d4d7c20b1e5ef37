/*******************************************************************************
 * @file:   bench.cpp
 ******************************************************************************/
#include "coarsegnn/bench.hpp"

#include <algorithm>
#include <chrono>
#include <random>
#include <sstream>
#include <stdexcept>

namespace coarsegnn {

namespace {

using Clock = std::chrono::steady_clock;

double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

double mean(const std::vector<double> &values) {
  double sum = 0.0;
  for (const double v : values) {
    sum += v;
  }
  return sum / static_cast<double>(values.size());
}

void check(const BenchConfig &config) {
  if (config.repetitions < kMinRepetitions) {
    throw std::invalid_argument("at least " + std::to_string(kMinRepetitions) +
                                " repetitions are required");
  }
  if (config.samples == 0) {
    throw std::invalid_argument("samples must be positive");
  }
}

BenchRow row_for(const BenchConfig &config, const BenchMode mode) {
  BenchRow row;
  row.scenario = config.scenario;
  row.mode = mode;
  row.ratio = config.ratio;
  row.augmentation = config.augmentation;
  row.repetitions = config.repetitions;
  return row;
}

/// Sample ids in [0, n): a shuffled prefix when n ≥ count, otherwise with
/// replacement.
std::vector<std::size_t> sample_ids(const std::size_t n, const std::size_t count,
                                    std::mt19937_64 &rng) {
  std::vector<std::size_t> ids;
  if (n >= count) {
    ids.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      ids[i] = i;
    }
    std::shuffle(ids.begin(), ids.end(), rng);
    ids.resize(count);
  } else {
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    for (std::size_t i = 0; i < count; ++i) {
      ids.push_back(pick(rng));
    }
  }
  return ids;
}

} // namespace

std::string to_string(const BenchMode mode) {
  switch (mode) {
  case BenchMode::full:
    return "full";
  case BenchMode::subgraphs:
    return "subgraphs";
  case BenchMode::single_node:
    return "single_node";
  case BenchMode::coarse:
    return "coarse";
  }
  return "?";
}

BenchMode parse_bench_mode(const std::string &text) {
  for (const BenchMode m :
       {BenchMode::full, BenchMode::subgraphs, BenchMode::single_node, BenchMode::coarse}) {
    if (text == to_string(m)) {
      return m;
    }
  }
  throw std::invalid_argument("unknown bench mode '" + text + "'");
}

std::string BenchReport::to_csv() const {
  std::ostringstream out;
  out.precision(10);
  out << "scenario,mode,r,augment,latency_mean_s,latency_median_s,opcount,peak_bytes\n";
  for (const BenchRow &r : rows) {
    out << r.scenario << ',' << to_string(r.mode) << ',' << r.ratio << ','
        << to_string(r.augmentation) << ',' << r.latency_mean_s << ',' << r.latency_median_s
        << ',' << r.opcount << ',' << r.peak_bytes << '\n';
  }
  return out.str();
}

nlohmann::json BenchReport::to_json() const {
  nlohmann::json doc = nlohmann::json::array();
  for (const BenchRow &r : rows) {
    doc.push_back({{"scenario", r.scenario},
                   {"mode", to_string(r.mode)},
                   {"r", r.ratio},
                   {"augment", to_string(r.augmentation)},
                   {"latency_mean_s", r.latency_mean_s},
                   {"latency_median_s", r.latency_median_s},
                   {"opcount", r.opcount},
                   {"peak_bytes", r.peak_bytes},
                   {"repetitions", r.repetitions}});
  }
  return doc;
}

const BenchRow *BenchReport::find(const BenchMode mode) const {
  const auto it =
      std::find_if(rows.begin(), rows.end(), [&](const BenchRow &r) { return r.mode == mode; });
  return it == rows.end() ? nullptr : &*it;
}

BenchRow bench_inference(const Graph &graph, const NodeTaskData &data, const GcnParams &params,
                         const BenchMode mode, const BenchConfig &config) {
  check(config);
  BenchRow row = row_for(config, mode);
  std::vector<double> latencies;
  std::mt19937_64 rng(config.seed);

  for (std::size_t rep = 0; rep < config.repetitions; ++rep) {
    Workload work;
    double seconds = 0.0;
    std::uint64_t units = 1;
    if (mode == BenchMode::single_node) {
      const auto nodes = sample_ids(graph.n(), config.samples, rng);
      units = nodes.size();
      for (const std::size_t v : nodes) {
        Workload one;
        const auto start = Clock::now();
        const RowVector z =
            infer_single_node(data.subgraphs, params, static_cast<NodeId>(v), config.degree_mode, &one);
        seconds += std::chrono::duration<double>(Clock::now() - start).count();
        work.macs += one.macs;
        work.peak_bytes = std::max(work.peak_bytes, one.peak_bytes);
        if (!z.allFinite()) {
          throw std::runtime_error("non-finite prediction during benchmark");
        }
      }
    } else {
      const auto start = Clock::now();
      Matrix z;
      switch (mode) {
      case BenchMode::full:
        z = infer_full(graph, params, &work);
        break;
      case BenchMode::subgraphs:
        z = infer_subgraphs(data.subgraphs, params, config.degree_mode, &work);
        break;
      case BenchMode::coarse:
        z = infer_coarse(data.coarse, params, &work);
        break;
      case BenchMode::single_node:
        break;
      }
      seconds = std::chrono::duration<double>(Clock::now() - start).count();
      if (!z.allFinite()) {
        throw std::runtime_error("non-finite prediction during benchmark");
      }
    }
    latencies.push_back(seconds / static_cast<double>(units));
    row.opcount = work.macs / units;
    row.peak_bytes = std::max(row.peak_bytes, work.peak_bytes);
  }
  row.latency_mean_s = mean(latencies);
  row.latency_median_s = median(latencies);
  return row;
}

BenchRow bench_graph_inference(const PreparedDataset &data, const GcnParams &params,
                               const BenchMode mode, const BenchConfig &config) {
  check(config);
  if (mode == BenchMode::single_node) {
    throw std::invalid_argument("single_node mode applies to node tasks only");
  }
  if (data.size() == 0) {
    throw std::invalid_argument("empty dataset");
  }
  BenchRow row = row_for(config, mode);
  std::vector<double> latencies;
  std::mt19937_64 rng(config.seed);
  const GraphDataset &ds = data.dataset();

  for (std::size_t rep = 0; rep < config.repetitions; ++rep) {
    const auto graphs = sample_ids(data.size(), config.samples, rng);
    Workload work;
    double seconds = 0.0;
    for (const std::size_t g : graphs) {
      Workload one;
      const auto start = Clock::now();
      RowVector z;
      switch (mode) {
      case BenchMode::full: {
        const PropagationOperator op = make_operator(ds.graphs[g]);
        z = graph_model_gc_forward(op, ds.graphs[g].features(), params, &one);
        break;
      }
      case BenchMode::subgraphs:
        z = graph_model_gs_forward(data.parts(g), params, &one);
        break;
      case BenchMode::coarse:
        z = graph_model_gc_forward(data.coarse_operator(g), data.coarse(g).features, params, &one);
        break;
      case BenchMode::single_node:
        break;
      }
      seconds += std::chrono::duration<double>(Clock::now() - start).count();
      if (!z.allFinite()) {
        throw std::runtime_error("non-finite prediction during benchmark");
      }
      work.macs += one.macs;
      work.peak_bytes = std::max(work.peak_bytes, one.peak_bytes);
    }
    latencies.push_back(seconds / static_cast<double>(graphs.size()));
    row.opcount = work.macs / graphs.size();
    row.peak_bytes = std::max(row.peak_bytes, work.peak_bytes + params.parameter_bytes());
  }
  row.latency_mean_s = mean(latencies);
  row.latency_median_s = median(latencies);
  return row;
}

} // namespace coarsegnn
