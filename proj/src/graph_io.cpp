/*******************************************************************************
 * @file:   graph_io.cpp
 * @brief:  Edge-list and JSON readers/writers for graphs and datasets.
 ******************************************************************************/
#include "coarsegnn/graph_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <sstream>

#include "coarsegnn/errors.hpp"

namespace coarsegnn {

namespace fs = std::filesystem;

namespace {

struct RawEdge {
  std::int64_t u;
  std::int64_t v;
  double w;
};

std::string trim(const std::string &s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::optional<double> parse_double(std::string_view token) {
  double value = 0.0;
  const auto *end = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    return std::nullopt;
  }
  return value;
}

std::optional<std::int64_t> parse_int(std::string_view token) {
  std::int64_t value = 0;
  const auto *end = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    return std::nullopt;
  }
  return value;
}

std::vector<std::string> split_tokens(const std::string &line, const char sep) {
  std::vector<std::string> out;
  if (sep == ' ') {
    std::istringstream in(line);
    std::string tok;
    while (in >> tok) {
      out.push_back(tok);
    }
    return out;
  }
  std::string tok;
  std::istringstream in(line);
  while (std::getline(in, tok, sep)) {
    out.push_back(trim(tok));
  }
  return out;
}

/// Lines with content, paired with their 1-based line numbers. '#' starts a
/// comment.
std::vector<std::pair<std::size_t, std::string>> read_lines(const fs::path &path) {
  std::ifstream in(path);
  if (!in) {
    throw FormatError("cannot open " + path.string());
  }
  std::vector<std::pair<std::size_t, std::string>> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    line = trim(line);
    if (!line.empty()) {
      out.emplace_back(number, std::move(line));
    }
  }
  return out;
}

std::vector<RawEdge> read_edge_list(const fs::path &path) {
  std::vector<RawEdge> edges;
  for (const auto &[number, line] : read_lines(path)) {
    const auto tokens = split_tokens(line, ' ');
    if (tokens.size() != 2 && tokens.size() != 3) {
      throw FormatError(path.string(), number, "expected 'u v [w]'");
    }
    const auto u = parse_int(tokens[0]);
    const auto v = parse_int(tokens[1]);
    if (!u || !v) {
      throw FormatError(path.string(), number, "node ids must be integers");
    }
    double w = 1.0;
    if (tokens.size() == 3) {
      const auto parsed = parse_double(tokens[2]);
      if (!parsed) {
        throw FormatError(path.string(), number, "edge weight is not a number");
      }
      w = *parsed;
    }
    edges.push_back({*u, *v, w});
  }
  return edges;
}

Matrix read_feature_csv(const fs::path &path) {
  std::vector<std::vector<double>> rows;
  for (const auto &[number, line] : read_lines(path)) {
    std::vector<double> row;
    for (const auto &tok : split_tokens(line, ',')) {
      const auto value = parse_double(tok);
      if (!value) {
        throw FormatError(path.string(), number, "feature value '" + tok + "' is not a number");
      }
      row.push_back(*value);
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw FormatError(path.string(), number, "ragged feature row");
    }
    rows.push_back(std::move(row));
  }
  const Eigen::Index d = rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size());
  Matrix x(static_cast<Eigen::Index>(rows.size()), d);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      x(static_cast<Eigen::Index>(i), j) = rows[i][static_cast<std::size_t>(j)];
    }
  }
  return x;
}

Labels read_labels_csv(const fs::path &path) {
  const auto lines = read_lines(path);
  bool all_integer = true;
  for (const auto &[number, line] : lines) {
    if (line.find(',') != std::string::npos || !parse_int(line)) {
      all_integer = false;
      break;
    }
  }
  Labels labels;
  if (all_integer) {
    labels.kind = LabelKind::classification;
    for (const auto &[number, line] : lines) {
      const auto c = *parse_int(line);
      if (c < kNoLabel) {
        throw FormatError(path.string(), number, "class ids must be >= -1");
      }
      labels.classes.push_back(static_cast<int>(c));
    }
    return labels;
  }
  labels.kind = LabelKind::regression;
  labels.targets = read_feature_csv(path);
  return labels;
}

std::vector<Split> read_split_file(const fs::path &path) {
  std::vector<Split> out;
  for (const auto &[number, line] : read_lines(path)) {
    try {
      out.push_back(parse_split(line));
    } catch (const std::invalid_argument &e) {
      throw FormatError(path.string(), number, e.what());
    }
  }
  return out;
}

/// Resolves ids into [0, n). Returns the original id table when remapping.
std::vector<std::int64_t> densify(std::vector<RawEdge> &edges, std::size_t &n,
                                  const bool remap, const bool n_known) {
  if (!remap) {
    std::int64_t max_id = -1;
    for (const auto &e : edges) {
      if (e.u < 0 || e.v < 0) {
        throw ValidationError("negative node id");
      }
      max_id = std::max({max_id, e.u, e.v});
    }
    if (!n_known) {
      n = static_cast<std::size_t>(max_id + 1);
    } else if (max_id >= static_cast<std::int64_t>(n)) {
      throw ValidationError("node id " + std::to_string(max_id) + " outside [0," +
                            std::to_string(n) + "); ids must be contiguous");
    }
    return {};
  }
  std::vector<std::int64_t> ids;
  for (const auto &e : edges) {
    ids.push_back(e.u);
    ids.push_back(e.v);
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  if (n_known && ids.size() > n) {
    throw ValidationError("edge list references " + std::to_string(ids.size()) +
                          " distinct ids but only " + std::to_string(n) + " feature rows exist");
  }
  if (!n_known) {
    n = ids.size();
  }
  // Nodes without edges keep their slot after the referenced ids.
  auto lookup = [&](std::int64_t id) {
    return static_cast<std::int64_t>(std::lower_bound(ids.begin(), ids.end(), id) - ids.begin());
  };
  for (auto &e : edges) {
    e.u = lookup(e.u);
    e.v = lookup(e.v);
  }
  std::int64_t next = ids.empty() ? 0 : ids.back() + 1;
  while (ids.size() < n) {
    ids.push_back(next++);
  }
  return ids;
}

Graph assemble(std::vector<RawEdge> edges, std::optional<Matrix> features,
               std::optional<Labels> labels, std::optional<std::vector<Split>> splits,
               const LoadOptions &options) {
  std::size_t n = features ? static_cast<std::size_t>(features->rows()) : 0;
  auto original_ids = densify(edges, n, options.remap_ids, features.has_value());

  GraphBuilder builder(n);
  for (const auto &e : edges) {
    if (e.u == e.v) {
      continue; // self-loops are implied by propagation
    }
    builder.add_edge(static_cast<NodeId>(e.u), static_cast<NodeId>(e.v), e.w);
  }
  if (features) {
    builder.set_features(std::move(*features));
  }
  if (labels) {
    if (labels->size() != n) {
      throw ValidationError("label count " + std::to_string(labels->size()) +
                            " differs from node count " + std::to_string(n));
    }
    builder.set_labels(std::move(*labels));
  }
  if (splits) {
    if (splits->size() != n) {
      throw ValidationError("split count differs from node count");
    }
    builder.set_splits(std::move(*splits));
  }
  builder.set_original_ids(std::move(original_ids));
  return std::move(builder).build();
}

fs::path companion(const fs::path &edges, const std::string &suffix) {
  fs::path p = edges;
  p.replace_extension(suffix);
  return p;
}

Labels labels_from_json(const nlohmann::json &y, const std::size_t expected) {
  Labels labels;
  if (y.size() != expected) {
    throw ValidationError("\"y\" has " + std::to_string(y.size()) + " entries, expected " +
                          std::to_string(expected));
  }
  if (y.empty()) {
    return labels;
  }
  const bool nested = y.front().is_array();
  const bool integral = !nested && std::all_of(y.begin(), y.end(), [](const auto &v) {
    return v.is_number_integer();
  });
  if (integral) {
    labels.kind = LabelKind::classification;
    for (const auto &v : y) {
      labels.classes.push_back(v.template get<int>());
    }
    return labels;
  }
  labels.kind = LabelKind::regression;
  const Eigen::Index cols = nested ? static_cast<Eigen::Index>(y.front().size()) : 1;
  labels.targets.resize(static_cast<Eigen::Index>(y.size()), cols);
  for (std::size_t i = 0; i < y.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    if (nested) {
      if (static_cast<Eigen::Index>(y[i].size()) != cols) {
        throw FormatError("ragged regression target rows");
      }
      for (Eigen::Index j = 0; j < cols; ++j) {
        labels.targets(row, j) = y[i][static_cast<std::size_t>(j)].template get<double>();
      }
    } else {
      labels.targets(row, 0) = y[i].template get<double>();
    }
  }
  return labels;
}

nlohmann::json labels_to_json(const Labels &labels) {
  nlohmann::json y = nlohmann::json::array();
  if (labels.kind == LabelKind::classification) {
    for (const int c : labels.classes) {
      y.push_back(c);
    }
  } else if (labels.kind == LabelKind::regression) {
    for (Eigen::Index i = 0; i < labels.targets.rows(); ++i) {
      if (labels.targets.cols() == 1) {
        y.push_back(labels.targets(i, 0));
      } else {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index j = 0; j < labels.targets.cols(); ++j) {
          row.push_back(labels.targets(i, j));
        }
        y.push_back(std::move(row));
      }
    }
  }
  return y;
}

} // namespace

GraphFormat parse_graph_format(const std::string &text) {
  if (text == "json" || text == "single-file-json") {
    return GraphFormat::json;
  }
  if (text == "edge-list" || text == "edgelist" || text == "edge-list+feature-csv") {
    return GraphFormat::edge_list;
  }
  throw std::invalid_argument("unknown graph format '" + text + "'");
}

GraphFormat format_from_path(const fs::path &path) {
  return path.extension() == ".json" ? GraphFormat::json : GraphFormat::edge_list;
}

Graph graph_from_json(const nlohmann::json &doc, const LoadOptions &options) {
  try {
    std::optional<Matrix> features;
    std::size_t n = doc.at("n").get<std::size_t>();
    if (doc.contains("x")) {
      const auto &x = doc.at("x");
      if (x.size() != n) {
        throw ValidationError("\"x\" has " + std::to_string(x.size()) + " rows but n=" +
                              std::to_string(n));
      }
      const Eigen::Index d = n == 0 ? 0 : static_cast<Eigen::Index>(x.front().size());
      Matrix m(static_cast<Eigen::Index>(n), d);
      for (std::size_t i = 0; i < n; ++i) {
        if (static_cast<Eigen::Index>(x[i].size()) != d) {
          throw FormatError("ragged feature row " + std::to_string(i));
        }
        for (Eigen::Index j = 0; j < d; ++j) {
          m(static_cast<Eigen::Index>(i), j) = x[i][static_cast<std::size_t>(j)].get<double>();
        }
      }
      features = std::move(m);
    } else {
      features = Matrix::Zero(static_cast<Eigen::Index>(n), 0);
    }

    std::vector<RawEdge> edges;
    for (const auto &e : doc.at("edges")) {
      if (e.size() != 2 && e.size() != 3) {
        throw FormatError("edge entries must be [u,v] or [u,v,w]");
      }
      edges.push_back({e[0].get<std::int64_t>(), e[1].get<std::int64_t>(),
                       e.size() == 3 ? e[2].get<double>() : 1.0});
    }

    std::optional<Labels> labels;
    if (doc.contains("y") && !doc.at("y").is_null()) {
      labels = labels_from_json(doc.at("y"), n);
    }
    std::optional<std::vector<Split>> splits;
    if (doc.contains("split")) {
      std::vector<Split> s;
      for (const auto &tag : doc.at("split")) {
        s.push_back(parse_split(tag.get<std::string>()));
      }
      splits = std::move(s);
    }

    if (doc.contains("ids")) {
      // Stored graphs already carry dense ids; keep the recorded mapping.
      auto ids = doc.at("ids").get<std::vector<std::int64_t>>();
      LoadOptions strict = options;
      strict.remap_ids = false;
      Graph g = assemble(std::move(edges), std::move(features), std::move(labels),
                         std::move(splits), strict);
      return Graph(g.adjacency(), g.features(), g.labels(), g.splits(), g.degrees(),
                   std::move(ids));
    }
    return assemble(std::move(edges), std::move(features), std::move(labels), std::move(splits),
                    options);
  } catch (const nlohmann::json::exception &e) {
    throw FormatError(std::string("malformed graph JSON: ") + e.what());
  }
}

nlohmann::json graph_to_json(const Graph &graph) {
  nlohmann::json doc;
  doc["n"] = graph.n();
  nlohmann::json edges = nlohmann::json::array();
  for (NodeId u = 0; u < graph.n(); ++u) {
    const auto nbrs = graph.neighbors(u);
    const auto ws = graph.weights(u);
    for (std::size_t e = 0; e < nbrs.size(); ++e) {
      if (u < nbrs[e]) {
        edges.push_back({u, nbrs[e], ws[e]});
      }
    }
  }
  doc["edges"] = std::move(edges);
  nlohmann::json x = nlohmann::json::array();
  for (Eigen::Index i = 0; i < graph.features().rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < graph.features().cols(); ++j) {
      row.push_back(graph.features()(i, j));
    }
    x.push_back(std::move(row));
  }
  doc["x"] = std::move(x);
  if (graph.labels().kind != LabelKind::none) {
    doc["y"] = labels_to_json(graph.labels());
  }
  nlohmann::json split = nlohmann::json::array();
  for (const Split s : graph.splits()) {
    split.push_back(to_string(s));
  }
  doc["split"] = std::move(split);
  if (!graph.original_ids().empty()) {
    doc["ids"] = graph.original_ids();
  }
  return doc;
}

Graph load_graph(const fs::path &path, const GraphFormat format, const LoadOptions &options) {
  if (!fs::exists(path)) {
    throw FormatError("no such file: " + path.string());
  }
  if (format == GraphFormat::json) {
    std::ifstream in(path);
    nlohmann::json doc;
    try {
      in >> doc;
    } catch (const nlohmann::json::parse_error &e) {
      throw FormatError(path.string(), 0, e.what());
    }
    return graph_from_json(doc, options);
  }

  auto edges = read_edge_list(path);
  std::optional<Matrix> features;
  std::optional<Labels> labels;
  std::optional<std::vector<Split>> splits;
  if (const auto p = companion(path, ".features.csv"); fs::exists(p)) {
    features = read_feature_csv(p);
  }
  if (const auto p = companion(path, ".labels.csv"); fs::exists(p)) {
    labels = read_labels_csv(p);
  }
  if (const auto p = companion(path, ".split"); fs::exists(p)) {
    splits = read_split_file(p);
  }
  return assemble(std::move(edges), std::move(features), std::move(labels), std::move(splits),
                  options);
}

void store_graph(const Graph &graph, const fs::path &path, const GraphFormat format) {
  if (format == GraphFormat::json) {
    std::ofstream out(path);
    if (!out) {
      throw std::runtime_error("cannot write " + path.string());
    }
    out << graph_to_json(graph).dump() << '\n';
    return;
  }

  auto open = [](const fs::path &p) {
    std::ofstream out(p);
    if (!out) {
      throw std::runtime_error("cannot write " + p.string());
    }
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    return out;
  };
  {
    auto out = open(path);
    out << "# n=" << graph.n() << " m=" << graph.m() << '\n';
    for (NodeId u = 0; u < graph.n(); ++u) {
      const auto nbrs = graph.neighbors(u);
      const auto ws = graph.weights(u);
      for (std::size_t e = 0; e < nbrs.size(); ++e) {
        if (u < nbrs[e]) {
          out << u << ' ' << nbrs[e] << ' ' << ws[e] << '\n';
        }
      }
    }
  }
  {
    auto out = open(companion(path, ".features.csv"));
    const Matrix &x = graph.features();
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      for (Eigen::Index j = 0; j < x.cols(); ++j) {
        out << (j ? "," : "") << x(i, j);
      }
      out << '\n';
    }
  }
  if (graph.labels().kind == LabelKind::classification) {
    auto out = open(companion(path, ".labels.csv"));
    for (const int c : graph.labels().classes) {
      out << c << '\n';
    }
  } else if (graph.labels().kind == LabelKind::regression) {
    auto out = open(companion(path, ".labels.csv"));
    const Matrix &t = graph.labels().targets;
    for (Eigen::Index i = 0; i < t.rows(); ++i) {
      for (Eigen::Index j = 0; j < t.cols(); ++j) {
        out << (j ? "," : "") << t(i, j);
      }
      out << '\n';
    }
  }
  {
    auto out = open(companion(path, ".split"));
    for (const Split s : graph.splits()) {
      out << to_string(s) << '\n';
    }
  }
}

GraphDataset load_graph_dataset(const fs::path &path, const GraphFormat format) {
  if (format != GraphFormat::json) {
    throw std::invalid_argument("graph datasets are stored as JSON only");
  }
  if (!fs::exists(path)) {
    throw FormatError("no such file: " + path.string());
  }
  std::ifstream in(path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::parse_error &e) {
    throw FormatError(path.string(), 0, e.what());
  }
  try {
    GraphDataset dataset;
    const auto &graphs = doc.at("graphs");
    if (graphs.empty()) {
      throw ValidationError("empty dataset");
    }
    for (const auto &g : graphs) {
      dataset.graphs.push_back(graph_from_json(g));
    }
    dataset.targets = labels_from_json(doc.at("y"), dataset.graphs.size());
    if (doc.contains("split")) {
      for (const auto &tag : doc.at("split")) {
        dataset.splits.push_back(parse_split(tag.get<std::string>()));
      }
    } else {
      dataset.splits.assign(dataset.graphs.size(), Split::none);
    }
    if (const auto violations = validate(dataset); !violations.empty()) {
      throw ValidationError(violations.front().detail);
    }
    return dataset;
  } catch (const nlohmann::json::exception &e) {
    throw FormatError(std::string("malformed dataset JSON: ") + e.what());
  }
}

void store_graph_dataset(const GraphDataset &dataset, const fs::path &path) {
  nlohmann::json doc;
  nlohmann::json graphs = nlohmann::json::array();
  for (const auto &g : dataset.graphs) {
    graphs.push_back(graph_to_json(g));
  }
  doc["graphs"] = std::move(graphs);
  doc["y"] = labels_to_json(dataset.targets);
  nlohmann::json split = nlohmann::json::array();
  for (const Split s : dataset.splits) {
    split.push_back(to_string(s));
  }
  doc["split"] = std::move(split);
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write " + path.string());
  }
  out << doc.dump() << '\n';
}

} // namespace coarsegnn
