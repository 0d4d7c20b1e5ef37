/*******************************************************************************
 * Graph and dataset (de)serialization.
 *
 * Edge-list layout: `<stem>.edges` holds whitespace-separated "u v [w]" lines
 * with '#' comments. Optional companions sharing the stem:
 *   <stem>.features.csv  one comma-separated row of d values per node
 *   <stem>.labels.csv    one value per node (integers: classes, otherwise
 *                        comma-separated real targets)
 *   <stem>.split         one of train/val/test/none per node
 *
 * JSON layout: {"n":…, "edges":[[u,v,w]…], "x":[[…]…], "y":[…], "split":[…]}
 * with an optional "ids" array recording input ids when they were remapped.
 * Integer-typed "y" entries are class ids; float-typed entries (or nested
 * arrays) are regression targets.
 *
 * @file:   graph_io.hpp
 ******************************************************************************/
#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "coarsegnn/graph.hpp"

namespace coarsegnn {

enum class GraphFormat { edge_list, json };

struct LoadOptions {
  /// Map arbitrary input ids to dense 0-based ids (ascending order of input
  /// id). When false, ids must already lie in [0, n).
  bool remap_ids = false;
};

[[nodiscard]] GraphFormat parse_graph_format(const std::string &text);
/// Guess from extension: ".json" is JSON, anything else an edge list.
[[nodiscard]] GraphFormat format_from_path(const std::filesystem::path &path);

[[nodiscard]] Graph load_graph(const std::filesystem::path &path, GraphFormat format,
                               const LoadOptions &options = {});
void store_graph(const Graph &graph, const std::filesystem::path &path, GraphFormat format);

[[nodiscard]] nlohmann::json graph_to_json(const Graph &graph);
[[nodiscard]] Graph graph_from_json(const nlohmann::json &doc, const LoadOptions &options = {});

/// Datasets are stored as {"graphs":[<graph json>…], "y":[…], "split":[…]}.
[[nodiscard]] GraphDataset load_graph_dataset(const std::filesystem::path &path,
                                              GraphFormat format = GraphFormat::json);
void store_graph_dataset(const GraphDataset &dataset, const std::filesystem::path &path);

} // namespace coarsegnn
