#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

#include "gx/graph.hpp"

namespace gx {

inline constexpr int kSchemaVersion = 1;

// Line-delimited JSON. The optional first line is a dataset header
//   {"schema_version":1,"dataset":{"name":..,"class_names":[..],
//    "node_categories":[..],"edge_categories":[..],"provenance":{..}}}
// and every following line is one graph
//   {"schema_version":1,"v":n,"nodes":[..],"edges":[[u,v,label],..],"y":c,
//    "meta":{"motif_nodes":[..],"pruned_from":".."}}

std::string graph_to_json_line(const Graph& g);
Graph graph_from_json_line(const std::string& line, int lineno = 1);

void write_dataset(std::ostream& out, const GraphDataset& ds);
GraphDataset read_dataset(std::istream& in);

void save_dataset(const std::filesystem::path& path, const GraphDataset& ds);
GraphDataset load_dataset(const std::filesystem::path& path);

/// Hex FNV-1a hash of the serialized dataset.
std::string dataset_hash(const GraphDataset& ds);
std::string graph_hash(const Graph& g);
/// Hex FNV-1a hash of arbitrary text.
std::string text_hash(std::string_view text);

}  // namespace gx
