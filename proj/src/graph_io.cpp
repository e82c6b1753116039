#include "gx/graph_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "gx/rng.hpp"
#include "json.hpp"

namespace gx {

using nlohmann::json;

namespace {

void require_keys(const json& obj, std::initializer_list<const char*> allowed, const char* what, int lineno) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) throw ParseError(std::string("unknown field '") + it.key() + "' in " + what, lineno);
  }
}

template <typename T>
T get_field(const json& obj, const char* key, int lineno) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(std::string("missing field '") + key + "'", lineno);
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad field '") + key + "': " + e.what(), lineno);
  }
}

std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

json header_json(const GraphDataset& ds) {
  json d = {{"name", ds.name},
            {"class_names", ds.class_names},
            {"node_categories", ds.node_category_names},
            {"edge_categories", ds.edge_category_names}};
  if (!ds.provenance.empty()) d["provenance"] = json::parse(ds.provenance);
  return json{{"schema_version", kSchemaVersion}, {"dataset", d}};
}

}  // namespace

std::string graph_to_json_line(const Graph& g) {
  json edges = json::array();
  for (const auto& e : g.edges) edges.push_back({e.u, e.v, e.label});
  json meta = json::object();
  if (!g.meta.motif_nodes.empty()) meta["motif_nodes"] = g.meta.motif_nodes;
  if (!g.meta.pruned_from.empty()) meta["pruned_from"] = g.meta.pruned_from;
  json rec = {{"schema_version", kSchemaVersion}, {"v", g.node_count}, {"nodes", g.node_labels},
              {"edges", edges},                   {"y", g.class_label}, {"meta", meta}};
  return rec.dump();
}

Graph graph_from_json_line(const std::string& line, int lineno) {
  json rec;
  try {
    rec = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what(), lineno);
  }
  if (!rec.is_object()) throw ParseError("record is not an object", lineno);
  require_keys(rec, {"schema_version", "v", "nodes", "edges", "y", "meta"}, "graph record", lineno);
  const int version = get_field<int>(rec, "schema_version", lineno);
  if (version != kSchemaVersion) throw ParseError("unsupported schema_version " + std::to_string(version), lineno);

  const int n = get_field<int>(rec, "v", lineno);
  auto labels = get_field<std::vector<int>>(rec, "nodes", lineno);
  auto raw_edges = get_field<std::vector<std::vector<int>>>(rec, "edges", lineno);
  const int y = get_field<int>(rec, "y", lineno);
  std::vector<Edge> edges;
  edges.reserve(raw_edges.size());
  for (const auto& e : raw_edges) {
    if (e.size() != 3) throw ParseError("edge must be [u, v, label]", lineno);
    edges.push_back({e[0], e[1], e[2]});
  }
  Graph g;
  try {
    g = make_graph(n, std::move(labels), std::move(edges), y);
  } catch (const GraphError& e) {
    throw ParseError(e.what(), lineno);
  }
  if (auto it = rec.find("meta"); it != rec.end()) {
    if (!it->is_object()) throw ParseError("meta must be an object", lineno);
    require_keys(*it, {"motif_nodes", "pruned_from"}, "meta", lineno);
    if (it->contains("motif_nodes")) g.meta.motif_nodes = get_field<std::vector<int>>(*it, "motif_nodes", lineno);
    if (it->contains("pruned_from")) g.meta.pruned_from = get_field<std::string>(*it, "pruned_from", lineno);
    for (int m : g.meta.motif_nodes)
      if (m < 0 || m >= g.node_count) throw ParseError("motif node out of range", lineno);
  }
  return g;
}

void write_dataset(std::ostream& out, const GraphDataset& ds) {
  out << header_json(ds).dump() << '\n';
  for (const auto& g : ds.graphs) out << graph_to_json_line(g) << '\n';
}

GraphDataset read_dataset(std::istream& in) {
  GraphDataset ds;
  bool have_header = false;
  std::string line;
  int lineno = 0;
  int max_class = -1, max_node = -1, max_edge = -1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (!have_header && ds.graphs.empty() && line.find("\"dataset\"") != std::string::npos) {
      json rec;
      try {
        rec = json::parse(line);
      } catch (const json::parse_error& e) {
        throw ParseError(std::string("invalid JSON: ") + e.what(), lineno);
      }
      require_keys(rec, {"schema_version", "dataset"}, "dataset header", lineno);
      if (get_field<int>(rec, "schema_version", lineno) != kSchemaVersion)
        throw ParseError("unsupported schema_version", lineno);
      const json& d = rec["dataset"];
      require_keys(d, {"name", "class_names", "node_categories", "edge_categories", "provenance"}, "dataset header",
                   lineno);
      ds.name = get_field<std::string>(d, "name", lineno);
      ds.class_names = get_field<std::vector<std::string>>(d, "class_names", lineno);
      ds.node_category_names = get_field<std::vector<std::string>>(d, "node_categories", lineno);
      ds.edge_category_names = get_field<std::vector<std::string>>(d, "edge_categories", lineno);
      if (d.contains("provenance")) ds.provenance = d["provenance"].dump();
      have_header = true;
      continue;
    }
    Graph g = graph_from_json_line(line, lineno);
    max_class = std::max(max_class, g.class_label);
    for (int l : g.node_labels) max_node = std::max(max_node, l);
    for (const auto& e : g.edges) max_edge = std::max(max_edge, e.label);
    ds.graphs.push_back(std::move(g));
  }
  if (!have_header) {
    // Headerless files: infer category counts from the data.
    for (int c = 0; c <= max_class; ++c) ds.class_names.push_back("class" + std::to_string(c));
    for (int c = 0; c <= max_node; ++c) ds.node_category_names.push_back("n" + std::to_string(c));
    for (int c = 0; c <= std::max(max_edge, 0); ++c) ds.edge_category_names.push_back("e" + std::to_string(c));
  }
  try {
    ds.validate();
  } catch (const GraphError& e) {
    throw ParseError(e.what(), lineno);
  }
  return ds;
}

void save_dataset(const std::filesystem::path& path, const GraphDataset& ds) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  write_dataset(out, ds);
  if (!out) throw IoError("write failed for " + path.string());
}

GraphDataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return read_dataset(in);
  } catch (const ParseError& e) {
    throw ParseError(e.detail(), e.line(), path.string());
  }
}

std::string dataset_hash(const GraphDataset& ds) {
  std::ostringstream ss;
  write_dataset(ss, ds);
  return hex64(fnv1a(ss.str()));
}

std::string graph_hash(const Graph& g) { return hex64(fnv1a(graph_to_json_line(g))); }

std::string text_hash(std::string_view text) { return hex64(fnv1a(text)); }

}  // namespace gx
