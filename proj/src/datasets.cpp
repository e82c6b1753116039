#include "gx/datasets.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "gx/rng.hpp"

namespace gx {

namespace {

std::vector<int> shuffled_identity(int n, Rng& rng) {
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  return perm;
}

Graph finish(int n, std::vector<Edge> edges, int cls, Rng& rng, std::vector<int> motif = {}) {
  Graph g = make_graph(n, std::vector<int>(n, 0), std::move(edges), cls);
  g.meta.motif_nodes = std::move(motif);
  return permute_nodes(g, shuffled_identity(n, rng));
}

void check_range(int lo, int hi, int min_allowed, const char* what) {
  if (lo < min_allowed || hi < lo)
    throw ConfigError(std::string(what) + ": invalid range [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
}

// Random recursive tree over nodes [offset, offset + n).
void random_tree(int offset, int n, Rng& rng, std::vector<Edge>& edges, int n_colors = 1) {
  for (int i = 1; i < n; ++i) {
    const int parent = uniform_int(rng, 0, i - 1);
    const int color = n_colors > 1 ? uniform_int(rng, 0, n_colors - 1) : 0;
    edges.push_back({offset + parent, offset + i, color});
  }
}

// Sparse connected graph: a random tree plus uniformly random extra edges up
// to round(mean_degree * n / 2) edges in total.
std::vector<Edge> sparse_connected_graph(int n, double mean_degree, Rng& rng) {
  std::vector<Edge> edges;
  random_tree(0, n, rng, edges);
  std::set<std::pair<int, int>> present;
  for (const auto& e : edges) present.insert({std::min(e.u, e.v), std::max(e.u, e.v)});
  const auto target = static_cast<std::size_t>(std::lround(mean_degree * n / 2.0));
  const std::size_t max_edges = static_cast<std::size_t>(n) * (n - 1) / 2;
  while (edges.size() < std::min(target, max_edges)) {
    int u = uniform_int(rng, 0, n - 1), v = uniform_int(rng, 0, n - 1);
    if (u == v) continue;
    if (u > v) std::swap(u, v);
    if (present.insert({u, v}).second) edges.push_back({u, v, 0});
  }
  return edges;
}

std::vector<Edge> motif_edges(MotifKind kind, int offset) {
  std::vector<std::pair<int, int>> pairs;
  switch (kind) {
    case MotifKind::kHouse:
      // square 0-1-2-3 with roof node 4 over edge (0,1)
      pairs = {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {0, 4}, {1, 4}};
      break;
    case MotifKind::kHouseX:
      pairs = {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {0, 4}, {1, 4}, {0, 2}, {1, 3}};
      break;
    case MotifKind::kComp4:
    case MotifKind::kComp5: {
      const int k = kind == MotifKind::kComp4 ? 4 : 5;
      for (int i = 0; i < k; ++i)
        for (int j = i + 1; j < k; ++j) pairs.emplace_back(i, j);
      break;
    }
  }
  std::vector<Edge> edges;
  for (auto [a, b] : pairs) edges.push_back({offset + a, offset + b, 0});
  return edges;
}

int motif_size(MotifKind kind) { return kind == MotifKind::kComp4 ? 4 : 5; }

template <typename Make>
void generate_parallel(GraphDataset& ds, int per_class, int classes, std::uint64_t seed, Make make) {
  ds.graphs.resize(static_cast<std::size_t>(per_class) * classes);
  const int total = per_class * classes;
  // Each graph has its own derived seed, so the result does not depend on
  // the thread schedule. Exceptions cannot cross the OpenMP region.
  std::vector<std::string> errors(total);
#pragma omp parallel for schedule(dynamic, 8)
  for (int idx = 0; idx < total; ++idx) {
    const int cls = idx / per_class;
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(cls), static_cast<std::uint64_t>(idx % per_class)));
    try {
      ds.graphs[idx] = make(cls, rng);
    } catch (const std::exception& e) {
      errors[idx] = e.what();
    }
  }
  for (const auto& e : errors)
    if (!e.empty()) throw GraphError("dataset generation failed: " + e);
}

}  // namespace

GraphDataset gen_shape_dataset(const ShapeConfig& cfg, std::uint64_t seed) {
  if (cfg.graphs_per_class <= 0) throw ConfigError("shape: graphs_per_class must be positive");
  check_range(cfg.lollipop_clique_min, cfg.lollipop_clique_max, 3, "shape.lollipop_clique");
  check_range(cfg.lollipop_path_min, cfg.lollipop_path_max, 1, "shape.lollipop_path");
  check_range(cfg.wheel_rim_min, cfg.wheel_rim_max, 3, "shape.wheel_rim");
  check_range(cfg.grid_side_min, cfg.grid_side_max, 2, "shape.grid_side");
  check_range(cfg.star_leaves_min, cfg.star_leaves_max, 2, "shape.star_leaves");

  GraphDataset ds;
  ds.name = "shape";
  ds.class_names = {"lollipop", "wheel", "grid", "star"};
  ds.node_category_names = {"node"};
  ds.edge_category_names = {"edge"};

  generate_parallel(ds, cfg.graphs_per_class, 4, seed, [&](int cls, Rng& rng) {
    std::vector<Edge> edges;
    int n = 0;
    switch (static_cast<ShapeClass>(cls)) {
      case ShapeClass::kLollipop: {
        const int m = uniform_int(rng, cfg.lollipop_clique_min, cfg.lollipop_clique_max);
        const int len = uniform_int(rng, cfg.lollipop_path_min, cfg.lollipop_path_max);
        n = m + len;
        for (int i = 0; i < m; ++i)
          for (int j = i + 1; j < m; ++j) edges.push_back({i, j, 0});
        for (int i = m; i < n; ++i) edges.push_back({i - 1, i, 0});
        break;
      }
      case ShapeClass::kWheel: {
        const int rim = uniform_int(rng, cfg.wheel_rim_min, cfg.wheel_rim_max);
        n = rim + 1;
        for (int i = 1; i <= rim; ++i) {
          edges.push_back({0, i, 0});
          edges.push_back({i, i % rim + 1, 0});
        }
        break;
      }
      case ShapeClass::kGrid: {
        const int r = uniform_int(rng, cfg.grid_side_min, cfg.grid_side_max);
        const int c = uniform_int(rng, cfg.grid_side_min, cfg.grid_side_max);
        n = r * c;
        for (int i = 0; i < r; ++i)
          for (int j = 0; j < c; ++j) {
            if (j + 1 < c) edges.push_back({i * c + j, i * c + j + 1, 0});
            if (i + 1 < r) edges.push_back({i * c + j, (i + 1) * c + j, 0});
          }
        break;
      }
      case ShapeClass::kStar: {
        const int leaves = uniform_int(rng, cfg.star_leaves_min, cfg.star_leaves_max);
        n = leaves + 1;
        for (int i = 1; i <= leaves; ++i) edges.push_back({0, i, 0});
        break;
      }
    }
    return finish(n, std::move(edges), cls, rng);
  });
  return ds;
}

GraphDataset gen_motif_dataset(const MotifConfig& cfg, std::uint64_t seed) {
  if (cfg.graphs_per_class <= 0) throw ConfigError("motif: graphs_per_class must be positive");
  check_range(cfg.base_nodes_min, cfg.base_nodes_max, 2, "motif.base_nodes");
  if (cfg.bridge_edges < 1) throw ConfigError("motif: bridge_edges must be >= 1");
  if (cfg.base_degree < 2.0 * (cfg.base_nodes_min - 1) / cfg.base_nodes_min)
    throw ConfigError("motif: base_degree below that of a spanning tree");

  GraphDataset ds;
  ds.name = "motif";
  ds.class_names = {"house", "house_x", "comp4", "comp5"};
  if (cfg.background_class) ds.class_names.emplace_back("none");
  ds.node_category_names = {"node"};
  ds.edge_category_names = {"edge"};

  // Base graph with `pairs` over `extra` new nodes attached by bridge edges.
  auto attach = [&](const std::vector<std::pair<int, int>>& pairs, int extra, int cls, Rng& rng, bool is_motif) {
    const int base = uniform_int(rng, cfg.base_nodes_min, cfg.base_nodes_max);
    std::vector<Edge> edges = sparse_connected_graph(base, cfg.base_degree, rng);
    for (auto [a, b] : pairs) edges.push_back({base + a, base + b, 0});
    std::vector<int> motif;
    if (is_motif)
      for (int i = 0; i < extra; ++i) motif.push_back(base + i);
    std::set<std::pair<int, int>> bridges;
    const int n_bridges = std::min(cfg.bridge_edges, extra * base);
    while (static_cast<int>(bridges.size()) < n_bridges)
      bridges.insert({uniform_int(rng, 0, base - 1), base + uniform_int(rng, 0, extra - 1)});
    for (auto [a, b] : bridges) edges.push_back({a, b, 0});
    return finish(base + extra, std::move(edges), cls, rng, std::move(motif));
  };

  generate_parallel(ds, cfg.graphs_per_class, ds.num_classes(), seed, [&](int cls, Rng& rng) {
    if (cls == 4) {
      // Background: a house with one node deleted, so only complete motifs
      // separate the classes.
      const int drop = uniform_int(rng, 0, 4);
      std::vector<std::pair<int, int>> pairs;
      for (const auto& e : motif_edges(MotifKind::kHouse, 0))
        if (e.u != drop && e.v != drop) pairs.emplace_back(e.u - (e.u > drop), e.v - (e.v > drop));
      return attach(pairs, 4, cls, rng, false);
    }
    const auto kind = static_cast<MotifKind>(cls);
    std::vector<std::pair<int, int>> pairs;
    for (const auto& e : motif_edges(kind, 0)) pairs.emplace_back(e.u, e.v);
    return attach(pairs, motif_size(kind), cls, rng, true);
  });
  return ds;
}

GraphDataset gen_cyclicity_dataset(const CyclicityConfig& cfg, std::uint64_t seed) {
  if (cfg.graphs_per_class <= 0) throw ConfigError("cyclicity: graphs_per_class must be positive");
  check_range(cfg.nodes_min, cfg.nodes_max, 3, "cyclicity.nodes");
  check_range(cfg.cycle_min, cfg.cycle_max, 3, "cyclicity.cycle");
  if (cfg.cycle_max > cfg.nodes_min) throw ConfigError("cyclicity: cycle_max exceeds nodes_min");

  GraphDataset ds;
  ds.name = "cyclicity";
  ds.class_names = {"red_cyclic", "green_cyclic", "acyclic"};
  ds.node_category_names = {"node"};
  ds.edge_category_names = {"red", "green"};

  generate_parallel(ds, cfg.graphs_per_class, 3, seed, [&](int cls, Rng& rng) {
    const int n = uniform_int(rng, cfg.nodes_min, cfg.nodes_max);
    std::vector<Edge> edges;
    int start = 1;
    if (cls != static_cast<int>(CyclicityClass::kAcyclic)) {
      const int color = cls == static_cast<int>(CyclicityClass::kRedCyclic) ? kRed : kGreen;
      const int len = uniform_int(rng, cfg.cycle_min, cfg.cycle_max);
      for (int i = 0; i < len; ++i) edges.push_back({i, (i + 1) % len, color});
      start = len;
    }
    for (int i = start; i < n; ++i) edges.push_back({uniform_int(rng, 0, i - 1), i, uniform_int(rng, 0, 1)});
    return finish(n, std::move(edges), cls, rng);
  });
  return ds;
}

Graph motif_graph(MotifKind kind) {
  const int n = motif_size(kind);
  Graph g = make_graph(n, std::vector<int>(n, 0), motif_edges(kind, 0), static_cast<int>(kind));
  g.meta.motif_nodes.resize(n);
  std::iota(g.meta.motif_nodes.begin(), g.meta.motif_nodes.end(), 0);
  return g;
}

Graph remove_motif(const Graph& g) {
  std::vector<char> in_motif(g.node_count, 0);
  for (int m : g.meta.motif_nodes) in_motif[m] = 1;
  std::vector<int> keep;
  for (int i = 0; i < g.node_count; ++i)
    if (!in_motif[i]) keep.push_back(i);
  return drop_isolated_nodes(induced_subgraph(g, keep));
}

namespace {

std::vector<std::vector<long>> read_rows(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open " + file.string());
  std::vector<std::vector<long>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    std::vector<long> vals;
    long v;
    while (ss >> v) vals.push_back(v);
    if (!ss.eof() || vals.empty()) throw IoError(file.string() + ":" + std::to_string(lineno) + ": malformed line");
    rows.push_back(std::move(vals));
  }
  return rows;
}

}  // namespace

GraphDataset load_mutag(const std::filesystem::path& dir) {
  const auto file = [&](const char* suffix) { return dir / (std::string("MUTAG_") + suffix + ".txt"); };
  const auto adj = read_rows(file("A"));
  const auto indicator = read_rows(file("graph_indicator"));
  const auto glabels = read_rows(file("graph_labels"));
  const auto nlabels = read_rows(file("node_labels"));
  const auto elabels = read_rows(file("edge_labels"));

  if (indicator.size() != nlabels.size())
    throw IoError(file("node_labels").string() + ": " + std::to_string(nlabels.size()) + " rows, expected " +
                  std::to_string(indicator.size()));
  if (adj.size() != elabels.size())
    throw IoError(file("edge_labels").string() + ": " + std::to_string(elabels.size()) + " rows, expected " +
                  std::to_string(adj.size()));

  const int n_graphs = static_cast<int>(glabels.size());
  std::vector<int> graph_of(indicator.size()), local_id(indicator.size());
  std::vector<int> counts(n_graphs, 0);
  for (std::size_t i = 0; i < indicator.size(); ++i) {
    const long gid = indicator[i][0];
    if (gid < 1 || gid > n_graphs) throw IoError(file("graph_indicator").string() + ": graph id out of range");
    graph_of[i] = static_cast<int>(gid - 1);
    local_id[i] = counts[gid - 1]++;
  }

  std::vector<std::vector<int>> labels(n_graphs);
  for (std::size_t i = 0; i < nlabels.size(); ++i) labels[graph_of[i]].push_back(static_cast<int>(nlabels[i][0]));

  std::vector<std::vector<Edge>> edges(n_graphs);
  for (std::size_t i = 0; i < adj.size(); ++i) {
    if (adj[i].size() != 2) throw IoError(file("A").string() + ": expected two columns");
    const long a = adj[i][0] - 1, b = adj[i][1] - 1;
    if (a < 0 || b < 0 || a >= static_cast<long>(indicator.size()) || b >= static_cast<long>(indicator.size()))
      throw IoError(file("A").string() + ": node id out of range");
    if (graph_of[a] != graph_of[b]) throw IoError(file("A").string() + ": edge crosses graphs");
    if (a < b) edges[graph_of[a]].push_back({local_id[a], local_id[b], static_cast<int>(elabels[i][0])});
  }

  GraphDataset ds;
  ds.name = "mutag";
  ds.class_names = {"mutagen", "non_mutagen"};
  ds.node_category_names = {"C", "N", "O", "F", "I", "Cl", "Br"};
  ds.edge_category_names = {"aromatic", "single", "double", "triple"};
  for (int gi = 0; gi < n_graphs; ++gi) {
    const long y = glabels[gi][0];
    if (y != 1 && y != -1) throw IoError(file("graph_labels").string() + ": unexpected label " + std::to_string(y));
    ds.graphs.push_back(make_graph(counts[gi], std::move(labels[gi]), std::move(edges[gi]), y == 1 ? 0 : 1));
  }
  ds.validate();
  return ds;
}

std::vector<std::string> connectivity_warnings(const GraphDataset& ds) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < ds.graphs.size(); ++i) {
    const int c = connected_components(ds.graphs[i]);
    if (c != 1) out.push_back("graph " + std::to_string(i) + " has " + std::to_string(c) + " connected components");
  }
  return out;
}

}  // namespace gx
