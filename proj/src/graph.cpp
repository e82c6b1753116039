#include "gx/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gx {

Graph make_graph(int node_count, std::vector<int> node_labels, std::vector<Edge> edges, int class_label) {
  Graph g;
  g.node_count = node_count;
  g.node_labels = std::move(node_labels);
  g.class_label = class_label;
  for (auto& e : edges)
    if (e.u > e.v) std::swap(e.u, e.v);
  std::sort(edges.begin(), edges.end());
  g.edges = std::move(edges);
  validate_graph(g);
  return g;
}

void validate_graph(const Graph& g, int node_categories, int edge_categories) {
  if (g.node_count < 0) throw GraphError("negative node count");
  if (static_cast<int>(g.node_labels.size()) != g.node_count)
    throw GraphError("node label count " + std::to_string(g.node_labels.size()) + " != node count " +
                     std::to_string(g.node_count));
  for (int lbl : g.node_labels)
    if (lbl < 0 || (node_categories >= 0 && lbl >= node_categories))
      throw GraphError("node category " + std::to_string(lbl) + " out of range");
  for (std::size_t i = 0; i < g.edges.size(); ++i) {
    const Edge& e = g.edges[i];
    if (e.u == e.v) throw GraphError("self-loop at node " + std::to_string(e.u));
    if (e.u < 0 || e.v >= g.node_count || e.u > e.v)
      throw GraphError("edge (" + std::to_string(e.u) + "," + std::to_string(e.v) + ") invalid for " +
                       std::to_string(g.node_count) + " nodes");
    if (e.label < 0 || (edge_categories >= 0 && e.label >= edge_categories))
      throw GraphError("edge category " + std::to_string(e.label) + " out of range");
    if (i > 0) {
      const Edge& p = g.edges[i - 1];
      if (p.u == e.u && p.v == e.v)
        throw GraphError("duplicate edge (" + std::to_string(e.u) + "," + std::to_string(e.v) + ")");
      if (std::tie(p.u, p.v) > std::tie(e.u, e.v)) throw GraphError("edges not in canonical order");
    }
  }
  for (int m : g.meta.motif_nodes)
    if (m < 0 || m >= g.node_count) throw GraphError("motif node index out of range");
}

double average_degree(const Graph& g) {
  if (g.node_count <= 0) throw DomainError("average_degree: empty graph");
  return static_cast<double>(g.edges.size()) / g.node_count;
}

std::vector<std::vector<int>> adjacency_lists(const Graph& g) {
  std::vector<std::vector<int>> adj(g.node_count);
  for (const auto& e : g.edges) {
    adj[e.u].push_back(e.v);
    adj[e.v].push_back(e.u);
  }
  return adj;
}

std::vector<int> degrees(const Graph& g) {
  std::vector<int> d(g.node_count, 0);
  for (const auto& e : g.edges) {
    ++d[e.u];
    ++d[e.v];
  }
  return d;
}

int connected_components(const Graph& g) {
  std::vector<int> parent(g.node_count);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  int comps = g.node_count;
  for (const auto& e : g.edges) {
    const int a = find(e.u), b = find(e.v);
    if (a != b) {
      parent[a] = b;
      --comps;
    }
  }
  return comps;
}

bool has_edge(const Graph& g, int u, int v) {
  if (u > v) std::swap(u, v);
  auto it = std::lower_bound(g.edges.begin(), g.edges.end(), Edge{u, v, -1},
                             [](const Edge& a, const Edge& b) { return std::tie(a.u, a.v) < std::tie(b.u, b.v); });
  return it != g.edges.end() && it->u == u && it->v == v;
}

Graph induced_subgraph(const Graph& g, const std::vector<int>& keep) {
  std::vector<int> remap(g.node_count, -1);
  for (std::size_t i = 0; i < keep.size(); ++i) {
    if (keep[i] < 0 || keep[i] >= g.node_count) throw GraphError("induced_subgraph: node out of range");
    if (remap[keep[i]] != -1) throw GraphError("induced_subgraph: node kept twice");
    remap[keep[i]] = static_cast<int>(i);
  }
  std::vector<int> labels;
  labels.reserve(keep.size());
  for (int k : keep) labels.push_back(g.node_labels[k]);
  std::vector<Edge> edges;
  for (const auto& e : g.edges)
    if (remap[e.u] >= 0 && remap[e.v] >= 0) edges.push_back({remap[e.u], remap[e.v], e.label});
  Graph out = make_graph(static_cast<int>(keep.size()), std::move(labels), std::move(edges), g.class_label);
  out.meta.pruned_from = g.meta.pruned_from;
  for (int m : g.meta.motif_nodes)
    if (remap[m] >= 0) out.meta.motif_nodes.push_back(remap[m]);
  return out;
}

Graph permute_nodes(const Graph& g, const std::vector<int>& perm) {
  if (static_cast<int>(perm.size()) != g.node_count) throw GraphError("permute_nodes: size mismatch");
  std::vector<int> labels(g.node_count);
  for (int i = 0; i < g.node_count; ++i) labels[perm[i]] = g.node_labels[i];
  std::vector<Edge> edges;
  edges.reserve(g.edges.size());
  for (const auto& e : g.edges) edges.push_back({perm[e.u], perm[e.v], e.label});
  Graph out = make_graph(g.node_count, std::move(labels), std::move(edges), g.class_label);
  out.meta = g.meta;
  for (auto& m : out.meta.motif_nodes) m = perm[m];
  std::sort(out.meta.motif_nodes.begin(), out.meta.motif_nodes.end());
  return out;
}

Graph drop_isolated_nodes(const Graph& g) {
  if (g.node_count <= 1) return g;
  const auto deg = degrees(g);
  std::vector<int> keep;
  for (int i = 0; i < g.node_count; ++i)
    if (deg[i] > 0) keep.push_back(i);
  if (static_cast<int>(keep.size()) == g.node_count) return g;
  return induced_subgraph(g, keep);
}

std::vector<int> GraphDataset::indices_of_class(int cls) const {
  std::vector<int> idx;
  for (std::size_t i = 0; i < graphs.size(); ++i)
    if (graphs[i].class_label == cls) idx.push_back(static_cast<int>(i));
  return idx;
}

std::vector<Graph> GraphDataset::graphs_of_class(int cls) const {
  std::vector<Graph> out;
  for (const auto& g : graphs)
    if (g.class_label == cls) out.push_back(g);
  return out;
}

int GraphDataset::max_node_count() const {
  int m = 0;
  for (const auto& g : graphs) m = std::max(m, g.node_count);
  return m;
}

void GraphDataset::validate() const {
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    const Graph& g = graphs[i];
    try {
      validate_graph(g, node_categories(), edge_categories());
    } catch (const GraphError& e) {
      throw GraphError("graph " + std::to_string(i) + ": " + e.what());
    }
    if (g.class_label < 0 || g.class_label >= num_classes())
      throw GraphError("graph " + std::to_string(i) + ": class label " + std::to_string(g.class_label) +
                       " out of range");
  }
}

ClassStats compute_class_stats(const GraphDataset& ds, int cls) {
  ClassStats st;
  st.class_label = cls;
  double sum_deg = 0.0, sum_nodes = 0.0;
  int count = 0;
  for (const auto& g : ds.graphs) {
    if (g.class_label != cls) continue;
    sum_deg += average_degree(g);
    sum_nodes += g.node_count;
    ++count;
  }
  if (count < 2)
    throw InsufficientDataError("class " + std::to_string(cls) + " has " + std::to_string(count) +
                                " graphs; statistics need at least 2");
  st.graph_count = count;
  st.degree_mean = sum_deg / count;
  st.mean_node_count = sum_nodes / count;
  double ss = 0.0;
  for (const auto& g : ds.graphs) {
    if (g.class_label != cls) continue;
    const double d = average_degree(g) - st.degree_mean;
    ss += d * d;
  }
  st.degree_std = std::sqrt(ss / count);
  return st;
}

ContinuousGraph::ContinuousGraph(int n, int channels, int categories)
    : n_max(n),
      edge_channels(channels),
      node_categories(categories),
      adjacency(static_cast<std::size_t>(n) * n * channels, 0.0),
      features(static_cast<std::size_t>(n) * categories, 0.0) {}

ContinuousGraph to_dense(const Graph& g, int n_max, int edge_categories, int node_categories) {
  if (g.node_count > n_max)
    throw SizeError("graph with " + std::to_string(g.node_count) + " nodes exceeds n_max " + std::to_string(n_max));
  ContinuousGraph cg(n_max, edge_categories + 1, node_categories);
  for (int i = 0; i < n_max; ++i)
    for (int j = 0; j < n_max; ++j) cg.adj(i, j, 0) = 1.0;
  for (const auto& e : g.edges) {
    if (e.label >= edge_categories) throw SizeError("edge category exceeds encoding width");
    cg.adj(e.u, e.v, 0) = cg.adj(e.v, e.u, 0) = 0.0;
    cg.adj(e.u, e.v, e.label + 1) = cg.adj(e.v, e.u, e.label + 1) = 1.0;
  }
  for (int i = 0; i < g.node_count; ++i) {
    if (g.node_labels[i] >= node_categories) throw SizeError("node category exceeds encoding width");
    cg.feat(i, g.node_labels[i]) = 1.0;
  }
  return cg;
}

namespace {

// Index of the hot entry, -1 for an all-zero slot; throws otherwise.
int one_hot_index(const double* v, int n, bool allow_zero, const char* what) {
  int hot = -1;
  for (int k = 0; k < n; ++k) {
    if (v[k] == 1.0) {
      if (hot != -1) throw EncodingError(std::string(what) + " slot has more than one hot entry");
      hot = k;
    } else if (v[k] != 0.0) {
      throw EncodingError(std::string(what) + " slot is not one-hot");
    }
  }
  if (hot == -1 && !allow_zero) throw EncodingError(std::string(what) + " slot is all zero");
  return hot;
}

}  // namespace

Graph from_dense(const ContinuousGraph& cg, std::optional<int> declared_nodes) {
  const int n = cg.n_max;
  const int ch = cg.edge_channels;
  if (declared_nodes && (*declared_nodes < 0 || *declared_nodes > n)) throw SizeError("declared node count out of range");

  std::vector<Edge> edges;
  std::vector<char> touched(n, 0);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const int c = one_hot_index(&cg.adjacency[(static_cast<std::size_t>(i) * n + j) * ch], ch, false, "adjacency");
      const int c2 = one_hot_index(&cg.adjacency[(static_cast<std::size_t>(j) * n + i) * ch], ch, false, "adjacency");
      if (c != c2) throw EncodingError("adjacency is not symmetric");
      if (c > 0) {
        edges.push_back({i, j, c - 1});
        touched[i] = touched[j] = 1;
      }
    }

  std::vector<int> keep;
  if (declared_nodes) {
    for (int i = 0; i < *declared_nodes; ++i) keep.push_back(i);
    for (int i = *declared_nodes; i < n; ++i)
      if (touched[i]) throw EncodingError("edge touches node beyond declared size");
  } else {
    for (int i = 0; i < n; ++i)
      if (touched[i]) keep.push_back(i);
  }

  std::vector<int> remap(n, -1);
  std::vector<int> labels;
  for (std::size_t k = 0; k < keep.size(); ++k) {
    remap[keep[k]] = static_cast<int>(k);
    const int lbl = one_hot_index(&cg.features[static_cast<std::size_t>(keep[k]) * cg.node_categories],
                                  cg.node_categories, false, "feature");
    labels.push_back(lbl);
  }
  for (auto& e : edges) {
    e.u = remap[e.u];
    e.v = remap[e.v];
  }
  return make_graph(static_cast<int>(keep.size()), std::move(labels), std::move(edges));
}

}  // namespace gx
