#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gx/errors.hpp"

namespace gx {

/// Undirected edge in canonical form (u < v).
struct Edge {
  int u = 0;
  int v = 0;
  int label = 0;

  auto operator<=>(const Edge&) const = default;
};

struct GraphMeta {
  /// Node indices of the planted motif (Motif dataset ground truth).
  std::vector<int> motif_nodes;
  /// Hash of the graph this one was pruned from; empty when not pruned.
  std::string pruned_from;

  bool operator==(const GraphMeta&) const = default;
};

/// Discrete attributed undirected graph. Edges are kept sorted and unique.
struct Graph {
  int node_count = 0;
  std::vector<int> node_labels;
  std::vector<Edge> edges;
  int class_label = 0;
  GraphMeta meta;

  bool operator==(const Graph&) const = default;
};

/// Builds a graph, canonicalising edge orientation and order.
/// Throws GraphError on self-loops, duplicates or out-of-range endpoints.
Graph make_graph(int node_count, std::vector<int> node_labels, std::vector<Edge> edges, int class_label = 0);

/// Checks the graph invariants; category bounds are skipped when negative.
void validate_graph(const Graph& g, int node_categories = -1, int edge_categories = -1);

/// |E| / n, each undirected edge counted once.
double average_degree(const Graph& g);

std::vector<std::vector<int>> adjacency_lists(const Graph& g);
std::vector<int> degrees(const Graph& g);
int connected_components(const Graph& g);
bool has_edge(const Graph& g, int u, int v);

/// Subgraph induced by `keep` (kept in the given order). Motif metadata is
/// remapped; motif nodes that are dropped disappear from the metadata.
Graph induced_subgraph(const Graph& g, const std::vector<int>& keep);

/// Relabels node i as perm[i].
Graph permute_nodes(const Graph& g, const std::vector<int>& perm);

/// Drops nodes without incident edges (a single-node graph is left as is).
Graph drop_isolated_nodes(const Graph& g);

struct ClassStats {
  double degree_mean = 0.0;
  double degree_std = 0.0;
  double mean_node_count = 0.0;
  int class_label = 0;
  int graph_count = 0;
};

struct GraphDataset {
  std::string name;
  std::vector<Graph> graphs;
  std::vector<std::string> class_names;
  std::vector<std::string> node_category_names;
  std::vector<std::string> edge_category_names;
  /// Compact JSON describing how the dataset was derived (empty if original).
  std::string provenance;

  [[nodiscard]] int num_classes() const { return static_cast<int>(class_names.size()); }
  [[nodiscard]] int node_categories() const { return static_cast<int>(node_category_names.size()); }
  [[nodiscard]] int edge_categories() const { return static_cast<int>(edge_category_names.size()); }
  [[nodiscard]] std::vector<int> indices_of_class(int cls) const;
  [[nodiscard]] std::vector<Graph> graphs_of_class(int cls) const;
  [[nodiscard]] int max_node_count() const;
  void validate() const;
};

/// Mean and population standard deviation of per-graph average degree plus
/// mean node count. Needs at least two graphs in the class.
ClassStats compute_class_stats(const GraphDataset& ds, int cls);

/// Dense relaxed encoding: adjacency [n_max, n_max, edge_channels] with
/// channel 0 meaning "no edge", features [n_max, node_categories].
struct ContinuousGraph {
  int n_max = 0;
  int edge_channels = 0;
  int node_categories = 0;
  std::vector<double> adjacency;
  std::vector<double> features;

  ContinuousGraph() = default;
  ContinuousGraph(int n, int channels, int categories);

  double& adj(int i, int j, int c) { return adjacency[(static_cast<std::size_t>(i) * n_max + j) * edge_channels + c]; }
  [[nodiscard]] double adj(int i, int j, int c) const {
    return adjacency[(static_cast<std::size_t>(i) * n_max + j) * edge_channels + c];
  }
  double& feat(int i, int k) { return features[static_cast<std::size_t>(i) * node_categories + k]; }
  [[nodiscard]] double feat(int i, int k) const { return features[static_cast<std::size_t>(i) * node_categories + k]; }
};

ContinuousGraph to_dense(const Graph& g, int n_max, int edge_categories, int node_categories);

/// Inverse of to_dense for exactly one-hot inputs. Feature rows may also be
/// all zero (absent node). Without `declared_nodes`, nodes with no incident
/// edge are dropped and the rest renumbered in index order; with it, the
/// first `declared_nodes` rows are kept.
Graph from_dense(const ContinuousGraph& cg, std::optional<int> declared_nodes = std::nullopt);

}  // namespace gx
