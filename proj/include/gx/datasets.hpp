#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gx/graph.hpp"

namespace gx {

struct ShapeConfig {
  int graphs_per_class = 200;
  int lollipop_clique_min = 4, lollipop_clique_max = 6;
  int lollipop_path_min = 2, lollipop_path_max = 6;
  int wheel_rim_min = 5, wheel_rim_max = 11;
  int grid_side_min = 3, grid_side_max = 4;
  int star_leaves_min = 4, star_leaves_max = 11;
};

enum class ShapeClass { kLollipop = 0, kWheel = 1, kGrid = 2, kStar = 3 };

struct MotifConfig {
  int graphs_per_class = 400;
  int base_nodes_min = 50, base_nodes_max = 60;
  /// Mean node degree (2|E|/n) of the random base graph.
  double base_degree = 2.7;
  int bridge_edges = 1;
  /// Adds a fifth class of base graphs carrying a house with one node
  /// deleted, so partial motifs alone do not identify a class.
  bool background_class = true;
};

enum class MotifKind { kHouse = 0, kHouseX = 1, kComp4 = 2, kComp5 = 3 };

struct CyclicityConfig {
  int graphs_per_class = 200;
  int nodes_min = 40, nodes_max = 60;
  int cycle_min = 3, cycle_max = 8;
};

enum class CyclicityClass { kRedCyclic = 0, kGreenCyclic = 1, kAcyclic = 2 };
inline constexpr int kRed = 0;
inline constexpr int kGreen = 1;

GraphDataset gen_shape_dataset(const ShapeConfig& cfg, std::uint64_t seed);
GraphDataset gen_motif_dataset(const MotifConfig& cfg, std::uint64_t seed);
GraphDataset gen_cyclicity_dataset(const CyclicityConfig& cfg, std::uint64_t seed);

/// The motif on its own, class label set to the motif's class index.
Graph motif_graph(MotifKind kind);
/// Deletes the recorded motif nodes (and thus every motif edge); nodes left
/// without edges are dropped too.
Graph remove_motif(const Graph& g);

/// Reads the TU-format MUTAG files (MUTAG_A.txt, ..._graph_indicator.txt,
/// ..._graph_labels.txt, ..._node_labels.txt, ..._edge_labels.txt).
GraphDataset load_mutag(const std::filesystem::path& dir);

/// One message per disconnected graph.
std::vector<std::string> connectivity_warnings(const GraphDataset& ds);

}  // namespace gx
