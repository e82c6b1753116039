#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gx/gnn.hpp"
#include "gx/graph.hpp"
#include "gx/rng.hpp"

namespace gx {

struct PruneConfig {
  /// Fraction of the current nodes removed per attempt (rounded up).
  double prune_fraction = 0.1;
  int max_success = 40;
  int max_fail = 100;
  /// Stop once granularity(n, class mean node count) reaches this value.
  std::optional<double> target_granularity;
};

void validate_prune_config(const PruneConfig& cfg);

/// Random prediction-preserving pruning: repeatedly delete
/// ceil(fraction * n) random nodes (and nodes left isolated) and keep the
/// change iff the target-class log-probability does not drop. The target class
/// is g.class_label. `reference_nodes` is the class mean node count used by
/// the granularity stop rule.
Graph prune_graph(const Graph& g, const GnnModel& model, const PruneConfig& cfg, Rng& rng,
                  double reference_nodes = 0.0, std::vector<std::string>* warnings = nullptr);

/// prune_graph on every graph with per-graph derived seeds (parallel over
/// graphs). Labels and motif metadata are kept; pruned_from holds the hash
/// of each source graph and the dataset provenance records the source
/// dataset hash and configuration.
GraphDataset prune_dataset(const GraphDataset& ds, const GnnModel& model, const PruneConfig& cfg, std::uint64_t seed,
                           std::vector<std::string>* warnings = nullptr);

}  // namespace gx
