#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "gx/datasets.hpp"
#include "gx/explainer.hpp"
#include "gx/gnn.hpp"
#include "gx/pruning.hpp"

namespace gx {

struct DatasetSpec {
  /// shape | motif | cyclicity | mutag | file
  std::string kind = "shape";
  /// MUTAG directory for "mutag", dataset file for "file".
  std::string path;
  ShapeConfig shape;
  MotifConfig motif;
  CyclicityConfig cyclicity;
};

struct RunConfig {
  std::optional<std::uint64_t> seed;
  DatasetSpec dataset;
  TrainConfig train;
  PruneConfig prune;
  ExplainerConfig explainer;
  int target_class = 0;
  int top_n = 10;
  // Inputs of the downstream subcommands.
  std::string data;
  std::string model;
  std::string pruned;
};

/// Parses a JSON config. Every object rejects keys it does not know; a
/// missing key keeps its default. Throws ConfigError.
RunConfig parse_run_config(const std::string& text, const std::string& source = "config");
RunConfig load_run_config(const std::filesystem::path& path);

/// Canonical JSON of the complete configuration (defaults included).
std::string run_config_json(const RunConfig& cfg);
/// Hash of run_config_json.
std::string config_hash(const RunConfig& cfg);

/// Range checks shared by all subcommands.
void validate_run_config(const RunConfig& cfg);

/// Generates or loads the dataset described by `spec`.
GraphDataset make_dataset(const DatasetSpec& spec, std::uint64_t seed);

}  // namespace gx
