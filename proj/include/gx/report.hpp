#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "gx/explainer.hpp"
#include "gx/gnn.hpp"
#include "gx/graph.hpp"

namespace gx {

// Run manifest: one JSON line per harvest event,
//   {"iteration","lambda","losses":{critic,wasserstein,penalty,generator,gan,gnn},
//    "sampled","passed","class","dataset","seed","config_hash",
//    "candidates":[{"graph":{..},"scores":{p,s,d,v,granularity,average_degree,valid},
//                   "passed","sample"}]}

struct ManifestContext {
  std::string dataset;
  int target_class = 0;
  std::uint64_t seed = 0;
  std::string config_hash;
};

std::string manifest_line(const HarvestRecord& rec, const ManifestContext& ctx);
void write_run_manifest(std::ostream& out, const ExplainerResult& res, const ManifestContext& ctx);

struct ManifestEntry {
  int iteration = 0;
  double lambda = 0.0;
  int sampled = 0;
  int passed = 0;
  ManifestContext ctx;
  std::vector<ExplanationCandidate> candidates;
};

std::vector<ManifestEntry> read_run_manifest(std::istream& in, const std::string& source = "manifest");
std::vector<ManifestEntry> load_run_manifest(const std::filesystem::path& path);

/// Graphviz DOT (undirected). Names label nodes and colour edges when given.
std::string to_dot(const Graph& g, const std::string& name, const std::vector<std::string>& node_names = {},
                   const std::vector<std::string>& edge_names = {});

struct TableRow {
  std::string dataset;
  int target_class = 0;
  /// Mean over runs of the mean v of each run's top-N candidates.
  double mean_v = 0.0;
  int runs = 0;
};

/// One run = all entries sharing (dataset, class, seed, config_hash).
/// Runs without candidates contribute a mean of 0.
std::vector<TableRow> evaluation_table(const std::vector<ManifestEntry>& entries, int top_n = 10);
void write_table_csv(std::ostream& out, const std::vector<TableRow>& rows);

struct Pca {
  std::vector<double> mean;
  /// components[k] is the k-th unit principal axis.
  std::vector<std::vector<double>> components;
  std::vector<double> explained_variance;
};

/// Top-k principal components of the rows of `x` (covariance with n - 1).
Pca fit_pca(const std::vector<std::vector<double>>& x, int k = 2);
std::vector<double> project(const Pca& pca, const std::vector<double>& v);

struct EmbeddingRow {
  std::string set;  // original | pruned | motif
  int index = 0;
  int class_label = 0;
  std::vector<double> coords;
};

struct MotifDistance {
  int class_label = 0;
  double before = 0.0;
  double after = 0.0;
};

struct EmbeddingReport {
  Pca pca;
  std::vector<EmbeddingRow> rows;
  /// Distance from each class motif embedding to the centroid of the class
  /// embeddings before and after pruning (full embedding space).
  std::vector<MotifDistance> motif_distances;
  int motif_classes_closer = 0;
};

/// Motif of the first graph of a class that carries motif metadata (the
/// subgraph induced by its motif nodes). Empty graph when there is none.
Graph class_motif(const GraphDataset& ds, int cls);

/// PCA is fitted on the original embeddings only, then applied to the
/// pruned graphs and to the class motifs.
EmbeddingReport embedding_report(const GnnModel& model, const GraphDataset& original, const GraphDataset& pruned);
void write_embeddings_csv(std::ostream& out, const EmbeddingReport& rep);

}  // namespace gx
