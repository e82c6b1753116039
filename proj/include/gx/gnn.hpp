#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "gx/autodiff.hpp"
#include "gx/graph.hpp"
#include "gx/optim.hpp"

namespace gx {

/// A batch of graphs padded to `n` nodes, as autodiff inputs.
/// adjacency[c] holds edge category c (channel c + 1 of the dense encoding)
/// as `batch` stacked n x n blocks; features is (batch * n) x node_categories.
/// Feature rows of absent nodes are zero.
struct GraphBatch {
  int batch = 0;
  int n = 0;
  std::vector<ad::Var> adjacency;
  ad::Var features;
};

GraphBatch make_batch(std::span<const Graph> graphs, int n, int edge_categories, int node_categories);
GraphBatch batch_from_dense(std::span<const ContinuousGraph> graphs);

struct GnnArch {
  int node_categories = 1;
  int edge_categories = 1;
  int hidden = 32;
  int layers = 3;
  int head_hidden = 32;
  /// Number of classes; 1 for a critic.
  int outputs = 2;
  /// Closed-walk inputs log(1 + diag(S^k)) for k = 2..walk_length, where S
  /// is the summed edge adjacency; values below 2 disable them. At most 4.
  int walk_length = 4;
};

struct GnnOutput {
  ad::Var logits;     // batch x outputs
  ad::Var probs;      // batch x outputs (softmax)
  ad::Var embedding;  // batch x hidden, pooled representation before the head
};

/// Relational message-passing network with masked global mean pooling:
///   H' = tanh(H W_self + sum_c A_c H W_c + b)
/// followed by mean pooling over present nodes and a two-layer head. The
/// first layer also receives per-node closed-walk counts, which lets it see
/// short cycles that plain message passing cannot distinguish.
/// A_c may hold fractional (expected) edge weights, so the model accepts
/// relaxed graphs and is differentiable in both adjacency and features.
class GnnModel {
 public:
  GnnModel() = default;
  GnnModel(const GnnArch& arch, std::uint64_t seed);

  [[nodiscard]] const GnnArch& arch() const { return arch_; }
  [[nodiscard]] GnnOutput forward(const GraphBatch& batch) const;

  [[nodiscard]] const std::vector<ad::Var>& parameters() const { return params_; }
  [[nodiscard]] const std::vector<std::string>& parameter_names() const { return names_; }
  [[nodiscard]] std::size_t parameter_count() const;

  /// Toggles requires_grad on every parameter; frozen models build no graph
  /// through their weights.
  void set_trainable(bool on);
  [[nodiscard]] GnnModel clone() const;

  /// Replaces parameter values (used by checkpoint loading).
  void assign(const std::vector<Matrix>& values);

 private:
  GnnArch arch_;
  std::vector<ad::Var> params_;
  std::vector<std::string> names_;
};

void validate_arch(const GnnArch& arch);

/// Class probabilities of a single graph.
std::vector<double> predict_proba(const GnnModel& model, const Graph& g);
std::vector<double> embed(const GnnModel& model, const Graph& g);
/// log softmax(logits)[cls], accurate when the probability rounds to 1.
double log_proba(std::span<const double> logits, int cls);

struct GraphEval {
  std::vector<double> logits;
  std::vector<double> probs;
  std::vector<double> embedding;
};

/// Batched evaluation (chunks of `chunk` graphs); results are identical to
/// the single-graph calls. Safe to call concurrently on a frozen model.
std::vector<GraphEval> evaluate_graphs(const GnnModel& model, std::span<const Graph> graphs, int chunk = 64);

std::vector<double> class_mean_embedding(const GnnModel& model, const GraphDataset& ds, int cls);

struct TrainConfig {
  int hidden = 32;
  int layers = 3;
  int head_hidden = 32;
  int walk_length = 4;
  int epochs = 40;
  int batch_size = 32;
  double lr = 3e-3;
  /// Cosine decay of the learning rate to lr * lr_floor over the epochs.
  double lr_floor = 0.05;
  double weight_decay = 0.0;
  double test_fraction = 0.2;
  std::uint64_t seed = 0;
  bool verbose = false;
};

struct TrainReport {
  std::vector<double> epoch_loss;
  std::vector<double> train_accuracy;
  std::vector<double> test_accuracy;
  std::vector<double> final_test_accuracy_per_class;
  double final_test_accuracy = 0.0;
  std::vector<int> train_indices;
  std::vector<int> test_indices;
  std::vector<std::string> warnings;
  std::string dataset_hash;
  std::uint64_t seed = 0;
};

struct TrainedGnn {
  GnnModel model;
  TrainReport report;
};

/// Seeded stratified split + Adam on mean cross-entropy. The returned model
/// is frozen. Throws NumericError if the loss becomes non-finite.
TrainedGnn train_gnn(const GraphDataset& ds, const TrainConfig& cfg);

/// Fraction of graphs whose argmax prediction equals their label, per class
/// (NaN for classes without graphs).
std::vector<double> per_class_accuracy(const GnnModel& model, std::span<const Graph> graphs, int num_classes);

struct CheckpointMeta {
  std::uint64_t seed = 0;
  std::string dataset_hash;
};

void save_checkpoint(const std::filesystem::path& path, const GnnModel& model, const CheckpointMeta& meta);
GnnModel load_checkpoint(const std::filesystem::path& path, CheckpointMeta* meta = nullptr);

}  // namespace gx
