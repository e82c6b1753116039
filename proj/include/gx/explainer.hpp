#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gx/autodiff.hpp"
#include "gx/gnn.hpp"
#include "gx/metrics.hpp"
#include "gx/rng.hpp"

namespace gx {

enum class GnnLossKind { kCrossEntropy, kLogits };

struct ExplainerConfig {
  /// Node slots of generated graphs; 0 means the largest graph of the class.
  int n_max = 0;
  int latent_dim = 32;
  std::vector<int> generator_hidden = {128, 256};
  int critic_hidden = 32;
  int critic_layers = 2;

  double lambda_min = 0.0;
  double lambda_max = 0.6;
  double p_ramp = 0.4;
  double k_sched = 6.0;

  int iterations = 3000;
  int batch_size = 32;
  int critic_steps = 5;
  double gp_alpha = 10.0;
  double tau = 0.5;
  /// Straight-through hard samples are used from iteration hard_from * T on.
  double hard_from = 0.5;
  GnnLossKind gnn_loss = GnnLossKind::kCrossEntropy;

  double generator_lr = 1e-3;
  double critic_lr = 1e-3;
  double adam_beta1 = 0.5;
  double adam_beta2 = 0.9;

  int harvest_every = 50;
  int harvest_samples = 64;
  bool filter = true;
  FilterConfig filter_cfg;
  /// Runs whose filter pass rate is below this are flagged degenerate.
  double degenerate_pass_rate = 0.05;

  std::uint64_t seed = 0;
};

void validate_explainer_config(const ExplainerConfig& cfg);

/// lambda(t) = lmin + (lmax - lmin) * sigmoid(k * (2 * (t/T - p) / (1 - p) - 1)).
double lambda_schedule(double t, const ExplainerConfig& cfg);

/// batch x dim matrix of i.i.d. standard normal entries.
Matrix sample_latent(int batch, int dim, Rng& rng);

/// Gumbel(0, 1) noise of the given shape.
Matrix sample_gumbel(int rows, int cols, Rng& rng);

/// Row-wise softmax((logits + noise) / tau). With `hard` the forward value is
/// exactly the one-hot argmax while gradients follow the relaxed sample.
ad::Var gumbel_softmax(const ad::Var& logits, const Matrix& noise, double tau, bool hard);
ad::Var gumbel_softmax(const ad::Var& logits, double tau, bool hard, Rng& rng);

struct GeneratorArch {
  int latent_dim = 32;
  int n_max = 8;
  int edge_categories = 1;
  int node_categories = 1;
  std::vector<int> hidden = {128, 256};
};

struct GeneratorLogits {
  int batch = 0;
  ad::Var adjacency;  // batch x (n * n * (edge_categories + 1))
  ad::Var features;   // (batch * n) x node_categories
};

/// MLP generator G(z) producing dense adjacency and feature logits.
class Generator {
 public:
  Generator() = default;
  Generator(const GeneratorArch& arch, std::uint64_t seed);

  [[nodiscard]] const GeneratorArch& arch() const { return arch_; }
  [[nodiscard]] GeneratorLogits forward(const ad::Var& z) const;
  [[nodiscard]] const std::vector<ad::Var>& parameters() const { return params_; }
  [[nodiscard]] const std::vector<std::string>& parameter_names() const { return names_; }
  void set_trainable(bool on);
  void assign(const std::vector<Matrix>& values);

 private:
  GeneratorArch arch_;
  std::vector<ad::Var> params_;
  std::vector<std::string> names_;
};

struct GumbelNoise {
  Matrix pairs;     // (batch * pairs) x (edge_categories + 1)
  Matrix features;  // (batch * n) x node_categories
};

GumbelNoise sample_noise(const GeneratorArch& arch, int batch, Rng& rng);

struct DiscreteSample {
  /// Symmetrised per-pair channel distributions, (batch * pairs) x channels.
  ad::Var pair_probs;
  /// Differentiable dense input for the GNN and the critic.
  GraphBatch batch;
  /// Soft node presence 1 - prod_j a_ij0, (batch * n) x 1.
  ad::Var presence;
};

/// Symmetrises adjacency logits (mean of (i,j) and (j,i)), applies a
/// per-pair and per-node Gumbel-Softmax and assembles the dense batch.
/// Feature rows are scaled by node presence, so isolated slots vanish.
DiscreteSample discretize(const GeneratorArch& arch, const GeneratorLogits& logits, const GumbelNoise& noise,
                          double tau, bool hard);

/// Relaxed dense encodings of a discretised batch (values only).
std::vector<ContinuousGraph> relaxed_graphs(const GeneratorArch& arch, const DiscreteSample& s);
/// Hard graphs: per-pair and per-node argmax, then from_dense (isolated
/// slots dropped).
std::vector<Graph> hard_graphs(const GeneratorArch& arch, const DiscreteSample& s);

/// -mean(critic scores).
ad::Var gan_generator_loss(const ad::Var& critic_scores);
/// Cross-entropy -mean(log p_target) or negative mean target logit.
ad::Var gnn_loss(const GnnOutput& out, int target_class, GnnLossKind kind);
/// (1 - lambda) l_gan + lambda l_gnn.
ad::Var combined_generator_loss(const ad::Var& l_gan, const ad::Var& l_gnn, double lambda);

using Critic = std::function<ad::Var(const GraphBatch&)>;

struct CriticLoss {
  ad::Var total;
  double wasserstein = 0.0;  // E[D(fake)] - E[D(real)]
  double penalty = 0.0;      // alpha * mean((||grad|| - 1)^2)
};

/// WGAN-GP critic loss on batches of equal shape; the fake batch is used by
/// value. Interpolation weights are drawn per sample.
CriticLoss discriminator_loss(const Critic& critic, const GraphBatch& real, const GraphBatch& fake, double alpha,
                              Rng& rng);
/// Same with explicit per-sample interpolation weights.
CriticLoss discriminator_loss(const Critic& critic, const GraphBatch& real, const GraphBatch& fake, double alpha,
                              const std::vector<double>& eps);

struct ExplanationCandidate {
  Graph graph;
  ExplanationScores scores;
  int iteration = 0;
  int sample = 0;
  std::uint64_t seed = 0;
  bool passed = false;
};

struct HarvestRecord {
  int iteration = 0;
  double lambda = 0.0;
  double critic_loss = 0.0;
  double wasserstein = 0.0;
  double penalty = 0.0;
  double generator_loss = 0.0;
  double gan_loss = 0.0;
  double gnn_loss = 0.0;
  int sampled = 0;
  int passed = 0;
  std::vector<ExplanationCandidate> candidates;
};

struct ExplainerResult {
  std::vector<ExplanationCandidate> candidates;
  std::vector<HarvestRecord> harvests;
  int sampled = 0;
  int passed = 0;
  double pass_rate = 0.0;
  bool degenerate = false;
  bool aborted = false;
  std::string diagnostics;
  std::vector<std::string> warnings;
  Generator generator;
  GnnModel critic;
};

/// Trains a generator/critic pair against the frozen classifier for one
/// class of `ds`, harvesting and scoring hard samples along the way. With
/// filtering every accepted candidate passes score_filter; without it every
/// non-empty sample is kept. Divergence stops the run with `aborted` set and
/// the candidates collected so far.
ExplainerResult train_explainer(const GnnModel& frozen_gnn, const GraphDataset& ds, int target_class,
                                const ExplainerConfig& cfg);

/// Stable sort by v descending, then p descending, then iteration
/// ascending; keeps the first top_n.
std::vector<ExplanationCandidate> select_explanations(std::vector<ExplanationCandidate> candidates, int top_n);

void save_generator(const std::filesystem::path& path, const Generator& gen, std::uint64_t seed);
Generator load_generator(const std::filesystem::path& path);

}  // namespace gx
