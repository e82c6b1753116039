#pragma once

#include <span>
#include <string>
#include <vector>

#include "gx/gnn.hpp"
#include "gx/graph.hpp"

namespace gx {

struct ExplanationScores {
  double p = 0.0;  // target-class probability
  double s = 0.0;  // clamped cosine similarity to the class-mean embedding
  double d = 0.0;  // degree score
  double v = 0.0;  // validation score, cbrt(s * p * d)
  double granularity = 0.0;
  double average_degree = 0.0;
  bool valid = false;  // average degree inside [mu - t sigma, mu + t sigma]
};

struct FilterConfig {
  double v_threshold = 0.7;
  double degree_sigma_multiplier = 3.0;
  /// Optional extra rule: reject graphs with a node of degree > max_degree.
  bool max_degree_rule = false;
  int max_degree = 0;
};

void validate_filter_config(const FilterConfig& cfg);

/// exp(-(x - mu)^2 / (2 sigma^2)). With sigma == 0 the score is 1 if x == mu
/// and 0 otherwise, and a warning is appended when `warnings` is given.
double degree_score(double x, double mu, double sigma, std::vector<std::string>* warnings = nullptr);

/// average_degree(g) in the closed interval [mu - t sigma, mu + t sigma].
bool validity_check(const Graph& g, const ClassStats& stats, double t = 3.0);

/// Cosine similarity clamped to [0, 1]; a zero vector scores 0 (with warning).
double cosine_similarity_clamped(std::span<const double> a, std::span<const double> b,
                                 std::vector<std::string>* warnings = nullptr);
double embedding_similarity(const GnnModel& model, const Graph& g, std::span<const double> class_mean,
                            std::vector<std::string>* warnings = nullptr);

/// cbrt(s * p * d); DomainError if any argument is outside [0, 1].
double validation_score(double s, double p, double d);

/// 1 - min(1, b / a); DomainError unless a > 0 and b >= 0.
double granularity(double b, double a);

/// Validity (with cfg's sigma multiplier and optional degree cap) and
/// v >= v_threshold.
bool score_filter(const Graph& g, const ExplanationScores& scores, const ClassStats& stats, const FilterConfig& cfg);

/// Everything needed to score candidates for one target class.
struct ScoringContext {
  const GnnModel* model = nullptr;
  ClassStats stats;
  std::vector<double> class_mean;
  int target_class = 0;
};

ScoringContext make_scoring_context(const GnnModel& model, const GraphDataset& ds, int cls);

ExplanationScores score_candidate(const ScoringContext& ctx, const Graph& g,
                                  std::vector<std::string>* warnings = nullptr);
/// Batched scoring; identical to per-graph score_candidate.
std::vector<ExplanationScores> score_candidates(const ScoringContext& ctx, std::span<const Graph> graphs,
                                                std::vector<std::string>* warnings = nullptr);

}  // namespace gx
