#include "gx/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace gx {

namespace {

void warn(std::vector<std::string>* w, std::string msg) {
  if (w) w->push_back(std::move(msg));
}

void check_unit(double x, const char* name) {
  if (!(x >= 0.0 && x <= 1.0)) throw DomainError(std::string("validation_score: ") + name + " outside [0,1]");
}

ExplanationScores compose(const ScoringContext& ctx, const Graph& g, double p, std::span<const double> emb,
                          std::vector<std::string>* warnings) {
  ExplanationScores sc;
  sc.p = std::clamp(p, 0.0, 1.0);
  sc.s = cosine_similarity_clamped(emb, ctx.class_mean, warnings);
  sc.average_degree = average_degree(g);
  sc.d = degree_score(sc.average_degree, ctx.stats.degree_mean, ctx.stats.degree_std, warnings);
  sc.v = validation_score(sc.s, sc.p, sc.d);
  sc.granularity = granularity(g.node_count, ctx.stats.mean_node_count);
  sc.valid = validity_check(g, ctx.stats);
  return sc;
}

}  // namespace

void validate_filter_config(const FilterConfig& cfg) {
  if (!(cfg.v_threshold >= 0.0)) throw ConfigError("filter: v_threshold must be >= 0");
  if (!(cfg.degree_sigma_multiplier >= 0.0)) throw ConfigError("filter: degree_sigma_multiplier must be >= 0");
  if (cfg.max_degree_rule && cfg.max_degree < 0) throw ConfigError("filter: max_degree must be >= 0");
}

double degree_score(double x, double mu, double sigma, std::vector<std::string>* warnings) {
  if (sigma < 0.0 || std::isnan(sigma)) throw DomainError("degree_score: sigma must be >= 0");
  if (sigma == 0.0) {
    warn(warnings, "degree_score: degenerate class statistics (sigma = 0)");
    return x == mu ? 1.0 : 0.0;
  }
  const double z = (x - mu) / sigma;
  return std::exp(-0.5 * z * z);
}

bool validity_check(const Graph& g, const ClassStats& stats, double t) {
  const double x = average_degree(g);
  return x >= stats.degree_mean - t * stats.degree_std && x <= stats.degree_mean + t * stats.degree_std;
}

double cosine_similarity_clamped(std::span<const double> a, std::span<const double> b,
                                 std::vector<std::string>* warnings) {
  if (a.size() != b.size()) throw ShapeError("cosine similarity: length mismatch");
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0.0 || bb == 0.0) {
    warn(warnings, "embedding_similarity: zero embedding vector");
    return 0.0;
  }
  return std::clamp(ab / (std::sqrt(aa) * std::sqrt(bb)), 0.0, 1.0);
}

double embedding_similarity(const GnnModel& model, const Graph& g, std::span<const double> class_mean,
                            std::vector<std::string>* warnings) {
  return cosine_similarity_clamped(embed(model, g), class_mean, warnings);
}

double validation_score(double s, double p, double d) {
  check_unit(s, "s");
  check_unit(p, "p");
  check_unit(d, "d");
  return std::cbrt(s * p * d);
}

double granularity(double b, double a) {
  if (!(a > 0.0)) throw DomainError("granularity: a must be > 0");
  if (!(b >= 0.0)) throw DomainError("granularity: b must be >= 0");
  return 1.0 - std::min(1.0, b / a);
}

bool score_filter(const Graph& g, const ExplanationScores& scores, const ClassStats& stats, const FilterConfig& cfg) {
  if (!validity_check(g, stats, cfg.degree_sigma_multiplier)) return false;
  if (cfg.max_degree_rule) {
    auto deg = degrees(g);
    if (!deg.empty() && *std::max_element(deg.begin(), deg.end()) > cfg.max_degree) return false;
  }
  return scores.v >= cfg.v_threshold;
}

ScoringContext make_scoring_context(const GnnModel& model, const GraphDataset& ds, int cls) {
  if (cls < 0 || cls >= ds.num_classes()) throw ConfigError("scoring: class " + std::to_string(cls) + " out of range");
  if (model.arch().outputs != ds.num_classes()) throw ConfigError("scoring: model outputs do not match the dataset");
  ScoringContext ctx;
  ctx.model = &model;
  ctx.stats = compute_class_stats(ds, cls);
  ctx.class_mean = class_mean_embedding(model, ds, cls);
  ctx.target_class = cls;
  return ctx;
}

ExplanationScores score_candidate(const ScoringContext& ctx, const Graph& g, std::vector<std::string>* warnings) {
  if (g.node_count < 1) throw GraphError("score_candidate: empty graph");
  auto r = evaluate_graphs(*ctx.model, std::span<const Graph>(&g, 1));
  return compose(ctx, g, r[0].probs.at(ctx.target_class), r[0].embedding, warnings);
}

std::vector<ExplanationScores> score_candidates(const ScoringContext& ctx, std::span<const Graph> graphs,
                                                std::vector<std::string>* warnings) {
  for (const auto& g : graphs)
    if (g.node_count < 1) throw GraphError("score_candidates: empty graph");
  auto evals = evaluate_graphs(*ctx.model, graphs);
  std::vector<ExplanationScores> out;
  out.reserve(graphs.size());
  for (std::size_t i = 0; i < graphs.size(); ++i)
    out.push_back(compose(ctx, graphs[i], evals[i].probs.at(ctx.target_class), evals[i].embedding, warnings));
  return out;
}

}  // namespace gx
