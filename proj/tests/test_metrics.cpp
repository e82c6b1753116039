#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "gx/datasets.hpp"
#include "gx/metrics.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace gx;
using gx::testing::random_graph;
using namespace gx::testing;

namespace {

ClassStats stats_of(double mu, double sigma, double a = 10.0) {
  ClassStats s;
  s.degree_mean = mu;
  s.degree_std = sigma;
  s.mean_node_count = a;
  s.graph_count = 2;
  return s;
}

Graph path(int n) {
  std::vector<Edge> e;
  for (int i = 0; i + 1 < n; ++i) e.push_back({i, i + 1, 0});
  return make_graph(n, std::vector<int>(n, 0), e);
}

}  // namespace

TEST_CASE("degree score") {
  CHECK(degree_score(1.3, 1.3, 0.2) == 1.0);
  CHECK(std::abs(degree_score(1.5, 1.0, 0.5) - kExpHalf) < 1e-15);
  CHECK(std::abs(degree_score(2.5, 1.0, 0.5) - kExp4_5) < 1e-15);
  CHECK(std::abs(degree_score(-0.5, 1.0, 0.5) - kExp4_5) < 1e-15);

  std::vector<std::string> w;
  CHECK(degree_score(2.0, 2.0, 0.0, &w) == 1.0);
  CHECK(degree_score(2.1, 2.0, 0.0, &w) == 0.0);
  CHECK(w.size() == 2);
  CHECK_THROWS_AS((void)degree_score(1, 1, -1), DomainError);

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 4.0), us(0.01, 2.0);
  for (int i = 0; i < 10000; ++i) {
    const double x = u(rng), mu = u(rng), s = us(rng);
    const double d = degree_score(x, mu, s);
    CHECK(std::abs(d - static_cast<double>(oracle_degree(x, mu, s))) < 1e-12);
    CHECK(d >= 0.0);
    CHECK(d <= 1.0);
    CHECK(std::abs(degree_score(2 * x, 2 * mu, 2 * s) - d) < 1e-12);
  }
}

TEST_CASE("validity check uses a closed 3-sigma interval") {
  Graph p5 = path(5);  // average degree 0.8
  CHECK(validity_check(p5, stats_of(0.8, 0.1)));
  CHECK(validity_check(p5, stats_of(0.5, 0.1)));   // upper boundary 0.8
  CHECK(validity_check(p5, stats_of(1.1, 0.1)));   // lower boundary 0.8
  CHECK_FALSE(validity_check(p5, stats_of(0.49, 0.1)));
  CHECK_FALSE(validity_check(p5, stats_of(1.11, 0.1)));

  // Dense graph against sparse-class statistics.
  std::vector<Edge> all;
  for (int i = 0; i < 8; ++i)
    for (int j = i + 1; j < 8; ++j) all.push_back({i, j, 0});
  CHECK_FALSE(validity_check(make_graph(8, std::vector<int>(8, 0), all), stats_of(1.1, 0.05)));

  std::mt19937_64 rng(2);
  for (int t = 0; t < 50; ++t) {
    Graph g = random_graph(rng, 2, 12, 1, 1, 0.3);
    std::vector<int> perm(g.node_count);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    const auto st = stats_of(1.0, 0.3);
    CHECK(validity_check(g, st) == validity_check(permute_nodes(g, perm), st));
  }
}

TEST_CASE("cosine similarity is clamped") {
  std::vector<double> a{1, 2, 3}, b{2, 4, 6}, o{3, 0, -1}, n{-1, -2, -3}, z{0, 0, 0};
  CHECK(std::abs(cosine_similarity_clamped(a, b) - 1.0) < 1e-15);
  CHECK(cosine_similarity_clamped(a, o) == 0.0);
  CHECK(cosine_similarity_clamped(a, n) == 0.0);
  std::vector<std::string> w;
  CHECK(cosine_similarity_clamped(a, z, &w) == 0.0);
  CHECK(w.size() == 1);
}

TEST_CASE("validation score") {
  CHECK(validation_score(1, 1, 1) == 1.0);
  CHECK(validation_score(0, 1, 1) == 0.0);
  CHECK(std::abs(validation_score(0.9, 1.0, 0.729) - kCbrt0_6561) < 1e-15);
  CHECK_THROWS_AS((void)validation_score(1.1, 1, 1), DomainError);
  CHECK_THROWS_AS((void)validation_score(0.5, -0.1, 1), DomainError);
  CHECK_THROWS_AS((void)validation_score(0.5, 0.5, NAN), DomainError);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 10000; ++i) {
    const double s = u(rng), p = u(rng), d = u(rng);
    const double v = validation_score(s, p, d);
    CHECK(std::abs(v - static_cast<double>(oracle_validation(s, p, d))) < 1e-12);
    CHECK(v <= std::max({s, p, d}) + 1e-15);
    CHECK(v >= std::min({s, p, d}) - 1e-15);
    CHECK(validation_score(std::min(1.0, s + 0.01), p, d) >= v);
    const double eps = std::min({s, p, d});
    CHECK(v <= std::cbrt(eps) + 1e-15);
  }
}

TEST_CASE("granularity") {
  CHECK(granularity(10, 10) == 0.0);
  CHECK(granularity(5, 10) == 0.5);
  CHECK(granularity(20, 10) == 0.0);
  CHECK(granularity(0, 10) == 1.0);
  CHECK_THROWS_AS((void)granularity(1, 0), DomainError);
  CHECK_THROWS_AS((void)granularity(-1, 3), DomainError);
}

TEST_CASE("score filter") {
  Graph p5 = path(5);
  auto st = stats_of(0.8, 0.1);
  ExplanationScores sc;
  sc.v = 1.0;
  FilterConfig cfg;
  CHECK(score_filter(p5, sc, st, cfg));
  CHECK_FALSE(score_filter(p5, sc, stats_of(2.0, 0.1), cfg));
  sc.v = std::nextafter(cfg.v_threshold, 0.0);
  CHECK_FALSE(score_filter(p5, sc, st, cfg));
  sc.v = cfg.v_threshold;
  CHECK(score_filter(p5, sc, st, cfg));
  cfg.max_degree_rule = true;
  cfg.max_degree = 1;
  CHECK_FALSE(score_filter(p5, sc, st, cfg));
  cfg.max_degree = 2;
  CHECK(score_filter(p5, sc, st, cfg));
}

TEST_CASE("score_candidate composes the sub-metrics") {
  ShapeConfig sc;
  sc.graphs_per_class = 20;
  auto ds = gen_shape_dataset(sc, 5);
  GnnArch arch;
  arch.hidden = 8;
  arch.head_hidden = 8;
  arch.outputs = 4;
  GnnModel model(arch, 3);
  model.set_trainable(false);
  auto ctx = make_scoring_context(model, ds, 1);

  auto graphs = ds.graphs_of_class(1);
  auto batched = score_candidates(ctx, graphs);
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    const auto& g = graphs[i];
    auto s = score_candidate(ctx, g);
    CHECK(s.v == batched[i].v);
    const double p = predict_proba(model, g)[1];
    auto e = embed(model, g);
    double ab = 0, aa = 0, bb = 0;
    for (std::size_t k = 0; k < e.size(); ++k) {
      ab += e[k] * ctx.class_mean[k];
      aa += e[k] * e[k];
      bb += ctx.class_mean[k] * ctx.class_mean[k];
    }
    const double cos = std::clamp(ab / std::sqrt(aa * bb), 0.0, 1.0);
    const double x = static_cast<double>(g.edges.size()) / g.node_count;
    const double d = std::exp(-(x - ctx.stats.degree_mean) * (x - ctx.stats.degree_mean) /
                              (2 * ctx.stats.degree_std * ctx.stats.degree_std));
    CHECK(std::abs(s.v - std::cbrt(p * cos * d)) < 1e-9);
    CHECK(s.valid);
  }

  std::mt19937_64 rng(4);
  for (int t = 0; t < 1000; ++t) {
    auto s = score_candidate(ctx, random_graph(rng, 1, 14, 1, 1, std::uniform_real_distribution<double>(0, 1)(rng)));
    for (double x : {s.p, s.s, s.d, s.v, s.granularity}) CHECK((x >= 0.0 && x <= 1.0));
    CHECK(s.granularity < 1.0);
  }
  Graph empty;
  CHECK_THROWS((void)score_candidate(ctx, empty));
}
