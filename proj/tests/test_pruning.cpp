#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "doctest.h"
#include "gx/datasets.hpp"
#include "gx/graph_io.hpp"
#include "gx/metrics.hpp"
#include "gx/pruning.hpp"
#include "test_util.hpp"

using namespace gx;
using gx::testing::random_graph;

namespace {

Graph complete(int n) {
  std::vector<Edge> e;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) e.push_back({i, j, 0});
  return make_graph(n, std::vector<int>(n, 0), e);
}

// Every weight zero: the output ignores the input graph.
GnnModel constant_model(int node_categories, int outputs) {
  GnnArch a;
  a.node_categories = node_categories;
  a.hidden = 4;
  a.head_hidden = 4;
  a.outputs = outputs;
  GnnModel m(a, 1);
  std::vector<Matrix> zero;
  for (const auto& p : m.parameters()) zero.emplace_back(p.rows(), p.cols());
  m.assign(zero);
  m.set_trainable(false);
  return m;
}

}  // namespace

TEST_CASE("constant classifier accepts every attempt until the caps") {
  auto model = constant_model(1, 2);
  PruneConfig cfg;
  cfg.prune_fraction = 0.1;
  cfg.max_success = 5;
  cfg.max_fail = 1;
  Rng rng(1);
  // K_40 stays complete, so each step removes exactly ceil(0.1 n) nodes.
  Graph g = complete(40);
  Graph out = prune_graph(g, model, cfg, rng);
  int expect = 40;
  for (int i = 0; i < 5; ++i) expect -= static_cast<int>(std::ceil(0.1 * expect));
  CHECK(out.node_count == expect);
  CHECK(out.node_count <= static_cast<int>(std::ceil(40 * std::pow(0.9, 5))));
  CHECK(out.meta.pruned_from == graph_hash(g));

  cfg.max_success = 100;
  std::vector<std::string> w;
  Graph small = prune_graph(complete(6), model, cfg, rng, 0.0, &w);
  CHECK(small.node_count == 2);
  CHECK_FALSE(w.empty());
}

TEST_CASE("max_success = 0 is the identity") {
  auto model = constant_model(1, 2);
  PruneConfig cfg;
  cfg.max_success = 0;
  Rng rng(2);
  std::mt19937_64 gen(3);
  for (int t = 0; t < 20; ++t) {
    Graph g = random_graph(gen, 2, 15, 1, 1, 0.4);
    Graph out = prune_graph(g, model, cfg, rng);
    CHECK(out.edges == g.edges);
    CHECK(out.node_labels == g.node_labels);
    CHECK(out.meta.pruned_from == graph_hash(g));
  }
}

TEST_CASE("pruning keeps an induced subgraph and never lowers the target probability") {
  const int n = 14;
  GnnArch a;
  a.node_categories = n;
  a.hidden = 8;
  a.head_hidden = 8;
  a.outputs = 3;
  GnnModel model(a, 4);
  model.set_trainable(false);
  PruneConfig cfg;
  cfg.prune_fraction = 0.2;
  cfg.max_success = 10;
  cfg.max_fail = 10;
  std::mt19937_64 gen(5);
  for (int t = 0; t < 30; ++t) {
    // Distinct labels identify the original node of each survivor.
    Graph g = random_graph(gen, n, n, 1, 1, 0.25, 3);
    std::vector<int> ids(n);
    for (int i = 0; i < n; ++i) ids[i] = i;
    g = make_graph(n, ids, g.edges, g.class_label);
    Rng rng(100 + t);
    Graph out = prune_graph(g, model, cfg, rng);
    CHECK(predict_proba(model, out)[g.class_label] >= predict_proba(model, g)[g.class_label] - 1e-12);
    CHECK(out.class_label == g.class_label);

    std::set<std::pair<int, int>> orig;
    for (const auto& e : g.edges) orig.insert({e.u, e.v});
    std::set<int> kept(out.node_labels.begin(), out.node_labels.end());
    CHECK(kept.size() == out.node_labels.size());
    std::set<std::pair<int, int>> got;
    for (const auto& e : out.edges) {
      const int u = out.node_labels[e.u], v = out.node_labels[e.v];
      got.insert({std::min(u, v), std::max(u, v)});
    }
    for (const auto& e : got) CHECK(orig.count(e) == 1);
    for (const auto& e : orig)
      if (kept.count(e.first) && kept.count(e.second)) CHECK(got.count(e) == 1);

    std::vector<int> deg(out.node_count, 0);
    for (const auto& e : out.edges) ++deg[e.u], ++deg[e.v];
    if (out.node_count < g.node_count)
      for (int d : deg) CHECK(d > 0);

    Rng again(100 + t);
    CHECK(prune_graph(g, model, cfg, again) == out);
  }
}

TEST_CASE("granularity stop rule") {
  auto model = constant_model(1, 2);
  PruneConfig cfg;
  cfg.max_success = 100;
  cfg.target_granularity = 0.5;
  Rng rng(6);
  Graph out = prune_graph(complete(40), model, cfg, rng, 40.0);
  CHECK(granularity(out.node_count, 40.0) >= 0.5);
  CHECK(out.node_count >= 18);  // one step past 20 at most

  PruneConfig bad;
  bad.prune_fraction = 1.0;
  CHECK_THROWS_AS(validate_prune_config(bad), ConfigError);
  bad = PruneConfig{};
  bad.max_fail = 0;
  CHECK_THROWS_AS(validate_prune_config(bad), ConfigError);
  bad = PruneConfig{};
  bad.target_granularity = 1.0;
  CHECK_THROWS_AS(validate_prune_config(bad), ConfigError);
}

TEST_CASE("prune_dataset") {
  ShapeConfig sc;
  sc.graphs_per_class = 10;
  auto ds = gen_shape_dataset(sc, 7);
  auto model = constant_model(1, 4);
  PruneConfig cfg;
  cfg.max_success = 3;
  auto a = prune_dataset(ds, model, cfg, 9);
  auto b = prune_dataset(ds, model, cfg, 9);
  REQUIRE(a.graphs.size() == ds.graphs.size());
  CHECK(a.graphs == b.graphs);
  CHECK(a.name == ds.name + "_pruned");
  CHECK(a.provenance.find(dataset_hash(ds)) != std::string::npos);
  double before = 0, after = 0;
  for (std::size_t i = 0; i < ds.graphs.size(); ++i) {
    CHECK(a.graphs[i].class_label == ds.graphs[i].class_label);
    CHECK(a.graphs[i].node_count <= ds.graphs[i].node_count);
    CHECK(a.graphs[i].meta.pruned_from == graph_hash(ds.graphs[i]));
    before += ds.graphs[i].node_count;
    after += a.graphs[i].node_count;
  }
  CHECK(after < before);
  a.validate();
}
