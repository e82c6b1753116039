#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>

#include "doctest.h"
#include "gx/datasets.hpp"
#include "gx/gnn.hpp"
#include "test_util.hpp"

using namespace gx;
using gx::testing::random_graph;
using gx::testing::random_matrix;

namespace {

GnnArch small_arch(int node_cats, int edge_cats, int outputs) {
  GnnArch a;
  a.node_categories = node_cats;
  a.edge_categories = edge_cats;
  a.hidden = 8;
  a.layers = 2;
  a.head_hidden = 6;
  a.outputs = outputs;
  return a;
}

// Relaxed graph: symmetric random channel distributions, random feature rows.
ContinuousGraph random_relaxed(int n, int edge_cats, int node_cats, std::mt19937_64& rng) {
  ContinuousGraph cg(n, edge_cats + 1, node_cats);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      std::vector<double> w(edge_cats + 1);
      for (auto& x : w) x = u(rng);
      if (i == j) std::fill(w.begin() + 1, w.end(), 0.0);
      const double s = std::accumulate(w.begin(), w.end(), 0.0);
      for (int c = 0; c <= edge_cats; ++c) cg.adj(i, j, c) = cg.adj(j, i, c) = w[c] / s;
    }
    double s = 0;
    for (int k = 0; k < node_cats; ++k) s += cg.feat(i, k) = u(rng);
    for (int k = 0; k < node_cats; ++k) cg.feat(i, k) /= s;
  }
  return cg;
}

}  // namespace

TEST_CASE("class probabilities sum to one on relaxed inputs") {
  std::mt19937_64 rng(1);
  GnnModel model(small_arch(3, 2, 4), 11);
  std::vector<ContinuousGraph> gs;
  for (int k = 0; k < 20; ++k) gs.push_back(random_relaxed(6, 2, 3, rng));
  auto out = model.forward(batch_from_dense(gs));
  const Matrix& p = out.probs.value();
  REQUIRE(p.rows == 20);
  for (int r = 0; r < p.rows; ++r) {
    double s = 0;
    for (int c = 0; c < p.cols; ++c) {
      CHECK(p(r, c) >= 0.0);
      CHECK(p(r, c) <= 1.0);
      s += p(r, c);
    }
    CHECK(std::abs(s - 1.0) < 1e-6);
  }
  CHECK(out.embedding.cols() == 8);
}

TEST_CASE("predictions are invariant to node permutations") {
  std::mt19937_64 rng(2);
  GnnModel model(small_arch(3, 2, 3), 5);
  for (int t = 0; t < 30; ++t) {
    Graph g = random_graph(rng, 3, 12, 3, 2, 0.35);
    std::vector<int> perm(g.node_count);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    auto p0 = predict_proba(model, g);
    auto p1 = predict_proba(model, permute_nodes(g, perm));
    for (std::size_t c = 0; c < p0.size(); ++c) CHECK(std::abs(p0[c] - p1[c]) < 1e-5);
  }
}

TEST_CASE("gradients w.r.t. adjacency and features match finite differences") {
  std::mt19937_64 rng(3);
  GnnModel model(small_arch(2, 2, 3), 9);
  model.set_trainable(false);
  const int n = 5;
  ContinuousGraph cg = random_relaxed(n, 2, 2, rng);
  GraphBatch base = batch_from_dense(std::span<const ContinuousGraph>(&cg, 1));
  const int cls = 1;

  auto prob = [&](const std::vector<Matrix>& adj, const Matrix& feat) {
    GraphBatch b;
    b.batch = 1;
    b.n = n;
    for (const auto& a : adj) b.adjacency.push_back(ad::constant(a));
    b.features = ad::constant(feat);
    return model.forward(b).probs.value()(0, cls);
  };

  std::vector<Matrix> adj0;
  for (const auto& a : base.adjacency) adj0.push_back(a.value());
  const Matrix feat0 = base.features.value();

  GraphBatch leaf;
  leaf.batch = 1;
  leaf.n = n;
  for (const auto& a : adj0) leaf.adjacency.push_back(ad::parameter(a));
  leaf.features = ad::parameter(feat0);
  auto out = model.forward(leaf);
  ad::Var target = ad::sum_all(ad::mul(out.probs, ad::constant([&] {
                                         Matrix m(1, 3);
                                         m(0, cls) = 1.0;
                                         return m;
                                       }())));
  std::vector<ad::Var> wrt = leaf.adjacency;
  wrt.push_back(leaf.features);
  auto grads = ad::grad(target, wrt);

  const double h = 1e-4;
  int probes = 0;
  std::uniform_int_distribution<int> which(0, 2), pos(0, n * n - 1), fpos(0, n * 2 - 1);
  while (probes < 40) {
    const int w = which(rng);
    std::vector<Matrix> up = adj0, down = adj0;
    Matrix fu = feat0, fd = feat0;
    double analytic;
    if (w < 2) {
      const int p = pos(rng);
      up[w].data[p] += h;
      down[w].data[p] -= h;
      analytic = grads[w].value().data[p];
    } else {
      const int p = fpos(rng);
      fu.data[p] += h;
      fd.data[p] -= h;
      analytic = grads[2].value().data[p];
    }
    const double numeric = (prob(up, fu) - prob(down, fd)) / (2 * h);
    const double den = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
    CHECK(std::abs(analytic - numeric) / den < 1e-3);
    ++probes;
  }
}

TEST_CASE("padding and batching do not change outputs") {
  std::mt19937_64 rng(4);
  GnnModel model(small_arch(3, 2, 3), 6);
  std::vector<Graph> gs;
  for (int t = 0; t < 25; ++t) gs.push_back(random_graph(rng, 1, 10, 3, 2, 0.3));
  auto batched = evaluate_graphs(model, gs, 7);
  for (std::size_t i = 0; i < gs.size(); ++i) {
    auto single = predict_proba(model, gs[i]);
    ad::NoGradGuard ng;
    auto padded = model.forward(make_batch(std::span<const Graph>(&gs[i], 1), gs[i].node_count + 9, 2, 3));
    for (std::size_t c = 0; c < single.size(); ++c) {
      CHECK(std::abs(batched[i].probs[c] - single[c]) < 1e-12);
      CHECK(std::abs(padded.probs.value()(0, static_cast<int>(c)) - single[c]) < 1e-5);
    }
  }
}

TEST_CASE("predict_proba agrees with forward on the dense encoding") {
  std::mt19937_64 rng(5);
  GnnModel model(small_arch(2, 3, 2), 8);
  for (int t = 0; t < 10; ++t) {
    Graph g = random_graph(rng, 2, 9, 2, 3, 0.4);
    auto cg = to_dense(g, 12, 3, 2);
    auto dense = model.forward(batch_from_dense(std::span<const ContinuousGraph>(&cg, 1)));
    auto p = predict_proba(model, g);
    for (std::size_t c = 0; c < p.size(); ++c) CHECK(std::abs(dense.probs.value().data[c] - p[c]) < 1e-7);
  }
}

TEST_CASE("class mean embedding") {
  std::mt19937_64 rng(6);
  GnnModel model(small_arch(2, 1, 2), 3);
  GraphDataset ds;
  ds.class_names = {"a", "b"};
  ds.node_category_names = {"x", "y"};
  ds.edge_category_names = {"e"};
  for (int t = 0; t < 15; ++t) ds.graphs.push_back(random_graph(rng, 2, 8, 2, 1, 0.4, 1));
  Graph lone = random_graph(rng, 3, 6, 2, 1, 0.5);
  lone.class_label = 1;
  ds.graphs.push_back(lone);

  auto m1 = class_mean_embedding(model, ds, 1);
  auto e1 = embed(model, lone);
  for (std::size_t i = 0; i < m1.size(); ++i) CHECK(std::abs(m1[i] - e1[i]) < 1e-15);

  auto m0 = class_mean_embedding(model, ds, 0);
  std::vector<double> naive(m0.size(), 0.0);
  for (int t = 0; t < 15; ++t) {
    auto e = embed(model, ds.graphs[t]);
    for (std::size_t i = 0; i < e.size(); ++i) naive[i] += e[i] / 15.0;
  }
  for (std::size_t i = 0; i < m0.size(); ++i) CHECK(std::abs(m0[i] - naive[i]) < 1e-12);

  GraphDataset same = ds;
  same.graphs.assign(4, lone);
  auto ms = class_mean_embedding(model, same, 1);
  for (std::size_t i = 0; i < ms.size(); ++i) CHECK(std::abs(ms[i] - e1[i]) < 1e-12);
  CHECK_THROWS_AS((void)class_mean_embedding(model, same, 0), InsufficientDataError);
}

TEST_CASE("shape mismatches are rejected") {
  GnnModel model(small_arch(2, 2, 2), 1);
  Graph g = make_graph(3, {0, 1, 0}, {{0, 1, 0}, {1, 2, 0}});
  auto b = make_batch(std::span<const Graph>(&g, 1), 3, 1, 2);
  CHECK_THROWS_AS((void)model.forward(b), ShapeError);
  auto b2 = make_batch(std::span<const Graph>(&g, 1), 3, 2, 3);
  CHECK_THROWS_AS((void)model.forward(b2), ShapeError);
}

TEST_CASE("checkpoint round trip is exact") {
  GnnModel model(small_arch(3, 2, 4), 77);
  auto path = std::filesystem::temp_directory_path() / "gx_test_ckpt.json";
  save_checkpoint(path, model, {77, "abc"});
  CheckpointMeta meta;
  GnnModel back = load_checkpoint(path, &meta);
  CHECK(meta.seed == 77);
  CHECK(meta.dataset_hash == "abc");
  REQUIRE(back.parameters().size() == model.parameters().size());
  for (std::size_t i = 0; i < back.parameters().size(); ++i)
    CHECK(back.parameters()[i].value().data == model.parameters()[i].value().data);
  std::filesystem::remove(path);
}

TEST_CASE("training separates the Shape classes") {
  ShapeConfig sc;
  sc.graphs_per_class = 60;
  auto ds = gen_shape_dataset(sc, 123);
  TrainConfig tc;
  tc.hidden = 16;
  tc.head_hidden = 16;
  tc.epochs = 30;
  tc.seed = 7;
  auto a = train_gnn(ds, tc);
  auto b = train_gnn(ds, tc);
  CHECK(a.report.final_test_accuracy >= 0.95);
  for (double acc : a.report.final_test_accuracy_per_class) CHECK(acc >= 0.9);
  CHECK(a.report.epoch_loss == b.report.epoch_loss);
  CHECK(a.report.test_indices.size() == 48);
  for (double x : a.report.train_accuracy) CHECK((x >= 0.0 && x <= 1.0));
}

TEST_CASE("single-class dataset trains trivially with a warning") {
  ShapeConfig sc;
  sc.graphs_per_class = 10;
  auto full = gen_shape_dataset(sc, 1);
  GraphDataset ds = full;
  ds.class_names = {"star"};
  ds.graphs = full.graphs_of_class(3);
  for (auto& g : ds.graphs) g.class_label = 0;
  TrainConfig tc;
  tc.epochs = 2;
  tc.hidden = 4;
  tc.head_hidden = 4;
  auto r = train_gnn(ds, tc);
  CHECK(r.report.final_test_accuracy == 1.0);
  CHECK_FALSE(r.report.warnings.empty());
}

TEST_CASE("log_proba") {
  std::vector<double> l{0.3, -1.2, 2.0};
  const double z = std::exp(0.3) + std::exp(-1.2) + std::exp(2.0);
  for (int c = 0; c < 3; ++c) CHECK(std::abs(log_proba(l, c) - (l[c] - std::log(z))) < 1e-14);
  std::vector<double> sat{50.0, 0.0};
  CHECK(log_proba(sat, 0) < 0.0);
  CHECK(std::abs(log_proba(sat, 0) + std::exp(-50.0)) < 1e-30);
  CHECK_THROWS_AS((void)log_proba(sat, 2), ShapeError);
}
