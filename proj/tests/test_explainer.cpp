#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>

#include "doctest.h"
#include "gx/datasets.hpp"
#include "gx/explainer.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace gx;
using gx::testing::max_rel_error;
using gx::testing::random_matrix;
using namespace gx::testing;

namespace {

GraphBatch random_batch(int batch, int n, std::mt19937_64& rng) {
  GraphBatch b;
  b.batch = batch;
  b.n = n;
  b.adjacency.push_back(ad::constant(random_matrix(batch * n, n, rng, 0, 1)));
  b.features = ad::constant(random_matrix(batch * n, 2, rng, 0, 1));
  return b;
}

double frob2(const Matrix& m) {
  double s = 0;
  for (double x : m.data) s += x * x;
  return s;
}

}  // namespace

TEST_CASE("latent and gumbel samples have the right moments") {
  Rng rng(11);
  Matrix z = sample_latent(1000, 100, rng);
  double m = 0, v = 0;
  for (double x : z.data) m += x;
  m /= z.size();
  for (double x : z.data) v += (x - m) * (x - m);
  v /= z.size() - 1;
  CHECK(std::abs(m) < 0.01);
  CHECK(std::abs(v - 1.0) < 0.02);

  Matrix g = sample_gumbel(1000, 100, rng);
  m = 0, v = 0;
  for (double x : g.data) {
    CHECK(std::isfinite(x));
    m += x;
  }
  m /= g.size();
  for (double x : g.data) v += (x - m) * (x - m);
  v /= g.size() - 1;
  CHECK(std::abs(m - kEulerGamma) < 0.02);
  CHECK(std::abs(v - kPi2Over6) < 0.05);
}

TEST_CASE("gumbel-softmax hard samples follow softmax(logits)") {
  std::mt19937_64 gen(12);
  Rng rng(13);
  const int k = 5, draws = 20000;
  for (int trial = 0; trial < 20; ++trial) {
    Matrix l = random_matrix(1, k, gen, -1.5, 1.5);
    double zsum = 0;
    std::vector<double> p(k);
    for (int c = 0; c < k; ++c) zsum += p[c] = std::exp(l.data[c]);
    for (auto& x : p) x /= zsum;
    Matrix tiled(draws, k);
    for (int r = 0; r < draws; ++r)
      for (int c = 0; c < k; ++c) tiled(r, c) = l.data[c];
    ad::NoGradGuard ng;
    Matrix y = gumbel_softmax(ad::constant(tiled), 0.7, true, rng).value();
    std::vector<double> count(k, 0.0);
    for (int r = 0; r < draws; ++r) {
      double rs = 0;
      for (int c = 0; c < k; ++c) {
        CHECK((y(r, c) == 0.0 || y(r, c) == 1.0));
        rs += y(r, c);
        count[c] += y(r, c);
      }
      CHECK(rs == 1.0);
    }
    double chi2 = 0;
    for (int c = 0; c < k; ++c) chi2 += (count[c] - draws * p[c]) * (count[c] - draws * p[c]) / (draws * p[c]);
    CHECK(chi2 < kChi2Df4Q99);
  }
}

TEST_CASE("gumbel-softmax limits and straight-through gradient") {
  Matrix zero(1, 3);
  Matrix l(1, 3);
  l.data = {40.0, 0.0, 0.0};
  auto y = gumbel_softmax(ad::constant(l), zero, 1.0, false).value();
  CHECK(y.data[0] > 1.0 - 1e-15);
  l.data = {1000.0, -1000.0, 0.0};
  y = gumbel_softmax(ad::constant(l), zero, 1.0, false).value();
  for (double x : y.data) CHECK(std::isfinite(x));

  Rng rng(14);
  std::mt19937_64 gen(15);
  Matrix wide = random_matrix(2000, 4, gen, -1, 1);
  y = gumbel_softmax(ad::constant(wide), 0.01, false, rng).value();
  double ent = 0;
  for (int r = 0; r < y.rows; ++r)
    for (int c = 0; c < y.cols; ++c)
      if (y(r, c) > 0) ent -= y(r, c) * std::log(y(r, c));
  CHECK(ent / y.rows < 0.05);

  CHECK_THROWS_AS((void)gumbel_softmax(ad::constant(wide), 0.0, false, rng), DomainError);
  CHECK_THROWS_AS((void)gumbel_softmax(ad::constant(wide), zero, 1.0, false), ShapeError);

  Matrix noise = sample_gumbel(6, 3, rng);
  ad::Var p = ad::parameter(random_matrix(6, 3, gen));
  Matrix w = random_matrix(6, 3, gen);
  auto soft = gumbel_softmax(p, noise, 0.5, false);
  auto hard = gumbel_softmax(p, noise, 0.5, true);
  for (int r = 0; r < 6; ++r) {
    const double* s = soft.value().row(r);
    const int am = static_cast<int>(std::max_element(s, s + 3) - s);
    for (int c = 0; c < 3; ++c) CHECK(hard.value()(r, c) == (c == am ? 1.0 : 0.0));
  }
  auto gs = ad::grad(ad::sum_all(ad::mul(soft, ad::constant(w))), {p})[0].value();
  auto gh = ad::grad(ad::sum_all(ad::mul(hard, ad::constant(w))), {p})[0].value();
  CHECK(max_rel_error(gs, gh, 1e-12) < 1e-12);
}

TEST_CASE("discretize builds symmetric dense batches") {
  GeneratorArch arch{6, 5, 2, 3, {8}};
  Generator gen(arch, 3);
  Rng rng(16);
  const int b = 3;
  auto logits = gen.forward(ad::constant(sample_latent(b, 6, rng)));
  auto noise = sample_noise(arch, b, rng);
  for (bool hard : {false, true}) {
    auto s = discretize(arch, logits, noise, 0.5, hard);
    REQUIRE(s.batch.adjacency.size() == 2);
    const Matrix& pp = s.pair_probs.value();
    for (int r = 0; r < pp.rows; ++r) {
      double sum = 0;
      for (int c = 0; c < pp.cols; ++c) sum += pp(r, c);
      CHECK(std::abs(sum - 1.0) < 1e-12);
    }
    for (int k = 0; k < b; ++k)
      for (int i = 0; i < 5; ++i) {
        double total = 0;
        for (int c = 0; c < 2; ++c) {
          const Matrix& a = s.batch.adjacency[c].value();
          CHECK(a(k * 5 + i, i) == 0.0);
          for (int j = 0; j < 5; ++j) {
            CHECK(a(k * 5 + i, j) == a(k * 5 + j, i));
            if (hard) CHECK((a(k * 5 + i, j) == 0.0 || a(k * 5 + i, j) == 1.0));
            total += a(k * 5 + i, j);
          }
        }
        double none = 1.0;
        for (int j = 0; j < 5; ++j)
          if (j != i) none *= 1.0 - s.batch.adjacency[0].value()(k * 5 + i, j) - s.batch.adjacency[1].value()(k * 5 + i, j);
        const double pres = s.presence.value()(k * 5 + i, 0);
        CHECK(std::abs(pres - (1.0 - none)) < 1e-12);
        CHECK((pres >= -1e-15 && pres <= 1.0 + 1e-15));
        if (hard && total == 0.0)
          for (int f = 0; f < 3; ++f) CHECK(s.batch.features.value()(k * 5 + i, f) == 0.0);
      }
  }

  // Hard samples are the argmax of the relaxed ones.
  auto soft = hard_graphs(arch, discretize(arch, logits, noise, 0.5, false));
  auto hard = hard_graphs(arch, discretize(arch, logits, noise, 0.5, true));
  REQUIRE(soft.size() == hard.size());
  for (std::size_t i = 0; i < soft.size(); ++i) {
    CHECK(soft[i].edges == hard[i].edges);
    CHECK(soft[i].node_labels == hard[i].node_labels);
    for (const auto& e : hard[i].edges) CHECK((e.label >= 0 && e.label < 2));
  }
  auto rel = relaxed_graphs(arch, discretize(arch, logits, noise, 0.5, false));
  CHECK(rel.size() == static_cast<std::size_t>(b));

  GeneratorLogits bad = logits;
  Matrix nanm = logits.adjacency.value();
  nanm.data[0] = NAN;
  bad.adjacency = ad::constant(nanm);
  CHECK_THROWS_AS((void)discretize(arch, bad, noise, 0.5, false), NumericError);
}

TEST_CASE("generator losses") {
  Matrix s(2, 1);
  s.data = {1.0, 3.0};
  CHECK(gan_generator_loss(ad::constant(s)).item() == -2.0);

  GnnOutput out;
  Matrix l(1, 2);
  l.data = {0.0, std::log(std::exp(1.0) - 1.0)};  // p_0 = 1/e
  out.logits = ad::constant(l);
  CHECK(std::abs(gnn_loss(out, 0, GnnLossKind::kCrossEntropy).item() - 1.0) < 1e-14);
  CHECK(gnn_loss(out, 1, GnnLossKind::kLogits).item() == -l.data[1]);
  CHECK_THROWS_AS((void)gnn_loss(out, 2, GnnLossKind::kCrossEntropy), ConfigError);

  auto c = combined_generator_loss(ad::scalar(2.0), ad::scalar(5.0), 0.3);
  CHECK(std::abs(c.item() - 2.9) < 1e-14);
  CHECK(combined_generator_loss(ad::scalar(2.0), ad::scalar(5.0), 0.0).item() == 2.0);
  CHECK(combined_generator_loss(ad::scalar(2.0), ad::scalar(5.0), 1.0).item() == 5.0);
  CHECK_THROWS_AS((void)combined_generator_loss(ad::scalar(2.0), ad::scalar(5.0), 1.5), DomainError);

  // One descent step on the classifier loss raises the target probability.
  GnnArch arch;
  arch.hidden = 8;
  arch.head_hidden = 8;
  arch.outputs = 3;
  GnnModel model(arch, 4);
  model.set_trainable(false);
  std::mt19937_64 gen(17);
  ad::Var feats = ad::parameter(random_matrix(4 * 6, 1, gen, 0.2, 1.0));
  GraphBatch b = random_batch(4, 6, gen);
  b.features = feats;
  auto before = model.forward(b);
  auto g = ad::grad(gnn_loss(before, 2, GnnLossKind::kCrossEntropy), {feats})[0].value();
  Matrix moved = feats.value();
  for (std::size_t i = 0; i < moved.size(); ++i) moved.data[i] -= 1e-2 * g.data[i];
  b.features = ad::constant(moved);
  auto after = model.forward(b);
  double pb = 0, pa = 0;
  for (int k = 0; k < 4; ++k) {
    pb += before.probs.value()(k, 2);
    pa += after.probs.value()(k, 2);
  }
  CHECK(pa > pb);
}

TEST_CASE("gradient penalty matches the analytic value for linear critics") {
  std::mt19937_64 gen(18);
  const int batch = 4, n = 5;
  for (double target : {1.0, 2.0, 0.5}) {
    Matrix wa = random_matrix(n, n, gen), wf = random_matrix(n, 2, gen);
    const double scale = target / std::sqrt(frob2(wa) + frob2(wf));
    for (auto& x : wa.data) x *= scale;
    for (auto& x : wf.data) x *= scale;
    auto critic = linear_critic(wa, wf, batch);
    auto real = random_batch(batch, n, gen), fake = random_batch(batch, n, gen);
    Rng rng(19);
    auto loss = discriminator_loss(critic, real, fake, 10.0, rng);
    CHECK(std::abs(loss.penalty - 10.0 * (target - 1.0) * (target - 1.0)) < 1e-6);
    const double w = ad::mean_all(critic(fake)).item() - ad::mean_all(critic(real)).item();
    CHECK(std::abs(loss.wasserstein - w) < 1e-12);
    CHECK(std::abs(loss.total.item() - loss.wasserstein - loss.penalty) < 1e-12);

    auto same = discriminator_loss(critic, real, real, 10.0, std::vector<double>(batch, 0.3));
    CHECK(std::abs(same.wasserstein) < 1e-12);
  }
  auto critic = linear_critic(Matrix(n, n), Matrix(n, 2), 2);
  auto a = random_batch(2, n, gen), b = random_batch(3, n, gen);
  CHECK_THROWS((void)discriminator_loss(critic, a, b, 10.0, std::vector<double>(2, 0.5)));
}

TEST_CASE("lambda schedule") {
  ExplainerConfig c;
  c.iterations = 1000;
  c.lambda_min = 0.1;
  c.lambda_max = 0.7;
  c.p_ramp = 0.4;
  c.k_sched = 10.0;
  const double mid = c.iterations * (c.p_ramp + (1.0 - c.p_ramp) / 2.0);
  CHECK(std::abs(lambda_schedule(mid, c) - 0.4) < 1e-15);
  CHECK(std::abs(lambda_schedule(c.iterations, c) - (0.1 + 0.6 * kSigmoid10)) < 1e-15);
  CHECK_THROWS_AS((void)lambda_schedule(-1, c), DomainError);
  CHECK_THROWS_AS((void)lambda_schedule(1001, c), DomainError);
  ExplainerConfig bad = c;
  bad.p_ramp = 1.0;
  CHECK_THROWS_AS((void)lambda_schedule(10, bad), ConfigError);

  std::mt19937_64 gen(20);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 10000; ++i) {
    ExplainerConfig r;
    r.iterations = 1 + static_cast<int>(u(gen) * 5000);
    r.lambda_min = 0.5 * u(gen);
    r.lambda_max = r.lambda_min + (1.0 - r.lambda_min) * u(gen);
    r.p_ramp = 0.95 * u(gen);
    r.k_sched = 0.1 + 20 * u(gen);
    const double t = u(gen) * r.iterations;
    const double l = lambda_schedule(t, r);
    CHECK(std::abs(l - static_cast<double>(oracle_lambda(t, r))) < 1e-9);
    CHECK((l >= r.lambda_min && l <= r.lambda_max));
    CHECK(lambda_schedule(std::min<double>(r.iterations, t + 1.0), r) >= l);
  }
}

TEST_CASE("combined generator loss gradient matches finite differences") {
  for (double lambda : {0.0, 0.4, 1.0}) CHECK(generator_gradient_error(21, lambda) < 1e-3);
}

TEST_CASE("select_explanations orders by v, p, iteration") {
  std::mt19937_64 gen(25);
  std::uniform_int_distribution<int> coarse(0, 4), it(0, 9);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = trial % 17;
    std::vector<ExplanationCandidate> c(n);
    for (int i = 0; i < n; ++i) {
      c[i].scores.v = coarse(gen) / 4.0;
      c[i].scores.p = coarse(gen) / 4.0;
      c[i].iteration = it(gen);
      c[i].sample = i;
    }
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
      const auto ka = std::make_tuple(-c[a].scores.v, -c[a].scores.p, c[a].iteration, a);
      const auto kb = std::make_tuple(-c[b].scores.v, -c[b].scores.p, c[b].iteration, b);
      return ka < kb;
    });
    for (int top : {0, 3, 10, 100}) {
      auto sel = select_explanations(c, top);
      REQUIRE(sel.size() == static_cast<std::size_t>(std::min(top, n)));
      for (std::size_t i = 0; i < sel.size(); ++i) CHECK(sel[i].sample == idx[i]);
    }
  }
}

TEST_CASE("train_explainer smoke run") {
  ShapeConfig sc;
  sc.graphs_per_class = 12;
  auto ds = gen_shape_dataset(sc, 26);
  GnnArch arch;
  arch.hidden = 8;
  arch.head_hidden = 8;
  arch.outputs = 4;
  GnnModel model(arch, 27);
  model.set_trainable(false);

  ExplainerConfig cfg;
  cfg.latent_dim = 4;
  cfg.generator_hidden = {16};
  cfg.critic_hidden = 8;
  cfg.iterations = 40;
  cfg.batch_size = 4;
  cfg.critic_steps = 1;
  cfg.harvest_every = 20;
  cfg.harvest_samples = 16;
  cfg.n_max = 8;
  cfg.seed = 5;
  cfg.filter = false;
  cfg.filter_cfg.v_threshold = 0.3;

  auto res = train_explainer(model, ds, 3, cfg);
  CHECK_FALSE(res.aborted);
  CHECK(res.sampled == 32);
  REQUIRE(res.harvests.size() == 2);
  CHECK(res.harvests[0].iteration == 20);
  CHECK(res.harvests[1].iteration == 40);
  CHECK(res.pass_rate == static_cast<double>(res.passed) / res.sampled);
  CHECK(res.degenerate == (res.pass_rate < cfg.degenerate_pass_rate));
  auto ctx = make_scoring_context(model, ds, 3);
  int passed = 0;
  for (const auto& c : res.candidates) {
    CHECK(c.graph.node_count > 0);
    CHECK(c.graph.node_count <= 8);
    CHECK(std::abs(score_candidate(ctx, c.graph).v - c.scores.v) < 1e-6);
    CHECK(c.passed == score_filter(c.graph, c.scores, ctx.stats, cfg.filter_cfg));
    passed += c.passed;
  }
  CHECK(passed == res.passed);

  auto again = train_explainer(model, ds, 3, cfg);
  REQUIRE(again.candidates.size() == res.candidates.size());
  for (std::size_t i = 0; i < res.candidates.size(); ++i) {
    CHECK(again.candidates[i].graph == res.candidates[i].graph);
    CHECK(again.candidates[i].scores.v == res.candidates[i].scores.v);
  }

  cfg.filter = true;
  auto filtered = train_explainer(model, ds, 3, cfg);
  CHECK(static_cast<int>(filtered.candidates.size()) == filtered.passed);
  for (const auto& c : filtered.candidates) {
    CHECK(c.passed);
    CHECK(validity_check(c.graph, ctx.stats, cfg.filter_cfg.degree_sigma_multiplier));
    CHECK(c.scores.v >= cfg.filter_cfg.v_threshold);
  }

  cfg.lambda_min = cfg.lambda_max = 1.0;
  cfg.degenerate_pass_rate = 1.0;
  auto pure = train_explainer(model, ds, 3, cfg);
  CHECK(pure.degenerate == (pure.passed < pure.sampled));

  const auto path = std::filesystem::temp_directory_path() / "gx_test_generator.json";
  save_generator(path, res.generator, cfg.seed);
  Generator back = load_generator(path);
  REQUIRE(back.parameters().size() == res.generator.parameters().size());
  for (std::size_t i = 0; i < back.parameters().size(); ++i)
    CHECK(back.parameters()[i].value().data == res.generator.parameters()[i].value().data);
  std::filesystem::remove(path);

  ExplainerConfig bad = cfg;
  bad.tau = 0.0;
  CHECK_THROWS_AS((void)train_explainer(model, ds, 3, bad), ConfigError);
  bad = cfg;
  bad.n_max = 3;
  CHECK_THROWS_AS((void)train_explainer(model, ds, 3, bad), InsufficientDataError);
}
