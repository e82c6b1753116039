#include "gx/explainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>

#include "json.hpp"

namespace gx {

using nlohmann::json;

namespace {

Matrix glorot(int fan_in, int fan_out, Rng& rng) {
  const double a = std::sqrt(6.0 / (fan_in + fan_out));
  std::uniform_real_distribution<double> u(-a, a);
  Matrix m(fan_in, fan_out);
  for (auto& x : m.data) x = u(rng);
  return m;
}

// Uniform on the open interval (0, 1).
double open_uniform(Rng& rng) { return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53; }

int pair_count(int n) { return n * (n - 1) / 2; }

Matrix one_hot_argmax(const Matrix& m) {
  Matrix out(m.rows, m.cols);
  for (int r = 0; r < m.rows; ++r) {
    const double* row = m.row(r);
    out(r, static_cast<int>(std::max_element(row, row + m.cols) - row)) = 1.0;
  }
  return out;
}

// (B, n*n*ch) logits -> (B*P, ch), averaging the (i,j) and (j,i) entries.
ad::LinearMapPtr symmetrize_map(int batch, int n, int ch) {
  const int pairs = pair_count(n);
  std::vector<ad::LinearMap::Entry> e;
  e.reserve(static_cast<std::size_t>(batch) * pairs * ch * 2);
  for (int b = 0; b < batch; ++b) {
    int p = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j, ++p)
        for (int c = 0; c < ch; ++c) {
          const int out = (b * pairs + p) * ch + c;
          e.push_back({out, b * n * n * ch + (i * n + j) * ch + c, 0.5});
          e.push_back({out, b * n * n * ch + (j * n + i) * ch + c, 0.5});
        }
  }
  return std::make_shared<const ad::LinearMap>(batch, n * n * ch, batch * pairs, ch, std::move(e));
}

// (B*P, ch) channel c -> symmetric (B*n, n) blocks with a zero diagonal.
ad::LinearMapPtr expand_map(int batch, int n, int ch, int c) {
  const int pairs = pair_count(n);
  std::vector<ad::LinearMap::Entry> e;
  e.reserve(static_cast<std::size_t>(batch) * pairs * 2);
  for (int b = 0; b < batch; ++b) {
    int p = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j, ++p) {
        const int in = (b * pairs + p) * ch + c;
        e.push_back({(b * n + i) * n + j, in, 1.0});
        e.push_back({(b * n + j) * n + i, in, 1.0});
      }
  }
  return std::make_shared<const ad::LinearMap>(batch * pairs, ch, batch * n, n, std::move(e));
}

Matrix identity_blocks(int batch, int n) {
  Matrix m(batch * n, n);
  for (int b = 0; b < batch; ++b)
    for (int i = 0; i < n; ++i) m(b * n + i, i) = 1.0;
  return m;
}

ad::Var one_hot_column_mean(const ad::Var& m, int col, double sign) {
  Matrix sel(m.rows(), m.cols());
  for (int r = 0; r < m.rows(); ++r) sel(r, col) = sign / m.rows();
  return ad::sum_all(ad::mul(m, ad::constant(std::move(sel))));
}

void check_same_batch(const GraphBatch& a, const GraphBatch& b) {
  if (a.batch != b.batch || a.n != b.n || a.adjacency.size() != b.adjacency.size() ||
      a.features.cols() != b.features.cols())
    throw ShapeError("discriminator_loss: real and fake batches differ in shape");
}

GraphBatch constant_copy(const GraphBatch& b) {
  GraphBatch out;
  out.batch = b.batch;
  out.n = b.n;
  for (const auto& a : b.adjacency) out.adjacency.push_back(ad::constant(a.value()));
  out.features = ad::constant(b.features.value());
  return out;
}

bool finite(double x) { return std::isfinite(x); }

}  // namespace

void validate_explainer_config(const ExplainerConfig& c) {
  auto need = [](bool ok, const char* msg) {
    if (!ok) throw ConfigError(std::string("explainer: ") + msg);
  };
  need(c.n_max >= 0, "n_max must be >= 0");
  need(c.n_max == 0 || c.n_max >= 2, "n_max must be >= 2");
  need(c.latent_dim >= 1, "latent_dim must be >= 1");
  for (int h : c.generator_hidden) need(h >= 1, "generator_hidden widths must be >= 1");
  need(c.critic_hidden >= 1 && c.critic_layers >= 1, "critic sizes must be >= 1");
  need(c.lambda_min >= 0.0 && c.lambda_max <= 1.0 && c.lambda_min <= c.lambda_max,
       "need 0 <= lambda_min <= lambda_max <= 1");
  need(c.p_ramp >= 0.0 && c.p_ramp < 1.0, "p_ramp must be in [0, 1)");
  need(c.k_sched > 0.0, "k_sched must be > 0");
  need(c.iterations >= 1, "iterations must be >= 1");
  need(c.batch_size >= 1, "batch_size must be >= 1");
  need(c.critic_steps >= 0, "critic_steps must be >= 0");
  need(c.gp_alpha >= 0.0, "gp_alpha must be >= 0");
  need(c.tau > 0.0, "tau must be > 0");
  need(c.hard_from >= 0.0 && c.hard_from <= 1.0, "hard_from must be in [0, 1]");
  need(c.generator_lr > 0.0 && c.critic_lr > 0.0, "learning rates must be > 0");
  need(c.adam_beta1 >= 0.0 && c.adam_beta1 < 1.0 && c.adam_beta2 >= 0.0 && c.adam_beta2 < 1.0,
       "adam betas must be in [0, 1)");
  need(c.harvest_every >= 1 && c.harvest_samples >= 1, "harvest settings must be >= 1");
  need(c.degenerate_pass_rate >= 0.0 && c.degenerate_pass_rate <= 1.0, "degenerate_pass_rate must be in [0, 1]");
  validate_filter_config(c.filter_cfg);
}

double lambda_schedule(double t, const ExplainerConfig& cfg) {
  if (!(cfg.p_ramp >= 0.0 && cfg.p_ramp < 1.0)) throw ConfigError("lambda_schedule: p_ramp must be in [0, 1)");
  if (cfg.iterations <= 0) throw ConfigError("lambda_schedule: iterations must be > 0");
  if (t < 0.0 || t > cfg.iterations) throw DomainError("lambda_schedule: t outside [0, T]");
  const double r = (t / cfg.iterations - cfg.p_ramp) / (1.0 - cfg.p_ramp);
  const double sig = 1.0 / (1.0 + std::exp(-cfg.k_sched * (2.0 * r - 1.0)));
  return cfg.lambda_min + (cfg.lambda_max - cfg.lambda_min) * sig;
}

Matrix sample_latent(int batch, int dim, Rng& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Matrix z(batch, dim);
  for (auto& x : z.data) x = nd(rng);
  return z;
}

Matrix sample_gumbel(int rows, int cols, Rng& rng) {
  Matrix g(rows, cols);
  for (auto& x : g.data) x = -std::log(-std::log(open_uniform(rng)));
  return g;
}

ad::Var gumbel_softmax(const ad::Var& logits, const Matrix& noise, double tau, bool hard) {
  if (!(tau > 0.0)) throw DomainError("gumbel_softmax: tau must be > 0");
  if (!noise.same_shape(logits.value())) throw ShapeError("gumbel_softmax: noise shape mismatch");
  ad::Var y = ad::softmax_rows(ad::scale(ad::add(logits, ad::constant(noise)), 1.0 / tau));
  if (!hard) return y;
  // Exactly one-hot forward value; the gradient is that of y.
  return ad::add(ad::sub(y, ad::stop_gradient(y)), ad::constant(one_hot_argmax(y.value())));
}

ad::Var gumbel_softmax(const ad::Var& logits, double tau, bool hard, Rng& rng) {
  return gumbel_softmax(logits, sample_gumbel(logits.rows(), logits.cols(), rng), tau, hard);
}

Generator::Generator(const GeneratorArch& arch, std::uint64_t seed) : arch_(arch) {
  if (arch.latent_dim < 1 || arch.n_max < 2 || arch.edge_categories < 1 || arch.node_categories < 1)
    throw ConfigError("generator: invalid architecture");
  Rng rng(derive_seed(seed, 0x9e7));
  auto add = [&](std::string name, Matrix m) {
    params_.push_back(ad::parameter(std::move(m)));
    names_.push_back(std::move(name));
  };
  int in = arch.latent_dim;
  for (std::size_t l = 0; l < arch.hidden.size(); ++l) {
    if (arch.hidden[l] < 1) throw ConfigError("generator: hidden widths must be >= 1");
    add("hidden" + std::to_string(l) + ".w", glorot(in, arch.hidden[l], rng));
    add("hidden" + std::to_string(l) + ".b", Matrix(1, arch.hidden[l]));
    in = arch.hidden[l];
  }
  const int n = arch.n_max;
  const int adj_out = n * n * (arch.edge_categories + 1);
  add("adjacency.w", glorot(in, adj_out, rng));
  add("adjacency.b", Matrix(1, adj_out));
  add("features.w", glorot(in, n * arch.node_categories, rng));
  add("features.b", Matrix(1, n * arch.node_categories));
}

GeneratorLogits Generator::forward(const ad::Var& z) const {
  if (z.cols() != arch_.latent_dim) throw ShapeError("generator: latent width " + std::to_string(z.cols()));
  ad::Var h = z;
  std::size_t k = 0;
  for (std::size_t l = 0; l < arch_.hidden.size(); ++l, k += 2)
    h = ad::tanh(ad::add_bias(ad::matmul(h, params_[k]), params_[k + 1]));
  GeneratorLogits out;
  out.batch = z.rows();
  out.adjacency = ad::add_bias(ad::matmul(h, params_[k]), params_[k + 1]);
  out.features = ad::reshape(ad::add_bias(ad::matmul(h, params_[k + 2]), params_[k + 3]), z.rows() * arch_.n_max,
                             arch_.node_categories);
  return out;
}

void Generator::set_trainable(bool on) {
  for (auto& p : params_) p.set_requires_grad(on);
}

void Generator::assign(const std::vector<Matrix>& values) {
  if (values.size() != params_.size()) throw ShapeError("Generator::assign: parameter count mismatch");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!values[i].same_shape(params_[i].value())) throw ShapeError("Generator::assign: shape mismatch");
    params_[i].mutable_value() = values[i];
  }
}

GumbelNoise sample_noise(const GeneratorArch& arch, int batch, Rng& rng) {
  GumbelNoise g;
  g.pairs = sample_gumbel(batch * pair_count(arch.n_max), arch.edge_categories + 1, rng);
  g.features = sample_gumbel(batch * arch.n_max, arch.node_categories, rng);
  return g;
}

DiscreteSample discretize(const GeneratorArch& arch, const GeneratorLogits& logits, const GumbelNoise& noise,
                          double tau, bool hard) {
  const int b = logits.batch;
  const int n = arch.n_max;
  const int ch = arch.edge_categories + 1;
  if (logits.adjacency.rows() != b || logits.adjacency.cols() != n * n * ch)
    throw ShapeError("discretize: adjacency logits " + logits.adjacency.value().shape_str());
  for (double x : logits.adjacency.value().data)
    if (!finite(x)) throw NumericError("discretize: non-finite adjacency logits");
  for (double x : logits.features.value().data)
    if (!finite(x)) throw NumericError("discretize: non-finite feature logits");

  DiscreteSample s;
  ad::Var pair_logits = ad::sparse_linear(logits.adjacency, symmetrize_map(b, n, ch));
  s.pair_probs = gumbel_softmax(pair_logits, noise.pairs, tau, hard);

  s.batch.batch = b;
  s.batch.n = n;
  for (int c = 1; c < ch; ++c) s.batch.adjacency.push_back(ad::sparse_linear(s.pair_probs, expand_map(b, n, ch, c)));
  ad::Var none = ad::add(ad::sparse_linear(s.pair_probs, expand_map(b, n, ch, 0)), ad::constant(identity_blocks(b, n)));
  s.presence = ad::shift(ad::neg(ad::row_prod(none)), 1.0);

  ad::Var feat = gumbel_softmax(logits.features, noise.features, tau, hard);
  s.batch.features = ad::mul(feat, ad::broadcast_cols(s.presence, arch.node_categories));
  return s;
}

std::vector<ContinuousGraph> relaxed_graphs(const GeneratorArch& arch, const DiscreteSample& s) {
  const int n = arch.n_max, ch = arch.edge_categories + 1, pairs = pair_count(n);
  const Matrix& pp = s.pair_probs.value();
  const Matrix& f = s.batch.features.value();
  const Matrix& pres = s.presence.value();
  std::vector<ContinuousGraph> out;
  for (int b = 0; b < s.batch.batch; ++b) {
    ContinuousGraph cg(n, ch, arch.node_categories);
    for (int i = 0; i < n; ++i) cg.adj(i, i, 0) = 1.0;
    int p = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j, ++p)
        for (int c = 0; c < ch; ++c) cg.adj(i, j, c) = cg.adj(j, i, c) = pp(b * pairs + p, c);
    for (int i = 0; i < n; ++i) {
      const double e = pres(b * n + i, 0);
      for (int k = 0; k < arch.node_categories; ++k) cg.feat(i, k) = e > 0.0 ? f(b * n + i, k) / e : 0.0;
    }
    out.push_back(std::move(cg));
  }
  return out;
}

std::vector<Graph> hard_graphs(const GeneratorArch& arch, const DiscreteSample& s) {
  const int n = arch.n_max, ch = arch.edge_categories + 1, pairs = pair_count(n);
  const Matrix pp = one_hot_argmax(s.pair_probs.value());
  const Matrix& f = s.batch.features.value();
  std::vector<Graph> out;
  for (int b = 0; b < s.batch.batch; ++b) {
    ContinuousGraph cg(n, ch, arch.node_categories);
    for (int i = 0; i < n; ++i) cg.adj(i, i, 0) = 1.0;
    int p = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j, ++p)
        for (int c = 0; c < ch; ++c) cg.adj(i, j, c) = cg.adj(j, i, c) = pp(b * pairs + p, c);
    for (int i = 0; i < n; ++i) {
      const double* row = f.row(b * n + i);
      cg.feat(i, static_cast<int>(std::max_element(row, row + arch.node_categories) - row)) = 1.0;
    }
    out.push_back(from_dense(cg));
  }
  return out;
}

ad::Var gan_generator_loss(const ad::Var& critic_scores) { return ad::neg(ad::mean_all(critic_scores)); }

ad::Var gnn_loss(const GnnOutput& out, int target_class, GnnLossKind kind) {
  if (target_class < 0 || target_class >= out.logits.cols())
    throw ConfigError("gnn_loss: target class " + std::to_string(target_class) + " out of range");
  if (kind == GnnLossKind::kCrossEntropy) return one_hot_column_mean(ad::log_softmax_rows(out.logits), target_class, -1);
  return one_hot_column_mean(out.logits, target_class, -1);
}

ad::Var combined_generator_loss(const ad::Var& l_gan, const ad::Var& l_gnn, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw DomainError("combined_generator_loss: lambda outside [0,1]");
  return ad::add(ad::scale(l_gan, 1.0 - lambda), ad::scale(l_gnn, lambda));
}

CriticLoss discriminator_loss(const Critic& critic, const GraphBatch& real, const GraphBatch& fake, double alpha,
                              Rng& rng) {
  std::vector<double> eps(real.batch);
  for (auto& e : eps) e = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  return discriminator_loss(critic, real, fake, alpha, eps);
}

CriticLoss discriminator_loss(const Critic& critic, const GraphBatch& real, const GraphBatch& fake, double alpha,
                              const std::vector<double>& eps) {
  check_same_batch(real, fake);
  if (!(alpha >= 0.0)) throw DomainError("discriminator_loss: alpha must be >= 0");
  if (static_cast<int>(eps.size()) != real.batch) throw ShapeError("discriminator_loss: eps size mismatch");
  const int b = real.batch, n = real.n;

  auto mix = [&](const Matrix& x, const Matrix& y) {
    Matrix m(x.rows, x.cols);
    for (int r = 0; r < x.rows; ++r) {
      const double e = eps[r / n];
      for (int c = 0; c < x.cols; ++c) m(r, c) = e * x(r, c) + (1.0 - e) * y(r, c);
    }
    return m;
  };
  GraphBatch hat;
  hat.batch = b;
  hat.n = n;
  std::vector<ad::Var> leaves;
  for (std::size_t c = 0; c < real.adjacency.size(); ++c) {
    hat.adjacency.push_back(ad::parameter(mix(real.adjacency[c].value(), fake.adjacency[c].value())));
    leaves.push_back(hat.adjacency.back());
  }
  hat.features = ad::parameter(mix(real.features.value(), fake.features.value()));
  leaves.push_back(hat.features);

  ad::Var d_hat = critic(hat);
  auto g = ad::grad(ad::sum_all(d_hat), leaves, true);
  ad::Var sq;
  for (const auto& gi : g) {
    ad::Var part = ad::block_sum(ad::row_sum(ad::square(gi)), b);
    sq = sq.defined() ? ad::add(sq, part) : part;
  }
  ad::Var norm = ad::sqrt(ad::shift(sq, 1e-12));
  ad::Var pen = ad::scale(ad::mean_all(ad::square(ad::shift(norm, -1.0))), alpha);

  ad::Var w = ad::sub(ad::mean_all(critic(constant_copy(fake))), ad::mean_all(critic(real)));
  CriticLoss out;
  out.total = ad::add(w, pen);
  out.wasserstein = w.item();
  out.penalty = pen.item();
  if (!finite(out.penalty)) throw NumericError("discriminator_loss: non-finite gradient penalty");
  return out;
}

ExplainerResult train_explainer(const GnnModel& gnn, const GraphDataset& ds, int cls, const ExplainerConfig& cfg) {
  validate_explainer_config(cfg);
  if (gnn.arch().node_categories != ds.node_categories() || gnn.arch().edge_categories != ds.edge_categories())
    throw ConfigError("train_explainer: classifier does not match the dataset categories");
  ScoringContext ctx = make_scoring_context(gnn, ds, cls);

  ExplainerResult res;
  auto class_graphs = ds.graphs_of_class(cls);
  int n = cfg.n_max;
  if (n == 0)
    for (const auto& g : class_graphs) n = std::max(n, g.node_count);
  n = std::max(n, 2);
  std::vector<Graph> real;
  for (auto& g : class_graphs)
    if (g.node_count <= n) real.push_back(std::move(g));
  if (real.size() < class_graphs.size())
    res.warnings.push_back(std::to_string(class_graphs.size() - real.size()) + " class graphs exceed n_max and are skipped");
  if (real.empty()) throw InsufficientDataError("train_explainer: no class graph fits n_max");

  const int ec = ds.edge_categories(), nc = ds.node_categories();
  GeneratorArch garch{cfg.latent_dim, n, ec, nc, cfg.generator_hidden};
  res.generator = Generator(garch, derive_seed(cfg.seed, 1, cls));
  GnnArch carch;
  carch.node_categories = nc;
  carch.edge_categories = ec;
  carch.hidden = cfg.critic_hidden;
  carch.head_hidden = cfg.critic_hidden;
  carch.layers = cfg.critic_layers;
  carch.outputs = 1;
  res.critic = GnnModel(carch, derive_seed(cfg.seed, 2, cls));
  Generator& gen = res.generator;
  GnnModel& critic = res.critic;
  const Critic critic_fn = [&critic](const GraphBatch& b) { return critic.forward(b).logits; };

  Adam gopt(gen.parameters(), AdamConfig{cfg.generator_lr, cfg.adam_beta1, cfg.adam_beta2, 1e-8, 0.0});
  Adam copt(critic.parameters(), AdamConfig{cfg.critic_lr, cfg.adam_beta1, cfg.adam_beta2, 1e-8, 0.0});
  Rng rng(derive_seed(cfg.seed, 3, cls));
  std::uniform_int_distribution<std::size_t> pick(0, real.size() - 1);
  const int bsz = cfg.batch_size;

  HarvestRecord last;
  for (int t = 0; t < cfg.iterations; ++t) {
    const double lambda = lambda_schedule(t, cfg);
    const bool hard = t >= cfg.hard_from * cfg.iterations;
    try {
      for (int k = 0; k < cfg.critic_steps; ++k) {
        GraphBatch fake;
        {
          ad::NoGradGuard ng;
          auto logits = gen.forward(ad::constant(sample_latent(bsz, cfg.latent_dim, rng)));
          fake = discretize(garch, logits, sample_noise(garch, bsz, rng), cfg.tau, hard).batch;
        }
        std::vector<Graph> sel;
        for (int i = 0; i < bsz; ++i) sel.push_back(real[pick(rng)]);
        GraphBatch rb = make_batch(sel, n, ec, nc);
        auto cl = discriminator_loss(critic_fn, rb, fake, cfg.gp_alpha, rng);
        const double v = cl.total.item();
        if (!finite(v)) throw NumericError("critic loss is not finite");
        copt.step(ad::grad(cl.total, critic.parameters()));
        last.critic_loss = v;
        last.wasserstein = cl.wasserstein;
        last.penalty = cl.penalty;
      }

      critic.set_trainable(false);
      auto logits = gen.forward(ad::constant(sample_latent(bsz, cfg.latent_dim, rng)));
      auto sample = discretize(garch, logits, sample_noise(garch, bsz, rng), cfg.tau, hard);
      ad::Var l_gan = gan_generator_loss(critic.forward(sample.batch).logits);
      ad::Var l_gnn = gnn_loss(gnn.forward(sample.batch), cls, cfg.gnn_loss);
      ad::Var total = combined_generator_loss(l_gan, l_gnn, lambda);
      critic.set_trainable(true);
      last.gan_loss = l_gan.item();
      last.gnn_loss = l_gnn.item();
      last.generator_loss = total.item();
      if (!finite(last.generator_loss)) throw NumericError("generator loss is not finite");
      gopt.step(ad::grad(total, gen.parameters()));
    } catch (const NumericError& e) {
      critic.set_trainable(true);
      res.aborted = true;
      res.diagnostics = "iteration " + std::to_string(t) + " (lambda " + std::to_string(lambda) + "): " + e.what() +
                        "; last critic loss " + std::to_string(last.critic_loss) + ", generator loss " +
                        std::to_string(last.generator_loss);
      break;
    }

    if ((t + 1) % cfg.harvest_every != 0 && t + 1 != cfg.iterations) continue;
    HarvestRecord rec = last;
    rec.candidates.clear();
    rec.iteration = t + 1;
    rec.lambda = lambda;
    std::vector<Graph> graphs;
    {
      ad::NoGradGuard ng;
      const int hs = cfg.harvest_samples;
      auto logits = gen.forward(ad::constant(sample_latent(hs, cfg.latent_dim, rng)));
      graphs = hard_graphs(garch, discretize(garch, logits, sample_noise(garch, hs, rng), cfg.tau, true));
    }
    rec.sampled = static_cast<int>(graphs.size());
    std::vector<Graph> kept;
    std::vector<int> index;
    for (std::size_t i = 0; i < graphs.size(); ++i)
      if (graphs[i].node_count > 0) {
        graphs[i].class_label = cls;
        kept.push_back(std::move(graphs[i]));
        index.push_back(static_cast<int>(i));
      }
    auto scores = score_candidates(ctx, kept, &res.warnings);
    for (std::size_t i = 0; i < kept.size(); ++i) {
      ExplanationCandidate c;
      c.scores = scores[i];
      c.passed = score_filter(kept[i], scores[i], ctx.stats, cfg.filter_cfg);
      c.iteration = rec.iteration;
      c.sample = index[i];
      c.seed = cfg.seed;
      c.graph = std::move(kept[i]);
      rec.passed += c.passed;
      if (c.passed || !cfg.filter) rec.candidates.push_back(std::move(c));
    }
    res.sampled += rec.sampled;
    res.passed += rec.passed;
    res.candidates.insert(res.candidates.end(), rec.candidates.begin(), rec.candidates.end());
    res.harvests.push_back(std::move(rec));
  }
  std::sort(res.warnings.begin(), res.warnings.end());
  res.warnings.erase(std::unique(res.warnings.begin(), res.warnings.end()), res.warnings.end());
  res.pass_rate = res.sampled > 0 ? static_cast<double>(res.passed) / res.sampled : 0.0;
  res.degenerate = res.pass_rate < cfg.degenerate_pass_rate;
  critic.set_trainable(false);
  gen.set_trainable(false);
  return res;
}

std::vector<ExplanationCandidate> select_explanations(std::vector<ExplanationCandidate> c, int top_n) {
  std::stable_sort(c.begin(), c.end(), [](const ExplanationCandidate& a, const ExplanationCandidate& b) {
    if (a.scores.v != b.scores.v) return a.scores.v > b.scores.v;
    if (a.scores.p != b.scores.p) return a.scores.p > b.scores.p;
    return a.iteration < b.iteration;
  });
  if (top_n >= 0 && static_cast<std::size_t>(top_n) < c.size()) c.resize(top_n);
  return c;
}

void save_generator(const std::filesystem::path& path, const Generator& gen, std::uint64_t seed) {
  const auto& a = gen.arch();
  json params = json::array();
  for (std::size_t i = 0; i < gen.parameters().size(); ++i) {
    const Matrix& m = gen.parameters()[i].value();
    params.push_back({{"name", gen.parameter_names()[i]}, {"rows", m.rows}, {"cols", m.cols}, {"data", m.data}});
  }
  json doc = {{"arch",
               {{"latent_dim", a.latent_dim},
                {"n_max", a.n_max},
                {"edge_categories", a.edge_categories},
                {"node_categories", a.node_categories},
                {"hidden", a.hidden}}},
              {"params", params},
              {"train_meta", {{"seed", seed}}}};
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << doc.dump() << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

Generator load_generator(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    json doc = json::parse(in);
    const json& ja = doc.at("arch");
    GeneratorArch a{ja.at("latent_dim").get<int>(), ja.at("n_max").get<int>(), ja.at("edge_categories").get<int>(),
                    ja.at("node_categories").get<int>(), ja.at("hidden").get<std::vector<int>>()};
    Generator gen(a, 0);
    const json& jp = doc.at("params");
    if (jp.size() != gen.parameters().size()) throw DataError(path.string() + ": parameter count mismatch");
    std::vector<Matrix> values;
    for (std::size_t i = 0; i < jp.size(); ++i) {
      Matrix m(jp[i].at("rows").get<int>(), jp[i].at("cols").get<int>());
      auto data = jp[i].at("data").get<std::vector<double>>();
      if (data.size() != m.size()) throw DataError(path.string() + ": bad data length");
      m.data = std::move(data);
      values.push_back(std::move(m));
    }
    gen.assign(values);
    gen.set_trainable(false);
    return gen;
  } catch (const json::exception& e) {
    throw ParseError(e.what(), 1, path.string());
  } catch (const ShapeError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace gx
