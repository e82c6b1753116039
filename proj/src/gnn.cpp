#include "gx/gnn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <numeric>

#include "gx/graph_io.hpp"
#include "gx/rng.hpp"
#include "json.hpp"

namespace gx {

using nlohmann::json;

namespace {

constexpr double kPoolEps = 1e-9;

Matrix glorot(int fan_in, int fan_out, Rng& rng) {
  const double a = std::sqrt(6.0 / (fan_in + fan_out));
  std::uniform_real_distribution<double> u(-a, a);
  Matrix m(fan_in, fan_out);
  for (auto& x : m.data) x = u(rng);
  return m;
}

int argmax(const double* p, int n) { return static_cast<int>(std::max_element(p, p + n) - p); }

}  // namespace

GraphBatch make_batch(std::span<const Graph> graphs, int n, int edge_categories, int node_categories) {
  GraphBatch b;
  b.batch = static_cast<int>(graphs.size());
  b.n = n;
  std::vector<Matrix> adj(edge_categories, Matrix(b.batch * n, n));
  Matrix feat(b.batch * n, node_categories);
  for (int k = 0; k < b.batch; ++k) {
    const Graph& g = graphs[k];
    if (g.node_count > n)
      throw SizeError("make_batch: graph with " + std::to_string(g.node_count) + " nodes exceeds n=" +
                      std::to_string(n));
    const int off = k * n;
    for (int i = 0; i < g.node_count; ++i) {
      const int l = g.node_labels[i];
      if (l < 0 || l >= node_categories) throw EncodingError("make_batch: node label out of range");
      feat(off + i, l) = 1.0;
    }
    for (const auto& e : g.edges) {
      if (e.label < 0 || e.label >= edge_categories) throw EncodingError("make_batch: edge label out of range");
      adj[e.label](off + e.u, e.v) = 1.0;
      adj[e.label](off + e.v, e.u) = 1.0;
    }
  }
  for (auto& m : adj) b.adjacency.push_back(ad::constant(std::move(m)));
  b.features = ad::constant(std::move(feat));
  return b;
}

GraphBatch batch_from_dense(std::span<const ContinuousGraph> graphs) {
  if (graphs.empty()) throw ShapeError("batch_from_dense: empty batch");
  const int n = graphs[0].n_max;
  const int ch = graphs[0].edge_channels;
  const int nc = graphs[0].node_categories;
  GraphBatch b;
  b.batch = static_cast<int>(graphs.size());
  b.n = n;
  std::vector<Matrix> adj(ch - 1, Matrix(b.batch * n, n));
  Matrix feat(b.batch * n, nc);
  for (int k = 0; k < b.batch; ++k) {
    const auto& cg = graphs[k];
    if (cg.n_max != n || cg.edge_channels != ch || cg.node_categories != nc)
      throw ShapeError("batch_from_dense: inconsistent graph shapes");
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j)
        for (int c = 1; c < ch; ++c) adj[c - 1](k * n + i, j) = cg.adj(i, j, c);
      for (int f = 0; f < nc; ++f) feat(k * n + i, f) = cg.feat(i, f);
    }
  }
  for (auto& m : adj) b.adjacency.push_back(ad::constant(std::move(m)));
  b.features = ad::constant(std::move(feat));
  return b;
}

void validate_arch(const GnnArch& a) {
  if (a.node_categories < 1 || a.edge_categories < 1) throw ConfigError("gnn: category counts must be >= 1");
  if (a.hidden < 1 || a.head_hidden < 1 || a.layers < 1 || a.outputs < 1)
    throw ConfigError("gnn: hidden, head_hidden, layers and outputs must be >= 1");
  if (a.walk_length > 4) throw ConfigError("gnn: walk_length must be <= 4");
}

GnnModel::GnnModel(const GnnArch& arch, std::uint64_t seed) : arch_(arch) {
  validate_arch(arch);
  Rng rng(derive_seed(seed, 0x6e6e));
  auto add = [&](std::string name, Matrix m) {
    params_.push_back(ad::parameter(std::move(m)));
    names_.push_back(std::move(name));
  };
  int in = arch.node_categories;
  for (int l = 0; l < arch.layers; ++l) {
    const std::string p = "layer" + std::to_string(l) + ".";
    add(p + "w_self", glorot(in, arch.hidden, rng));
    for (int c = 0; c < arch.edge_categories; ++c) add(p + "w_edge" + std::to_string(c), glorot(in, arch.hidden, rng));
    add(p + "bias", Matrix(1, arch.hidden));
    if (l == 0)
      for (int k = 2; k <= arch.walk_length; ++k) add(p + "w_walk" + std::to_string(k), glorot(1, arch.hidden, rng));
    in = arch.hidden;
  }
  add("head.w1", glorot(arch.hidden, arch.head_hidden, rng));
  add("head.b1", Matrix(1, arch.head_hidden));
  add("head.w2", glorot(arch.head_hidden, arch.outputs, rng));
  add("head.b2", Matrix(1, arch.outputs));
}

GnnOutput GnnModel::forward(const GraphBatch& batch) const {
  if (params_.empty()) throw std::logic_error("GnnModel::forward: uninitialised model");
  const int rows = batch.batch * batch.n;
  if (static_cast<int>(batch.adjacency.size()) != arch_.edge_categories)
    throw ShapeError("gnn: expected " + std::to_string(arch_.edge_categories) + " edge channels, got " +
                     std::to_string(batch.adjacency.size()));
  if (batch.features.rows() != rows || batch.features.cols() != arch_.node_categories)
    throw ShapeError("gnn: feature matrix " + batch.features.value().shape_str() + " does not match batch");
  for (const auto& a : batch.adjacency)
    if (a.rows() != rows || a.cols() != batch.n) throw ShapeError("gnn: adjacency " + a.value().shape_str());

  std::vector<ad::Var> walks;
  if (arch_.walk_length >= 2) {
    ad::Var s = batch.adjacency[0];
    for (int c = 1; c < arch_.edge_categories; ++c) s = ad::add(s, batch.adjacency[c]);
    ad::Var st = ad::block_transpose(s, batch.batch);
    walks.push_back(ad::row_sum(ad::mul(s, st)));
    if (arch_.walk_length >= 3) {
      ad::Var s2 = ad::bmm(s, s, batch.batch);
      walks.push_back(ad::row_sum(ad::mul(s2, st)));
      if (arch_.walk_length >= 4) walks.push_back(ad::row_sum(ad::mul(s2, ad::block_transpose(s2, batch.batch))));
    }
    for (auto& w : walks) w = ad::log(ad::shift(w, 1.0));
  }

  std::size_t k = 0;
  ad::Var h = batch.features;
  for (int l = 0; l < arch_.layers; ++l) {
    ad::Var z = ad::matmul(h, params_[k++]);
    for (int c = 0; c < arch_.edge_categories; ++c)
      z = ad::add(z, ad::bmm(batch.adjacency[c], ad::matmul(h, params_[k++]), batch.batch));
    const ad::Var& bias = params_[k++];
    if (l == 0)
      for (const auto& w : walks) z = ad::add(z, ad::matmul(w, params_[k++]));
    h = ad::tanh(ad::add_bias(z, bias));
  }

  // Masked mean pooling; a node's weight is the mass of its feature row.
  ad::Var mask = ad::row_sum(batch.features);
  ad::Var pooled = ad::block_sum(ad::mul(h, ad::broadcast_cols(mask, arch_.hidden)), batch.batch);
  ad::Var denom = ad::shift(ad::block_sum(mask, batch.batch), kPoolEps);
  ad::Var emb = ad::div(pooled, ad::broadcast_cols(denom, arch_.hidden));

  ad::Var hid = ad::tanh(ad::add_bias(ad::matmul(emb, params_[k]), params_[k + 1]));
  ad::Var logits = ad::add_bias(ad::matmul(hid, params_[k + 2]), params_[k + 3]);
  return {logits, ad::softmax_rows(logits), emb};
}

std::size_t GnnModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value().size();
  return n;
}

void GnnModel::set_trainable(bool on) {
  for (auto& p : params_) p.set_requires_grad(on);
}

GnnModel GnnModel::clone() const {
  GnnModel m;
  m.arch_ = arch_;
  m.names_ = names_;
  for (const auto& p : params_) {
    m.params_.push_back(ad::parameter(p.value()));
    m.params_.back().set_requires_grad(p.requires_grad());
  }
  return m;
}

void GnnModel::assign(const std::vector<Matrix>& values) {
  if (values.size() != params_.size()) throw ShapeError("GnnModel::assign: parameter count mismatch");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!values[i].same_shape(params_[i].value()))
      throw ShapeError("GnnModel::assign: shape mismatch for " + names_[i]);
    params_[i].mutable_value() = values[i];
  }
}

std::vector<GraphEval> evaluate_graphs(const GnnModel& model, std::span<const Graph> graphs, int chunk) {
  ad::NoGradGuard guard;
  const auto& a = model.arch();
  std::vector<GraphEval> out(graphs.size());
  chunk = std::max(chunk, 1);
  for (std::size_t s = 0; s < graphs.size(); s += chunk) {
    const std::size_t e = std::min(graphs.size(), s + chunk);
    auto part = graphs.subspan(s, e - s);
    int n = 1;
    for (const auto& g : part) n = std::max(n, g.node_count);
    auto res = model.forward(make_batch(part, n, a.edge_categories, a.node_categories));
    const Matrix& l = res.logits.value();
    const Matrix& p = res.probs.value();
    const Matrix& m = res.embedding.value();
    for (std::size_t i = 0; i < part.size(); ++i) {
      const int r = static_cast<int>(i);
      out[s + i].logits.assign(l.row(r), l.row(r) + l.cols);
      out[s + i].probs.assign(p.row(r), p.row(r) + p.cols);
      out[s + i].embedding.assign(m.row(r), m.row(r) + m.cols);
    }
  }
  return out;
}

std::vector<double> predict_proba(const GnnModel& model, const Graph& g) {
  if (g.node_count < 1) throw GraphError("predict_proba: empty graph");
  return evaluate_graphs(model, std::span<const Graph>(&g, 1))[0].probs;
}

std::vector<double> embed(const GnnModel& model, const Graph& g) {
  if (g.node_count < 1) throw GraphError("embed: empty graph");
  return evaluate_graphs(model, std::span<const Graph>(&g, 1))[0].embedding;
}

double log_proba(std::span<const double> logits, int cls) {
  if (cls < 0 || cls >= static_cast<int>(logits.size())) throw ShapeError("log_proba: class out of range");
  double rest = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k)
    if (static_cast<int>(k) != cls) rest += std::exp(logits[k] - logits[cls]);
  return -std::log1p(rest);
}

std::vector<double> class_mean_embedding(const GnnModel& model, const GraphDataset& ds, int cls) {
  auto graphs = ds.graphs_of_class(cls);
  if (graphs.empty()) throw InsufficientDataError("class_mean_embedding: class " + std::to_string(cls) + " is empty");
  auto evals = evaluate_graphs(model, graphs);
  std::vector<double> mean(evals[0].embedding.size(), 0.0);
  for (const auto& e : evals)
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += e.embedding[i];
  for (auto& x : mean) x /= static_cast<double>(evals.size());
  return mean;
}

std::vector<double> per_class_accuracy(const GnnModel& model, std::span<const Graph> graphs, int num_classes) {
  std::vector<double> hit(num_classes, 0.0), total(num_classes, 0.0);
  auto evals = evaluate_graphs(model, graphs);
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    const int y = graphs[i].class_label;
    if (y < 0 || y >= num_classes) continue;
    total[y] += 1;
    if (argmax(evals[i].probs.data(), static_cast<int>(evals[i].probs.size())) == y) hit[y] += 1;
  }
  std::vector<double> acc(num_classes);
  for (int c = 0; c < num_classes; ++c)
    acc[c] = total[c] > 0 ? hit[c] / total[c] : std::numeric_limits<double>::quiet_NaN();
  return acc;
}

namespace {

double accuracy(const GnnModel& model, std::span<const Graph> graphs) {
  if (graphs.empty()) return std::numeric_limits<double>::quiet_NaN();
  auto evals = evaluate_graphs(model, graphs);
  int hit = 0;
  for (std::size_t i = 0; i < graphs.size(); ++i)
    hit += argmax(evals[i].probs.data(), static_cast<int>(evals[i].probs.size())) == graphs[i].class_label;
  return static_cast<double>(hit) / static_cast<double>(graphs.size());
}

}  // namespace

TrainedGnn train_gnn(const GraphDataset& ds, const TrainConfig& cfg) {
  if (ds.graphs.empty()) throw InsufficientDataError("train_gnn: empty dataset");
  if (cfg.epochs < 1 || cfg.batch_size < 1) throw ConfigError("train_gnn: epochs and batch_size must be >= 1");
  if (!(cfg.test_fraction >= 0.0 && cfg.test_fraction < 1.0)) throw ConfigError("train_gnn: test_fraction not in [0,1)");
  if (!(cfg.lr > 0.0)) throw ConfigError("train_gnn: lr must be > 0");
  if (!(cfg.lr_floor >= 0.0 && cfg.lr_floor <= 1.0)) throw ConfigError("train_gnn: lr_floor not in [0,1]");
  ds.validate();

  TrainedGnn out;
  TrainReport& rep = out.report;
  rep.seed = cfg.seed;
  rep.dataset_hash = dataset_hash(ds);

  GnnArch arch;
  arch.node_categories = ds.node_categories();
  arch.edge_categories = ds.edge_categories();
  arch.hidden = cfg.hidden;
  arch.layers = cfg.layers;
  arch.head_hidden = cfg.head_hidden;
  arch.walk_length = cfg.walk_length;
  arch.outputs = std::max(ds.num_classes(), 1);
  out.model = GnnModel(arch, cfg.seed);
  GnnModel& model = out.model;

  // Stratified split.
  Rng rng(derive_seed(cfg.seed, 0x5b11));
  int populated = 0;
  for (int c = 0; c < ds.num_classes(); ++c) {
    auto idx = ds.indices_of_class(c);
    if (idx.empty()) continue;
    ++populated;
    std::shuffle(idx.begin(), idx.end(), rng);
    int n_test = static_cast<int>(std::lround(cfg.test_fraction * static_cast<double>(idx.size())));
    if (cfg.test_fraction > 0 && n_test == 0 && idx.size() >= 2) n_test = 1;
    rep.test_indices.insert(rep.test_indices.end(), idx.begin(), idx.begin() + n_test);
    rep.train_indices.insert(rep.train_indices.end(), idx.begin() + n_test, idx.end());
  }
  if (populated <= 1) rep.warnings.push_back("dataset has a single populated class; accuracy is trivially 1");
  if (rep.test_indices.empty()) rep.warnings.push_back("empty test split; test metrics use the training graphs");

  std::vector<Graph> train, test;
  for (int i : rep.train_indices) train.push_back(ds.graphs[i]);
  for (int i : rep.test_indices) test.push_back(ds.graphs[i]);
  const std::vector<Graph>& eval_set = test.empty() ? train : test;

  Adam opt(model.parameters(), AdamConfig{cfg.lr, 0.9, 0.999, 1e-8, cfg.weight_decay});
  std::vector<int> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  const int classes = arch.outputs;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double frac = cfg.epochs > 1 ? static_cast<double>(epoch) / (cfg.epochs - 1) : 0.0;
    opt.set_lr(cfg.lr * (cfg.lr_floor + (1.0 - cfg.lr_floor) * 0.5 * (1.0 + std::cos(M_PI * frac))));
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    int hits = 0;
    for (std::size_t s = 0; s < order.size(); s += cfg.batch_size) {
      const std::size_t e = std::min(order.size(), s + cfg.batch_size);
      std::vector<Graph> mb;
      int n = 1;
      for (std::size_t i = s; i < e; ++i) {
        mb.push_back(train[order[i]]);
        n = std::max(n, mb.back().node_count);
      }
      const int bsz = static_cast<int>(mb.size());
      auto res = model.forward(make_batch(mb, n, arch.edge_categories, arch.node_categories));
      Matrix onehot(bsz, classes);
      for (int k = 0; k < bsz; ++k) onehot(k, mb[k].class_label) = 1.0;
      ad::Var loss = ad::scale(ad::sum_all(ad::mul(ad::log_softmax_rows(res.logits), ad::constant(onehot))),
                               -1.0 / bsz);
      const double lv = loss.item();
      if (!std::isfinite(lv))
        throw NumericError("train_gnn: non-finite loss at epoch " + std::to_string(epoch) + ", batch starting at " +
                           std::to_string(s));
      opt.step(ad::grad(loss, model.parameters()));
      loss_sum += lv * bsz;
      const Matrix& p = res.probs.value();
      for (int k = 0; k < bsz; ++k) hits += argmax(p.row(k), classes) == mb[k].class_label;
    }
    model.set_trainable(false);
    rep.epoch_loss.push_back(loss_sum / static_cast<double>(train.size()));
    rep.train_accuracy.push_back(static_cast<double>(hits) / static_cast<double>(train.size()));
    rep.test_accuracy.push_back(accuracy(model, eval_set));
    model.set_trainable(true);
    if (cfg.verbose)
      std::cerr << "epoch " << epoch << " loss " << rep.epoch_loss.back() << " train_acc " << rep.train_accuracy.back()
                << " test_acc " << rep.test_accuracy.back() << '\n';
  }
  model.set_trainable(false);
  rep.final_test_accuracy = rep.test_accuracy.back();
  rep.final_test_accuracy_per_class = per_class_accuracy(model, eval_set, ds.num_classes());
  return out;
}

void save_checkpoint(const std::filesystem::path& path, const GnnModel& model, const CheckpointMeta& meta) {
  const auto& a = model.arch();
  json params = json::array();
  for (std::size_t i = 0; i < model.parameters().size(); ++i) {
    const Matrix& m = model.parameters()[i].value();
    params.push_back({{"name", model.parameter_names()[i]}, {"rows", m.rows}, {"cols", m.cols}, {"data", m.data}});
  }
  json doc = {{"arch",
               {{"node_categories", a.node_categories},
                {"edge_categories", a.edge_categories},
                {"hidden", a.hidden},
                {"layers", a.layers},
                {"head_hidden", a.head_hidden},
                {"outputs", a.outputs},
                {"walk_length", a.walk_length}}},
              {"params", params},
              {"train_meta", {{"seed", meta.seed}, {"dataset_hash", meta.dataset_hash}}}};
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << doc.dump() << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

GnnModel load_checkpoint(const std::filesystem::path& path, CheckpointMeta* meta) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in);
    GnnArch a;
    const json& ja = doc.at("arch");
    a.node_categories = ja.at("node_categories").get<int>();
    a.edge_categories = ja.at("edge_categories").get<int>();
    a.hidden = ja.at("hidden").get<int>();
    a.layers = ja.at("layers").get<int>();
    a.head_hidden = ja.at("head_hidden").get<int>();
    a.outputs = ja.at("outputs").get<int>();
    a.walk_length = ja.at("walk_length").get<int>();
    try {
      validate_arch(a);
    } catch (const ConfigError& e) {
      throw DataError(path.string() + ": " + e.what());
    }
    GnnModel model(a, 0);
    const json& jp = doc.at("params");
    if (jp.size() != model.parameters().size()) throw DataError(path.string() + ": parameter count mismatch");
    std::vector<Matrix> values;
    for (std::size_t i = 0; i < jp.size(); ++i) {
      if (jp[i].at("name").get<std::string>() != model.parameter_names()[i])
        throw DataError(path.string() + ": unexpected parameter " + jp[i].at("name").get<std::string>());
      Matrix m(jp[i].at("rows").get<int>(), jp[i].at("cols").get<int>());
      auto data = jp[i].at("data").get<std::vector<double>>();
      if (data.size() != m.size()) throw DataError(path.string() + ": bad data length for " + model.parameter_names()[i]);
      m.data = std::move(data);
      values.push_back(std::move(m));
    }
    try {
      model.assign(values);
    } catch (const ShapeError& e) {
      throw DataError(path.string() + ": " + e.what());
    }
    model.set_trainable(false);
    if (meta) {
      const json& jm = doc.at("train_meta");
      meta->seed = jm.at("seed").get<std::uint64_t>();
      meta->dataset_hash = jm.at("dataset_hash").get<std::string>();
    }
    return model;
  } catch (const json::exception& e) {
    throw ParseError(e.what(), 1, path.string());
  }
}

}  // namespace gx
