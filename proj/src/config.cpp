#include "gx/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "gx/graph_io.hpp"
#include "json.hpp"

namespace gx {

using nlohmann::json;

namespace {

// Field visitors: one list per struct drives both reading and writing.

template <class V>
void fields(V& v, ShapeConfig& c) {
  v("graphs_per_class", c.graphs_per_class);
  v("lollipop_clique_min", c.lollipop_clique_min);
  v("lollipop_clique_max", c.lollipop_clique_max);
  v("lollipop_path_min", c.lollipop_path_min);
  v("lollipop_path_max", c.lollipop_path_max);
  v("wheel_rim_min", c.wheel_rim_min);
  v("wheel_rim_max", c.wheel_rim_max);
  v("grid_side_min", c.grid_side_min);
  v("grid_side_max", c.grid_side_max);
  v("star_leaves_min", c.star_leaves_min);
  v("star_leaves_max", c.star_leaves_max);
}

template <class V>
void fields(V& v, MotifConfig& c) {
  v("graphs_per_class", c.graphs_per_class);
  v("base_nodes_min", c.base_nodes_min);
  v("base_nodes_max", c.base_nodes_max);
  v("base_degree", c.base_degree);
  v("bridge_edges", c.bridge_edges);
  v("background_class", c.background_class);
}

template <class V>
void fields(V& v, CyclicityConfig& c) {
  v("graphs_per_class", c.graphs_per_class);
  v("nodes_min", c.nodes_min);
  v("nodes_max", c.nodes_max);
  v("cycle_min", c.cycle_min);
  v("cycle_max", c.cycle_max);
}

template <class V>
void fields(V& v, DatasetSpec& c) {
  v("kind", c.kind);
  v("path", c.path);
  v.object("shape", c.shape);
  v.object("motif", c.motif);
  v.object("cyclicity", c.cyclicity);
}

template <class V>
void fields(V& v, TrainConfig& c) {
  v("hidden", c.hidden);
  v("layers", c.layers);
  v("head_hidden", c.head_hidden);
  v("walk_length", c.walk_length);
  v("epochs", c.epochs);
  v("batch_size", c.batch_size);
  v("lr", c.lr);
  v("lr_floor", c.lr_floor);
  v("weight_decay", c.weight_decay);
  v("test_fraction", c.test_fraction);
  v("verbose", c.verbose);
}

template <class V>
void fields(V& v, PruneConfig& c) {
  v("prune_fraction", c.prune_fraction);
  v("max_success", c.max_success);
  v("max_fail", c.max_fail);
  v("target_granularity", c.target_granularity);
}

template <class V>
void fields(V& v, FilterConfig& c) {
  v("v_threshold", c.v_threshold);
  v("degree_sigma_multiplier", c.degree_sigma_multiplier);
  v("max_degree_rule", c.max_degree_rule);
  v("max_degree", c.max_degree);
}

template <class V>
void fields(V& v, ExplainerConfig& c) {
  v("n_max", c.n_max);
  v("latent_dim", c.latent_dim);
  v("generator_hidden", c.generator_hidden);
  v("critic_hidden", c.critic_hidden);
  v("critic_layers", c.critic_layers);
  v("lambda_min", c.lambda_min);
  v("lambda_max", c.lambda_max);
  v("p_ramp", c.p_ramp);
  v("k_sched", c.k_sched);
  v("iterations", c.iterations);
  v("batch_size", c.batch_size);
  v("critic_steps", c.critic_steps);
  v("gp_alpha", c.gp_alpha);
  v("tau", c.tau);
  v("hard_from", c.hard_from);
  v("gnn_loss", c.gnn_loss);
  v("generator_lr", c.generator_lr);
  v("critic_lr", c.critic_lr);
  v("adam_beta1", c.adam_beta1);
  v("adam_beta2", c.adam_beta2);
  v("harvest_every", c.harvest_every);
  v("harvest_samples", c.harvest_samples);
  v("filter", c.filter);
  v.object("filter_config", c.filter_cfg);
  v("degenerate_pass_rate", c.degenerate_pass_rate);
}

template <class V>
void fields(V& v, RunConfig& c) {
  v("seed", c.seed);
  v.object("dataset", c.dataset);
  v.object("train", c.train);
  v.object("prune", c.prune);
  v.object("explainer", c.explainer);
  v("target_class", c.target_class);
  v("top_n", c.top_n);
  v("data", c.data);
  v("model", c.model);
  v("pruned", c.pruned);
}

const char* loss_name(GnnLossKind k) { return k == GnnLossKind::kCrossEntropy ? "cross_entropy" : "logits"; }

class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  template <class T>
  void operator()(const char* key, T& field) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      read(*it, field);
    } catch (const json::exception& e) {
      throw ConfigError(path_ + "." + key + ": " + e.what());
    }
  }

  template <class T>
  void object(const char* key, T& sub) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    Reader r(*it, path_ + "." + key);
    fields(r, sub);
    r.finish();
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(path_ + ": unknown key '" + it.key() + "'");
  }

 private:
  template <class T>
  static void read(const json& j, T& field) {
    field = j.get<T>();
  }
  template <class T>
  static void read(const json& j, std::optional<T>& field) {
    if (j.is_null())
      field.reset();
    else
      field = j.get<T>();
  }
  static void read(const json& j, int& field) {
    if (!j.is_number_integer()) throw ConfigError("expected an integer");
    field = j.get<int>();
  }
  static void read(const json& j, GnnLossKind& field) {
    const auto s = j.get<std::string>();
    if (s == "cross_entropy")
      field = GnnLossKind::kCrossEntropy;
    else if (s == "logits")
      field = GnnLossKind::kLogits;
    else
      throw ConfigError("gnn_loss must be cross_entropy or logits");
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

class Writer {
 public:
  json out = json::object();

  template <class T>
  void operator()(const char* key, const T& field) {
    out[key] = field;
  }
  template <class T>
  void operator()(const char* key, const std::optional<T>& field) {
    out[key] = field ? json(*field) : json(nullptr);
  }
  void operator()(const char* key, const GnnLossKind& field) { out[key] = loss_name(field); }

  template <class T>
  void object(const char* key, T& sub) {
    Writer w;
    fields(w, sub);
    out[key] = std::move(w.out);
  }
};

}  // namespace

RunConfig parse_run_config(const std::string& text, const std::string& source) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(source + ": " + e.what());
  }
  RunConfig cfg;
  try {
    Reader r(j, source);
    fields(r, cfg);
    r.finish();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(source + ": " + e.what());
  }
  validate_run_config(cfg);
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), path.string());
}

std::string run_config_json(const RunConfig& cfg) {
  RunConfig copy = cfg;
  Writer w;
  fields(w, copy);
  return w.out.dump();
}

std::string config_hash(const RunConfig& cfg) { return text_hash(run_config_json(cfg)); }

void validate_run_config(const RunConfig& cfg) {
  static const std::set<std::string> kinds = {"shape", "motif", "cyclicity", "mutag", "file"};
  if (!kinds.count(cfg.dataset.kind)) throw ConfigError("dataset.kind '" + cfg.dataset.kind + "' is not supported");
  if ((cfg.dataset.kind == "mutag" || cfg.dataset.kind == "file") && cfg.dataset.path.empty())
    throw ConfigError("dataset.path is required for kind " + cfg.dataset.kind);
  if (cfg.target_class < 0) throw ConfigError("target_class must be >= 0");
  if (cfg.top_n < 1) throw ConfigError("top_n must be >= 1");
  const auto& t = cfg.train;
  if (t.epochs < 1 || t.batch_size < 1) throw ConfigError("train: epochs and batch_size must be >= 1");
  if (!(t.lr > 0.0)) throw ConfigError("train: lr must be > 0");
  if (!(t.test_fraction >= 0.0 && t.test_fraction < 1.0)) throw ConfigError("train: test_fraction not in [0,1)");
  validate_prune_config(cfg.prune);
  validate_explainer_config(cfg.explainer);
}

GraphDataset make_dataset(const DatasetSpec& spec, std::uint64_t seed) {
  if (spec.kind == "shape") return gen_shape_dataset(spec.shape, seed);
  if (spec.kind == "motif") return gen_motif_dataset(spec.motif, seed);
  if (spec.kind == "cyclicity") return gen_cyclicity_dataset(spec.cyclicity, seed);
  if (spec.kind == "mutag") return load_mutag(spec.path);
  if (spec.kind == "file") return load_dataset(spec.path);
  throw ConfigError("dataset.kind '" + spec.kind + "' is not supported");
}

}  // namespace gx
