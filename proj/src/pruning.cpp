#include "gx/pruning.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gx/graph_io.hpp"
#include "gx/metrics.hpp"
#include "json.hpp"

namespace gx {

void validate_prune_config(const PruneConfig& cfg) {
  if (!(cfg.prune_fraction > 0.0 && cfg.prune_fraction < 1.0)) throw ConfigError("prune: prune_fraction must be in (0, 1)");
  if (cfg.max_success < 0 || cfg.max_fail < 1) throw ConfigError("prune: need max_success >= 0 and max_fail >= 1");
  if (cfg.target_granularity && !(*cfg.target_granularity >= 0.0 && *cfg.target_granularity < 1.0))
    throw ConfigError("prune: target_granularity must be in [0, 1)");
}

Graph prune_graph(const Graph& g, const GnnModel& model, const PruneConfig& cfg, Rng& rng, double reference_nodes,
                  std::vector<std::string>* warnings) {
  validate_prune_config(cfg);
  const int y = g.class_label;
  if (y < 0 || y >= model.arch().outputs) throw ConfigError("prune: class label outside the model outputs");
  Graph out = g;
  out.meta.pruned_from = graph_hash(g);
  if (g.node_count < 2) {
    if (warnings) warnings->push_back("prune: graph with fewer than 2 nodes left unchanged");
    return out;
  }
  auto score = [&](const Graph& h) {
    return log_proba(evaluate_graphs(model, std::span<const Graph>(&h, 1))[0].logits, y);
  };
  Graph cur = g;
  double p_cur = score(cur);
  int success = 0, fail = 0;
  while (success < cfg.max_success && fail < cfg.max_fail) {
    if (cfg.target_granularity && reference_nodes > 0.0 &&
        granularity(cur.node_count, reference_nodes) >= *cfg.target_granularity)
      break;
    const int n = cur.node_count;
    const int k = static_cast<int>(std::ceil(cfg.prune_fraction * n));
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<int> keep(order.begin() + std::min(k, n), order.end());
    std::sort(keep.begin(), keep.end());
    Graph cand = drop_isolated_nodes(induced_subgraph(cur, keep));
    if (cand.edges.empty()) {
      if (warnings) warnings->push_back("prune: removal would empty the graph; kept the last accepted graph");
      break;
    }
    const double p_new = score(cand);
    if (p_new >= p_cur) {
      cur = std::move(cand);
      p_cur = p_new;
      ++success;
    } else {
      ++fail;
    }
  }
  cur.meta.pruned_from = out.meta.pruned_from;
  return cur;
}

GraphDataset prune_dataset(const GraphDataset& ds, const GnnModel& model, const PruneConfig& cfg, std::uint64_t seed,
                           std::vector<std::string>* warnings) {
  validate_prune_config(cfg);
  ds.validate();
  std::vector<double> ref(ds.num_classes(), 0.0);
  for (int c = 0; c < ds.num_classes(); ++c) {
    auto idx = ds.indices_of_class(c);
    double s = 0;
    for (int i : idx) s += ds.graphs[i].node_count;
    ref[c] = idx.empty() ? 0.0 : s / static_cast<double>(idx.size());
  }

  GraphDataset out;
  out.name = ds.name + "_pruned";
  out.class_names = ds.class_names;
  out.node_category_names = ds.node_category_names;
  out.edge_category_names = ds.edge_category_names;
  out.graphs.resize(ds.graphs.size());
  const int total = static_cast<int>(ds.graphs.size());
  std::vector<std::vector<std::string>> warn(total);
  std::vector<std::string> errors(total);
#pragma omp parallel for schedule(dynamic, 4)
  for (int i = 0; i < total; ++i) {
    Rng rng(derive_seed(seed, 0x9a, static_cast<std::uint64_t>(i)));
    try {
      const Graph& g = ds.graphs[i];
      out.graphs[i] = prune_graph(g, model, cfg, rng, ref[g.class_label], &warn[i]);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }
  for (const auto& e : errors)
    if (!e.empty()) throw DataError("prune_dataset: " + e);
  if (warnings)
    for (int i = 0; i < total; ++i)
      for (auto& w : warn[i]) warnings->push_back("graph " + std::to_string(i) + ": " + w);

  nlohmann::json cj = {{"prune_fraction", cfg.prune_fraction}, {"max_success", cfg.max_success}, {"max_fail", cfg.max_fail}};
  if (cfg.target_granularity) cj["target_granularity"] = *cfg.target_granularity;
  nlohmann::json prov = {{"pruned_from", dataset_hash(ds)}, {"config", cj}, {"seed", seed}};
  if (!ds.provenance.empty()) prov["source_provenance"] = nlohmann::json::parse(ds.provenance);
  out.provenance = prov.dump();
  return out;
}

}  // namespace gx
