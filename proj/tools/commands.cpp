#include "commands.hpp"

#include <omp.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "gx/config.hpp"
#include "gx/graph_io.hpp"
#include "gx/report.hpp"
#include "json.hpp"

#ifndef GX_VERSION
#define GX_VERSION "0.0.0"
#endif

namespace gx::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  RunConfig cfg;
  fs::path out;
  json inputs = json::object();
  std::vector<std::string> outputs;
};

std::string file_hash(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot open " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return text_hash(ss.str());
}

Run start(const Args& a, bool needs_seed) {
  Run r;
  r.cfg = a.config.empty() ? RunConfig{} : load_run_config(a.config);
  if (a.seed) r.cfg.seed = a.seed;
  if (a.target_class) r.cfg.target_class = *a.target_class;
  if (a.top_n) r.cfg.top_n = *a.top_n;
  if (a.no_filter) r.cfg.explainer.filter = false;
  if (!a.data.empty()) r.cfg.data = a.data;
  if (!a.model.empty()) r.cfg.model = a.model;
  if (!a.pruned.empty()) r.cfg.pruned = a.pruned;
  validate_run_config(r.cfg);
  if (needs_seed && !r.cfg.seed) throw ConfigError(a.command + ": a seed is required (--seed or \"seed\")");
  if (a.out.empty()) throw ConfigError(a.command + ": --out is required");
  r.out = a.out;
  if (fs::exists(r.out / "manifest.json") && !a.force)
    throw ConfigError(a.command + ": " + r.out.string() + " already holds a run; pass --force to overwrite");
  fs::create_directories(r.out);
  if (!a.config.empty()) r.inputs["config"] = {{"path", a.config}, {"hash", file_hash(a.config)}};
  return r;
}

void require_input(Run& r, const std::string& key, const std::string& path) {
  if (path.empty()) throw ConfigError("missing input '" + key + "'");
  if (!fs::exists(path)) throw IoError("input '" + key + "' not found: " + path);
  r.inputs[key] = {{"path", path}, {"hash", file_hash(path)}};
}

void write_text(Run& r, const std::string& name, const std::string& text) {
  std::ofstream out(r.out / name);
  if (!out) throw IoError("cannot write " + (r.out / name).string());
  out << text;
  if (!out) throw IoError("write failed for " + (r.out / name).string());
  r.outputs.push_back(name);
}

void finish(Run& r, const Args& a, json extra = json::object()) {
  json m = {{"command", a.command},
            {"version", GX_VERSION},
            {"schema_version", kSchemaVersion},
            {"argv", a.argv},
            {"config", json::parse(run_config_json(r.cfg))},
            {"config_hash", config_hash(r.cfg)},
            {"seed", r.cfg.seed ? json(*r.cfg.seed) : json(nullptr)},
            {"omp_max_threads", omp_get_max_threads()},
            {"inputs", r.inputs},
            {"outputs", r.outputs}};
  for (auto it = extra.begin(); it != extra.end(); ++it) m[it.key()] = it.value();
  write_text(r, "manifest.json", m.dump(2) + "\n");
}

GraphDataset input_dataset(Run& r) {
  if (!r.cfg.data.empty()) {
    require_input(r, "data", r.cfg.data);
    return load_dataset(r.cfg.data);
  }
  if (!r.cfg.seed) throw ConfigError("no --data given and no seed to generate the configured dataset");
  return make_dataset(r.cfg.dataset, *r.cfg.seed);
}

GnnModel input_model(Run& r) {
  require_input(r, "model", r.cfg.model);
  return load_checkpoint(r.cfg.model);
}

void print_warnings(const std::vector<std::string>& w) {
  for (const auto& s : w) std::cerr << "warning: " << s << '\n';
}

}  // namespace

int cmd_gen_data(const Args& a) {
  Run r = start(a, true);
  if (r.cfg.dataset.kind == "mutag" || r.cfg.dataset.kind == "file") require_input(r, "dataset", r.cfg.dataset.path);
  GraphDataset ds = make_dataset(r.cfg.dataset, *r.cfg.seed);
  if (ds.provenance.empty())
    ds.provenance = json{{"generator", r.cfg.dataset.kind}, {"seed", *r.cfg.seed}, {"config_hash", config_hash(r.cfg)}}.dump();
  auto warnings = connectivity_warnings(ds);
  print_warnings(warnings);
  std::ostringstream os;
  write_dataset(os, ds);
  write_text(r, "dataset.jsonl", os.str());
  finish(r, a, {{"dataset_hash", dataset_hash(ds)}, {"graphs", ds.graphs.size()}, {"warnings", warnings}});
  std::cout << "wrote " << ds.graphs.size() << " graphs to " << (r.out / "dataset.jsonl").string() << '\n';
  return 0;
}

int cmd_train_gnn(const Args& a) {
  Run r = start(a, true);
  GraphDataset ds = input_dataset(r);
  TrainConfig tc = r.cfg.train;
  tc.seed = *r.cfg.seed;
  TrainedGnn t = train_gnn(ds, tc);
  print_warnings(t.report.warnings);
  const auto& rep = t.report;
  save_checkpoint(r.out / "checkpoint.json", t.model, {rep.seed, rep.dataset_hash});
  r.outputs.push_back("checkpoint.json");
  json jr = {{"epoch_loss", rep.epoch_loss},
             {"train_accuracy", rep.train_accuracy},
             {"test_accuracy", rep.test_accuracy},
             {"final_test_accuracy", rep.final_test_accuracy},
             {"final_test_accuracy_per_class", rep.final_test_accuracy_per_class},
             {"class_names", ds.class_names},
             {"train_indices", rep.train_indices},
             {"test_indices", rep.test_indices},
             {"warnings", rep.warnings},
             {"dataset_hash", rep.dataset_hash},
             {"seed", rep.seed},
             {"parameters", t.model.parameter_count()}};
  // NaN (empty test class) is written as null.
  write_text(r, "train_report.json", jr.dump(2) + "\n");
  finish(r, a, {{"dataset_hash", rep.dataset_hash}});
  std::cout << "test accuracy " << rep.final_test_accuracy << '\n';
  for (std::size_t c = 0; c < rep.final_test_accuracy_per_class.size(); ++c)
    std::cout << "  " << ds.class_names[c] << ": " << rep.final_test_accuracy_per_class[c] << '\n';
  return 0;
}

int cmd_prune(const Args& a) {
  Run r = start(a, true);
  GraphDataset ds = input_dataset(r);
  GnnModel model = input_model(r);
  std::vector<std::string> warnings;
  GraphDataset pruned = prune_dataset(ds, model, r.cfg.prune, *r.cfg.seed, &warnings);
  std::ostringstream os;
  write_dataset(os, pruned);
  write_text(r, "dataset.jsonl", os.str());
  double before = 0, after = 0;
  for (std::size_t i = 0; i < ds.graphs.size(); ++i) {
    before += ds.graphs[i].node_count;
    after += pruned.graphs[i].node_count;
  }
  const double n = std::max<double>(1, ds.graphs.size());
  finish(r, a,
         {{"source_hash", dataset_hash(ds)},
          {"dataset_hash", dataset_hash(pruned)},
          {"mean_nodes_before", before / n},
          {"mean_nodes_after", after / n},
          {"warnings", warnings.size()}});
  std::cout << "mean node count " << before / n << " -> " << after / n << '\n';
  return 0;
}

int cmd_explain(const Args& a) {
  Run r = start(a, true);
  GraphDataset ds = input_dataset(r);
  GnnModel model = input_model(r);
  const int cls = r.cfg.target_class;
  if (cls >= ds.num_classes()) throw ConfigError("class " + std::to_string(cls) + " not in the dataset");
  ExplainerConfig ec = r.cfg.explainer;
  ec.seed = *r.cfg.seed;
  ExplainerResult res = train_explainer(model, ds, cls, ec);
  print_warnings(res.warnings);

  ManifestContext ctx{ds.name, cls, ec.seed, config_hash(r.cfg)};
  std::ostringstream man;
  write_run_manifest(man, res, ctx);
  write_text(r, "run_manifest.jsonl", man.str());
  save_generator(r.out / "generator.json", res.generator, ec.seed);
  r.outputs.push_back("generator.json");

  auto top = select_explanations(res.candidates, r.cfg.top_n);
  std::ostringstream ex;
  json summary = json::array();
  for (std::size_t k = 0; k < top.size(); ++k) {
    const auto& c = top[k];
    ex << graph_to_json_line(c.graph) << '\n';
    const std::string dot = "explanation_" + std::to_string(k) + ".dot";
    write_text(r, dot,
               to_dot(c.graph, ds.class_names[cls] + "_" + std::to_string(k), ds.node_category_names,
                      ds.edge_category_names));
    summary.push_back({{"rank", k},
                       {"iteration", c.iteration},
                       {"sample", c.sample},
                       {"nodes", c.graph.node_count},
                       {"edges", c.graph.edges.size()},
                       {"p", c.scores.p},
                       {"s", c.scores.s},
                       {"d", c.scores.d},
                       {"v", c.scores.v},
                       {"granularity", c.scores.granularity},
                       {"dot", dot}});
  }
  write_text(r, "explanations.jsonl", ex.str());
  double mean_v = 0;
  for (const auto& c : top) mean_v += c.scores.v;
  if (!top.empty()) mean_v /= static_cast<double>(top.size());
  finish(r, a,
         {{"class", cls},
          {"class_name", ds.class_names[cls]},
          {"harvests", res.harvests.size()},
          {"sampled", res.sampled},
          {"passed", res.passed},
          {"pass_rate", res.pass_rate},
          {"degenerate", res.degenerate},
          {"aborted", res.aborted},
          {"diagnostics", res.diagnostics},
          {"warnings", res.warnings},
          {"top_mean_v", mean_v},
          {"top", summary}});
  std::cout << "class " << ds.class_names[cls] << ": " << res.candidates.size() << " candidates, pass rate "
            << res.pass_rate << ", top-" << top.size() << " mean v " << mean_v << '\n';
  if (res.degenerate) std::cerr << "warning: degenerate run (pass rate " << res.pass_rate << ")\n";
  if (res.aborted) throw NumericError(res.diagnostics);
  return 0;
}

int cmd_evaluate(const Args& a) {
  Run r = start(a, false);
  if (a.manifests.empty()) throw ConfigError("evaluate: at least one --manifest is required");
  std::vector<ManifestEntry> entries;
  for (std::size_t i = 0; i < a.manifests.size(); ++i) {
    require_input(r, "manifest" + std::to_string(i), a.manifests[i]);
    auto part = load_run_manifest(a.manifests[i]);
    entries.insert(entries.end(), part.begin(), part.end());
  }
  json extra = json::object();
  if (!r.cfg.model.empty() || !r.cfg.data.empty()) {
    GraphDataset ds = input_dataset(r);
    GnnModel model = input_model(r);
    std::map<int, ScoringContext> ctxs;
    double worst = 0;
    for (auto& e : entries) {
      if (e.ctx.dataset != ds.name) throw DataError("evaluate: manifest dataset '" + e.ctx.dataset + "' is not " + ds.name);
      auto it = ctxs.find(e.ctx.target_class);
      if (it == ctxs.end()) it = ctxs.emplace(e.ctx.target_class, make_scoring_context(model, ds, e.ctx.target_class)).first;
      for (auto& c : e.candidates) {
        auto s = score_candidate(it->second, c.graph);
        worst = std::max(worst, std::abs(s.v - c.scores.v));
        c.scores = s;
      }
    }
    extra["recomputed"] = true;
    extra["max_abs_v_deviation"] = worst;
    if (worst > 1e-6) std::cerr << "warning: recomputed scores deviate from the manifest by " << worst << '\n';
  }
  auto rows = evaluation_table(entries, r.cfg.top_n);
  std::ostringstream os;
  write_table_csv(os, rows);
  write_text(r, "evaluation.csv", os.str());
  json jrows = json::array();
  for (const auto& row : rows)
    jrows.push_back({{"dataset", row.dataset}, {"class", row.target_class}, {"mean_v", row.mean_v}, {"runs", row.runs}});
  extra["rows"] = jrows;
  finish(r, a, extra);
  std::cout << os.str();
  return 0;
}

int cmd_report_embeddings(const Args& a) {
  Run r = start(a, false);
  require_input(r, "data", r.cfg.data);
  require_input(r, "pruned", r.cfg.pruned);
  GraphDataset ds = load_dataset(r.cfg.data);
  GraphDataset pruned = load_dataset(r.cfg.pruned);
  GnnModel model = input_model(r);
  auto rep = embedding_report(model, ds, pruned);
  std::ostringstream os;
  write_embeddings_csv(os, rep);
  write_text(r, "embeddings.csv", os.str());
  json md = json::array();
  for (const auto& d : rep.motif_distances)
    md.push_back({{"class", d.class_label}, {"class_name", ds.class_names[d.class_label]}, {"before", d.before}, {"after", d.after}});
  finish(r, a,
         {{"explained_variance", rep.pca.explained_variance},
          {"motif_distances", md},
          {"motif_classes_closer", rep.motif_classes_closer}});
  for (const auto& d : rep.motif_distances)
    std::cout << ds.class_names[d.class_label] << ": motif-centroid distance " << d.before << " -> " << d.after << '\n';
  return 0;
}

int exit_code_for_current_exception() {
  try {
    throw;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const ShapeError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return 4;
  } catch (const DomainError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return 4;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace gx::cli
