#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"

int main(int argc, char** argv) {
  using gx::cli::Args;
  Args a;
  a.argv.assign(argv, argv + argc);

  CLI::App app{"Model-level GNN explanation toolkit"};
  app.require_subcommand(1);

  auto common = [&](CLI::App* s) {
    s->add_option("--config", a.config, "JSON config file")->check(CLI::ExistingFile);
    s->add_option("--seed", a.seed, "Random seed");
    s->add_option("--out", a.out, "Output directory")->required();
    s->add_flag("--force", a.force, "Overwrite an existing run in --out");
  };

  auto* gen = app.add_subcommand("gen-data", "Generate or import a dataset");
  common(gen);

  auto* train = app.add_subcommand("train-gnn", "Train the graph classifier");
  common(train);
  train->add_option("--data", a.data, "Dataset file (.jsonl)");

  auto* prune = app.add_subcommand("prune", "Prediction-preserving pruning of a dataset");
  common(prune);
  prune->add_option("--data", a.data, "Dataset file (.jsonl)");
  prune->add_option("--model", a.model, "Classifier checkpoint");

  auto* explain = app.add_subcommand("explain", "Train the explanation generator for one class");
  common(explain);
  explain->add_option("--data", a.data, "Dataset file (.jsonl)");
  explain->add_option("--model", a.model, "Classifier checkpoint");
  explain->add_option("--class", a.target_class, "Target class index");
  explain->add_option("--top-n", a.top_n, "Number of explanations to emit");
  explain->add_flag("--no-filter", a.no_filter, "Keep every non-empty sample");

  auto* eval = app.add_subcommand("evaluate", "Score table over run manifests");
  common(eval);
  eval->add_option("--manifest", a.manifests, "Run manifest (.jsonl); repeatable")->required();
  eval->add_option("--top-n", a.top_n, "Candidates per run");
  eval->add_option("--data", a.data, "Dataset to recompute scores against");
  eval->add_option("--model", a.model, "Classifier checkpoint to recompute scores with");

  auto* emb = app.add_subcommand("report-embeddings", "2D projection of embeddings before/after pruning");
  common(emb);
  emb->add_option("--data", a.data, "Original dataset file")->required();
  emb->add_option("--pruned", a.pruned, "Pruned dataset file")->required();
  emb->add_option("--model", a.model, "Classifier checkpoint")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (gen->parsed()) return a.command = "gen-data", gx::cli::cmd_gen_data(a);
    if (train->parsed()) return a.command = "train-gnn", gx::cli::cmd_train_gnn(a);
    if (prune->parsed()) return a.command = "prune", gx::cli::cmd_prune(a);
    if (explain->parsed()) return a.command = "explain", gx::cli::cmd_explain(a);
    if (eval->parsed()) return a.command = "evaluate", gx::cli::cmd_evaluate(a);
    if (emb->parsed()) return a.command = "report-embeddings", gx::cli::cmd_report_embeddings(a);
  } catch (...) {
    return gx::cli::exit_code_for_current_exception();
  }
  return 2;
}
