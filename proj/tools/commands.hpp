#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace gx::cli {

struct Args {
  std::string command;
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<int> target_class;
  std::optional<int> top_n;
  bool no_filter = false;
  bool force = false;
  std::string data;
  std::string model;
  std::string pruned;
  std::vector<std::string> manifests;
  std::vector<std::string> argv;
};

int cmd_gen_data(const Args& a);
int cmd_train_gnn(const Args& a);
int cmd_prune(const Args& a);
int cmd_explain(const Args& a);
int cmd_evaluate(const Args& a);
int cmd_report_embeddings(const Args& a);

/// Maps the library exception families onto exit codes 2 / 3 / 4.
int exit_code_for_current_exception();

}  // namespace gx::cli
