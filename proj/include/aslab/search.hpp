#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "aslab/backend.hpp"
#include "aslab/core.hpp"
#include "aslab/operators.hpp"
#include "aslab/taskenv.hpp"

namespace aslab::search {

struct SearchBudget {
  double wall_clock_s = 86400.0;
  int max_nodes = 100;
  double per_node_exec_limit_s = 10.0;
};

// Per-node visit counts and value sums for the MCTS policy, plus the virtual
// root above the draft nodes.
struct MctsStats {
  std::map<std::string, int> visit_count;
  std::map<std::string, double> value_sum;
  int root_visits = 0;
  double root_value = 0.0;

  int visits(const std::string& id) const {
    auto it = visit_count.find(id);
    return it == visit_count.end() ? 0 : it->second;
  }
  double value(const std::string& id) const {
    auto it = value_sum.find(id);
    return it == value_sum.end() ? 0.0 : it->second;
  }
};

// UCT score: mean value + c * sqrt(ln(parent_visits) / child_visits).
double uct_score(double mean_value, int parent_visits, int child_visits, double c);

struct RunResult {
  core::SolutionTree tree;
  MctsStats mcts;                           // empty for greedy
  bool budget_exhausted_before_drafts = false;
  bool aborted = false;                     // backend failure; partial tree persisted
  std::string abort_reason;
  std::string trajectory;                   // JSONL, one line per executed node
};

// Executes a freshly created node against the task; injectable for tests.
using NodeExecutor =
    std::function<taskenv::ExecutedNode(const core::SolutionNode&, const core::TaskSpec&)>;

struct RunHooks {
  // Called after every MCTS iteration with the tree and current stats.
  std::function<void(const core::SolutionTree&, const MctsStats&)> after_iteration;
};

class Runner {
 public:
  Runner(const core::ExperimentConfig& config, backend::Backend& backend,
         const operators::PromptTemplates& templates = operators::PromptTemplates::builtin(),
         std::string workdir_root = "/tmp/aslab-sandbox");

  // Overrides the default taskenv-backed executor.
  void set_executor(NodeExecutor executor) { executor_ = std::move(executor); }
  void set_hooks(RunHooks hooks) { hooks_ = std::move(hooks); }
  // Optional backend request log ({run_id, node_id, temperature, ...} lines).
  void set_request_logger(backend::RequestLogger* logger) { request_logger_ = logger; }

  RunResult run(const core::TaskSpec& task, uint64_t seed, const std::string& run_id);

 private:
  RunResult run_greedy(const core::TaskSpec& task, uint64_t seed, const std::string& run_id);
  RunResult run_mcts(const core::TaskSpec& task, uint64_t seed, const std::string& run_id);

  core::ExperimentConfig config_;
  backend::Backend& backend_;
  const operators::PromptTemplates& templates_;
  std::string workdir_root_;
  NodeExecutor executor_;
  RunHooks hooks_;
  backend::RequestLogger* request_logger_ = nullptr;
};

// Convenience wrappers for the two scaffolds.
RunResult run_greedy(const core::ExperimentConfig& config, const core::TaskSpec& task,
                     backend::Backend& backend, uint64_t seed, const std::string& run_id);
RunResult run_mcts(const core::ExperimentConfig& config, const core::TaskSpec& task,
                   backend::Backend& backend, uint64_t seed, const std::string& run_id);

struct TimeAccounting {
  std::optional<double> mean_exec_time_valid_s;  // Success nodes only
  double share_time_valid = 0.0;                 // sum(Success)/sum(all)
};

TimeAccounting node_time_accounting(const core::SolutionTree& tree);

}  // namespace aslab::search
