#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace aslab::core {

// ---------------------------------------------------------------------------
// Tasks and leaderboards
// ---------------------------------------------------------------------------

// Human final scores on a task, sorted worst-to-best under the task's
// higher_is_better orientation.
struct Leaderboard {
  std::vector<double> scores;

  int n_teams() const { return static_cast<int>(scores.size()); }
  bool empty() const { return scores.empty(); }
};

struct TaskSpec {
  std::string task_id;
  std::string description;
  bool higher_is_better = true;
  double time_budget_s = 86400.0;  // 24h
  std::string grader_kind;
  std::map<std::string, double> grader_params;
  std::string schema_header = "id,prediction";
  int schema_rows = 1;
  Leaderboard leaderboard;
};

// ---------------------------------------------------------------------------
// Solution nodes and trees
// ---------------------------------------------------------------------------

enum class OperatorKind { Draft, Debug, Improve };
enum class ExecStatus { Success, Buggy, Timeout, InvalidSubmission, NotRun };

const char* to_string(OperatorKind op);
const char* to_string(ExecStatus status);
std::optional<OperatorKind> operator_from_string(const std::string& s);
std::optional<ExecStatus> exec_status_from_string(const std::string& s);

struct ExecutionOutcome {
  ExecStatus status = ExecStatus::NotRun;
  double wall_time_s = 0.0;
  std::string log_excerpt;

  bool failed() const {
    return status == ExecStatus::Buggy || status == ExecStatus::Timeout ||
           status == ExecStatus::InvalidSubmission;
  }
  friend bool operator==(const ExecutionOutcome&, const ExecutionOutcome&) = default;
};

struct SolutionNode {
  std::string node_id;
  std::optional<std::string> parent_id;
  OperatorKind op = OperatorKind::Draft;
  std::optional<int> draft_index;  // [1,5], Draft nodes only
  std::string plan;
  std::string code;
  ExecutionOutcome exec;
  std::optional<double> score;
  double created_at = 0.0;
  double finished_at = 0.0;

  friend bool operator==(const SolutionNode&, const SolutionNode&) = default;
};

inline constexpr int kMaxDrafts = 5;

// A forest of solution nodes rooted at up to five Draft nodes. Mutation is
// single-writer; concurrent readers are safe once writes are quiesced.
class SolutionTree {
 public:
  SolutionTree() = default;
  explicit SolutionTree(std::string task_id, bool higher_is_better = true);

  const std::string& task_id() const { return task_id_; }
  bool higher_is_better() const { return higher_is_better_; }

  // Throws DuplicateId, MissingParent, DraftLimitExceeded, InvariantViolation.
  void add_node(SolutionNode node);

  // Applies an execution result to an existing node.
  void record_execution(const std::string& node_id, ExecutionOutcome outcome,
                        std::optional<double> score, double finished_at);

  bool contains(const std::string& node_id) const;
  const SolutionNode& node(const std::string& node_id) const;
  const std::vector<SolutionNode>& nodes() const { return nodes_; }  // creation order
  size_t size() const { return nodes_.size(); }
  const std::vector<std::string>& root_draft_ids() const { return root_draft_ids_; }
  std::vector<std::string> children_of(const std::string& node_id) const;

  // Number of consecutive Debug nodes on the chain ending at node_id
  // (a failed draft has depth 0, its Debug child depth 1, ...).
  int debug_chain_depth(const std::string& node_id) const;

  friend bool operator==(const SolutionTree& a, const SolutionTree& b) {
    return a.task_id_ == b.task_id_ && a.nodes_ == b.nodes_ &&
           a.root_draft_ids_ == b.root_draft_ids_;
  }

 private:
  std::string task_id_;
  bool higher_is_better_ = true;
  std::vector<SolutionNode> nodes_;
  std::unordered_map<std::string, size_t> index_;
  std::vector<std::string> root_draft_ids_;
  std::unordered_map<std::string, std::vector<std::string>> children_;
};

// Best scored Success node under the tree's orientation; ties broken by
// earliest created_at. Null when no valid submission exists.
const SolutionNode* best_node(const SolutionTree& tree);

// ---------------------------------------------------------------------------
// Experiment configuration
// ---------------------------------------------------------------------------

enum class Scaffold { Greedy, Mcts };
enum class DiversityMode { Baseline, Ablated };

const char* to_string(Scaffold s);
const char* to_string(DiversityMode m);

struct ExperimentConfig {
  std::string agent_name = "agent";
  Scaffold scaffold = Scaffold::Greedy;
  DiversityMode diversity_mode = DiversityMode::Baseline;

  std::string backend_kind = "scripted";  // "scripted" | "http"
  std::string script_path;                // scripted backend
  std::string model;                      // http backend model name
  std::string prompts_path;               // empty: builtin templates
  double temperature = 0.6;
  int max_context_tokens = 131072;

  uint64_t seed = 0;
  std::vector<std::string> tasks;  // builtin pack ids or task definition paths
  std::vector<uint64_t> seeds = {0};

  double wall_clock_s = 86400.0;
  double per_node_exec_limit_s = 10.0;
  int max_nodes = 100;
  double uct_c = 1.414;
  int debug_limit = 3;
  int mcts_max_children = 3;
  int workers = 1;

  // When true, logged timestamps and wall times come from a deterministic
  // logical clock so repeated runs produce byte-identical trajectories.
  bool deterministic_timing = true;
};

// ---------------------------------------------------------------------------
// Trajectory store (append-only JSON lines)
// ---------------------------------------------------------------------------

// One line per node, fields exactly: run_id, task_id, node_id, parent_id,
// operator, draft_index, plan, code, exec_status, wall_time_s, score,
// created_at, finished_at. Absent fields are null.
std::string trajectory_line(const std::string& run_id, const std::string& task_id,
                            const SolutionNode& node);

struct LoadedRun {
  std::string run_id;
  SolutionTree tree;
};

// Reconstructs a tree from trajectory text. Orientation is not part of the
// log schema; callers supply it from the task definition.
LoadedRun load_trajectory(const std::string& jsonl, bool higher_is_better = true);

class TrajectoryWriter {
 public:
  TrajectoryWriter(std::string run_id, std::string task_id);

  void append(const SolutionNode& node);
  const std::string& text() const { return buffer_; }
  const std::string& run_id() const { return run_id_; }

  void flush_to(const std::string& path) const;

 private:
  std::string run_id_;
  std::string task_id_;
  std::string buffer_;
};

}  // namespace aslab::core
