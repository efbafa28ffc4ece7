#include "aslab/core.hpp"

#include <algorithm>
#include <sstream>

#include <json.hpp>

#include "aslab/error.hpp"
#include "aslab/util.hpp"

namespace aslab::core {

const char* to_string(OperatorKind op) {
  switch (op) {
    case OperatorKind::Draft: return "Draft";
    case OperatorKind::Debug: return "Debug";
    case OperatorKind::Improve: return "Improve";
  }
  return "?";
}

const char* to_string(ExecStatus status) {
  switch (status) {
    case ExecStatus::Success: return "Success";
    case ExecStatus::Buggy: return "Buggy";
    case ExecStatus::Timeout: return "Timeout";
    case ExecStatus::InvalidSubmission: return "InvalidSubmission";
    case ExecStatus::NotRun: return "NotRun";
  }
  return "?";
}

std::optional<OperatorKind> operator_from_string(const std::string& s) {
  if (s == "Draft") return OperatorKind::Draft;
  if (s == "Debug") return OperatorKind::Debug;
  if (s == "Improve") return OperatorKind::Improve;
  return std::nullopt;
}

std::optional<ExecStatus> exec_status_from_string(const std::string& s) {
  if (s == "Success") return ExecStatus::Success;
  if (s == "Buggy") return ExecStatus::Buggy;
  if (s == "Timeout") return ExecStatus::Timeout;
  if (s == "InvalidSubmission") return ExecStatus::InvalidSubmission;
  if (s == "NotRun") return ExecStatus::NotRun;
  return std::nullopt;
}

const char* to_string(Scaffold s) {
  return s == Scaffold::Greedy ? "greedy" : "mcts";
}

const char* to_string(DiversityMode m) {
  return m == DiversityMode::Baseline ? "baseline" : "ablated";
}

// ---------------------------------------------------------------------------
// SolutionTree
// ---------------------------------------------------------------------------

SolutionTree::SolutionTree(std::string task_id, bool higher_is_better)
    : task_id_(std::move(task_id)), higher_is_better_(higher_is_better) {}

void SolutionTree::add_node(SolutionNode node) {
  if (node.node_id.empty()) raise(ErrorCode::InvariantViolation, "empty node_id");
  if (index_.count(node.node_id))
    raise(ErrorCode::DuplicateId, "node " + node.node_id + " already in tree");

  if (node.op == OperatorKind::Draft) {
    if (node.parent_id)
      raise(ErrorCode::InvariantViolation, "Draft node " + node.node_id + " has a parent");
    if (static_cast<int>(root_draft_ids_.size()) >= kMaxDrafts)
      raise(ErrorCode::DraftLimitExceeded,
            "tree already holds " + std::to_string(kMaxDrafts) + " drafts");
    if (!node.draft_index || *node.draft_index < 1 || *node.draft_index > kMaxDrafts)
      raise(ErrorCode::InvariantViolation, "Draft node needs draft_index in [1,5]");
  } else {
    if (!node.parent_id)
      raise(ErrorCode::MissingParent,
            std::string(to_string(node.op)) + " node " + node.node_id + " has no parent");
    if (!index_.count(*node.parent_id))
      raise(ErrorCode::MissingParent, "parent " + *node.parent_id + " not in tree");
    if (node.draft_index)
      raise(ErrorCode::InvariantViolation, "non-Draft node carries draft_index");
  }

  index_[node.node_id] = nodes_.size();
  if (node.op == OperatorKind::Draft) root_draft_ids_.push_back(node.node_id);
  if (node.parent_id) children_[*node.parent_id].push_back(node.node_id);
  nodes_.push_back(std::move(node));
}

void SolutionTree::record_execution(const std::string& node_id, ExecutionOutcome outcome,
                                    std::optional<double> score, double finished_at) {
  auto it = index_.find(node_id);
  if (it == index_.end()) raise(ErrorCode::MissingParent, "unknown node " + node_id);
  SolutionNode& n = nodes_[it->second];
  if (score && outcome.status != ExecStatus::Success)
    raise(ErrorCode::InvariantViolation, "score on a non-Success node");
  n.exec = std::move(outcome);
  n.score = score;
  n.finished_at = finished_at;
}

bool SolutionTree::contains(const std::string& node_id) const {
  return index_.count(node_id) > 0;
}

const SolutionNode& SolutionTree::node(const std::string& node_id) const {
  auto it = index_.find(node_id);
  if (it == index_.end()) raise(ErrorCode::MissingParent, "unknown node " + node_id);
  return nodes_[it->second];
}

std::vector<std::string> SolutionTree::children_of(const std::string& node_id) const {
  auto it = children_.find(node_id);
  if (it == children_.end()) return {};
  return it->second;
}

int SolutionTree::debug_chain_depth(const std::string& node_id) const {
  int depth = 0;
  const SolutionNode* n = &node(node_id);
  while (n->op == OperatorKind::Debug) {
    ++depth;
    if (!n->parent_id) break;
    n = &node(*n->parent_id);
  }
  return depth;
}

const SolutionNode* best_node(const SolutionTree& tree) {
  const SolutionNode* best = nullptr;
  for (const auto& n : tree.nodes()) {
    if (n.exec.status != ExecStatus::Success || !n.score) continue;
    if (!best) {
      best = &n;
      continue;
    }
    const bool better = tree.higher_is_better() ? *n.score > *best->score
                                                : *n.score < *best->score;
    // Strict comparison keeps the earliest-created node on ties.
    if (better) best = &n;
  }
  return best;
}

// ---------------------------------------------------------------------------
// Trajectory store
// ---------------------------------------------------------------------------

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json node_to_json(const std::string& run_id, const std::string& task_id,
                          const SolutionNode& node) {
  ordered_json j;
  j["run_id"] = run_id;
  j["task_id"] = task_id;
  j["node_id"] = node.node_id;
  j["parent_id"] = node.parent_id ? ordered_json(*node.parent_id) : ordered_json(nullptr);
  j["operator"] = to_string(node.op);
  j["draft_index"] = node.draft_index ? ordered_json(*node.draft_index) : ordered_json(nullptr);
  j["plan"] = node.plan;
  j["code"] = node.code;
  j["exec_status"] = to_string(node.exec.status);
  j["wall_time_s"] = node.exec.wall_time_s;
  j["score"] = node.score ? ordered_json(*node.score) : ordered_json(nullptr);
  j["created_at"] = node.created_at;
  j["finished_at"] = node.finished_at;
  return j;
}

}  // namespace

std::string trajectory_line(const std::string& run_id, const std::string& task_id,
                            const SolutionNode& node) {
  return node_to_json(run_id, task_id, node).dump();
}

LoadedRun load_trajectory(const std::string& jsonl, bool higher_is_better) {
  LoadedRun out;
  std::istringstream in(jsonl);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (util::trim(line).empty()) continue;
    ordered_json j = ordered_json::parse(line);
    if (first) {
      out.run_id = j.at("run_id").get<std::string>();
      out.tree = SolutionTree(j.at("task_id").get<std::string>(), higher_is_better);
      first = false;
    }
    SolutionNode n;
    n.node_id = j.at("node_id").get<std::string>();
    if (!j.at("parent_id").is_null()) n.parent_id = j.at("parent_id").get<std::string>();
    auto op = operator_from_string(j.at("operator").get<std::string>());
    if (!op) raise(ErrorCode::InvariantViolation, "unknown operator in log");
    n.op = *op;
    if (!j.at("draft_index").is_null()) n.draft_index = j.at("draft_index").get<int>();
    n.plan = j.at("plan").get<std::string>();
    n.code = j.at("code").get<std::string>();
    auto status = exec_status_from_string(j.at("exec_status").get<std::string>());
    if (!status) raise(ErrorCode::InvariantViolation, "unknown exec_status in log");
    n.exec.status = *status;
    n.exec.wall_time_s = j.at("wall_time_s").get<double>();
    if (!j.at("score").is_null()) n.score = j.at("score").get<double>();
    n.created_at = j.at("created_at").get<double>();
    n.finished_at = j.at("finished_at").get<double>();
    out.tree.add_node(std::move(n));
  }
  if (first) raise(ErrorCode::EmptyInput, "trajectory log has no records");
  return out;
}

TrajectoryWriter::TrajectoryWriter(std::string run_id, std::string task_id)
    : run_id_(std::move(run_id)), task_id_(std::move(task_id)) {}

void TrajectoryWriter::append(const SolutionNode& node) {
  buffer_ += trajectory_line(run_id_, task_id_, node);
  buffer_ += '\n';
}

void TrajectoryWriter::flush_to(const std::string& path) const {
  util::write_file(path, buffer_);
}

}  // namespace aslab::core
