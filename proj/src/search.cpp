#include "aslab/search.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "aslab/error.hpp"
#include "aslab/util.hpp"

namespace aslab::search {

double uct_score(double mean_value, int parent_visits, int child_visits, double c) {
  if (child_visits <= 0) return std::numeric_limits<double>::infinity();
  const double exploration =
      parent_visits > 0 ? std::sqrt(std::log(static_cast<double>(parent_visits)) /
                                    static_cast<double>(child_visits))
                        : 0.0;
  return mean_value + c * exploration;
}

namespace {

double epoch_now_s() {
  return std::chrono::duration<double>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

// Forwards to the inner backend and records one request-log line per call.
struct LoggingBackend : backend::Backend {
  backend::Backend& inner;
  backend::RequestLogger* logger = nullptr;
  std::string run_id;
  std::string node_id;

  explicit LoggingBackend(backend::Backend& be) : inner(be) {}

  backend::CompletionResult complete(const backend::CompletionRequest& req) override {
    const auto result = inner.complete(req);
    if (logger)
      logger->log(run_id, node_id, req.temperature, backend::fingerprint(req),
                  result.latency_s);
    return result;
  }
};

// Shared run machinery: node ids, logical or real timing, execution, logging.
struct RunState {
  const core::ExperimentConfig& config;
  const core::TaskSpec& task;
  LoggingBackend backend;
  const operators::PromptTemplates& templates;
  const NodeExecutor& executor;
  core::SolutionTree tree;
  core::TrajectoryWriter writer;
  util::Rng wall_rng;
  int node_seq = 0;
  double logical_t = 0.0;
  std::chrono::steady_clock::time_point real_start = std::chrono::steady_clock::now();

  RunState(const core::ExperimentConfig& cfg, const core::TaskSpec& t, backend::Backend& be,
           const operators::PromptTemplates& tmpl, const NodeExecutor& exec,
           const std::string& run_id, uint64_t seed, backend::RequestLogger* logger)
      : config(cfg),
        task(t),
        backend(be),
        templates(tmpl),
        executor(exec),
        tree(t.task_id, t.higher_is_better),
        writer(run_id, t.task_id),
        wall_rng(util::derive_seed(seed, {"wall-times", run_id})) {
    backend.logger = logger;
    backend.run_id = run_id;
  }

  double elapsed_s() const {
    if (config.deterministic_timing) return logical_t;
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - real_start)
        .count();
  }

  bool budget_spent() const {
    return elapsed_s() >= config.wall_clock_s ||
           static_cast<int>(tree.size()) >= config.max_nodes;
  }

  std::string next_id() {
    ++node_seq;
    char buf[16];
    std::snprintf(buf, sizeof(buf), "n%04d", node_seq);
    return buf;
  }

  double now_timestamp() const {
    return config.deterministic_timing ? logical_t : epoch_now_s();
  }

  // Deterministic per-node wall time for the logical clock.
  double synth_wall(core::ExecStatus status, bool executed) {
    if (!executed) return 0.01;
    if (status == core::ExecStatus::Timeout) return config.per_node_exec_limit_s;
    return 0.5 + wall_rng.next_double();
  }

  std::vector<std::string> sibling_summaries(const operators::DiversityConfig& div) const {
    std::vector<std::string> out;
    if (!div.sibling_memory) return out;
    for (const auto& id : tree.root_draft_ids()) {
      out.push_back(operators::summarize_node(tree.node(id)));
    }
    return out;
  }

  // Adds the node, runs it when parseable, records outcome + score, logs it.
  const core::SolutionNode& commit(core::SolutionNode node) {
    const std::string id = node.node_id;
    node.created_at = now_timestamp();
    if (config.deterministic_timing) logical_t += 0.001;  // creation tick
    tree.add_node(std::move(node));

    const core::SolutionNode& stored = tree.node(id);
    core::ExecutionOutcome outcome = stored.exec;
    std::optional<double> score;
    bool executed = false;

    if (outcome.status == core::ExecStatus::NotRun) {
      taskenv::ExecutedNode result = executor(stored, task);
      outcome = std::move(result.outcome);
      score = result.score;
      executed = true;
    }

    double finished;
    if (config.deterministic_timing) {
      outcome.wall_time_s = synth_wall(outcome.status, executed);
      logical_t += outcome.wall_time_s;
      finished = logical_t;
    } else {
      finished = epoch_now_s();
    }
    tree.record_execution(id, std::move(outcome), score, finished);
    writer.append(tree.node(id));
    return tree.node(id);
  }

  operators::OperatorContext base_ctx() const {
    operators::OperatorContext ctx;
    ctx.task = &task;
    ctx.diversity = operators::DiversityConfig::for_mode(config.diversity_mode);
    return ctx;
  }
};

// Failed leaves whose debug chain is still below the limit, oldest first.
std::vector<std::string> debuggable_failed_leaves(const core::SolutionTree& tree,
                                                  int debug_limit) {
  std::vector<std::string> out;
  for (const auto& n : tree.nodes()) {
    if (!n.exec.failed()) continue;
    if (!tree.children_of(n.node_id).empty()) continue;
    if (tree.debug_chain_depth(n.node_id) >= debug_limit) continue;
    out.push_back(n.node_id);
  }
  return out;  // nodes() is creation order already
}

}  // namespace

// ---------------------------------------------------------------------------
// Runner
// ---------------------------------------------------------------------------

Runner::Runner(const core::ExperimentConfig& config, backend::Backend& backend,
               const operators::PromptTemplates& templates, std::string workdir_root)
    : config_(config),
      backend_(backend),
      templates_(templates),
      workdir_root_(std::move(workdir_root)) {
  executor_ = [this](const core::SolutionNode& node, const core::TaskSpec& task) {
    taskenv::SandboxPolicy policy;
    policy.time_limit_s = config_.per_node_exec_limit_s;
    policy.workdir = workdir_root_ + "/" + task.task_id + "/" + node.node_id;
    return taskenv::run_and_grade(node, task, policy);
  };
}

RunResult Runner::run(const core::TaskSpec& task, uint64_t seed, const std::string& run_id) {
  return config_.scaffold == core::Scaffold::Greedy ? run_greedy(task, seed, run_id)
                                                    : run_mcts(task, seed, run_id);
}

RunResult Runner::run_greedy(const core::TaskSpec& task, uint64_t seed,
                             const std::string& run_id) {
  RunState st(config_, task, backend_, templates_, executor_, run_id, seed, request_logger_);
  RunResult result;

  try {
    // Five sequential drafts, each seeing its prior siblings.
    for (int i = 1; i <= core::kMaxDrafts; ++i) {
      if (st.budget_spent()) {
        result.budget_exhausted_before_drafts = true;
        break;
      }
      auto ctx = st.base_ctx();
      ctx.draft_index = i;
      ctx.sibling_summaries = st.sibling_summaries(ctx.diversity);
      const std::string id = st.next_id();
      st.backend.node_id = id;
      st.commit(operators::draft(ctx, st.backend, id, 0.0, config_.temperature, templates_,
                                 config_.max_context_tokens));
    }

    // Greedy loop: fix the oldest fixable failure, otherwise improve the best.
    while (!st.budget_spent()) {
      const auto failed = debuggable_failed_leaves(st.tree, config_.debug_limit);
      auto ctx = st.base_ctx();
      const std::string id = st.next_id();
      st.backend.node_id = id;
      if (!failed.empty()) {
        ctx.target = st.tree.node(failed.front());
        st.commit(operators::debug(ctx, st.backend, id, 0.0, config_.temperature, templates_,
                                   config_.max_context_tokens));
      } else if (const auto* best = core::best_node(st.tree)) {
        ctx.target = *best;
        st.commit(operators::improve(ctx, st.backend, id, 0.0, config_.temperature,
                                     templates_, config_.max_context_tokens));
      } else {
        break;  // no legal move
      }
    }
  } catch (const Error& e) {
    result.aborted = true;
    result.abort_reason = e.what();
  }

  result.tree = std::move(st.tree);
  result.trajectory = st.writer.text();
  return result;
}

// ---------------------------------------------------------------------------
// MCTS
// ---------------------------------------------------------------------------

namespace {

struct EvalRecord {
  std::string node_id;
  std::optional<double> raw_score;  // Success nodes only
};

constexpr const char* kRootId = "";

// Rewards are min-max normalized over all Success scores seen so far in the
// run; failed evaluations score 0. Recomputed from scratch each pass so the
// normalization always reflects the latest score range.
MctsStats replay_stats(const core::SolutionTree& tree, const std::vector<EvalRecord>& records,
                       bool higher_is_better) {
  double mn = 0.0, mx = 0.0;
  bool any = false;
  for (const auto& r : records) {
    if (!r.raw_score) continue;
    if (!any) {
      mn = mx = *r.raw_score;
      any = true;
    } else {
      mn = std::min(mn, *r.raw_score);
      mx = std::max(mx, *r.raw_score);
    }
  }

  const auto reward_of = [&](const EvalRecord& r) {
    if (!r.raw_score) return 0.0;
    if (mx == mn) return 1.0;
    return higher_is_better ? (*r.raw_score - mn) / (mx - mn) : (mx - *r.raw_score) / (mx - mn);
  };

  MctsStats stats;
  for (const auto& r : records) {
    const double reward = reward_of(r);
    const core::SolutionNode* n = &tree.node(r.node_id);
    for (;;) {
      stats.visit_count[n->node_id] += 1;
      stats.value_sum[n->node_id] += reward;
      if (!n->parent_id) break;
      n = &tree.node(*n->parent_id);
    }
    stats.root_visits += 1;
    stats.root_value += reward;
  }
  return stats;
}

enum class Expansion { None, Draft, Debug, Improve };

Expansion expansion_slot(const core::SolutionTree& tree, const std::string& id,
                         const core::ExperimentConfig& config) {
  if (id == kRootId) {
    return static_cast<int>(tree.root_draft_ids().size()) < core::kMaxDrafts
               ? Expansion::Draft
               : Expansion::None;
  }
  const auto& node = tree.node(id);
  const auto children = tree.children_of(id);
  if (node.exec.failed()) {
    // One debug child per failed node; the chain continues from the child.
    if (children.empty() && tree.debug_chain_depth(id) < config.debug_limit)
      return Expansion::Debug;
    return Expansion::None;
  }
  if (node.exec.status == core::ExecStatus::Success) {
    return static_cast<int>(children.size()) < config.mcts_max_children ? Expansion::Improve
                                                                        : Expansion::None;
  }
  return Expansion::None;
}

bool any_expandable(const core::SolutionTree& tree, const core::ExperimentConfig& config) {
  if (expansion_slot(tree, kRootId, config) != Expansion::None) return true;
  for (const auto& n : tree.nodes()) {
    if (expansion_slot(tree, n.node_id, config) != Expansion::None) return true;
  }
  return false;
}

}  // namespace

RunResult Runner::run_mcts(const core::TaskSpec& task, uint64_t seed,
                           const std::string& run_id) {
  RunState st(config_, task, backend_, templates_, executor_, run_id, seed, request_logger_);
  RunResult result;
  std::vector<EvalRecord> records;
  MctsStats stats;

  const int max_iterations = std::max(50, 10 * config_.max_nodes);

  try {
    for (int iter = 0; iter < max_iterations; ++iter) {
      if (st.budget_spent()) break;
      if (!any_expandable(st.tree, config_)) break;

      // Selection: descend by UCT until a node with a free expansion slot.
      std::string current = kRootId;
      for (;;) {
        const Expansion slot = expansion_slot(st.tree, current, config_);
        if (slot != Expansion::None) {
          auto ctx = st.base_ctx();
          core::SolutionNode created;
          const std::string id = st.next_id();
          st.backend.node_id = id;
          if (slot == Expansion::Draft) {
            ctx.draft_index = static_cast<int>(st.tree.root_draft_ids().size()) + 1;
            ctx.sibling_summaries = st.sibling_summaries(ctx.diversity);
            created = operators::draft(ctx, st.backend, id, 0.0, config_.temperature,
                                       templates_, config_.max_context_tokens);
          } else {
            ctx.target = st.tree.node(current);
            created = slot == Expansion::Debug
                          ? operators::debug(ctx, st.backend, id, 0.0, config_.temperature,
                                             templates_, config_.max_context_tokens)
                          : operators::improve(ctx, st.backend, id, 0.0, config_.temperature,
                                               templates_, config_.max_context_tokens);
          }
          const auto& committed = st.commit(std::move(created));
          records.push_back({committed.node_id, committed.score});
          break;
        }

        const std::vector<std::string> children = current == kRootId
                                                      ? st.tree.root_draft_ids()
                                                      : st.tree.children_of(current);
        if (children.empty()) {
          // Dead end (e.g. failed node at the debug limit): re-visit it.
          for (const auto& r : records) {
            if (r.node_id == current) {
              records.push_back(r);
              break;
            }
          }
          break;
        }

        const int parent_visits =
            current == kRootId ? stats.root_visits : stats.visits(current);
        std::string best_child;
        double best_u = -std::numeric_limits<double>::infinity();
        for (const auto& child : children) {
          const int v = stats.visits(child);
          const double mean = v > 0 ? stats.value(child) / v : 0.0;
          const double u = uct_score(mean, parent_visits, v, config_.uct_c);
          if (u > best_u) {  // strict: earliest child wins ties
            best_u = u;
            best_child = child;
          }
        }
        current = best_child;
      }

      stats = replay_stats(st.tree, records, task.higher_is_better);
      if (hooks_.after_iteration) hooks_.after_iteration(st.tree, stats);
    }
  } catch (const Error& e) {
    result.aborted = true;
    result.abort_reason = e.what();
  }

  result.tree = std::move(st.tree);
  result.mcts = std::move(stats);
  result.trajectory = st.writer.text();
  return result;
}

RunResult run_greedy(const core::ExperimentConfig& config, const core::TaskSpec& task,
                     backend::Backend& backend, uint64_t seed, const std::string& run_id) {
  core::ExperimentConfig cfg = config;
  cfg.scaffold = core::Scaffold::Greedy;
  Runner runner(cfg, backend);
  return runner.run(task, seed, run_id);
}

RunResult run_mcts(const core::ExperimentConfig& config, const core::TaskSpec& task,
                   backend::Backend& backend, uint64_t seed, const std::string& run_id) {
  core::ExperimentConfig cfg = config;
  cfg.scaffold = core::Scaffold::Mcts;
  Runner runner(cfg, backend);
  return runner.run(task, seed, run_id);
}

TimeAccounting node_time_accounting(const core::SolutionTree& tree) {
  TimeAccounting acc;
  double valid_sum = 0.0, total_sum = 0.0;
  int valid_count = 0;
  for (const auto& n : tree.nodes()) {
    total_sum += n.exec.wall_time_s;
    if (n.exec.status == core::ExecStatus::Success) {
      valid_sum += n.exec.wall_time_s;
      ++valid_count;
    }
  }
  if (valid_count > 0) acc.mean_exec_time_valid_s = valid_sum / valid_count;
  acc.share_time_valid = total_sum > 0.0 ? valid_sum / total_sum : 0.0;
  return acc;
}

}  // namespace aslab::search
