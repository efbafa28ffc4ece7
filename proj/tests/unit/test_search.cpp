#include <doctest.h>

#include <cmath>

#include "aslab/error.hpp"
#include "aslab/search.hpp"
#include "aslab/taskenv.hpp"
#include "aslab/util.hpp"
#include "fixtures.hpp"

using namespace aslab;
using namespace aslab::search;

namespace {

core::TaskSpec quadratic_task() {
  return *taskenv::find_task(taskenv::synthetic_task_pack(), "quadratic-min");
}

core::ExperimentConfig base_config(core::Scaffold scaffold, int max_nodes) {
  core::ExperimentConfig cfg;
  cfg.scaffold = scaffold;
  cfg.max_nodes = max_nodes;
  cfg.debug_limit = 3;
  cfg.per_node_exec_limit_s = 10.0;
  cfg.wall_clock_s = 1e9;
  cfg.deterministic_timing = true;
  return cfg;
}

RunResult run_fixture(core::Scaffold scaffold, int max_nodes, const std::string& name,
                      RunHooks hooks = {}) {
  backend::ScriptedBackend be(testing::golden_script(), 3);
  Runner runner(base_config(scaffold, max_nodes), be,
                operators::PromptTemplates::builtin(), testing::test_dir("search-" + name));
  runner.set_hooks(std::move(hooks));
  return runner.run(quadratic_task(), 3, "agent--quadratic-min--s3");
}

// A no-subprocess executor for policy-shape tests: scripted statuses/scores
// keyed by markers inside the node code.
taskenv::ExecutedNode fake_exec(const core::SolutionNode& node, const core::TaskSpec&) {
  taskenv::ExecutedNode r;
  r.outcome.status = core::ExecStatus::Buggy;
  r.outcome.wall_time_s = 1.0;
  if (util::contains(node.code, "fail")) {
    r.outcome.status = core::ExecStatus::Buggy;
    r.outcome.log_excerpt = "synthetic failure";
  } else {
    r.outcome.status = core::ExecStatus::Success;
    const size_t at = node.code.find("score=");
    r.score = at == std::string::npos ? 1.0 : std::stod(node.code.substr(at + 6));
  }
  return r;
}

}  // namespace

TEST_SUITE_BEGIN("search");

TEST_CASE("greedy golden run: 5 drafts, one debug of draft 2, improve chain on best") {
  const auto result = run_fixture(core::Scaffold::Greedy, 8, "greedy-golden");
  REQUIRE_FALSE(result.aborted);
  const auto& tree = result.tree;
  REQUIRE(tree.size() == 8);

  // Drafts in creation order with the scripted statuses and scores.
  const struct {
    const char* id;
    core::ExecStatus status;
    double score;
  } drafts[] = {
      {"n0001", core::ExecStatus::Success, 0.75},   // f(1.0)
      {"n0002", core::ExecStatus::Buggy, 0.0},      // raises boom-d2
      {"n0003", core::ExecStatus::Success, 4.75},   // f(3.0)
      {"n0004", core::ExecStatus::Success, 4.75},   // f(0.0)
      {"n0005", core::ExecStatus::Success, 2.25},   // f(2.5)
  };
  for (int i = 0; i < 5; ++i) {
    const auto& n = tree.node(drafts[i].id);
    CHECK(n.op == core::OperatorKind::Draft);
    CHECK(n.draft_index == i + 1);
    CHECK(n.exec.status == drafts[i].status);
    if (drafts[i].status == core::ExecStatus::Success) {
      CHECK(*n.score == doctest::Approx(drafts[i].score));
    }
  }

  // The single failed leaf (draft 2) is debugged first; the fix succeeds.
  const auto& fix = tree.node("n0006");
  CHECK(fix.op == core::OperatorKind::Debug);
  CHECK(fix.parent_id == std::string("n0002"));
  CHECK(fix.exec.status == core::ExecStatus::Success);
  CHECK(*fix.score == doctest::Approx(0.27));  // f(1.4)

  // With no failures left the loop improves the best node, chaining as the
  // improvement takes the lead.
  const auto& imp1 = tree.node("n0007");
  CHECK(imp1.op == core::OperatorKind::Improve);
  CHECK(imp1.parent_id == std::string("n0006"));
  CHECK(*imp1.score == doctest::Approx(0.25));  // f(1.5), the optimum

  const auto& imp2 = tree.node("n0008");
  CHECK(imp2.op == core::OperatorKind::Improve);
  CHECK(imp2.parent_id == std::string("n0007"));
  CHECK(*imp2.score == doctest::Approx(0.2502));  // f(1.49), slightly worse

  CHECK(core::best_node(tree)->node_id == "n0007");
}

TEST_CASE("greedy trajectories are byte-identical across repeated runs") {
  const auto a = run_fixture(core::Scaffold::Greedy, 8, "greedy-det-a");
  const auto b = run_fixture(core::Scaffold::Greedy, 8, "greedy-det-b");
  REQUIRE_FALSE(a.trajectory.empty());
  CHECK(a.trajectory == b.trajectory);
}

TEST_CASE("mcts trajectories are byte-identical across repeated runs") {
  const auto a = run_fixture(core::Scaffold::Mcts, 8, "mcts-det-a");
  const auto b = run_fixture(core::Scaffold::Mcts, 8, "mcts-det-b");
  REQUIRE_FALSE(a.trajectory.empty());
  CHECK(a.trajectory == b.trajectory);
}

TEST_CASE("greedy best-score sequence is non-decreasing over the log") {
  const auto result = run_fixture(core::Scaffold::Greedy, 8, "greedy-monotone");
  core::SolutionTree replay("quadratic-min", false);
  std::optional<double> best;
  for (const auto& node : result.tree.nodes()) {
    replay.add_node(node);
    const auto* b = core::best_node(replay);
    if (best && b) CHECK(*b->score <= *best + 1e-12);  // lower is better
    if (b) best = b->score;
  }
}

TEST_CASE("all drafts buggy with debug_limit=0 leaves exactly 5 nodes") {
  auto cfg = base_config(core::Scaffold::Greedy, 20);
  cfg.debug_limit = 0;
  backend::ScriptedBackend be(
      {{backend::ScriptEntry::Match::Contains, "initial draft",
        testing::completion("Always the same idea.", "fail")}},
      0);
  Runner runner(cfg, be);
  runner.set_executor(fake_exec);
  const auto result = runner.run(quadratic_task(), 0, "dbg0--quadratic-min--s0");
  CHECK(result.tree.size() == 5);
  CHECK(core::best_node(result.tree) == nullptr);
  for (const auto& n : result.tree.nodes()) CHECK(n.op == core::OperatorKind::Draft);
}

TEST_CASE("max_nodes=5 caps the run at the drafts") {
  const auto result = run_fixture(core::Scaffold::Greedy, 5, "greedy-cap");
  CHECK(result.tree.size() == 5);
  for (const auto& n : result.tree.nodes()) CHECK(n.op == core::OperatorKind::Draft);
}

TEST_CASE("a budget too small for five drafts is recorded, not raised") {
  const auto result = run_fixture(core::Scaffold::Greedy, 3, "greedy-short");
  CHECK(result.tree.size() == 3);
  CHECK(result.budget_exhausted_before_drafts);
}

TEST_CASE("debug chains stop at the debug limit") {
  auto cfg = base_config(core::Scaffold::Greedy, 20);
  cfg.debug_limit = 2;
  backend::ScriptedBackend be(
      {{backend::ScriptEntry::Match::Contains, "initial draft",
        testing::completion("Idea.", "fail")},
       {backend::ScriptEntry::Match::Contains, "fixing a broken solution",
        testing::completion("Fix attempt.", "fail again")}},
      0);
  Runner runner(cfg, be);
  runner.set_executor(fake_exec);
  const auto result = runner.run(quadratic_task(), 0, "chain--quadratic-min--s0");
  // 5 buggy drafts, each debugged twice (chain depth 2), all still failing.
  CHECK(result.tree.size() == 15);
  for (const auto& n : result.tree.nodes()) {
    CHECK(result.tree.debug_chain_depth(n.node_id) <= 2);
  }
}

TEST_CASE("a backend failure aborts with the partial tree persisted") {
  auto cfg = base_config(core::Scaffold::Greedy, 20);
  // Only drafts 1-5 are scripted; the first debug/improve prompt misses.
  std::vector<backend::ScriptEntry> drafts_only;
  for (const auto& e : testing::golden_script()) {
    if (util::contains(e.key, "initial draft")) drafts_only.push_back(e);
  }
  backend::ScriptedBackend be(drafts_only, 0);
  Runner runner(cfg, be, operators::PromptTemplates::builtin(),
                testing::test_dir("search-abort"));
  const auto result = runner.run(quadratic_task(), 0, "abort--quadratic-min--s0");
  CHECK(result.aborted);
  CHECK(util::contains(result.abort_reason, "ScriptMiss"));
  CHECK(result.tree.size() == 5);
  CHECK(util::split(util::trim(result.trajectory), '\n').size() == 5);
}

TEST_CASE("uct score prefers exploitation at c=0 and unvisited nodes always") {
  CHECK(uct_score(0.9, 10, 3, 0.0) > uct_score(0.2, 10, 6, 0.0));
  CHECK(std::isinf(uct_score(0.0, 10, 0, 1.414)));
  // Exploration pulls a less-visited child ahead under equal means.
  CHECK(uct_score(0.5, 100, 2, 1.414) > uct_score(0.5, 100, 50, 1.414));
}

TEST_CASE("mcts root expansion fills drafts first, capped at five") {
  const auto four = run_fixture(core::Scaffold::Mcts, 4, "mcts-four");
  CHECK(four.tree.size() == 4);
  CHECK(four.tree.root_draft_ids().size() == 4);  // 3 children -> 4th draft next

  const auto eight = run_fixture(core::Scaffold::Mcts, 8, "mcts-eight");
  CHECK(eight.tree.root_draft_ids().size() == 5);
  CHECK(eight.tree.size() == 8);
}

TEST_CASE("mcts visit counts are conserved after every iteration") {
  int iterations = 0;
  RunHooks hooks;
  hooks.after_iteration = [&iterations](const core::SolutionTree& tree,
                                        const MctsStats& stats) {
    ++iterations;
    CHECK(stats.root_visits == iterations);
    int root_children_sum = 0;
    for (const auto& id : tree.root_draft_ids()) root_children_sum += stats.visits(id);
    CHECK(stats.root_visits >= root_children_sum);
    for (const auto& node : tree.nodes()) {
      int child_sum = 0;
      for (const auto& child : tree.children_of(node.node_id))
        child_sum += stats.visits(child);
      CHECK(stats.visits(node.node_id) >= child_sum);
      // Normalized rewards keep mean values in [0, 1].
      if (stats.visits(node.node_id) > 0) {
        const double mean = stats.value(node.node_id) / stats.visits(node.node_id);
        CHECK(mean >= -1e-12);
        CHECK(mean <= 1.0 + 1e-12);
      }
    }
  };
  const auto result = run_fixture(core::Scaffold::Mcts, 10, "mcts-conservation", hooks);
  CHECK(iterations >= 10);
  CHECK(result.tree.size() <= 10);
}

TEST_CASE("mcts expands debug under failed nodes and improve under successes") {
  const auto result = run_fixture(core::Scaffold::Mcts, 12, "mcts-ops");
  for (const auto& node : result.tree.nodes()) {
    if (!node.parent_id) continue;
    const auto& parent = result.tree.node(*node.parent_id);
    if (node.op == core::OperatorKind::Debug) CHECK(parent.exec.failed());
    if (node.op == core::OperatorKind::Improve)
      CHECK(parent.exec.status == core::ExecStatus::Success);
  }
}

TEST_CASE("no node starts after the wall-clock budget is spent") {
  auto cfg = base_config(core::Scaffold::Greedy, 100);
  cfg.wall_clock_s = 3.0;  // logical seconds; each node costs ~1-1.5
  backend::ScriptedBackend be(testing::golden_script(), 3);
  Runner runner(cfg, be, operators::PromptTemplates::builtin(),
                testing::test_dir("search-budget"));
  const auto result = runner.run(quadratic_task(), 3, "budget--quadratic-min--s3");
  CHECK(result.tree.size() < 100);
  for (const auto& n : result.tree.nodes()) {
    CHECK(n.created_at <= cfg.wall_clock_s);
  }
}

TEST_CASE("mcts invariants hold under randomized executors") {
  // Random success/failure/score patterns; the structural invariants must
  // survive whatever the executor does.
  backend::ScriptedBackend be(
      {{backend::ScriptEntry::Match::Contains, "initial draft",
        testing::completion("Some idea.", "pass")},
       {backend::ScriptEntry::Match::Contains, "fixing a broken solution",
        testing::completion("Some fix.", "pass")},
       {backend::ScriptEntry::Match::Contains, "improving a working solution",
        testing::completion("Some improvement.", "pass")}},
      0);

  for (uint64_t seed = 0; seed < 25; ++seed) {
    auto cfg = base_config(core::Scaffold::Mcts, 16);
    cfg.debug_limit = 2;
    cfg.mcts_max_children = 2;
    util::Rng exec_rng(seed);
    Runner runner(cfg, be);
    runner.set_executor([&exec_rng](const core::SolutionNode&, const core::TaskSpec&) {
      taskenv::ExecutedNode r;
      const double u = exec_rng.next_double();
      if (u < 0.4) {
        r.outcome.status = core::ExecStatus::Buggy;
      } else if (u < 0.5) {
        r.outcome.status = core::ExecStatus::Timeout;
      } else {
        r.outcome.status = core::ExecStatus::Success;
        r.score = exec_rng.next_double();
      }
      r.outcome.wall_time_s = 1.0;
      return r;
    });

    RunHooks hooks;
    hooks.after_iteration = [](const core::SolutionTree& tree, const MctsStats& stats) {
      int root_sum = 0;
      for (const auto& id : tree.root_draft_ids()) root_sum += stats.visits(id);
      REQUIRE(stats.root_visits >= root_sum);
      for (const auto& node : tree.nodes()) {
        int child_sum = 0;
        for (const auto& child : tree.children_of(node.node_id))
          child_sum += stats.visits(child);
        REQUIRE(stats.visits(node.node_id) >= child_sum);
      }
    };
    runner.set_hooks(hooks);
    const auto result =
        runner.run(quadratic_task(), seed, "rand--quadratic-min--s" + std::to_string(seed));

    REQUIRE(result.tree.size() <= 16);
    REQUIRE(result.tree.root_draft_ids().size() <= 5);
    for (const auto& node : result.tree.nodes()) {
      REQUIRE(result.tree.debug_chain_depth(node.node_id) <= cfg.debug_limit);
      if (node.op == core::OperatorKind::Improve) {
        REQUIRE(result.tree.node(*node.parent_id).exec.status ==
                core::ExecStatus::Success);
      }
      if (node.op == core::OperatorKind::Debug) {
        REQUIRE(result.tree.node(*node.parent_id).exec.failed());
      }
    }
    for (const auto& id : result.tree.root_draft_ids()) {
      REQUIRE(result.tree.children_of(id).size() <=
              static_cast<size_t>(cfg.mcts_max_children));
    }
  }
}

TEST_CASE("search handles higher-is-better tasks: best tracks the maximum") {
  // point-classify scores are accuracies; the scripted agent submits three
  // label sets of increasing quality.
  const auto task = *taskenv::find_task(taskenv::synthetic_task_pack(), "point-classify");
  const auto labels_code = [&](int flip_first_k, const std::string& marker) {
    // Reference perceptron, then flip the first k predictions.
    std::string code = taskenv::reference_solution("point-classify");
    code += "\nrows = open('submission.csv').read().splitlines()\n"
            "k = " + std::to_string(flip_first_k) + "\n"
            "out = [rows[0]]\n"
            "for i, line in enumerate(rows[1:]):\n"
            "    rid, label = line.split(',')\n"
            "    if i < k: label = '1' if label == '0' else '0'\n"
            "    out.append(rid + ',' + label)\n"
            "open('submission.csv', 'w').write('\\n'.join(out) + '\\n')\n"
            "# " + marker + "\n";
    return code;
  };

  backend::ScriptedBackend be(
      {{backend::ScriptEntry::Match::Contains, "This is initial draft 1 of 5.",
        testing::completion("Weak classifier.", labels_code(9, "w1"))},
       {backend::ScriptEntry::Match::Contains, "initial draft",
        testing::completion("Mediocre classifier.", labels_code(6, "w2"))},
       {backend::ScriptEntry::Match::Contains, "improving a working solution",
        testing::completion("Strong classifier.", labels_code(0, "w3"))}},
      0);
  auto cfg = base_config(core::Scaffold::Greedy, 6);
  Runner runner(cfg, be, operators::PromptTemplates::builtin(),
                testing::test_dir("search-hib"));
  const auto result = runner.run(task, 0, "hib--point-classify--s0");

  REQUIRE_FALSE(result.aborted);
  REQUIRE(result.tree.size() == 6);
  const auto* best = core::best_node(result.tree);
  REQUIRE(best != nullptr);
  CHECK(best->node_id == "n0006");  // the improvement, perfect accuracy
  CHECK(*best->score == doctest::Approx(1.0));
  CHECK(*result.tree.node("n0001").score == doctest::Approx(21.0 / 30.0));
}

TEST_CASE("node time accounting: means and shares over Success nodes") {
  core::SolutionTree tree("t", true);
  core::SolutionNode a;
  a.node_id = "a";
  a.op = core::OperatorKind::Draft;
  a.draft_index = 1;
  a.code = "x";
  a.exec.status = core::ExecStatus::Success;
  a.exec.wall_time_s = 100.0;
  a.score = 0.5;
  auto b = a;
  b.node_id = "b";
  b.draft_index = 2;
  b.exec.wall_time_s = 300.0;
  auto c = a;
  c.node_id = "c";
  c.draft_index = 3;
  c.exec.status = core::ExecStatus::Buggy;
  c.exec.wall_time_s = 100.0;
  c.score = std::nullopt;
  tree.add_node(a);
  tree.add_node(b);
  tree.add_node(c);

  const auto acc = node_time_accounting(tree);
  REQUIRE(acc.mean_exec_time_valid_s.has_value());
  CHECK(*acc.mean_exec_time_valid_s == doctest::Approx(200.0));
  CHECK(acc.share_time_valid == doctest::Approx(0.8));

  core::SolutionTree none("t2", true);
  auto fail = c;
  fail.node_id = "f";
  fail.draft_index = 1;
  none.add_node(fail);
  const auto empty = node_time_accounting(none);
  CHECK_FALSE(empty.mean_exec_time_valid_s.has_value());
  CHECK(empty.share_time_valid == doctest::Approx(0.0));

  core::SolutionTree all("t3", true);
  auto ok = a;
  ok.node_id = "g";
  all.add_node(ok);
  CHECK(node_time_accounting(all).share_time_valid == doctest::Approx(1.0));
}

TEST_SUITE_END();
