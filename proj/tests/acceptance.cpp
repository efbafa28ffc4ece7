// Acceptance suite: one criterion per section, one PASS/FAIL line each.
// Returns nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "aslab/cli.hpp"
#include "aslab/core.hpp"
#include "aslab/diversity.hpp"
#include "aslab/metrics.hpp"
#include "aslab/search.hpp"
#include "aslab/simlab.hpp"
#include "aslab/taskenv.hpp"
#include "aslab/util.hpp"
#include "fixtures.hpp"

using namespace aslab;

namespace {

struct CheckFailure {
  std::string what;
};

void require(bool ok, const std::string& what) {
  if (!ok) throw CheckFailure{what};
}

void require_near(double got, double want, double tol, const std::string& what) {
  if (!(std::abs(got - want) <= tol)) {
    throw CheckFailure{what + ": got " + util::format_double(got) + ", want " +
                       util::format_double(want) + " +/- " + util::format_double(tol)};
  }
}

int g_failures = 0;

void criterion(int number, const std::string& name, const std::function<void()>& body) {
  const auto start = std::chrono::steady_clock::now();
  std::string failure;
  try {
    body();
  } catch (const CheckFailure& f) {
    failure = f.what;
  } catch (const std::exception& e) {
    failure = std::string("exception: ") + e.what();
  }
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (failure.empty()) {
    std::printf("PASS  criterion %d: %s (%.1fs)\n", number, name.c_str(), elapsed);
  } else {
    std::printf("FAIL  criterion %d: %s (%.1fs)\n      %s\n", number, name.c_str(), elapsed,
                failure.c_str());
    ++g_failures;
  }
  std::fflush(stdout);
}

// --------------------------------------------------------------------------
// 1. Entropy unit suite + property tests
// --------------------------------------------------------------------------

void entropy_suite() {
  require_near(diversity::shannon_entropy({{"A", 1}}), 0.0, 1e-12, "single label");
  require_near(diversity::shannon_entropy({{"A", 1}, {"B", 1}, {"C", 1}, {"D", 1}}), 2.0,
               1e-12, "uniform over four");
  require_near(diversity::shannon_entropy({{"A", 2}, {"B", 1}, {"C", 1}}), 1.5, 1e-12,
               "2-1-1 histogram");

  util::Rng rng(404);
  for (int trial = 0; trial < 10000; ++trial) {
    const int n_labels = 1 + static_cast<int>(rng.uniform_index(8));
    std::map<std::string, int> hist;
    for (int i = 0; i < n_labels; ++i)
      hist["L" + std::to_string(i)] = 1 + static_cast<int>(rng.uniform_index(30));
    const double h = diversity::shannon_entropy(hist);
    require(h >= -1e-12, "entropy nonnegative");
    require(h <= std::log2(static_cast<double>(hist.size())) + 1e-12, "entropy <= log2(n)");

    std::map<std::string, int> permuted;
    int k = static_cast<int>(rng.uniform_index(1000));
    for (const auto& [label, count] : hist) permuted["P" + std::to_string(k++)] = count;
    require(std::abs(diversity::shannon_entropy(permuted) - h) <= 1e-12,
            "permutation invariance");
  }
}

// --------------------------------------------------------------------------
// 2. Medal thresholds vs the band oracle
// --------------------------------------------------------------------------

void medal_thresholds_suite() {
  // Literal translation of the published band table, independent of the
  // production implementation.
  const auto oracle = [](int n) {
    int bronze, silver, gold;
    if (n < 250) bronze = static_cast<int>(std::floor(n * 0.40));
    else if (n < 1000) bronze = 100;
    else bronze = static_cast<int>(std::floor(n * 0.10));
    if (n < 250) silver = static_cast<int>(std::floor(n * 0.20));
    else if (n < 1000) silver = 50;
    else silver = static_cast<int>(std::floor(n * 0.05));
    if (n < 100) gold = static_cast<int>(std::floor(n * 0.10));
    else if (n < 250) gold = 10;
    else gold = 10 + static_cast<int>(std::floor(n * 0.002));
    return std::array<int, 3>{bronze, silver, gold};
  };

  for (int n : {50, 99, 100, 150, 249, 250, 500, 999, 1000, 1500}) {
    const auto t = metrics::medal_thresholds(n);
    const auto o = oracle(n);
    require(t.bronze_rank == o[0],
            "bronze mismatch at n=" + std::to_string(n) + ": " +
                std::to_string(t.bronze_rank) + " vs " + std::to_string(o[0]));
    require(t.silver_rank == o[1], "silver mismatch at n=" + std::to_string(n));
    require(t.gold_rank == o[2], "gold mismatch at n=" + std::to_string(n));
  }
  require(metrics::medal_thresholds(500).gold_rank == 11, "gold(n=500) must be 11");
}

// --------------------------------------------------------------------------
// 3. Elo: 64% at 100 points, gap recovery, dominance ordering
// --------------------------------------------------------------------------

void elo_suite() {
  std::vector<metrics::MatchRecord> record;
  for (int i = 0; i < 64; ++i) record.push_back({"A", "B", metrics::MatchOutcome::AWin});
  for (int i = 0; i < 36; ++i) record.push_back({"A", "B", metrics::MatchOutcome::BWin});
  const auto table = metrics::elo_ratings(record);
  const double gap = table.rating.at("A") - table.rating.at("B");
  require_near(metrics::elo_expected_win(gap), 0.640, 0.001,
               "fitted expected win at the fitted gap");
  require_near(gap, 100.0, 5.0, "64/100 record recovers a 100-point gap");

  util::Rng rng(777);
  for (int tournament = 0; tournament < 1000; ++tournament) {
    const int n_agents = 3 + static_cast<int>(rng.uniform_index(5));
    std::vector<std::string> agents;
    for (int i = 0; i < n_agents; ++i) agents.push_back("a" + std::to_string(i));
    std::vector<metrics::MatchRecord> matches;
    for (int i = 1; i < n_agents; ++i) {
      const int games = 1 + static_cast<int>(rng.uniform_index(4));
      for (int g = 0; g < games; ++g)
        matches.push_back({agents[0], agents[static_cast<size_t>(i)],
                           metrics::MatchOutcome::AWin});
    }
    for (int i = 1; i < n_agents; ++i) {
      for (int j = i + 1; j < n_agents; ++j) {
        const int games = static_cast<int>(rng.uniform_index(4));
        for (int g = 0; g < games; ++g) {
          const double u = rng.next_double();
          matches.push_back({agents[static_cast<size_t>(i)], agents[static_cast<size_t>(j)],
                             u < 0.4 ? metrics::MatchOutcome::AWin
                                     : (u < 0.8 ? metrics::MatchOutcome::BWin
                                                : metrics::MatchOutcome::Tie)});
        }
      }
    }
    const auto t = metrics::elo_ratings(matches);
    const double top = t.rating.at(agents[0]);
    for (int i = 1; i < n_agents; ++i) {
      require(top > t.rating.at(agents[static_cast<size_t>(i)]),
              "dominant agent not strictly first in tournament " +
                  std::to_string(tournament));
    }
  }
}

// --------------------------------------------------------------------------
// 4. Controlled-experiment reproduction at 1,000 seeds
// --------------------------------------------------------------------------

void controlled_experiment_suite() {
  simlab::ExperimentOptions opts;
  opts.n_seeds = 1000;
  opts.n_resamples = 10000;
  opts.elo_resamples = 1000;

  const auto scenario = simlab::SimScenario::default_controlled();
  const auto report = simlab::controlled_experiment(scenario, opts);

  const auto* base_medal = report.find("baseline", "medal_rate");
  const auto* abl_medal = report.find("ablated", "medal_rate");
  const auto* base_valid = report.find("baseline", "valid_submission_rate");
  const auto* abl_valid = report.find("ablated", "valid_submission_rate");
  require(base_medal && abl_medal && base_valid && abl_valid, "report rows present");

  // (a) The ablated agent concentrates on fewer architectures.
  const double base_le2 = report.arch_cdf.at("baseline")[1];
  const double abl_le2 = report.arch_cdf.at("ablated")[1];
  require(abl_le2 > base_le2,
          "fraction of tasks with <=2 architectures: ablated " +
              util::format_double(abl_le2) + " vs baseline " + util::format_double(base_le2));

  // (b) Its valid-submission rate drops.
  require(abl_valid->value < base_valid->value,
          "valid rate: ablated " + util::format_double(abl_valid->value) + " vs baseline " +
              util::format_double(base_valid->value));

  // (c) Its medal rate drops with non-overlapping 95% CIs.
  require(abl_medal->value < base_medal->value, "medal rate direction");
  require(abl_medal->ci_high < base_medal->ci_low,
          "medal-rate CIs overlap: ablated [" + util::format_double(abl_medal->ci_low) +
              ", " + util::format_double(abl_medal->ci_high) + "] vs baseline [" +
              util::format_double(base_medal->ci_low) + ", " +
              util::format_double(base_medal->ci_high) + "]");

  // Null variant: perfect implementability erases the gap.
  auto null_scenario = scenario;
  for (auto& task : null_scenario.tasks) task.broken_arch.reset();
  for (auto& agent : null_scenario.agents) {
    agent.implement_skill.clear();
    agent.implement_skill["*"] = 1.0;
    agent.score_model.clear();
    agent.score_model["*"]["*"] = {0.72, 0.08};
  }
  const auto null_report = simlab::controlled_experiment(null_scenario, opts);
  const auto* nb = null_report.find("baseline", "medal_rate");
  const auto* na = null_report.find("ablated", "medal_rate");
  const bool overlaps = !(na->ci_high < nb->ci_low || nb->ci_high < na->ci_low);
  require(overlaps, "null scenario shows a significant gap: baseline [" +
                        util::format_double(nb->ci_low) + ", " +
                        util::format_double(nb->ci_high) + "] vs ablated [" +
                        util::format_double(na->ci_low) + ", " +
                        util::format_double(na->ci_high) + "]");
}

// --------------------------------------------------------------------------
// 5. Search golden determinism + MCTS conservation + greedy monotonicity
// --------------------------------------------------------------------------

void search_golden_suite() {
  const auto task = *taskenv::find_task(taskenv::synthetic_task_pack(), "quadratic-min");

  const auto run_once = [&](core::Scaffold scaffold, const std::string& tag,
                            search::RunHooks hooks = {}) {
    core::ExperimentConfig cfg;
    cfg.scaffold = scaffold;
    cfg.max_nodes = 9;
    cfg.wall_clock_s = 1e9;
    cfg.deterministic_timing = true;
    backend::ScriptedBackend be(testing::golden_script(), 12);
    search::Runner runner(cfg, be, operators::PromptTemplates::builtin(),
                          testing::test_dir("accept-search-" + tag));
    runner.set_hooks(std::move(hooks));
    return runner.run(task, 12, "acc--quadratic-min--s12");
  };

  const auto g1 = run_once(core::Scaffold::Greedy, "g1");
  const auto g2 = run_once(core::Scaffold::Greedy, "g2");
  require(!g1.trajectory.empty() && g1.trajectory == g2.trajectory,
          "greedy trajectories not byte-identical");

  int iterations = 0;
  search::RunHooks hooks;
  hooks.after_iteration = [&iterations](const core::SolutionTree& tree,
                                        const search::MctsStats& stats) {
    ++iterations;
    if (stats.root_visits != iterations) throw CheckFailure{"root visits != iterations"};
    int root_sum = 0;
    for (const auto& id : tree.root_draft_ids()) root_sum += stats.visits(id);
    if (stats.root_visits < root_sum) throw CheckFailure{"root visit conservation"};
    for (const auto& node : tree.nodes()) {
      int child_sum = 0;
      for (const auto& child : tree.children_of(node.node_id))
        child_sum += stats.visits(child);
      if (stats.visits(node.node_id) < child_sum)
        throw CheckFailure{"visit conservation at " + node.node_id};
    }
  };
  const auto m1 = run_once(core::Scaffold::Mcts, "m1", hooks);
  const auto m2 = run_once(core::Scaffold::Mcts, "m2");
  require(!m1.trajectory.empty() && m1.trajectory == m2.trajectory,
          "mcts trajectories not byte-identical");
  require(iterations > 0, "mcts ran no iterations");

  // Greedy best-score sequence (lower-is-better task) never regresses.
  core::SolutionTree replay("quadratic-min", false);
  std::optional<double> best;
  for (const auto& node : g1.tree.nodes()) {
    replay.add_node(node);
    if (const auto* b = core::best_node(replay)) {
      if (best) require(*b->score <= *best + 1e-12, "greedy best score regressed");
      best = b->score;
    }
  }
}

// --------------------------------------------------------------------------
// 6. Diversity-performance correlation pipeline
// --------------------------------------------------------------------------

void correlation_pipeline_suite() {
  const std::string dir = testing::test_dir("accept-sweep");
  const auto scenario = simlab::SimScenario::diversity_sweep();
  util::write_file(dir + "/sweep.json", scenario.to_json());

  cli::SimulateOptions sim_opts;
  sim_opts.n_seeds = 300;
  sim_opts.n_resamples = 1000;
  sim_opts.elo_resamples = 200;
  require(cli::cmd_simulate(dir + "/sweep.json", dir + "/sim", sim_opts) == cli::kExitOk,
          "cmd_simulate failed");

  cli::AnalyzeOptions an_opts;
  an_opts.n_resamples = 1000;
  an_opts.elo_resamples = 200;
  require(cli::cmd_analyze(dir + "/sim", dir + "/report", an_opts) == cli::kExitOk,
          "cmd_analyze failed");

  // Figure-1 analogue: agent-level entropy vs medal rate, r >= 0.7.
  double r_agent = 0.0;
  bool found = false;
  for (const auto& line :
       util::split(util::trim(util::read_file(dir + "/report/correlations.csv")), '\n')) {
    const auto cells = util::split(line, ',');
    if (cells.size() == 5 && cells[0] == "per_agent" && cells[2] == "medal_rate") {
      r_agent = std::stod(cells[3]);
      found = true;
    }
  }
  require(found, "per_agent medal_rate correlation row missing");
  require(std::abs(r_agent) >= 0.7,
          "|r| between entropy and medal rate is " + util::format_double(r_agent));
  require(r_agent > 0.0, "entropy-medal correlation should be positive (diversity helps)");

  // The similarity knob that induced the entropy spread correlates negatively
  // with medal rate.
  const auto metrics_text = util::read_file(dir + "/sim/metrics.csv");
  std::vector<double> biases, medals;
  for (const auto& agent : scenario.agents) {
    for (const auto& line : util::split(util::trim(metrics_text), '\n')) {
      const auto cells = util::split(line, ',');
      if (cells.size() == 5 && cells[0] == agent.name && cells[1] == "medal_rate") {
        biases.push_back(agent.similarity_bias);
        medals.push_back(std::stod(cells[2]));
      }
    }
  }
  require(biases.size() == scenario.agents.size(), "medal rows missing for some agents");
  const double r_bias = metrics::pearson_correlation(biases, medals);
  require(r_bias < 0.0,
          "similarity bias should correlate negatively with medal rate, got " +
              util::format_double(r_bias));
}

// --------------------------------------------------------------------------
// 7. Stratified bootstrap behavior
// --------------------------------------------------------------------------

void bootstrap_suite() {
  const auto mean_stat = [](const std::vector<const double*>& s) {
    double sum = 0.0;
    for (const auto* v : s) sum += *v;
    return s.empty() ? 0.0 : sum / static_cast<double>(s.size());
  };

  // Degenerate data: zero width at the point value.
  std::map<std::string, std::vector<double>> degenerate{{"t1", {0.7, 0.7}}, {"t2", {0.7}}};
  const auto [dlo, dhi] = metrics::stratified_bootstrap_ci(degenerate, mean_stat, 2000);
  require(dlo == dhi, "degenerate CI has nonzero width");
  require_near(dlo, 0.7, 1e-12, "degenerate CI location");

  util::Rng rng(909);
  int contained = 0, shrunk = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::map<std::string, std::vector<double>> small, big;
    double total = 0.0;
    int count = 0;
    const int n_tasks = 2 + static_cast<int>(rng.uniform_index(4));
    for (int t = 0; t < n_tasks; ++t) {
      auto& s = small["t" + std::to_string(t)];
      auto& b = big["t" + std::to_string(t)];
      for (int i = 0; i < 6; ++i) {
        s.push_back(rng.normal(0.0, 1.0));
        total += s.back();
        ++count;
      }
      for (int i = 0; i < 24; ++i) b.push_back(rng.normal(0.0, 1.0));
    }
    const double point = total / count;
    const auto [lo, hi] = metrics::stratified_bootstrap_ci(
        small, mean_stat, 1000, 0.95, static_cast<uint64_t>(trial));
    if (lo <= point && point <= hi) ++contained;
    const auto [blo, bhi] = metrics::stratified_bootstrap_ci(
        big, mean_stat, 1000, 0.95, static_cast<uint64_t>(trial) + 5000);
    if (bhi - blo < hi - lo) ++shrunk;
  }
  require(contained == 100, "point estimate escaped the CI in " +
                                std::to_string(100 - contained) + " of 100 datasets");
  require(shrunk >= 95, "CI width shrank in only " + std::to_string(shrunk) + " of 100");
}

// --------------------------------------------------------------------------
// 8. End-to-end smoke: run + analyze
// --------------------------------------------------------------------------

void smoke_suite() {
  const std::string dir = testing::test_dir("accept-smoke");
  util::write_file(dir + "/script.json", testing::golden_script_json());

  const auto config_for = [&](const std::string& agent, const std::string& scaffold) {
    const std::string text =
        "[scaffold]\nkind = " + scaffold + "\nagent_name = " + agent +
        "\nseed = 1\nseeds = 0,1\n[diversity]\nmode = baseline\n[backend]\nkind = scripted\n"
        "script = " + dir + "/script.json\n[budget]\nmax_nodes = 7\n[tasks]\n"
        "use = quadratic-min, mean-estimate\n";
    const std::string path = dir + "/" + agent + ".ini";
    util::write_file(path, text);
    return path;
  };

  // mean-estimate needs scripted drafts too; extend the script with a task
  // marker hit before the generic draft entries.
  std::string script = util::read_file(dir + "/script.json");
  const std::string extra =
      "{\"entries\": [\n"
      "  {\"match\": \"contains\", \"key\": \"Estimate the mean\", \"response\": "
      "\"PLAN: Read the sample and submit its mean.\\n```python\\nvals = [float(l) for l in "
      "open('train.csv').read().splitlines()[1:] if l]\\n"
      "open('submission.csv','w').write('id,prediction\\\\n0,%r\\\\n' % (sum(vals)/len(vals)))\\n```\"},\n";
  script = extra + script.substr(script.find("{\"entries\": [") + 13);
  util::write_file(dir + "/script.json", script);

  require(cli::cmd_run(config_for("smoke-greedy", "greedy"), dir + "/out") == cli::kExitOk,
          "cmd_run (greedy) exit code");
  require(cli::cmd_run(config_for("smoke-mcts", "mcts"), dir + "/out") == cli::kExitOk,
          "cmd_run (mcts) exit code");
  require(util::list_files(dir + "/out/logs", ".jsonl").size() == 8,
          "expected 8 trajectory logs (2 agents x 2 tasks x 2 seeds)");

  cli::AnalyzeOptions opts;
  opts.n_resamples = 500;
  opts.elo_resamples = 100;
  require(cli::cmd_analyze(dir + "/out", dir + "/report", opts) == cli::kExitOk,
          "cmd_analyze exit code");

  const auto text = util::read_file(dir + "/report/metrics.csv");
  const auto lines = util::split(util::trim(text), '\n');
  require(lines.at(0) == "agent,metric,value,ci_low,ci_high", "metrics.csv header");
  std::map<std::string, int> metric_rows;
  for (size_t i = 1; i < lines.size(); ++i) {
    const auto cells = util::split(lines[i], ',');
    require(cells.size() == 5, "metrics.csv row has 5 columns");
    for (const auto& cell : cells) require(!cell.empty(), "metrics.csv cell populated");
    metric_rows[cells[1]] += 1;
  }
  for (const char* metric : {"medal_rate", "valid_submission_rate", "avg_normalized_score",
                             "avg_percentile", "elo"}) {
    require(metric_rows[metric] >= 2,
            std::string("metric missing for both agents: ") + metric);
  }
}

}  // namespace

int main() {
  std::filesystem::create_directories(ASLAB_TEST_TMP);
  criterion(1, "shannon entropy unit + property suite", entropy_suite);
  criterion(2, "kaggle medal thresholds vs band oracle", medal_thresholds_suite);
  criterion(3, "elo: 64% at 100 points, gap recovery, dominance", elo_suite);
  criterion(4, "controlled diversity ablation at 1000 seeds", controlled_experiment_suite);
  criterion(5, "search goldens: determinism, conservation, monotonicity",
            search_golden_suite);
  criterion(6, "diversity-performance correlation pipeline", correlation_pipeline_suite);
  criterion(7, "stratified bootstrap: degeneracy, coverage, width", bootstrap_suite);
  criterion(8, "end-to-end smoke: run + analyze", smoke_suite);

  if (g_failures > 0) {
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
  }
  std::printf("all 8 criteria passed\n");
  return 0;
}
