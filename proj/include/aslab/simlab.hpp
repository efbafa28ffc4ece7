#pragma once

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "aslab/core.hpp"
#include "aslab/metrics.hpp"

namespace aslab::simlab {

// Parametrized agent: an idea sampler with a similarity knob plus a
// per-approach implementability model. similarity_bias is the probability
// that each draft after the first copies the previous draft's approach.
struct AgentBehaviorModel {
  struct ScoreDist {
    double mean = 0.7;
    double stddev = 0.08;
  };

  std::string name;
  std::map<std::string, double> arch_preference;   // approach -> probability
  double similarity_bias = 0.0;
  std::map<std::string, double> implement_skill;   // approach -> success prob ("*" fallback)
  // task_id -> approach -> score distribution; "*" keys act as fallbacks.
  std::map<std::string, std::map<std::string, ScoreDist>> score_model;
  // Probability that a failed draft is rescued by a simulated debug pass.
  double rescue_probability = 0.0;

  double skill_for(const std::string& approach) const;
  ScoreDist score_for(const std::string& task_id, const std::string& approach) const;
};

struct SimTask {
  core::TaskSpec spec;
  double score_min = 0.0;
  double score_max = 1.0;
  std::optional<std::string> broken_arch;  // success probability forced to 0
};

struct SimScenario {
  std::string name;
  std::vector<SimTask> tasks;
  std::vector<AgentBehaviorModel> agents;
  int n_seeds = 200;
  int drafts_per_task = 5;
  uint64_t master_seed = 1234;
  // approach -> model family keyword used when rendering draft plans.
  std::map<std::string, std::string> approach_families;

  static SimScenario from_json(const std::string& text);
  static SimScenario from_file(const std::string& path);
  std::string to_json() const;

  // Embedded two-agent controlled experiment (baseline vs ablated diversity
  // over broken-architecture tasks).
  static SimScenario default_controlled();

  // Five agents with increasing similarity bias; when vary_preference is set
  // their approach preferences also concentrate, mirroring how less diverse
  // scaffolds favor fewer architectures.
  static SimScenario diversity_sweep(int n_agents = 5, bool vary_preference = true);

  std::vector<core::TaskSpec> task_specs() const;
};

struct SimRun {
  std::vector<core::SolutionTree> trees;             // one per task
  std::vector<metrics::AttemptResult> attempts;      // one per task
};

// One (agent, seed) pass over every scenario task. Trees use the same node
// and trajectory schema as real runs; attempts are graded through `metrics`.
SimRun simulate_run(const AgentBehaviorModel& model, const SimScenario& scenario,
                    uint64_t seed);

struct ReportRow {
  std::string agent;
  std::string metric;
  double value = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

struct ExperimentReport {
  std::vector<ReportRow> rows;
  // Per-agent CDF of distinct architectures per (task, seed) tree, k = 1..5.
  std::map<std::string, std::array<double, 5>> arch_cdf;
  std::map<std::string, std::vector<metrics::AttemptResult>> attempts;

  std::string to_csv() const;       // {agent, metric, value, ci_low, ci_high}
  std::string cdf_to_csv() const;   // {agent, k, fraction_le_k}
  const ReportRow* find(const std::string& agent, const std::string& metric) const;
};

struct ExperimentOptions {
  int n_seeds = 0;          // 0: use scenario.n_seeds
  int n_resamples = 10000;
  int elo_resamples = 2000;
  double confidence = 0.95;
  uint64_t bootstrap_seed = 7;
  // Observer for every simulated run (used to persist trajectory logs).
  std::function<void(const std::string& agent, uint64_t seed, const SimRun&)> on_run;
};

// Runs every scenario agent over tasks x seeds and reports medal rate, valid
// submission rate, mean normalized score, mean percentile and Elo, each with
// stratified bootstrap confidence intervals, plus the per-agent
// distinct-architecture CDF.
ExperimentReport controlled_experiment(const SimScenario& scenario,
                                       const ExperimentOptions& options = {});

}  // namespace aslab::simlab
