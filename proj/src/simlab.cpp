#include "aslab/simlab.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "aslab/diversity.hpp"
#include "aslab/embedded_data.hpp"
#include "aslab/error.hpp"
#include "aslab/util.hpp"

namespace aslab::simlab {

double AgentBehaviorModel::skill_for(const std::string& approach) const {
  auto it = implement_skill.find(approach);
  if (it != implement_skill.end()) return it->second;
  it = implement_skill.find("*");
  if (it != implement_skill.end()) return it->second;
  return 1.0;
}

AgentBehaviorModel::ScoreDist AgentBehaviorModel::score_for(const std::string& task_id,
                                                            const std::string& approach) const {
  for (const std::string& task_key : {task_id, std::string("*")}) {
    auto t = score_model.find(task_key);
    if (t == score_model.end()) continue;
    for (const std::string& arch_key : {approach, std::string("*")}) {
      auto a = t->second.find(arch_key);
      if (a != t->second.end()) return a->second;
    }
  }
  return {};
}

// ---------------------------------------------------------------------------
// Scenario (de)serialization
// ---------------------------------------------------------------------------

namespace {

core::Leaderboard synth_leaderboard(const std::string& task_id, int n_teams, double worst,
                                    double best, bool higher_is_better) {
  core::Leaderboard lb;
  util::Rng rng(util::derive_seed({"sim-leaderboard", task_id}));
  for (int i = 0; i < n_teams; ++i) {
    const double q = (i + 0.5) / n_teams;
    const double wiggle = (rng.next_double() - 0.5) * 0.02 * std::abs(best - worst);
    lb.scores.push_back(worst + (best - worst) * q + wiggle);
  }
  std::sort(lb.scores.begin(), lb.scores.end());
  if (!higher_is_better) std::reverse(lb.scores.begin(), lb.scores.end());
  return lb;
}

AgentBehaviorModel agent_from_json(const nlohmann::json& j) {
  AgentBehaviorModel a;
  a.name = j.at("name").get<std::string>();
  a.similarity_bias = j.at("similarity_bias").get<double>();
  if (a.similarity_bias < 0.0 || a.similarity_bias > 1.0)
    raise(ErrorCode::OutOfRange, "similarity_bias must lie in [0,1]");
  a.arch_preference = j.at("arch_preference").get<std::map<std::string, double>>();
  if (j.contains("implement_skill"))
    a.implement_skill = j.at("implement_skill").get<std::map<std::string, double>>();
  if (j.contains("score_model")) {
    for (const auto& [task_key, arches] : j.at("score_model").items()) {
      for (const auto& [arch_key, dist] : arches.items()) {
        a.score_model[task_key][arch_key] = {dist.at("mean").get<double>(),
                                             dist.at("stddev").get<double>()};
      }
    }
  }
  a.rescue_probability = j.value("rescue_probability", 0.0);
  for (const auto& [arch, p] : a.arch_preference) {
    if (p < 0.0) raise(ErrorCode::OutOfRange, "negative preference for " + arch);
  }
  return a;
}

nlohmann::ordered_json agent_to_json(const AgentBehaviorModel& a) {
  nlohmann::ordered_json j;
  j["name"] = a.name;
  j["similarity_bias"] = a.similarity_bias;
  j["arch_preference"] = a.arch_preference;
  j["implement_skill"] = a.implement_skill;
  nlohmann::ordered_json sm = nlohmann::ordered_json::object();
  for (const auto& [task_key, arches] : a.score_model) {
    for (const auto& [arch_key, dist] : arches) {
      sm[task_key][arch_key] = {{"mean", dist.mean}, {"stddev", dist.stddev}};
    }
  }
  j["score_model"] = sm;
  j["rescue_probability"] = a.rescue_probability;
  return j;
}

}  // namespace

SimScenario SimScenario::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  SimScenario s;
  s.name = j.value("name", "scenario");
  s.master_seed = j.value("master_seed", 1234ull);
  s.n_seeds = j.value("n_seeds", 200);
  s.drafts_per_task = j.value("drafts_per_task", 5);
  if (s.drafts_per_task < 1 || s.drafts_per_task > core::kMaxDrafts)
    raise(ErrorCode::OutOfRange, "drafts_per_task must lie in [1,5]");
  if (j.contains("approach_families"))
    s.approach_families = j.at("approach_families").get<std::map<std::string, std::string>>();

  for (const auto& tj : j.at("tasks")) {
    SimTask t;
    t.spec.task_id = tj.at("task_id").get<std::string>();
    t.spec.description = "Simulated task " + t.spec.task_id;
    t.spec.higher_is_better = tj.value("higher_is_better", true);
    t.score_min = tj.value("score_min", 0.0);
    t.score_max = tj.value("score_max", 1.0);
    if (tj.contains("broken_arch") && !tj.at("broken_arch").is_null())
      t.broken_arch = tj.at("broken_arch").get<std::string>();
    if (tj.contains("leaderboard_scores")) {
      t.spec.leaderboard.scores = tj.at("leaderboard_scores").get<std::vector<double>>();
    } else {
      const auto& lb = tj.at("leaderboard");
      t.spec.leaderboard =
          synth_leaderboard(t.spec.task_id, lb.at("n_teams").get<int>(),
                            lb.at("worst").get<double>(), lb.at("best").get<double>(),
                            t.spec.higher_is_better);
    }
    s.tasks.push_back(std::move(t));
  }
  for (const auto& aj : j.at("agents")) s.agents.push_back(agent_from_json(aj));
  if (s.tasks.empty() || s.agents.empty())
    raise(ErrorCode::EmptyInput, "scenario needs tasks and agents");
  return s;
}

SimScenario SimScenario::from_file(const std::string& path) {
  return from_json(util::read_file(path));
}

std::string SimScenario::to_json() const {
  nlohmann::ordered_json j;
  j["name"] = name;
  j["master_seed"] = master_seed;
  j["n_seeds"] = n_seeds;
  j["drafts_per_task"] = drafts_per_task;
  j["approach_families"] = approach_families;
  j["tasks"] = nlohmann::ordered_json::array();
  for (const auto& t : tasks) {
    nlohmann::ordered_json tj;
    tj["task_id"] = t.spec.task_id;
    tj["higher_is_better"] = t.spec.higher_is_better;
    tj["score_min"] = t.score_min;
    tj["score_max"] = t.score_max;
    if (t.broken_arch) tj["broken_arch"] = *t.broken_arch;
    else tj["broken_arch"] = nullptr;
    tj["leaderboard_scores"] = t.spec.leaderboard.scores;
    j["tasks"].push_back(tj);
  }
  j["agents"] = nlohmann::ordered_json::array();
  for (const auto& a : agents) j["agents"].push_back(agent_to_json(a));
  return j.dump(2);
}

SimScenario SimScenario::default_controlled() {
  return from_json(embedded::kDefaultScenarioJson);
}

SimScenario SimScenario::diversity_sweep(int n_agents, bool vary_preference) {
  SimScenario s = default_controlled();
  s.name = "diversity-sweep";
  s.agents.clear();
  const std::vector<std::string> approaches = {"CNN", "Transformer", "GBDT", "Linear"};
  for (int k = 0; k < n_agents; ++k) {
    AgentBehaviorModel a;
    const double frac = n_agents > 1 ? static_cast<double>(k) / (n_agents - 1) : 0.0;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "bias-%03d", static_cast<int>(frac * 100));
    a.name = buf;
    a.similarity_bias = frac;
    // Optionally concentrate the preference as the bias rises, the way less
    // diverse scaffolds favor a small set of architectures.
    const double boost = vary_preference ? 3.0 * frac : 0.0;
    double total = 0.0;
    for (size_t i = 0; i < approaches.size(); ++i) {
      const double w = i == 0 ? 1.0 + boost : 1.0;
      a.arch_preference[approaches[i]] = w;
      total += w;
    }
    for (auto& [arch, w] : a.arch_preference) w /= total;
    a.implement_skill["*"] = 0.85;
    a.score_model["*"]["*"] = {0.72, 0.08};
    s.agents.push_back(std::move(a));
  }
  return s;
}

std::vector<core::TaskSpec> SimScenario::task_specs() const {
  std::vector<core::TaskSpec> out;
  for (const auto& t : tasks) out.push_back(t.spec);
  return out;
}

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

namespace {

double truncated_normal(util::Rng& rng, double mean, double stddev, double lo, double hi) {
  for (int i = 0; i < 100; ++i) {
    const double v = rng.normal(mean, stddev);
    if (v >= lo && v <= hi) return v;
  }
  return std::clamp(mean, lo, hi);
}

std::string family_keyword(const SimScenario& scenario, const std::string& approach) {
  auto it = scenario.approach_families.find(approach);
  if (it != scenario.approach_families.end()) return it->second;
  return approach;
}

}  // namespace

SimRun simulate_run(const AgentBehaviorModel& model, const SimScenario& scenario,
                    uint64_t seed) {
  SimRun run;
  std::vector<std::string> approaches;
  std::vector<double> weights;
  for (const auto& [arch, w] : model.arch_preference) {
    approaches.push_back(arch);
    weights.push_back(w);
  }
  if (approaches.empty()) raise(ErrorCode::EmptyInput, "agent has no arch preference");

  for (const auto& task : scenario.tasks) {
    util::Rng rng(util::derive_seed(scenario.master_seed,
                                    {model.name, task.spec.task_id, std::to_string(seed)}));
    core::SolutionTree tree(task.spec.task_id, task.spec.higher_is_better);
    std::optional<double> best;
    std::string prev_approach;
    double t = 0.0;

    for (int i = 1; i <= scenario.drafts_per_task; ++i) {
      std::string approach;
      if (i > 1 && rng.next_double() < model.similarity_bias) {
        approach = prev_approach;
      } else {
        approach = approaches[rng.sample_discrete(weights)];
      }
      prev_approach = approach;

      const bool broken = task.broken_arch && *task.broken_arch == approach;
      const double p_success = broken ? 0.0 : model.skill_for(approach);
      bool success = rng.next_double() < p_success;
      // Optional debug rescue of a failed draft (off by default).
      if (!success && !broken && model.rescue_probability > 0.0 &&
          rng.next_double() < model.rescue_probability) {
        success = true;
      }

      core::SolutionNode node;
      char id[16];
      std::snprintf(id, sizeof(id), "n%04d", i);
      node.node_id = id;
      node.op = core::OperatorKind::Draft;
      node.draft_index = i;
      node.plan = "Draft " + std::to_string(i) + ": train a " +
                  family_keyword(scenario, approach) + " model on the provided data.";
      node.code = "# simulated solution (" + approach + ")";
      node.created_at = t;
      t += 0.001;

      if (success) {
        const auto dist = model.score_for(task.spec.task_id, approach);
        const double score =
            truncated_normal(rng, dist.mean, dist.stddev, task.score_min, task.score_max);
        node.exec.status = core::ExecStatus::Success;
        node.exec.wall_time_s = 120.0 + 480.0 * rng.next_double();
        node.score = score;
        const bool better = !best || (task.spec.higher_is_better ? score > *best
                                                                 : score < *best);
        if (better) best = score;
      } else {
        // Broken approaches mimic the repeated-timeout failure mode; plain
        // implementation misses surface as bugs.
        node.exec.status = broken ? core::ExecStatus::Timeout : core::ExecStatus::Buggy;
        node.exec.wall_time_s = broken ? 900.0 : 30.0 + 60.0 * rng.next_double();
      }
      t += node.exec.wall_time_s;
      node.finished_at = t;
      tree.add_node(std::move(node));
    }

    run.trees.push_back(std::move(tree));
    run.attempts.push_back(metrics::grade_attempt(model.name, task.spec, seed, best));
  }
  return run;
}

// ---------------------------------------------------------------------------
// Controlled experiment
// ---------------------------------------------------------------------------

namespace {

ReportRow make_row(const std::string& agent, const std::string& metric, double value,
                   std::pair<double, double> ci) {
  return {agent, metric, value, ci.first, ci.second};
}

}  // namespace

std::string ExperimentReport::to_csv() const {
  std::string csv = "agent,metric,value,ci_low,ci_high\n";
  for (const auto& r : rows) {
    csv += util::csv_escape(r.agent) + "," + r.metric + "," + util::format_double(r.value) +
           "," + util::format_double(r.ci_low) + "," + util::format_double(r.ci_high) + "\n";
  }
  return csv;
}

std::string ExperimentReport::cdf_to_csv() const {
  std::string csv = "agent,k,fraction_le_k\n";
  for (const auto& [agent, cdf] : arch_cdf) {
    for (int k = 1; k <= 5; ++k) {
      csv += util::csv_escape(agent) + "," + std::to_string(k) + "," +
             util::format_double(cdf[static_cast<size_t>(k - 1)]) + "\n";
    }
  }
  return csv;
}

const ReportRow* ExperimentReport::find(const std::string& agent,
                                        const std::string& metric) const {
  for (const auto& r : rows) {
    if (r.agent == agent && r.metric == metric) return &r;
  }
  return nullptr;
}

ExperimentReport controlled_experiment(const SimScenario& scenario,
                                       const ExperimentOptions& options) {
  ExperimentReport report;
  const int n_seeds = options.n_seeds > 0 ? options.n_seeds : scenario.n_seeds;
  const auto& taxonomy = diversity::ArchTaxonomy::builtin();

  std::map<std::string, bool> orientation;
  for (const auto& t : scenario.tasks) orientation[t.spec.task_id] = t.spec.higher_is_better;

  for (const auto& agent : scenario.agents) {
    std::vector<metrics::AttemptResult> attempts;
    std::vector<int> distinct_counts;
    for (int seed = 0; seed < n_seeds; ++seed) {
      const SimRun run = simulate_run(agent, scenario, static_cast<uint64_t>(seed));
      for (const auto& a : run.attempts) {
        attempts.push_back(a);
      }
      for (const auto& tree : run.trees) {
        distinct_counts.push_back(diversity::tree_level_diversity(tree, taxonomy));
      }
      if (options.on_run) options.on_run(agent.name, static_cast<uint64_t>(seed), run);
    }

    const auto per_task = metrics::group_by_task(attempts);
    const auto ci = [&](auto&& stat) {
      return metrics::stratified_bootstrap_ci(per_task, stat, options.n_resamples,
                                              options.confidence, options.bootstrap_seed);
    };
    report.rows.push_back(make_row(agent.name, "medal_rate", metrics::medal_rate(attempts),
                                   ci(metrics::medal_rate_of)));
    report.rows.push_back(make_row(agent.name, "valid_submission_rate",
                                   metrics::valid_submission_rate(attempts),
                                   ci(metrics::valid_rate_of)));
    report.rows.push_back(make_row(agent.name, "avg_normalized_score",
                                   metrics::mean_normalized_score(attempts),
                                   ci(metrics::mean_normalized_of)));
    report.rows.push_back(make_row(agent.name, "avg_percentile",
                                   metrics::mean_percentile(attempts),
                                   ci(metrics::mean_percentile_of)));
    report.arch_cdf[agent.name] = diversity::distinct_arch_cdf(distinct_counts);
    report.attempts[agent.name] = std::move(attempts);
  }

  if (scenario.agents.size() >= 2) {
    std::vector<metrics::AttemptResult> all;
    for (const auto& [agent, list] : report.attempts)
      all.insert(all.end(), list.begin(), list.end());
    const auto elo = metrics::elo_with_ci(all, orientation, options.elo_resamples,
                                          options.confidence, options.bootstrap_seed);
    for (const auto& [agent, e] : elo) {
      report.rows.push_back(make_row(agent, "elo", e.rating, {e.ci_low, e.ci_high}));
    }
  }
  return report;
}

}  // namespace aslab::simlab
