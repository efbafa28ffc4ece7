#include <doctest.h>

#include <cmath>

#include "aslab/diversity.hpp"
#include "aslab/metrics.hpp"
#include "aslab/simlab.hpp"
#include "aslab/util.hpp"

using namespace aslab;
using namespace aslab::simlab;

namespace {

double valid_rate_of(const AgentBehaviorModel& model, const SimScenario& scenario,
                     int n_seeds) {
  int valid = 0, total = 0;
  for (int seed = 0; seed < n_seeds; ++seed) {
    const auto run = simulate_run(model, scenario, static_cast<uint64_t>(seed));
    for (const auto& a : run.attempts) {
      ++total;
      if (a.valid) ++valid;
    }
  }
  return static_cast<double>(valid) / total;
}

}  // namespace

TEST_SUITE_BEGIN("simlab");

TEST_CASE("the default scenario defines the two controlled-experiment agents") {
  const auto s = SimScenario::default_controlled();
  REQUIRE(s.agents.size() == 2);
  CHECK(s.agents[0].name == "baseline");
  CHECK(s.agents[1].name == "ablated");
  CHECK(s.agents[0].similarity_bias < s.agents[1].similarity_bias);
  CHECK(s.tasks.size() >= 6);
  for (const auto& t : s.tasks) CHECK(t.broken_arch.has_value());
  // The two agents differ only in the similarity knob.
  CHECK(s.agents[0].arch_preference == s.agents[1].arch_preference);
  CHECK(s.agents[0].implement_skill == s.agents[1].implement_skill);
}

TEST_CASE("similarity_bias=1 collapses every tree to a single approach") {
  auto s = SimScenario::default_controlled();
  auto agent = s.agents[0];
  agent.similarity_bias = 1.0;
  const auto& tax = diversity::ArchTaxonomy::builtin();
  for (int seed = 0; seed < 20; ++seed) {
    const auto run = simulate_run(agent, s, static_cast<uint64_t>(seed));
    for (const auto& tree : run.trees) {
      CHECK(diversity::tree_level_diversity(tree, tax) == 1);
    }
  }
}

TEST_CASE("fully biased agents hit the broken arch with first-draft probability") {
  // With bias 1 and implement_skill 1, a task is invalid iff the single
  // sampled approach is the broken one: expected valid rate = 3/4.
  auto s = SimScenario::default_controlled();
  s.agents.clear();
  AgentBehaviorModel a;
  a.name = "stubborn";
  a.similarity_bias = 1.0;
  for (const char* arch : {"CNN", "Transformer", "GBDT", "Linear"})
    a.arch_preference[arch] = 0.25;
  a.implement_skill["*"] = 1.0;
  a.score_model["*"]["*"] = {0.7, 0.05};
  const double rate = valid_rate_of(a, s, 400);
  CHECK(rate == doctest::Approx(0.75).epsilon(0.03));
}

TEST_CASE("independent drafts almost never miss everywhere") {
  // bias 0, skill 1: invalid only when all five independent samples land on
  // the broken arch: (1/4)^5, so the valid rate sits near 0.999.
  auto s = SimScenario::default_controlled();
  AgentBehaviorModel a;
  a.name = "explorer";
  a.similarity_bias = 0.0;
  for (const char* arch : {"CNN", "Transformer", "GBDT", "Linear"})
    a.arch_preference[arch] = 0.25;
  a.implement_skill["*"] = 1.0;
  a.score_model["*"]["*"] = {0.7, 0.05};
  CHECK(valid_rate_of(a, s, 400) > 0.99);
}

TEST_CASE("simulated runs flow through the shared grading pipeline") {
  const auto s = SimScenario::default_controlled();
  const auto run = simulate_run(s.agents[0], s, 11);
  REQUIRE(run.attempts.size() == s.tasks.size());
  REQUIRE(run.trees.size() == s.tasks.size());
  for (size_t i = 0; i < run.attempts.size(); ++i) {
    const auto& a = run.attempts[i];
    CHECK(a.task_id == s.tasks[i].spec.task_id);
    if (!a.valid) {
      CHECK(a.medal == metrics::Medal::None);
      CHECK(a.normalized == 0.0);
      CHECK(a.percentile == 0.0);
    } else {
      // Re-grade through metrics and compare field by field.
      const auto regraded =
          metrics::grade_attempt(a.agent, s.tasks[i].spec, a.seed, a.raw_score);
      CHECK(a.medal == regraded.medal);
      CHECK(a.normalized == doctest::Approx(regraded.normalized));
      CHECK(a.percentile == doctest::Approx(regraded.percentile));
    }
    // Trees carry exactly drafts_per_task draft nodes with parseable plans.
    CHECK(run.trees[i].root_draft_ids().size() ==
          static_cast<size_t>(s.drafts_per_task));
  }
}

TEST_CASE("identical scenario and seed reproduce identical runs and reports") {
  const auto s = SimScenario::default_controlled();
  const auto a = simulate_run(s.agents[0], s, 5);
  const auto b = simulate_run(s.agents[0], s, 5);
  REQUIRE(a.attempts.size() == b.attempts.size());
  for (size_t i = 0; i < a.attempts.size(); ++i) {
    CHECK(a.attempts[i].raw_score == b.attempts[i].raw_score);
    CHECK(a.attempts[i].valid == b.attempts[i].valid);
  }

  ExperimentOptions opts;
  opts.n_seeds = 30;
  opts.n_resamples = 200;
  opts.elo_resamples = 50;
  const auto r1 = controlled_experiment(s, opts);
  const auto r2 = controlled_experiment(s, opts);
  CHECK(r1.to_csv() == r2.to_csv());
  CHECK(r1.cdf_to_csv() == r2.cdf_to_csv());
}

TEST_CASE("valid-submission rate is non-increasing in the similarity knob") {
  // Spec tolerance: allow one adjacent-pair inversion up to 0.5 points.
  auto s = SimScenario::diversity_sweep(5, /*vary_preference=*/false);
  std::vector<double> rates;
  for (const auto& agent : s.agents) {
    rates.push_back(100.0 * valid_rate_of(agent, s, 1000));
  }
  int inversions = 0;
  for (size_t i = 1; i < rates.size(); ++i) {
    if (rates[i] > rates[i - 1]) {
      ++inversions;
      CHECK(rates[i] - rates[i - 1] <= 0.5);
    }
  }
  CHECK(inversions <= 1);
  CHECK(rates.front() > rates.back());  // the knob has clear global effect
}

TEST_CASE("rescue probability lets failed drafts recover") {
  auto s = SimScenario::default_controlled();
  for (auto& t : s.tasks) t.broken_arch.reset();
  AgentBehaviorModel a = s.agents[0];
  a.implement_skill.clear();
  a.implement_skill["*"] = 0.3;
  a.rescue_probability = 1.0;
  CHECK(valid_rate_of(a, s, 100) == doctest::Approx(1.0));
  a.rescue_probability = 0.0;
  CHECK(valid_rate_of(a, s, 100) < 1.0);
}

TEST_CASE("controlled experiment reports every metric with intervals") {
  ExperimentOptions opts;
  opts.n_seeds = 60;
  opts.n_resamples = 300;
  opts.elo_resamples = 60;
  const auto report = controlled_experiment(SimScenario::default_controlled(), opts);

  for (const char* agent : {"baseline", "ablated"}) {
    for (const char* metric : {"medal_rate", "valid_submission_rate",
                               "avg_normalized_score", "avg_percentile", "elo"}) {
      const auto* row = report.find(agent, metric);
      REQUIRE_MESSAGE(row != nullptr, agent << "/" << metric);
      CHECK(row->ci_low <= row->value + 1e-9);
      CHECK(row->ci_high >= row->value - 1e-9);
    }
    CHECK(report.arch_cdf.count(agent) == 1);
  }

  // Direction of the headline effects at modest seed counts.
  CHECK(report.find("ablated", "valid_submission_rate")->value <
        report.find("baseline", "valid_submission_rate")->value);
  CHECK(report.arch_cdf.at("ablated")[1] > report.arch_cdf.at("baseline")[1]);
}

TEST_CASE("scenario files round-trip") {
  const auto s = SimScenario::default_controlled();
  const auto restored = SimScenario::from_json(s.to_json());
  CHECK(restored.tasks.size() == s.tasks.size());
  CHECK(restored.agents.size() == s.agents.size());
  CHECK(restored.agents[1].similarity_bias == s.agents[1].similarity_bias);
  CHECK(restored.tasks[0].broken_arch == s.tasks[0].broken_arch);
  CHECK(restored.tasks[0].spec.leaderboard.scores == s.tasks[0].spec.leaderboard.scores);
  // Round-tripped scenarios simulate identically.
  const auto a = simulate_run(s.agents[0], s, 3);
  const auto b = simulate_run(restored.agents[0], restored, 3);
  REQUIRE(a.attempts.size() == b.attempts.size());
  for (size_t i = 0; i < a.attempts.size(); ++i) {
    CHECK(a.attempts[i].raw_score == b.attempts[i].raw_score);
  }
}

TEST_SUITE_END();
