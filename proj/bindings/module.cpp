// Python bindings for the aslab core: diversity measurement, the metric
// suite, and the behavioral simulator.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "aslab/core.hpp"
#include "aslab/diversity.hpp"
#include "aslab/error.hpp"
#include "aslab/metrics.hpp"
#include "aslab/simlab.hpp"
#include "aslab/taskenv.hpp"

namespace py = pybind11;
using namespace aslab;

namespace {

core::Leaderboard make_leaderboard(const std::vector<double>& scores) {
  core::Leaderboard lb;
  lb.scores = scores;
  return lb;
}

}  // namespace

PYBIND11_MODULE(_aslab, m) {
  m.doc() = "Tree-search agent evaluation: diversity, metrics, simulation";

  py::register_exception<Error>(m, "AslabError");

  // ── diversity ──
  m.def(
      "shannon_entropy",
      [](const std::map<std::string, int>& histogram) {
        return diversity::shannon_entropy(histogram);
      },
      py::arg("histogram"), "Shannon entropy in bits of a label -> count histogram");

  m.def(
      "extract_labels",
      [](const std::string& plan) {
        const auto label = diversity::ArchTaxonomy::builtin().extract(plan);
        return py::make_tuple(label.approach, label.family);
      },
      py::arg("plan"), "Extract (approach, model family) from a draft plan");

  m.def(
      "distinct_arch_cdf",
      [](const std::vector<int>& counts) {
        const auto cdf = diversity::distinct_arch_cdf(counts);
        return std::vector<double>(cdf.begin(), cdf.end());
      },
      py::arg("per_task_counts"));

  // ── metrics ──
  py::class_<metrics::MedalThresholds>(m, "MedalThresholds")
      .def_readonly("bronze_rank", &metrics::MedalThresholds::bronze_rank)
      .def_readonly("silver_rank", &metrics::MedalThresholds::silver_rank)
      .def_readonly("gold_rank", &metrics::MedalThresholds::gold_rank);

  m.def("medal_thresholds", &metrics::medal_thresholds, py::arg("n_teams"));

  m.def(
      "award_medal",
      [](double raw, const std::vector<double>& leaderboard, bool higher_is_better) {
        return std::string(metrics::to_string(
            metrics::award_medal(raw, make_leaderboard(leaderboard), higher_is_better)));
      },
      py::arg("raw_score"), py::arg("leaderboard"), py::arg("higher_is_better") = true);

  m.def(
      "normalized_score",
      [](double raw, const std::vector<double>& leaderboard, bool higher_is_better) {
        return metrics::normalized_score(raw, make_leaderboard(leaderboard), higher_is_better);
      },
      py::arg("raw_score"), py::arg("leaderboard"), py::arg("higher_is_better") = true);

  m.def(
      "percentile",
      [](double raw, const std::vector<double>& leaderboard, bool higher_is_better) {
        return metrics::percentile(raw, make_leaderboard(leaderboard), higher_is_better);
      },
      py::arg("raw_score"), py::arg("leaderboard"), py::arg("higher_is_better") = true);

  m.def("elo_expected_win", &metrics::elo_expected_win, py::arg("rating_gap"));

  m.def(
      "elo_ratings",
      [](const std::vector<std::tuple<std::string, std::string, std::string>>& matches) {
        std::vector<metrics::MatchRecord> records;
        for (const auto& [a, b, outcome] : matches) {
          metrics::MatchRecord r{a, b, metrics::MatchOutcome::Tie};
          if (outcome == "a") r.outcome = metrics::MatchOutcome::AWin;
          else if (outcome == "b") r.outcome = metrics::MatchOutcome::BWin;
          else if (outcome == "tie") r.outcome = metrics::MatchOutcome::Tie;
          else throw Error(ErrorCode::OutOfRange, "outcome must be 'a', 'b' or 'tie'");
          records.push_back(std::move(r));
        }
        return metrics::elo_ratings(records).rating;
      },
      py::arg("matches"),
      "Bradley-Terry Elo ratings from (agent_a, agent_b, 'a'|'b'|'tie') records");

  m.def(
      "stratified_bootstrap_ci",
      [](const std::map<std::string, std::vector<double>>& per_task, int n_resamples,
         double confidence, uint64_t seed) {
        const auto mean_stat = [](const std::vector<const double*>& sample) {
          double sum = 0.0;
          for (const auto* v : sample) sum += *v;
          return sample.empty() ? 0.0 : sum / static_cast<double>(sample.size());
        };
        return metrics::stratified_bootstrap_ci(per_task, mean_stat, n_resamples, confidence,
                                                seed);
      },
      py::arg("per_task_values"), py::arg("n_resamples") = 10000,
      py::arg("confidence") = 0.95, py::arg("seed") = 0,
      "Stratified bootstrap CI of the pooled mean");

  m.def(
      "pearson_correlation",
      [](const std::vector<double>& xs, const std::vector<double>& ys) {
        return metrics::pearson_correlation(xs, ys);
      },
      py::arg("xs"), py::arg("ys"));

  // ── simlab ──
  py::class_<simlab::ReportRow>(m, "ReportRow")
      .def_readonly("agent", &simlab::ReportRow::agent)
      .def_readonly("metric", &simlab::ReportRow::metric)
      .def_readonly("value", &simlab::ReportRow::value)
      .def_readonly("ci_low", &simlab::ReportRow::ci_low)
      .def_readonly("ci_high", &simlab::ReportRow::ci_high)
      .def("__repr__", [](const simlab::ReportRow& r) {
        return "<ReportRow " + r.agent + " " + r.metric + "=" + std::to_string(r.value) + ">";
      });

  m.def(
      "controlled_experiment",
      [](const std::string& scenario_json, int n_seeds, int n_resamples) {
        const auto scenario = scenario_json.empty()
                                  ? simlab::SimScenario::default_controlled()
                                  : simlab::SimScenario::from_json(scenario_json);
        simlab::ExperimentOptions opts;
        opts.n_seeds = n_seeds;
        opts.n_resamples = n_resamples;
        opts.elo_resamples = std::min(n_resamples, 1000);
        return simlab::controlled_experiment(scenario, opts).rows;
      },
      py::arg("scenario_json") = "", py::arg("n_seeds") = 0, py::arg("n_resamples") = 2000,
      "Run the simulated controlled experiment; returns report rows");

  m.def("default_scenario_json",
        []() { return simlab::SimScenario::default_controlled().to_json(); });

  // ── taskenv ──
  m.def("synthetic_task_ids", []() {
    std::vector<std::string> ids;
    for (const auto& t : taskenv::synthetic_task_pack()) ids.push_back(t.task_id);
    return ids;
  });

  m.attr("__version__") = "0.1.0";
}
