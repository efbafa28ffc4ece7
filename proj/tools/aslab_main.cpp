#include <string>
#include <vector>

#include <CLI11.hpp>

#include "aslab/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"aslab: tree-search agent orchestration, simulation and evaluation"};
  app.require_subcommand(1);

  // run
  std::string run_config, run_out = "out";
  aslab::cli::RunOptions run_opts;
  uint64_t run_seed = 0;
  int run_workers = 0;
  auto* run = app.add_subcommand("run", "Run the configured scaffold on every task x seed");
  run->add_option("config", run_config, "Experiment config (INI sections)")->required();
  run->add_option("--out", run_out, "Output directory");
  auto* seed_opt = run->add_option("--seed", run_seed, "Override the config seed");
  auto* workers_opt = run->add_option("--workers", run_workers, "Worker pool width");

  // simulate
  std::string sim_scenario = "default", sim_out = "out-sim";
  aslab::cli::SimulateOptions sim_opts;
  uint64_t sim_seed = 0;
  auto* simulate =
      app.add_subcommand("simulate", "Run the behavioral simulator's controlled experiment");
  simulate->add_option("scenario", sim_scenario,
                       "Scenario file, or 'default' / 'sweep' builtins");
  simulate->add_option("--out", sim_out, "Output directory");
  simulate->add_option("--seeds", sim_opts.n_seeds, "Seeds per agent (0: scenario default)");
  simulate->add_option("--resamples", sim_opts.n_resamples, "Bootstrap resamples");
  simulate->add_option("--confidence", sim_opts.confidence, "CI confidence level");
  auto* sim_seed_opt =
      simulate->add_option("--seed", sim_seed, "Override the scenario master seed");
  simulate->add_flag("--no-logs", [&sim_opts](int64_t) { sim_opts.write_logs = false; },
                     "Skip writing trajectory logs");

  // analyze
  std::string analyze_dir, analyze_out;
  aslab::cli::AnalyzeOptions analyze_opts;
  auto* analyze = app.add_subcommand("analyze", "Analyze a directory of trajectory logs");
  analyze->add_option("log_dir", analyze_dir, "Directory with trajectory logs + tasks.json")
      ->required();
  analyze->add_option("--out", analyze_out, "Report directory (default: log_dir)");
  analyze->add_option("--resamples", analyze_opts.n_resamples, "Bootstrap resamples");
  analyze->add_option("--confidence", analyze_opts.confidence, "CI confidence level");
  analyze->add_option("--seed", analyze_opts.seed, "Bootstrap seed");
  analyze->add_option("--taxonomy", analyze_opts.taxonomy_path,
                      "Custom architecture taxonomy file");

  // elo
  std::vector<std::string> elo_dirs;
  std::string elo_out = "elo.csv";
  aslab::cli::AnalyzeOptions elo_opts;
  auto* elo = app.add_subcommand("elo", "Elo tournament over one or more log directories");
  elo->add_option("log_dirs", elo_dirs, "Log directories")->required()->expected(-1);
  elo->add_option("--out", elo_out, "Output CSV path");
  elo->add_option("--resamples", elo_opts.elo_resamples, "Bootstrap resamples");
  elo->add_option("--confidence", elo_opts.confidence, "CI confidence level");
  elo->add_option("--seed", elo_opts.seed, "Bootstrap seed");

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) {
    if (seed_opt->count() > 0) run_opts.seed = run_seed;
    if (workers_opt->count() > 0) run_opts.workers = run_workers;
    return aslab::cli::cmd_run(run_config, run_out, run_opts);
  }
  if (simulate->parsed()) {
    if (sim_seed_opt->count() > 0) sim_opts.master_seed = sim_seed;
    return aslab::cli::cmd_simulate(sim_scenario, sim_out, sim_opts);
  }
  if (analyze->parsed())
    return aslab::cli::cmd_analyze(analyze_dir,
                                   analyze_out.empty() ? analyze_dir : analyze_out,
                                   analyze_opts);
  if (elo->parsed()) return aslab::cli::cmd_elo(elo_dirs, elo_out, elo_opts);
  return 1;
}
