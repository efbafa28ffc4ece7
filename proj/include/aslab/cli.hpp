#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "aslab/core.hpp"

namespace aslab::cli {

// Exit codes shared by the subcommands.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 1;
inline constexpr int kExitBackendUnreachable = 2;
inline constexpr int kExitPartialFailure = 3;
inline constexpr int kExitDisconnectedGraph = 4;

// ---------------------------------------------------------------------------
// INI-style experiment config: [scaffold], [diversity], [backend], [budget],
// [tasks] sections of key = value lines. Parse errors carry line numbers.
// ---------------------------------------------------------------------------

struct IniDoc {
  // section -> key -> (value, line)
  std::map<std::string, std::map<std::string, std::pair<std::string, int>>> sections;

  std::optional<std::string> get(const std::string& section, const std::string& key) const;
  std::string get_or(const std::string& section, const std::string& key,
                     const std::string& fallback) const;
};

IniDoc parse_ini(const std::string& text, const std::string& source_name = "config");

struct RunConfig {
  core::ExperimentConfig experiment;
  std::vector<core::TaskSpec> tasks;
  std::string config_digest;
};

RunConfig load_run_config(const std::string& path);

struct AnalyzeOptions {
  int n_resamples = 10000;
  int elo_resamples = 2000;
  double confidence = 0.95;
  uint64_t seed = 7;
  std::string taxonomy_path;  // empty: builtin taxonomy
};

struct SimulateOptions {
  int n_seeds = 0;  // 0: scenario default
  int n_resamples = 10000;
  int elo_resamples = 2000;
  double confidence = 0.95;
  bool write_logs = true;
  std::optional<uint64_t> master_seed;  // overrides the scenario seed
};

struct RunOptions {
  std::optional<uint64_t> seed;  // overrides [scaffold] seed
  std::optional<int> workers;    // overrides [scaffold] workers
};

int cmd_run(const std::string& config_path, const std::string& out_dir,
            const RunOptions& options = {});
int cmd_simulate(const std::string& scenario, const std::string& out_dir,
                 const SimulateOptions& options = {});
int cmd_analyze(const std::string& log_dir, const std::string& out_dir,
                const AnalyzeOptions& options = {});
int cmd_elo(const std::vector<std::string>& log_dirs, const std::string& out_csv,
            const AnalyzeOptions& options = {});

}  // namespace aslab::cli
