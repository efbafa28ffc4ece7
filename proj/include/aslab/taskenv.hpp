#pragma once

#include <optional>
#include <string>
#include <vector>

#include "aslab/core.hpp"

namespace aslab::taskenv {

enum class FailureReason { MissingFile, SchemaMismatch, GraderError };

const char* to_string(FailureReason r);

struct GradeResult {
  bool valid = false;
  std::optional<double> raw_score;  // present iff valid
  std::optional<FailureReason> failure_reason;
  std::string detail;
};

enum class NetworkPolicy { Deny, Allow };

struct SandboxPolicy {
  double time_limit_s = 10.0;
  uint64_t memory_limit_bytes = 1ull << 30;
  std::string workdir;
  NetworkPolicy network = NetworkPolicy::Deny;
};

inline constexpr size_t kOutputCaptureBytes = 16 * 1024;
inline constexpr const char* kSubmissionFile = "submission.csv";

// Writes the node's code into the sandbox workdir next to the task's input
// files and runs it as an isolated child process under the policy limits.
// Exit 0 with a submission file present is Success; a nonzero exit is Buggy;
// exceeding the time limit kills the process group and reports Timeout.
// Throws SandboxSetupError only for host-side problems.
core::ExecutionOutcome execute(const core::SolutionNode& node, const core::TaskSpec& task,
                               const SandboxPolicy& policy);

// Schema check (header + row count + id coverage) followed by grading.
// Failures are encoded in the result, never thrown.
GradeResult validate_submission(const std::string& path, const core::TaskSpec& task);

// Deterministic input files (train/test CSVs) for a task.
void write_task_inputs(const core::TaskSpec& task, const std::string& workdir);

struct ExecutedNode {
  core::ExecutionOutcome outcome;
  std::optional<double> score;
};

// execute + validate: a run that exits cleanly but fails validation is
// reported as InvalidSubmission.
ExecutedNode run_and_grade(const core::SolutionNode& node, const core::TaskSpec& task,
                           const SandboxPolicy& policy);

// ---------------------------------------------------------------------------
// Synthetic desk-scale task pack
// ---------------------------------------------------------------------------

// Six deterministic tasks, each gradable in well under a second, with
// synthetic leaderboards of the requested size.
std::vector<core::TaskSpec> synthetic_task_pack(int n_teams = 60);

std::optional<core::TaskSpec> find_task(const std::vector<core::TaskSpec>& pack,
                                        const std::string& task_id);

// Known-optimal solution code for a pack task (test fixture material).
std::string reference_solution(const std::string& task_id);

// Task definition document: {task_id, description, higher_is_better, schema,
// grader_kind, grader_params, leaderboard_scores[]}.
std::string task_to_json(const core::TaskSpec& task);
core::TaskSpec task_from_json(const std::string& text);
std::string tasks_to_json(const std::vector<core::TaskSpec>& tasks);
std::vector<core::TaskSpec> tasks_from_json(const std::string& text);

}  // namespace aslab::taskenv
