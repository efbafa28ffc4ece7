#include "aslab/taskenv.hpp"

#include <fcntl.h>
#include <sched.h>
#include <signal.h>
#include <sys/resource.h>
#include <sys/stat.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <thread>

#include <json.hpp>

#include "aslab/error.hpp"
#include "aslab/util.hpp"

namespace fs = std::filesystem;

namespace aslab::taskenv {

const char* to_string(FailureReason r) {
  switch (r) {
    case FailureReason::MissingFile: return "MissingFile";
    case FailureReason::SchemaMismatch: return "SchemaMismatch";
    case FailureReason::GraderError: return "GraderError";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Synthetic tasks: deterministic feature grids shared by input generation and
// grading, so truth never needs to be stored.
// ---------------------------------------------------------------------------

namespace {

double param(const core::TaskSpec& task, const std::string& key) {
  auto it = task.grader_params.find(key);
  if (it == task.grader_params.end())
    throw std::runtime_error("missing grader param " + key + " for " + task.task_id);
  return it->second;
}

int iparam(const core::TaskSpec& task, const std::string& key) {
  return static_cast<int>(param(task, key));
}

double linear_x(int i) { return 5.0 + 0.25 * i; }
double poly_x(int i) { return -2.0 + 0.3 * i; }

void point_xy(int i, int n, double& x1, double& x2) {
  x1 = -1.0 + 2.0 * ((i * 7 % n) + 0.5) / n;
  x2 = -1.0 + 2.0 * ((i * 13 % n) + 0.5) / n;
}

int point_label(double x1, double x2) { return x1 + 2.0 * x2 - 1.0 > 0.0 ? 1 : 0; }

double threshold_x(int i, int n) { return ((i * 11 % n) + 0.5) / n; }

double mean_value(int i) { return 10.0 + (i % 7) - (i % 3) * 0.5; }

std::string num(double v) { return util::format_double(v); }

}  // namespace

void write_task_inputs(const core::TaskSpec& task, const std::string& workdir) {
  const std::string kind = task.grader_kind;
  std::string train, test;

  if (kind == "linear_fit") {
    const double a = param(task, "a"), b = param(task, "b");
    const int n_train = iparam(task, "n_train"), n_test = iparam(task, "n_test");
    train = "x,y\n";
    for (int i = 0; i < n_train; ++i) {
      const double x = 0.1 * i;
      train += num(x) + "," + num(a * x + b) + "\n";
    }
    test = "id,x\n";
    for (int i = 0; i < n_test; ++i) test += std::to_string(i) + "," + num(linear_x(i)) + "\n";
  } else if (kind == "poly_fit") {
    const double a = param(task, "a"), b = param(task, "b"), c = param(task, "c");
    const int n_train = iparam(task, "n_train"), n_test = iparam(task, "n_test");
    train = "x,y\n";
    for (int i = 0; i < n_train; ++i) {
      const double x = -3.0 + 0.15 * i;
      train += num(x) + "," + num(a * x * x + b * x + c) + "\n";
    }
    test = "id,x\n";
    for (int i = 0; i < n_test; ++i) test += std::to_string(i) + "," + num(poly_x(i)) + "\n";
  } else if (kind == "point_classify") {
    const int n_train = iparam(task, "n_train"), n_test = iparam(task, "n_test");
    train = "x1,x2,label\n";
    for (int i = 0; i < n_train; ++i) {
      double x1, x2;
      point_xy(i, n_train, x1, x2);
      train += num(x1) + "," + num(x2) + "," + std::to_string(point_label(x1, x2)) + "\n";
    }
    test = "id,x1,x2\n";
    for (int i = 0; i < n_test; ++i) {
      double x1, x2;
      point_xy(i, n_test, x1, x2);
      test += std::to_string(i) + "," + num(x1) + "," + num(x2) + "\n";
    }
  } else if (kind == "threshold_classify") {
    const int n_train = iparam(task, "n_train"), n_test = iparam(task, "n_test");
    const double t = param(task, "threshold");
    train = "x,label\n";
    for (int i = 0; i < n_train; ++i) {
      const double x = threshold_x(i, n_train);
      train += num(x) + "," + std::to_string(x > t ? 1 : 0) + "\n";
    }
    test = "id,x\n";
    for (int i = 0; i < n_test; ++i)
      test += std::to_string(i) + "," + num(threshold_x(i, n_test)) + "\n";
  } else if (kind == "mean_estimate") {
    const int n_train = iparam(task, "n_train");
    train = "value\n";
    for (int i = 0; i < n_train; ++i) train += num(mean_value(i)) + "\n";
    test.clear();
  } else if (kind == "quadratic_min") {
    // Pure optimization task: everything needed is in the description.
    train.clear();
    test.clear();
  } else {
    throw std::runtime_error("unknown grader kind " + kind);
  }

  fs::create_directories(workdir);
  if (!train.empty()) util::write_file(workdir + "/train.csv", train);
  if (!test.empty()) util::write_file(workdir + "/test.csv", test);
}

// ---------------------------------------------------------------------------
// Grading
// ---------------------------------------------------------------------------

namespace {

double grade_predictions(const core::TaskSpec& task, const std::vector<double>& preds) {
  const std::string& kind = task.grader_kind;
  const int n = static_cast<int>(preds.size());

  if (kind == "linear_fit") {
    const double a = param(task, "a"), b = param(task, "b");
    double se = 0.0;
    for (int i = 0; i < n; ++i) {
      const double truth = a * linear_x(i) + b;
      se += (preds[i] - truth) * (preds[i] - truth);
    }
    return std::sqrt(se / n);
  }
  if (kind == "poly_fit") {
    const double a = param(task, "a"), b = param(task, "b"), c = param(task, "c");
    double se = 0.0;
    for (int i = 0; i < n; ++i) {
      const double x = poly_x(i);
      const double truth = a * x * x + b * x + c;
      se += (preds[i] - truth) * (preds[i] - truth);
    }
    return std::sqrt(se / n);
  }
  if (kind == "point_classify") {
    int correct = 0;
    for (int i = 0; i < n; ++i) {
      double x1, x2;
      point_xy(i, n, x1, x2);
      if ((preds[i] > 0.5 ? 1 : 0) == point_label(x1, x2)) ++correct;
    }
    return static_cast<double>(correct) / n;
  }
  if (kind == "threshold_classify") {
    const double t = param(task, "threshold");
    int correct = 0;
    for (int i = 0; i < n; ++i) {
      const double x = threshold_x(i, n);
      if ((preds[i] > 0.5 ? 1 : 0) == (x > t ? 1 : 0)) ++correct;
    }
    return static_cast<double>(correct) / n;
  }
  if (kind == "mean_estimate") {
    const int n_train = iparam(task, "n_train");
    double sum = 0.0;
    for (int i = 0; i < n_train; ++i) sum += mean_value(i);
    return std::abs(preds.at(0) - sum / n_train);
  }
  if (kind == "quadratic_min") {
    const double a = param(task, "a"), x0 = param(task, "x0"), c = param(task, "c");
    const double x = preds.at(0);
    return a * (x - x0) * (x - x0) + c;
  }
  throw std::runtime_error("unknown grader kind " + kind);
}

}  // namespace

GradeResult validate_submission(const std::string& path, const core::TaskSpec& task) {
  GradeResult result;

  const auto content = util::try_read_file(path);
  if (!content) {
    result.failure_reason = FailureReason::MissingFile;
    result.detail = "no file at " + path;
    return result;
  }

  std::vector<std::string> lines;
  for (auto& line : util::split(*content, '\n')) {
    std::string t = line;
    if (!t.empty() && t.back() == '\r') t.pop_back();
    if (!util::trim(t).empty()) lines.push_back(t);
  }
  if (lines.empty() || util::trim(lines[0]) != task.schema_header) {
    result.failure_reason = FailureReason::SchemaMismatch;
    result.detail = "bad header";
    return result;
  }
  const int n_rows = static_cast<int>(lines.size()) - 1;
  if (n_rows != task.schema_rows) {
    result.failure_reason = FailureReason::SchemaMismatch;
    result.detail = "expected " + std::to_string(task.schema_rows) + " rows, got " +
                    std::to_string(n_rows);
    return result;
  }

  const size_t n_cols = util::split(task.schema_header, ',').size();
  std::vector<double> preds(static_cast<size_t>(n_rows),
                            std::numeric_limits<double>::quiet_NaN());
  std::vector<bool> seen(static_cast<size_t>(n_rows), false);
  for (int r = 0; r < n_rows; ++r) {
    const auto cells = util::split(lines[static_cast<size_t>(r) + 1], ',');
    if (cells.size() != n_cols) {
      result.failure_reason = FailureReason::SchemaMismatch;
      result.detail = "wrong column count on row " + std::to_string(r + 1);
      return result;
    }
    try {
      const int id = std::stoi(util::trim(cells[0]));
      const double value = std::stod(util::trim(cells[1]));
      if (id < 0 || id >= n_rows || seen[static_cast<size_t>(id)]) {
        result.failure_reason = FailureReason::SchemaMismatch;
        result.detail = "bad or duplicate id " + std::to_string(id);
        return result;
      }
      seen[static_cast<size_t>(id)] = true;
      preds[static_cast<size_t>(id)] = value;
    } catch (const std::exception&) {
      result.failure_reason = FailureReason::SchemaMismatch;
      result.detail = "unparseable row " + std::to_string(r + 1);
      return result;
    }
  }

  try {
    result.raw_score = grade_predictions(task, preds);
    result.valid = true;
  } catch (const std::exception& e) {
    result.failure_reason = FailureReason::GraderError;
    result.detail = e.what();
  }
  return result;
}

// ---------------------------------------------------------------------------
// Sandboxed execution
// ---------------------------------------------------------------------------

core::ExecutionOutcome execute(const core::SolutionNode& node, const core::TaskSpec& task,
                               const SandboxPolicy& policy) {
  if (node.code.empty())
    raise(ErrorCode::PreconditionViolation, "node " + node.node_id + " has no code");
  if (policy.workdir.empty()) raise(ErrorCode::SandboxSetupError, "no workdir configured");

  std::error_code ec;
  fs::create_directories(policy.workdir, ec);
  if (ec) raise(ErrorCode::SandboxSetupError, "cannot create workdir: " + ec.message());

  try {
    write_task_inputs(task, policy.workdir);
  } catch (const std::exception& e) {
    raise(ErrorCode::SandboxSetupError, e.what());
  }
  util::write_file(policy.workdir + "/solution.py", node.code);
  fs::remove(policy.workdir + "/" + kSubmissionFile, ec);

  const std::string out_path = policy.workdir + "/__output.log";
  const int out_fd = ::open(out_path.c_str(), O_CREAT | O_WRONLY | O_TRUNC, 0644);
  if (out_fd < 0) raise(ErrorCode::SandboxSetupError, "cannot open output log");

  // Strings the child needs, prepared before fork (no allocation after).
  const std::string workdir_c = policy.workdir;
  const rlim_t mem_limit = static_cast<rlim_t>(policy.memory_limit_bytes);
  const rlim_t cpu_limit = static_cast<rlim_t>(policy.time_limit_s) + 5;
  const bool deny_network = policy.network == NetworkPolicy::Deny;

  const auto start = std::chrono::steady_clock::now();
  const pid_t pid = ::fork();
  if (pid < 0) {
    ::close(out_fd);
    raise(ErrorCode::SandboxSetupError, "fork failed");
  }

  if (pid == 0) {
    ::setpgid(0, 0);
    struct rlimit rl;
    rl.rlim_cur = rl.rlim_max = mem_limit;
    ::setrlimit(RLIMIT_AS, &rl);
    rl.rlim_cur = rl.rlim_max = cpu_limit;
    ::setrlimit(RLIMIT_CPU, &rl);
    rl.rlim_cur = rl.rlim_max = 0;
    ::setrlimit(RLIMIT_CORE, &rl);
    if (::chdir(workdir_c.c_str()) != 0) _exit(125);
    if (deny_network) {
      // Best-effort network isolation. A bare net namespace (needs
      // CAP_NET_ADMIN) keeps file semantics untouched; rootless hosts get a
      // user+net namespace with our own ids mapped. If neither is allowed
      // the solution simply runs without the extra wall.
      if (::unshare(CLONE_NEWNET) != 0) {
        const uid_t uid = ::getuid();
        const gid_t gid = ::getgid();
        if (::unshare(CLONE_NEWUSER | CLONE_NEWNET) == 0) {
          const auto write_proc = [](const char* path, const char* text) {
            const int fd = ::open(path, O_WRONLY);
            if (fd < 0) return false;
            const ssize_t n = ::write(fd, text, ::strlen(text));
            ::close(fd);
            return n == static_cast<ssize_t>(::strlen(text));
          };
          char own_uid[64], own_gid[64];
          std::snprintf(own_uid, sizeof(own_uid), "%d %d 1", uid, uid);
          std::snprintf(own_gid, sizeof(own_gid), "%d %d 1", gid, gid);
          write_proc("/proc/self/setgroups", "deny");
          if (!write_proc("/proc/self/uid_map", "0 0 4294967295"))
            write_proc("/proc/self/uid_map", own_uid);
          if (!write_proc("/proc/self/gid_map", "0 0 4294967295"))
            write_proc("/proc/self/gid_map", own_gid);
        }
      }
    }
    ::dup2(out_fd, STDOUT_FILENO);
    ::dup2(out_fd, STDERR_FILENO);
    ::execlp("python3", "python3", "solution.py", static_cast<char*>(nullptr));
    const char msg[] = "aslab-sandbox-exec-failed\n";
    ssize_t ignored = ::write(STDERR_FILENO, msg, sizeof(msg) - 1);
    (void)ignored;
    _exit(127);
  }

  ::close(out_fd);
  ::setpgid(pid, pid);  // may already be done by the child; either order is fine

  int status = 0;
  bool timed_out = false;
  for (;;) {
    const pid_t r = ::waitpid(pid, &status, WNOHANG);
    if (r == pid) break;
    if (r < 0) raise(ErrorCode::SandboxSetupError, "waitpid failed");
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (elapsed > policy.time_limit_s) {
      timed_out = true;
      ::kill(-pid, SIGKILL);
      ::kill(pid, SIGKILL);
      ::waitpid(pid, &status, 0);
      break;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  core::ExecutionOutcome outcome;
  std::string output = util::try_read_file(out_path).value_or("");
  if (output.size() > kOutputCaptureBytes)
    output = output.substr(output.size() - kOutputCaptureBytes);
  outcome.log_excerpt = output;

  if (timed_out) {
    outcome.status = core::ExecStatus::Timeout;
    wall = std::max(wall, policy.time_limit_s);
  } else if (WIFEXITED(status) && WEXITSTATUS(status) == 0) {
    outcome.status = fs::exists(policy.workdir + "/" + kSubmissionFile)
                         ? core::ExecStatus::Success
                         : core::ExecStatus::InvalidSubmission;
  } else if (WIFEXITED(status) && WEXITSTATUS(status) == 127 &&
             util::contains(output, "aslab-sandbox-exec-failed")) {
    raise(ErrorCode::SandboxSetupError, "python3 interpreter not available");
  } else {
    outcome.status = core::ExecStatus::Buggy;
  }
  outcome.wall_time_s = wall;
  return outcome;
}

ExecutedNode run_and_grade(const core::SolutionNode& node, const core::TaskSpec& task,
                           const SandboxPolicy& policy) {
  ExecutedNode result;
  result.outcome = execute(node, task, policy);
  if (result.outcome.status != core::ExecStatus::Success) return result;

  const GradeResult grade = validate_submission(policy.workdir + "/" + kSubmissionFile, task);
  if (grade.valid) {
    result.score = grade.raw_score;
  } else {
    result.outcome.status = core::ExecStatus::InvalidSubmission;
    result.outcome.log_excerpt += "\nsubmission rejected: " + grade.detail;
  }
  return result;
}

// ---------------------------------------------------------------------------
// Task pack
// ---------------------------------------------------------------------------

namespace {

core::Leaderboard make_leaderboard(const std::string& task_id, int n_teams, double worst,
                                   double best, bool higher_is_better) {
  core::Leaderboard lb;
  util::Rng rng(util::derive_seed({"leaderboard", task_id}));
  for (int i = 0; i < n_teams; ++i) {
    const double q = (i + 0.5) / n_teams;
    const double wiggle = (rng.next_double() - 0.5) * 0.02 * std::abs(best - worst);
    lb.scores.push_back(worst + (best - worst) * q + wiggle);
  }
  // Worst-to-best under orientation.
  std::sort(lb.scores.begin(), lb.scores.end());
  if (!higher_is_better) std::reverse(lb.scores.begin(), lb.scores.end());
  return lb;
}

}  // namespace

std::vector<core::TaskSpec> synthetic_task_pack(int n_teams) {
  if (n_teams < 2) raise(ErrorCode::NonPositiveTeams, "pack needs n_teams >= 2");
  std::vector<core::TaskSpec> pack;

  {
    core::TaskSpec t;
    t.task_id = "linear-fit";
    t.description =
        "Fit a linear model y = a*x + b. train.csv has columns x,y. Predict y for every row "
        "of test.csv (columns id,x) and write submission.csv with header id,prediction and "
        "one row per test id. Metric: RMSE (lower is better).";
    t.higher_is_better = false;
    t.grader_kind = "linear_fit";
    t.grader_params = {{"a", 3.0}, {"b", -2.0}, {"n_train", 50}, {"n_test", 20}, {"optimum", 0.0}};
    t.schema_rows = 20;
    t.leaderboard = make_leaderboard(t.task_id, n_teams, 3.0, 0.02, false);
    pack.push_back(std::move(t));
  }
  {
    core::TaskSpec t;
    t.task_id = "quadratic-min";
    t.description =
        "Minimize f(x) = 2*(x - 1.5)^2 + 0.25. Write submission.csv with header id,prediction "
        "and a single row '0,<x>' holding your minimizer. Metric: f(x) (lower is better).";
    t.higher_is_better = false;
    t.grader_kind = "quadratic_min";
    t.grader_params = {{"a", 2.0}, {"x0", 1.5}, {"c", 0.25}, {"n_test", 1}, {"optimum", 0.25}};
    t.schema_rows = 1;
    t.leaderboard = make_leaderboard(t.task_id, n_teams, 5.0, 0.26, false);
    pack.push_back(std::move(t));
  }
  {
    core::TaskSpec t;
    t.task_id = "point-classify";
    t.description =
        "Binary classification of 2D points. train.csv has columns x1,x2,label. Predict the "
        "label (0 or 1) for every row of test.csv (columns id,x1,x2) and write submission.csv "
        "with header id,prediction. Metric: accuracy (higher is better).";
    t.higher_is_better = true;
    t.grader_kind = "point_classify";
    t.grader_params = {{"n_train", 60}, {"n_test", 30}, {"optimum", 1.0}};
    t.schema_rows = 30;
    t.leaderboard = make_leaderboard(t.task_id, n_teams, 0.5, 0.999, true);
    pack.push_back(std::move(t));
  }
  {
    core::TaskSpec t;
    t.task_id = "mean-estimate";
    t.description =
        "Estimate the mean of the sample in train.csv (single column value). Write "
        "submission.csv with header id,prediction and a single row '0,<estimate>'. Metric: "
        "absolute error (lower is better).";
    t.higher_is_better = false;
    t.grader_kind = "mean_estimate";
    t.grader_params = {{"n_train", 40}, {"n_test", 1}, {"optimum", 0.0}};
    t.schema_rows = 1;
    t.leaderboard = make_leaderboard(t.task_id, n_teams, 2.0, 0.005, false);
    pack.push_back(std::move(t));
  }
  {
    core::TaskSpec t;
    t.task_id = "poly-fit";
    t.description =
        "Fit y = a*x^2 + b*x + c. train.csv has columns x,y. Predict y for every row of "
        "test.csv (columns id,x) and write submission.csv with header id,prediction. Metric: "
        "RMSE (lower is better).";
    t.higher_is_better = false;
    t.grader_kind = "poly_fit";
    t.grader_params = {{"a", 0.5}, {"b", -1.0}, {"c", 2.0},
                       {"n_train", 40}, {"n_test", 20}, {"optimum", 0.0}};
    t.schema_rows = 20;
    t.leaderboard = make_leaderboard(t.task_id, n_teams, 4.0, 0.03, false);
    pack.push_back(std::move(t));
  }
  {
    core::TaskSpec t;
    t.task_id = "threshold-classify";
    t.description =
        "Binary classification of scalars. train.csv has columns x,label. Predict the label "
        "for every row of test.csv (columns id,x) and write submission.csv with header "
        "id,prediction. Metric: accuracy (higher is better).";
    t.higher_is_better = true;
    t.grader_kind = "threshold_classify";
    t.grader_params = {{"threshold", 0.35}, {"n_train", 50}, {"n_test", 25}, {"optimum", 1.0}};
    t.schema_rows = 25;
    t.leaderboard = make_leaderboard(t.task_id, n_teams, 0.55, 0.998, true);
    pack.push_back(std::move(t));
  }
  return pack;
}

std::optional<core::TaskSpec> find_task(const std::vector<core::TaskSpec>& pack,
                                        const std::string& task_id) {
  for (const auto& t : pack) {
    if (t.task_id == task_id) return t;
  }
  return std::nullopt;
}

std::string reference_solution(const std::string& task_id) {
  if (task_id == "linear-fit" || task_id == "poly-fit") {
    const std::string degree = task_id == "linear-fit" ? "1" : "2";
    // Least squares via normal equations on the exact training data.
    return R"(rows = [l.split(',') for l in open('train.csv').read().splitlines()[1:] if l]
xs = [float(r[0]) for r in rows]; ys = [float(r[1]) for r in rows]
deg = )" + degree + R"(
n = deg + 1
A = [[sum(x**(i+j) for x in xs) for j in range(n)] for i in range(n)]
b = [sum(y * x**i for x, y in zip(xs, ys)) for i in range(n)]
for col in range(n):
    piv = max(range(col, n), key=lambda r: abs(A[r][col]))
    A[col], A[piv] = A[piv], A[col]; b[col], b[piv] = b[piv], b[col]
    for r in range(col + 1, n):
        f = A[r][col] / A[col][col]
        for c in range(col, n): A[r][c] -= f * A[col][c]
        b[r] -= f * b[col]
coef = [0.0] * n
for r in range(n - 1, -1, -1):
    coef[r] = (b[r] - sum(A[r][c] * coef[c] for c in range(r + 1, n))) / A[r][r]
test = [l.split(',') for l in open('test.csv').read().splitlines()[1:] if l]
with open('submission.csv', 'w') as f:
    f.write('id,prediction\n')
    for r in test:
        x = float(r[1])
        f.write('%s,%r\n' % (r[0], sum(c * x**i for i, c in enumerate(coef))))
)";
  }
  if (task_id == "quadratic-min") {
    return "open('submission.csv','w').write('id,prediction\\n0,1.5\\n')\n";
  }
  if (task_id == "point-classify") {
    return R"(rows = [l.split(',') for l in open('train.csv').read().splitlines()[1:] if l]
# Perceptron on the separable training set.
w = [0.0, 0.0, 0.0]
data = [(float(r[0]), float(r[1]), int(r[2])) for r in rows]
for _ in range(200):
    done = True
    for x1, x2, y in data:
        pred = 1 if w[0] + w[1] * x1 + w[2] * x2 > 0 else 0
        if pred != y:
            u = 1 if y == 1 else -1
            w[0] += u; w[1] += u * x1; w[2] += u * x2
            done = False
    if done: break
test = [l.split(',') for l in open('test.csv').read().splitlines()[1:] if l]
with open('submission.csv', 'w') as f:
    f.write('id,prediction\n')
    for r in test:
        s = w[0] + w[1] * float(r[1]) + w[2] * float(r[2])
        f.write('%s,%d\n' % (r[0], 1 if s > 0 else 0))
)";
  }
  if (task_id == "mean-estimate") {
    return R"(vals = [float(l) for l in open('train.csv').read().splitlines()[1:] if l]
mean = sum(vals) / len(vals)
open('submission.csv', 'w').write('id,prediction\n0,%r\n' % mean)
)";
  }
  if (task_id == "threshold-classify") {
    return R"(rows = [l.split(',') for l in open('train.csv').read().splitlines()[1:] if l]
data = sorted((float(r[0]), int(r[1])) for r in rows)
# Best split point on training data.
best_t, best_acc = 0.0, -1
cands = [data[0][0] - 1e-6] + [(data[i][0] + data[i+1][0]) / 2 for i in range(len(data)-1)]
for t in cands:
    acc = sum(1 for x, y in data if (1 if x > t else 0) == y)
    if acc > best_acc: best_acc, best_t = acc, t
test = [l.split(',') for l in open('test.csv').read().splitlines()[1:] if l]
with open('submission.csv', 'w') as f:
    f.write('id,prediction\n')
    for r in test:
        f.write('%s,%d\n' % (r[0], 1 if float(r[1]) > best_t else 0))
)";
  }
  raise(ErrorCode::EmptyInput, "no reference solution for task " + task_id);
}

// ---------------------------------------------------------------------------
// Task definition documents
// ---------------------------------------------------------------------------

namespace {

nlohmann::ordered_json task_json(const core::TaskSpec& t) {
  nlohmann::ordered_json j;
  j["task_id"] = t.task_id;
  j["description"] = t.description;
  j["higher_is_better"] = t.higher_is_better;
  j["time_budget_s"] = t.time_budget_s;
  j["schema"] = {{"header", t.schema_header}, {"rows", t.schema_rows}};
  j["grader_kind"] = t.grader_kind;
  j["grader_params"] = t.grader_params;
  j["leaderboard_scores"] = t.leaderboard.scores;
  return j;
}

core::TaskSpec task_from(const nlohmann::json& j) {
  core::TaskSpec t;
  t.task_id = j.at("task_id").get<std::string>();
  t.description = j.at("description").get<std::string>();
  t.higher_is_better = j.at("higher_is_better").get<bool>();
  t.time_budget_s = j.value("time_budget_s", 86400.0);
  if (j.contains("schema")) {
    t.schema_header = j.at("schema").value("header", std::string("id,prediction"));
    t.schema_rows = j.at("schema").value("rows", 1);
  }
  t.grader_kind = j.value("grader_kind", std::string());
  if (j.contains("grader_params"))
    t.grader_params = j.at("grader_params").get<std::map<std::string, double>>();
  if (j.contains("leaderboard_scores"))
    t.leaderboard.scores = j.at("leaderboard_scores").get<std::vector<double>>();
  if (t.time_budget_s <= 0) raise(ErrorCode::InvariantViolation, "time_budget_s must be > 0");
  return t;
}

}  // namespace

std::string task_to_json(const core::TaskSpec& task) { return task_json(task).dump(2); }

core::TaskSpec task_from_json(const std::string& text) {
  return task_from(nlohmann::json::parse(text));
}

std::string tasks_to_json(const std::vector<core::TaskSpec>& tasks) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& t : tasks) arr.push_back(task_json(t));
  return arr.dump(2);
}

std::vector<core::TaskSpec> tasks_from_json(const std::string& text) {
  std::vector<core::TaskSpec> out;
  const auto arr = nlohmann::json::parse(text);
  for (const auto& j : arr) out.push_back(task_from(j));
  return out;
}

}  // namespace aslab::taskenv
