#include "aslab/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <set>
#include <thread>

#include <json.hpp>

#include "aslab/backend.hpp"
#include "aslab/diversity.hpp"
#include "aslab/error.hpp"
#include "aslab/metrics.hpp"
#include "aslab/search.hpp"
#include "aslab/simlab.hpp"
#include "aslab/taskenv.hpp"
#include "aslab/util.hpp"

namespace fs = std::filesystem;

namespace aslab::cli {

// ---------------------------------------------------------------------------
// INI config
// ---------------------------------------------------------------------------

std::optional<std::string> IniDoc::get(const std::string& section,
                                       const std::string& key) const {
  auto s = sections.find(section);
  if (s == sections.end()) return std::nullopt;
  auto k = s->second.find(key);
  if (k == s->second.end()) return std::nullopt;
  return k->second.first;
}

std::string IniDoc::get_or(const std::string& section, const std::string& key,
                           const std::string& fallback) const {
  auto v = get(section, key);
  return v ? *v : fallback;
}

IniDoc parse_ini(const std::string& text, const std::string& source_name) {
  IniDoc doc;
  std::string section;
  int line_no = 0;
  for (const auto& raw : util::split(text, '\n')) {
    ++line_no;
    std::string line = util::trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        raise(ErrorCode::ConfigError,
              source_name + ":" + std::to_string(line_no) + ": unterminated section header");
      section = util::trim(line.substr(1, line.size() - 2));
      if (section.empty())
        raise(ErrorCode::ConfigError,
              source_name + ":" + std::to_string(line_no) + ": empty section name");
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      raise(ErrorCode::ConfigError,
            source_name + ":" + std::to_string(line_no) + ": expected key = value");
    if (section.empty())
      raise(ErrorCode::ConfigError,
            source_name + ":" + std::to_string(line_no) + ": key outside any [section]");
    const std::string key = util::trim(line.substr(0, eq));
    const std::string value = util::trim(line.substr(eq + 1));
    if (key.empty())
      raise(ErrorCode::ConfigError,
            source_name + ":" + std::to_string(line_no) + ": empty key");
    doc.sections[section][key] = {value, line_no};
  }
  return doc;
}

namespace {

double to_double(const std::string& v, const std::string& what) {
  try {
    size_t idx = 0;
    const double d = std::stod(v, &idx);
    if (idx != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    raise(ErrorCode::ConfigError, "bad number for " + what + ": '" + v + "'");
  }
}

int to_int(const std::string& v, const std::string& what) {
  return static_cast<int>(to_double(v, what));
}

}  // namespace

RunConfig load_run_config(const std::string& path) {
  const auto text = util::try_read_file(path);
  if (!text) raise(ErrorCode::ConfigError, "cannot read config file " + path);
  const IniDoc ini = parse_ini(*text, path);

  RunConfig rc;
  auto& e = rc.experiment;

  const std::string scaffold = ini.get_or("scaffold", "kind", "greedy");
  if (scaffold == "greedy") e.scaffold = core::Scaffold::Greedy;
  else if (scaffold == "mcts") e.scaffold = core::Scaffold::Mcts;
  else raise(ErrorCode::ConfigError, "unknown scaffold kind '" + scaffold + "'");

  e.agent_name = ini.get_or("scaffold", "agent_name",
                            scaffold + "-" + ini.get_or("diversity", "mode", "baseline"));
  e.prompts_path = ini.get_or("scaffold", "prompts", "");
  e.seed = static_cast<uint64_t>(to_int(ini.get_or("scaffold", "seed", "0"), "seed"));
  e.uct_c = to_double(ini.get_or("scaffold", "uct_c", "1.414"), "uct_c");
  e.debug_limit = to_int(ini.get_or("scaffold", "debug_limit", "3"), "debug_limit");
  e.mcts_max_children =
      to_int(ini.get_or("scaffold", "mcts_max_children", "3"), "mcts_max_children");
  e.workers = to_int(ini.get_or("scaffold", "workers", "1"), "workers");

  e.seeds.clear();
  for (const auto& s : util::split(ini.get_or("scaffold", "seeds", "0"), ',')) {
    const std::string t = util::trim(s);
    if (!t.empty()) e.seeds.push_back(static_cast<uint64_t>(to_int(t, "seeds")));
  }
  if (e.seeds.empty()) e.seeds = {0};

  const std::string mode = ini.get_or("diversity", "mode", "baseline");
  if (mode == "baseline") e.diversity_mode = core::DiversityMode::Baseline;
  else if (mode == "ablated") e.diversity_mode = core::DiversityMode::Ablated;
  else raise(ErrorCode::ConfigError, "unknown diversity mode '" + mode + "'");

  e.backend_kind = ini.get_or("backend", "kind", "scripted");
  if (e.backend_kind != "scripted" && e.backend_kind != "http")
    raise(ErrorCode::ConfigError, "unknown backend kind '" + e.backend_kind + "'");
  e.script_path = ini.get_or("backend", "script", "");
  e.model = ini.get_or("backend", "model", "");
  e.temperature = to_double(ini.get_or("backend", "temperature", "0.6"), "temperature");
  e.max_context_tokens =
      to_int(ini.get_or("backend", "max_context_tokens", "131072"), "max_context_tokens");

  e.wall_clock_s = to_double(ini.get_or("budget", "wall_clock_s", "86400"), "wall_clock_s");
  e.per_node_exec_limit_s =
      to_double(ini.get_or("budget", "per_node_exec_limit_s", "10"), "per_node_exec_limit_s");
  e.max_nodes = to_int(ini.get_or("budget", "max_nodes", "100"), "max_nodes");
  e.deterministic_timing =
      ini.get_or("budget", "deterministic_timing", "true") != "false";

  if (e.wall_clock_s <= 0 || e.per_node_exec_limit_s <= 0 || e.max_nodes <= 0)
    raise(ErrorCode::ConfigError, "budget values must be positive");

  // Tasks: builtin pack ids and/or task definition files.
  const int n_teams = to_int(ini.get_or("tasks", "n_teams", "60"), "n_teams");
  const auto pack = taskenv::synthetic_task_pack(n_teams);
  for (const auto& s : util::split(ini.get_or("tasks", "use", ""), ',')) {
    const std::string id = util::trim(s);
    if (id.empty()) continue;
    if (id == "all") {
      rc.tasks = pack;
      continue;
    }
    const auto t = taskenv::find_task(pack, id);
    if (!t) raise(ErrorCode::ConfigError, "unknown builtin task '" + id + "'");
    rc.tasks.push_back(*t);
  }
  for (const auto& s : util::split(ini.get_or("tasks", "files", ""), ',')) {
    const std::string file = util::trim(s);
    if (file.empty()) continue;
    const auto content = util::try_read_file(file);
    if (!content) raise(ErrorCode::ConfigError, "cannot read task file " + file);
    try {
      rc.tasks.push_back(taskenv::task_from_json(*content));
    } catch (const std::exception& ex) {
      raise(ErrorCode::ConfigError, "bad task file " + file + ": " + ex.what());
    }
  }
  if (rc.tasks.empty()) raise(ErrorCode::ConfigError, "no tasks configured under [tasks]");

  std::set<std::string> ids;
  for (const auto& t : rc.tasks) {
    if (!ids.insert(t.task_id).second)
      raise(ErrorCode::ConfigError, "duplicate task id '" + t.task_id + "'");
  }

  rc.config_digest = util::sha256_hex(*text);
  return rc;
}

// ---------------------------------------------------------------------------
// Shared analysis plumbing
// ---------------------------------------------------------------------------

namespace {

struct RunKey {
  std::string agent;
  uint64_t seed = 0;
  bool operator<(const RunKey& o) const {
    return agent != o.agent ? agent < o.agent : seed < o.seed;
  }
};

RunKey parse_run_id(const std::string& run_id) {
  // Convention: <agent>--<task>--s<seed>.
  RunKey key{run_id, 0};
  const size_t sep = run_id.rfind("--s");
  if (sep != std::string::npos) {
    const std::string tail = run_id.substr(sep + 3);
    const size_t head = run_id.find("--");
    try {
      key.seed = static_cast<uint64_t>(std::stoull(tail));
      key.agent = run_id.substr(0, head);
    } catch (const std::exception&) {
      key.agent = run_id;
    }
  }
  return key;
}

struct LoadedLogs {
  std::map<std::string, core::TaskSpec> tasks;
  std::map<RunKey, std::vector<core::SolutionTree>> runs;
};

std::map<std::string, core::TaskSpec> load_task_index(const std::string& dir) {
  std::map<std::string, core::TaskSpec> out;
  for (const auto& t : taskenv::synthetic_task_pack()) out[t.task_id] = t;
  const auto text = util::try_read_file(dir + "/tasks.json");
  if (text) {
    for (auto& t : taskenv::tasks_from_json(*text)) out[t.task_id] = std::move(t);
  }
  return out;
}

LoadedLogs load_logs(const std::string& dir) {
  LoadedLogs out;
  out.tasks = load_task_index(dir);

  std::vector<std::string> files = util::list_files(dir, ".jsonl");
  for (const auto& f : util::list_files(dir + "/logs", ".jsonl")) files.push_back(f);
  std::sort(files.begin(), files.end());

  for (const auto& file : files) {
    if (util::contains(file, "requests.jsonl")) continue;
    const auto text = util::try_read_file(file);
    if (!text || util::trim(*text).empty()) continue;
    // Peek at the first record for orientation before the real load.
    const auto head = nlohmann::json::parse(util::split(*text, '\n').front());
    const std::string task_id = head.at("task_id").get<std::string>();
    bool hib = true;
    if (auto it = out.tasks.find(task_id); it != out.tasks.end())
      hib = it->second.higher_is_better;
    core::LoadedRun run = core::load_trajectory(*text, hib);
    out.runs[parse_run_id(run.run_id)].push_back(std::move(run.tree));
  }
  if (out.runs.empty()) raise(ErrorCode::NoLogsFound, "no trajectory logs under " + dir);
  return out;
}

std::vector<metrics::AttemptResult> attempts_from_runs(const LoadedLogs& logs) {
  std::vector<metrics::AttemptResult> out;
  for (const auto& [key, trees] : logs.runs) {
    for (const auto& tree : trees) {
      auto it = logs.tasks.find(tree.task_id());
      if (it == logs.tasks.end()) continue;
      const auto* best = core::best_node(tree);
      out.push_back(metrics::grade_attempt(
          key.agent, it->second, key.seed,
          best ? std::optional<double>(best->score) : std::nullopt));
    }
  }
  return out;
}

std::map<std::string, bool> orientation_of(const std::map<std::string, core::TaskSpec>& tasks) {
  std::map<std::string, bool> out;
  for (const auto& [id, t] : tasks) out[id] = t.higher_is_better;
  return out;
}

// ---------------------------------------------------------------------------
// SVG charts
// ---------------------------------------------------------------------------

constexpr int kSvgW = 640, kSvgH = 480, kSvgMargin = 60;
const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                          "#8c564b", "#e377c2", "#17becf"};

struct SeriesPoint {
  double x, y;
};

std::string svg_header(const std::string& x_label, const std::string& y_label,
                       double x0, double x1, double y0, double y1) {
  std::string s;
  s += "<svg xmlns='http://www.w3.org/2000/svg' width='" + std::to_string(kSvgW) +
       "' height='" + std::to_string(kSvgH) + "'>\n";
  s += "<rect width='100%' height='100%' fill='white'/>\n";
  const int x_axis = kSvgH - kSvgMargin;
  s += "<line x1='" + std::to_string(kSvgMargin) + "' y1='" + std::to_string(x_axis) +
       "' x2='" + std::to_string(kSvgW - kSvgMargin / 2) + "' y2='" + std::to_string(x_axis) +
       "' stroke='black'/>\n";
  s += "<line x1='" + std::to_string(kSvgMargin) + "' y1='" + std::to_string(kSvgMargin / 2) +
       "' x2='" + std::to_string(kSvgMargin) + "' y2='" + std::to_string(x_axis) +
       "' stroke='black'/>\n";
  s += "<text x='" + std::to_string(kSvgW / 2) + "' y='" + std::to_string(kSvgH - 15) +
       "' font-size='14' text-anchor='middle'>" + x_label + "</text>\n";
  s += "<text x='18' y='" + std::to_string(kSvgH / 2) +
       "' font-size='14' text-anchor='middle' transform='rotate(-90 18 " +
       std::to_string(kSvgH / 2) + ")'>" + y_label + "</text>\n";
  s += "<text x='" + std::to_string(kSvgMargin) + "' y='" + std::to_string(kSvgH - 38) +
       "' font-size='11'>" + util::format_fixed(x0, 2) + "</text>\n";
  s += "<text x='" + std::to_string(kSvgW - kSvgMargin) + "' y='" +
       std::to_string(kSvgH - 38) + "' font-size='11' text-anchor='end'>" +
       util::format_fixed(x1, 2) + "</text>\n";
  s += "<text x='" + std::to_string(kSvgMargin - 6) + "' y='" + std::to_string(x_axis) +
       "' font-size='11' text-anchor='end'>" + util::format_fixed(y0, 2) + "</text>\n";
  s += "<text x='" + std::to_string(kSvgMargin - 6) + "' y='" +
       std::to_string(kSvgMargin / 2 + 5) + "' font-size='11' text-anchor='end'>" +
       util::format_fixed(y1, 2) + "</text>\n";
  return s;
}

void write_scatter_svg(const std::string& path,
                       const std::map<std::string, std::vector<SeriesPoint>>& series,
                       const std::string& x_label, const std::string& y_label) {
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (const auto& [name, pts] : series) {
    for (const auto& p : pts) {
      x0 = std::min(x0, p.x); x1 = std::max(x1, p.x);
      y0 = std::min(y0, p.y); y1 = std::max(y1, p.y);
    }
  }
  if (x0 > x1) { x0 = 0; x1 = 1; y0 = 0; y1 = 1; }
  if (x1 - x0 < 1e-12) { x0 -= 0.5; x1 += 0.5; }
  if (y1 - y0 < 1e-12) { y0 -= 0.5; y1 += 0.5; }

  const auto px = [&](double x) {
    return kSvgMargin + (x - x0) / (x1 - x0) * (kSvgW - 1.5 * kSvgMargin);
  };
  const auto py = [&](double y) {
    return (kSvgH - kSvgMargin) - (y - y0) / (y1 - y0) * (kSvgH - 1.5 * kSvgMargin);
  };

  std::string s = svg_header(x_label, y_label, x0, x1, y0, y1);
  int color = 0;
  int legend_y = kSvgMargin / 2 + 10;
  for (const auto& [name, pts] : series) {
    const char* c = kPalette[color++ % 8];
    for (const auto& p : pts) {
      s += "<circle cx='" + util::format_fixed(px(p.x), 1) + "' cy='" +
           util::format_fixed(py(p.y), 1) + "' r='3.5' fill='" + c + "' fill-opacity='0.7'/>\n";
    }
    s += "<text x='" + std::to_string(kSvgW - kSvgMargin - 110) + "' y='" +
         std::to_string(legend_y) + "' font-size='12' fill='" + c + "'>" + name + "</text>\n";
    legend_y += 16;
  }
  s += "</svg>\n";
  util::write_file(path, s);
}

void write_cdf_svg(const std::string& path,
                   const std::map<std::string, std::array<double, 5>>& cdfs) {
  std::string s = svg_header("distinct architectures k", "fraction of tasks <= k", 1, 5, 0, 1);
  const auto px = [&](double x) {
    return kSvgMargin + (x - 1.0) / 4.0 * (kSvgW - 1.5 * kSvgMargin);
  };
  const auto py = [&](double y) {
    return (kSvgH - kSvgMargin) - y * (kSvgH - 1.5 * kSvgMargin);
  };
  int color = 0;
  int legend_y = kSvgMargin / 2 + 10;
  for (const auto& [name, cdf] : cdfs) {
    const char* c = kPalette[color++ % 8];
    std::string points;
    for (int k = 1; k <= 5; ++k) {
      points += util::format_fixed(px(k), 1) + "," +
                util::format_fixed(py(cdf[static_cast<size_t>(k - 1)]), 1) + " ";
    }
    s += "<polyline points='" + points + "' fill='none' stroke='" + c +
         "' stroke-width='2'/>\n";
    s += "<text x='" + std::to_string(kSvgW - kSvgMargin - 110) + "' y='" +
         std::to_string(legend_y) + "' font-size='12' fill='" + c + "'>" + name + "</text>\n";
    legend_y += 16;
  }
  s += "</svg>\n";
  util::write_file(path, s);
}

}  // namespace

// ---------------------------------------------------------------------------
// cmd_run
// ---------------------------------------------------------------------------

namespace {

void merge_tasks_json(const std::string& out_dir, const std::vector<core::TaskSpec>& tasks) {
  std::map<std::string, core::TaskSpec> merged;
  if (const auto existing = util::try_read_file(out_dir + "/tasks.json")) {
    for (auto& t : taskenv::tasks_from_json(*existing)) merged[t.task_id] = std::move(t);
  }
  for (const auto& t : tasks) merged[t.task_id] = t;
  std::vector<core::TaskSpec> list;
  for (auto& [id, t] : merged) list.push_back(std::move(t));
  util::write_file(out_dir + "/tasks.json", taskenv::tasks_to_json(list));
}

std::string now_string() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%S", std::gmtime(&t));
  return buf;
}

}  // namespace

int cmd_run(const std::string& config_path, const std::string& out_dir,
            const RunOptions& options) {
  RunConfig rc;
  try {
    rc = load_run_config(config_path);
  } catch (const Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  }
  if (options.seed) rc.experiment.seed = *options.seed;
  if (options.workers) rc.experiment.workers = *options.workers;

  std::unique_ptr<backend::Backend> be;
  try {
    if (rc.experiment.backend_kind == "scripted") {
      if (rc.experiment.script_path.empty())
        raise(ErrorCode::ConfigError, "[backend] script = <path> required for scripted kind");
      be = std::make_unique<backend::ScriptedBackend>(
          backend::ScriptedBackend::from_file(rc.experiment.script_path, rc.experiment.seed));
    } else {
      be = backend::HttpBackend::from_env(rc.experiment.model, {}, rc.experiment.seed);
    }
  } catch (const Error& e) {
    std::cerr << "backend error: " << e.what() << "\n";
    return e.code() == ErrorCode::ConfigError ? kExitConfigError : kExitBackendUnreachable;
  }

  fs::create_directories(out_dir + "/logs");
  merge_tasks_json(out_dir, rc.tasks);

  const std::string manifest_path = out_dir + "/manifest-" + rc.experiment.agent_name + ".json";
  std::set<std::pair<std::string, uint64_t>> completed;
  if (const auto existing = util::try_read_file(manifest_path)) {
    const auto j = nlohmann::json::parse(*existing);
    if (j.value("config_digest", "") != rc.config_digest) {
      std::cerr << "config error: " << manifest_path
                << " was produced by a different config (digest mismatch); "
                   "use a fresh output directory\n";
      return kExitConfigError;
    }
    for (const auto& entry : j.at("entries")) {
      if (entry.value("status", "") == "complete")
        completed.insert({entry.at("task_id").get<std::string>(),
                          entry.at("seed").get<uint64_t>()});
    }
  }

  struct Unit {
    const core::TaskSpec* task;
    uint64_t seed;
  };
  std::vector<Unit> units;
  for (const auto& task : rc.tasks) {
    for (uint64_t seed : rc.experiment.seeds) {
      if (!completed.count({task.task_id, seed})) units.push_back({&task, seed});
    }
  }

  backend::RequestLogger request_log(out_dir + "/requests.jsonl");

  operators::PromptTemplates templates;
  try {
    templates = rc.experiment.prompts_path.empty()
                    ? operators::PromptTemplates::builtin()
                    : operators::PromptTemplates::from_file(rc.experiment.prompts_path);
  } catch (const std::exception& e) {
    std::cerr << "config error: bad prompt templates: " << e.what() << "\n";
    return kExitConfigError;
  }

  struct UnitResult {
    std::string task_id;
    uint64_t seed = 0;
    bool aborted = false;
    bool backend_failure = false;
    bool budget_exhausted_before_drafts = false;
    std::string log_path;
    std::string error;
  };
  std::vector<UnitResult> results(units.size());

  std::atomic<size_t> cursor{0};
  const auto worker = [&]() {
    for (;;) {
      const size_t i = cursor.fetch_add(1);
      if (i >= units.size()) return;
      const Unit& unit = units[i];
      core::ExperimentConfig cfg = rc.experiment;
      const std::string run_id = cfg.agent_name + "--" + unit.task->task_id + "--s" +
                                 std::to_string(unit.seed);
      search::Runner runner(cfg, *be, templates, out_dir + "/sandbox/" + run_id);
      runner.set_request_logger(&request_log);
      search::RunResult run = runner.run(*unit.task, unit.seed, run_id);

      UnitResult& r = results[i];
      r.task_id = unit.task->task_id;
      r.seed = unit.seed;
      r.log_path = out_dir + "/logs/" + run_id + ".jsonl";
      util::write_file(r.log_path, run.trajectory);  // partial trees persist too
      r.aborted = run.aborted;
      r.error = run.abort_reason;
      r.budget_exhausted_before_drafts = run.budget_exhausted_before_drafts;
      r.backend_failure = util::contains(run.abort_reason, "ProviderUnavailable") ||
                          util::contains(run.abort_reason, "AuthError");
    }
  };

  const int n_workers = std::max(1, rc.experiment.workers);
  if (n_workers == 1 || units.size() <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  // Manifest: config digest, per-unit status, artifact paths.
  nlohmann::ordered_json manifest;
  manifest["run_id"] = rc.experiment.agent_name + "-" + rc.config_digest.substr(0, 12);
  manifest["agent"] = rc.experiment.agent_name;
  manifest["config_digest"] = rc.config_digest;
  manifest["started_at"] = now_string();
  manifest["entries"] = nlohmann::ordered_json::array();
  for (const auto& pair : completed) {
    nlohmann::ordered_json e;
    e["task_id"] = pair.first;
    e["seed"] = pair.second;
    e["status"] = "complete";
    e["log"] = out_dir + "/logs/" + rc.experiment.agent_name + "--" + pair.first + "--s" +
               std::to_string(pair.second) + ".jsonl";
    manifest["entries"].push_back(e);
  }
  int aborted = 0, backend_failures = 0;
  for (const auto& r : results) {
    nlohmann::ordered_json e;
    e["task_id"] = r.task_id;
    e["seed"] = r.seed;
    e["status"] = r.aborted ? "aborted" : "complete";
    e["log"] = r.log_path;
    if (r.budget_exhausted_before_drafts) e["budget_exhausted_before_drafts"] = true;
    if (r.aborted) {
      e["error"] = r.error;
      ++aborted;
      if (r.backend_failure) ++backend_failures;
    }
    manifest["entries"].push_back(e);
  }
  manifest["finished_at"] = now_string();
  util::write_file(manifest_path, manifest.dump(2));

  if (!results.empty() && backend_failures == static_cast<int>(results.size()))
    return kExitBackendUnreachable;
  if (aborted > 0) return kExitPartialFailure;
  return kExitOk;
}

// ---------------------------------------------------------------------------
// cmd_simulate
// ---------------------------------------------------------------------------

int cmd_simulate(const std::string& scenario_ref, const std::string& out_dir,
                 const SimulateOptions& options) {
  simlab::SimScenario scenario;
  try {
    if (scenario_ref == "default") scenario = simlab::SimScenario::default_controlled();
    else if (scenario_ref == "sweep") scenario = simlab::SimScenario::diversity_sweep();
    else scenario = simlab::SimScenario::from_file(scenario_ref);
  } catch (const std::exception& e) {
    std::cerr << "scenario error: " << e.what() << "\n";
    return kExitConfigError;
  }
  if (options.master_seed) scenario.master_seed = *options.master_seed;

  fs::create_directories(out_dir + "/logs");
  util::write_file(out_dir + "/scenario.json", scenario.to_json());
  util::write_file(out_dir + "/tasks.json", taskenv::tasks_to_json(scenario.task_specs()));

  simlab::ExperimentOptions opts;
  opts.n_seeds = options.n_seeds;
  opts.n_resamples = options.n_resamples;
  opts.elo_resamples = options.elo_resamples;
  opts.confidence = options.confidence;
  if (options.write_logs) {
    opts.on_run = [&out_dir](const std::string& agent, uint64_t seed,
                             const simlab::SimRun& run) {
      for (const auto& tree : run.trees) {
        const std::string run_id =
            agent + "--" + tree.task_id() + "--s" + std::to_string(seed);
        core::TrajectoryWriter writer(run_id, tree.task_id());
        for (const auto& node : tree.nodes()) writer.append(node);
        writer.flush_to(out_dir + "/logs/" + run_id + ".jsonl");
      }
    };
  }

  const simlab::ExperimentReport report = simlab::controlled_experiment(scenario, opts);
  util::write_file(out_dir + "/metrics.csv", report.to_csv());
  util::write_file(out_dir + "/cdf.csv", report.cdf_to_csv());
  write_cdf_svg(out_dir + "/cdf.svg", report.arch_cdf);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// cmd_analyze
// ---------------------------------------------------------------------------

int cmd_analyze(const std::string& log_dir, const std::string& out_dir,
                const AnalyzeOptions& options) {
  LoadedLogs logs;
  try {
    logs = load_logs(log_dir);
  } catch (const Error& e) {
    std::cerr << "analyze error: " << e.what() << "\n";
    return kExitConfigError;
  }
  fs::create_directories(out_dir);
  diversity::ArchTaxonomy taxonomy;
  try {
    taxonomy = options.taxonomy_path.empty()
                   ? diversity::ArchTaxonomy::builtin()
                   : diversity::ArchTaxonomy::from_file(options.taxonomy_path);
  } catch (const std::exception& e) {
    std::cerr << "analyze error: bad taxonomy file: " << e.what() << "\n";
    return kExitConfigError;
  }

  // Per-(agent, seed) diversity plus metric points.
  struct RunPoint {
    double entropy = 0.0;
    double mean_task_entropy = 0.0;
    double tree_diversity_mean = 0.0;
    double medal_rate = 0.0;
    double valid_rate = 0.0;
    double avg_normalized = 0.0;
    double avg_percentile = 0.0;
  };
  std::map<RunKey, RunPoint> points;

  std::string diversity_csv =
      "agent,seed,entropy_bits,mean_task_entropy_bits,tree_diversity_mean\n";
  for (const auto& [key, trees] : logs.runs) {
    RunPoint p;
    std::vector<const core::SolutionTree*> ptrs;
    double task_entropy_sum = 0.0;
    double diversity_sum = 0.0;
    for (const auto& tree : trees) {
      ptrs.push_back(&tree);
      const auto profile = diversity::profile_tree(tree, taxonomy);
      task_entropy_sum += profile.entropy_bits;
      diversity_sum += profile.tree_level_diversity;
    }
    p.entropy = diversity::run_entropy(ptrs, taxonomy);
    p.mean_task_entropy = task_entropy_sum / static_cast<double>(trees.size());
    p.tree_diversity_mean = diversity_sum / static_cast<double>(trees.size());

    std::vector<metrics::AttemptResult> attempts;
    for (const auto& tree : trees) {
      auto it = logs.tasks.find(tree.task_id());
      if (it == logs.tasks.end()) continue;
      const auto* best = core::best_node(tree);
      attempts.push_back(metrics::grade_attempt(
          key.agent, it->second, key.seed,
          best ? std::optional<double>(best->score) : std::nullopt));
    }
    if (!attempts.empty()) {
      p.medal_rate = metrics::medal_rate(attempts);
      p.valid_rate = metrics::valid_submission_rate(attempts);
      p.avg_normalized = metrics::mean_normalized_score(attempts);
      p.avg_percentile = metrics::mean_percentile(attempts);
    }
    points[key] = p;

    diversity_csv += util::csv_escape(key.agent) + "," + std::to_string(key.seed) + "," +
                     util::format_double(p.entropy) + "," +
                     util::format_double(p.mean_task_entropy) + "," +
                     util::format_double(p.tree_diversity_mean) + "\n";
  }
  util::write_file(out_dir + "/diversity.csv", diversity_csv);

  // Aggregate metrics with stratified bootstrap CIs.
  const auto attempts_all = attempts_from_runs(logs);
  std::map<std::string, std::vector<metrics::AttemptResult>> by_agent;
  for (const auto& a : attempts_all) by_agent[a.agent].push_back(a);

  std::string metrics_csv = "agent,metric,value,ci_low,ci_high\n";
  const auto add_row = [&metrics_csv](const std::string& agent, const std::string& metric,
                                      double value, double lo, double hi) {
    metrics_csv += util::csv_escape(agent) + "," + metric + "," + util::format_double(value) +
                   "," + util::format_double(lo) + "," + util::format_double(hi) + "\n";
  };
  for (const auto& [agent, attempts] : by_agent) {
    const auto per_task = metrics::group_by_task(attempts);
    const auto ci = [&](auto&& stat) {
      return metrics::stratified_bootstrap_ci(per_task, stat, options.n_resamples,
                                              options.confidence, options.seed);
    };
    const auto m = ci(metrics::medal_rate_of);
    add_row(agent, "medal_rate", metrics::medal_rate(attempts), m.first, m.second);
    const auto v = ci(metrics::valid_rate_of);
    add_row(agent, "valid_submission_rate", metrics::valid_submission_rate(attempts), v.first,
            v.second);
    const auto n = ci(metrics::mean_normalized_of);
    add_row(agent, "avg_normalized_score", metrics::mean_normalized_score(attempts), n.first,
            n.second);
    const auto pc = ci(metrics::mean_percentile_of);
    add_row(agent, "avg_percentile", metrics::mean_percentile(attempts), pc.first, pc.second);
  }
  if (by_agent.size() >= 2) {
    try {
      const auto elo = metrics::elo_with_ci(attempts_all, orientation_of(logs.tasks),
                                            options.elo_resamples, options.confidence,
                                            options.seed);
      for (const auto& [agent, e] : elo) add_row(agent, "elo", e.rating, e.ci_low, e.ci_high);
    } catch (const Error& e) {
      std::cerr << "warning: elo skipped: " << e.what() << "\n";
    }
  }
  util::write_file(out_dir + "/metrics.csv", metrics_csv);

  // Correlations between run entropy and each performance metric.
  std::string corr_csv = "scope,x,metric,r,n_points\n";
  const std::vector<std::pair<std::string, double RunPoint::*>> metric_fields = {
      {"medal_rate", &RunPoint::medal_rate},
      {"valid_submission_rate", &RunPoint::valid_rate},
      {"avg_normalized_score", &RunPoint::avg_normalized},
      {"avg_percentile", &RunPoint::avg_percentile},
  };
  if (by_agent.size() < 2 || points.size() < 3) {
    std::cerr << "warning: correlations need at least 2 agents and 3 (agent, seed) points; "
                 "writing header only\n";
  } else {
    std::vector<double> xs;
    std::map<std::string, std::vector<double>> ys;
    for (const auto& [key, p] : points) {
      xs.push_back(p.entropy);
      for (const auto& [name, field] : metric_fields) ys[name].push_back(p.*field);
    }
    for (const auto& [name, field] : metric_fields) {
      try {
        const double r = metrics::pearson_correlation(xs, ys[name]);
        corr_csv += "per_seed,entropy_bits," + name + "," + util::format_double(r) + "," +
                    std::to_string(xs.size()) + "\n";
      } catch (const Error& e) {
        std::cerr << "warning: per_seed correlation for " << name << " skipped: " << e.what()
                  << "\n";
      }
    }

    // Agent-level aggregation (each point = one agent averaged over seeds).
    std::map<std::string, std::vector<const RunPoint*>> per_agent_points;
    for (const auto& [key, p] : points) per_agent_points[key.agent].push_back(&p);
    if (per_agent_points.size() >= 3) {
      std::vector<double> ax;
      std::map<std::string, std::vector<double>> ay;
      for (const auto& [agent, list] : per_agent_points) {
        double ex = 0.0;
        std::map<std::string, double> em;
        for (const auto* p : list) {
          ex += p->entropy;
          for (const auto& [name, field] : metric_fields) em[name] += p->*field;
        }
        ax.push_back(ex / static_cast<double>(list.size()));
        for (const auto& [name, field] : metric_fields)
          ay[name].push_back(em[name] / static_cast<double>(list.size()));
      }
      for (const auto& [name, field] : metric_fields) {
        try {
          const double r = metrics::pearson_correlation(ax, ay[name]);
          corr_csv += "per_agent,entropy_bits," + name + "," + util::format_double(r) + "," +
                      std::to_string(ax.size()) + "\n";
        } catch (const Error& e) {
          std::cerr << "warning: per_agent correlation for " << name << " skipped: "
                    << e.what() << "\n";
        }
      }
    }
  }
  util::write_file(out_dir + "/correlations.csv", corr_csv);

  // Time accounting per agent, pooled over all of the agent's trees.
  std::string time_csv = "agent,mean_exec_time_valid_s,share_time_valid\n";
  std::map<std::string, std::pair<std::vector<const core::SolutionTree*>, bool>> agent_trees;
  for (const auto& [key, trees] : logs.runs) {
    for (const auto& tree : trees) agent_trees[key.agent].first.push_back(&tree);
  }
  for (const auto& [agent, entry] : agent_trees) {
    double valid_sum = 0.0, total_sum = 0.0;
    int valid_count = 0;
    for (const auto* tree : entry.first) {
      for (const auto& node : tree->nodes()) {
        total_sum += node.exec.wall_time_s;
        if (node.exec.status == core::ExecStatus::Success) {
          valid_sum += node.exec.wall_time_s;
          ++valid_count;
        }
      }
    }
    const double mean_valid = valid_count > 0 ? valid_sum / valid_count : 0.0;
    const double share = total_sum > 0.0 ? valid_sum / total_sum : 0.0;
    time_csv += util::csv_escape(agent) + "," + util::format_double(mean_valid) + "," +
                util::format_double(share) + "\n";
  }
  util::write_file(out_dir + "/time_accounting.csv", time_csv);

  // Distinct-architecture CDFs per agent.
  std::string cdf_csv = "agent,k,fraction_le_k\n";
  std::map<std::string, std::array<double, 5>> cdfs;
  {
    std::map<std::string, std::vector<int>> counts;
    for (const auto& [key, trees] : logs.runs) {
      for (const auto& tree : trees) {
        counts[key.agent].push_back(diversity::tree_level_diversity(tree, taxonomy));
      }
    }
    for (const auto& [agent, list] : counts) {
      const auto cdf = diversity::distinct_arch_cdf(list);
      cdfs[agent] = cdf;
      for (int k = 1; k <= 5; ++k) {
        cdf_csv += util::csv_escape(agent) + "," + std::to_string(k) + "," +
                   util::format_double(cdf[static_cast<size_t>(k - 1)]) + "\n";
      }
    }
  }
  util::write_file(out_dir + "/cdf.csv", cdf_csv);

  // Charts.
  std::map<std::string, std::vector<SeriesPoint>> scatter;
  for (const auto& [key, p] : points) {
    scatter[key.agent].push_back({p.entropy, p.medal_rate});
  }
  write_scatter_svg(out_dir + "/entropy_vs_medal_rate.svg", scatter, "ideation entropy (bits)",
                    "medal rate (%)");
  write_cdf_svg(out_dir + "/cdf.svg", cdfs);

  return kExitOk;
}

// ---------------------------------------------------------------------------
// cmd_elo
// ---------------------------------------------------------------------------

int cmd_elo(const std::vector<std::string>& log_dirs, const std::string& out_csv,
            const AnalyzeOptions& options) {
  std::vector<metrics::AttemptResult> attempts;
  std::map<std::string, bool> orientation;
  try {
    for (const auto& dir : log_dirs) {
      const LoadedLogs logs = load_logs(dir);
      for (auto& a : attempts_from_runs(logs)) attempts.push_back(std::move(a));
      for (const auto& [id, hib] : orientation_of(logs.tasks)) orientation[id] = hib;
    }
  } catch (const Error& e) {
    std::cerr << "elo error: " << e.what() << "\n";
    return kExitConfigError;
  }

  try {
    const auto elo = metrics::elo_with_ci(attempts, orientation, options.elo_resamples,
                                          options.confidence, options.seed);
    std::string csv = "agent,rating,n_matches\n";
    for (const auto& [agent, e] : elo) {
      csv += util::csv_escape(agent) + "," + util::format_double(e.rating) + "," +
             std::to_string(e.n_matches) + "\n";
    }
    util::write_file(out_csv, csv);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::DisconnectedComparisonGraph ||
        e.code() == ErrorCode::InsufficientData || e.code() == ErrorCode::EmptyInput) {
      std::cerr << "elo error: " << to_string(ErrorCode::DisconnectedComparisonGraph) << ": "
                << e.what() << "\n";
      return kExitDisconnectedGraph;
    }
    std::cerr << "elo error: " << e.what() << "\n";
    return kExitConfigError;
  }
  return kExitOk;
}

}  // namespace aslab::cli
