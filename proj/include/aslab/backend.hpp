#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace aslab::backend {

struct CompletionRequest {
  std::string system_prompt;
  std::string user_prompt;
  double temperature = 0.6;
  int max_context_tokens = 131072;  // 128K context window
};

struct CompletionResult {
  std::string text;
  double latency_s = 0.0;
  bool truncated = false;
};

// chars/4 heuristic; the provider remains authoritative.
int estimate_tokens(const CompletionRequest& req);

// Stable fingerprint of a request's prompts (sha256 hex).
std::string fingerprint(const CompletionRequest& req);

class Backend {
 public:
  virtual ~Backend() = default;
  // Throws ContextOverflow, ProviderUnavailable, AuthError, ScriptMiss.
  virtual CompletionResult complete(const CompletionRequest& req) = 0;
};

// ---------------------------------------------------------------------------
// Scripted backend: deterministic canned responses for tests and simlab.
// ---------------------------------------------------------------------------

struct ScriptEntry {
  enum class Match { Fingerprint, Contains };
  Match kind = Match::Fingerprint;
  std::string key;
  std::string response;
};

class ScriptedBackend : public Backend {
 public:
  // Script must be non-empty; entries are tried in order, first match wins.
  ScriptedBackend(std::vector<ScriptEntry> script, uint64_t seed);

  static ScriptedBackend from_json(const std::string& text, uint64_t seed);
  static ScriptedBackend from_file(const std::string& path, uint64_t seed);

  CompletionResult complete(const CompletionRequest& req) override;

  const std::vector<ScriptEntry>& script() const { return script_; }

 private:
  std::vector<ScriptEntry> script_;
  uint64_t seed_;
};

// ---------------------------------------------------------------------------
// OpenAI-compatible chat-completions client
// ---------------------------------------------------------------------------

struct RetryPolicy {
  int max_attempts = 5;
  double base_delay_s = 1.0;  // 1, 2, 4, 8, 16s with +/-20% jitter
  double jitter = 0.2;
};

class HttpBackend : public Backend {
 public:
  using Sleeper = std::function<void(double seconds)>;

  HttpBackend(std::string base_url, std::string api_key, std::string model,
              RetryPolicy retry = {}, uint64_t seed = 0, Sleeper sleeper = nullptr);

  // Reads BACKEND_URL and BACKEND_API_KEY.
  static std::unique_ptr<HttpBackend> from_env(std::string model, RetryPolicy retry = {},
                                               uint64_t seed = 0);

  CompletionResult complete(const CompletionRequest& req) override;

  // Delays the client would sleep between attempts (deterministic per seed).
  std::vector<double> backoff_schedule() const;

 private:
  std::string base_url_;
  std::string api_key_;
  std::string model_;
  RetryPolicy retry_;
  uint64_t seed_;
  Sleeper sleeper_;
};

// ---------------------------------------------------------------------------
// Request log: JSON lines {run_id, node_id, temperature, prompt_sha256,
// latency_s}; appends are serialized.
// ---------------------------------------------------------------------------

class RequestLogger {
 public:
  explicit RequestLogger(std::string path);

  void log(const std::string& run_id, const std::string& node_id, double temperature,
           const std::string& prompt_sha256, double latency_s);

 private:
  std::string path_;
  std::mutex mutex_;
};

}  // namespace aslab::backend
