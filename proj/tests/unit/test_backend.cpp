#include <doctest.h>

#include <atomic>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "aslab/backend.hpp"
#include "aslab/error.hpp"

using namespace aslab;
using namespace aslab::backend;

namespace {

CompletionRequest req_of(const std::string& system, const std::string& user) {
  CompletionRequest r;
  r.system_prompt = system;
  r.user_prompt = user;
  return r;
}

}  // namespace

TEST_SUITE_BEGIN("backend");

TEST_CASE("scripted backend replays fingerprint entries deterministically") {
  const auto req = req_of("sys", "hello");
  ScriptedBackend be({{ScriptEntry::Match::Fingerprint, fingerprint(req), "x"}}, 7);
  const auto first = be.complete(req);
  const auto second = be.complete(req);
  CHECK(first.text == "x");
  CHECK(first.text == second.text);
  CHECK(first.latency_s == second.latency_s);
  CHECK_FALSE(first.truncated);
}

TEST_CASE("unscripted prompts raise ScriptMiss") {
  const auto scripted = req_of("sys", "known");
  ScriptedBackend be({{ScriptEntry::Match::Fingerprint, fingerprint(scripted), "x"}}, 7);
  try {
    be.complete(req_of("sys", "unknown"));
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ScriptMiss);
  }
}

TEST_CASE("contains entries match in order, first hit wins") {
  ScriptedBackend be({{ScriptEntry::Match::Contains, "draft 1", "first"},
                      {ScriptEntry::Match::Contains, "draft", "generic"}},
                     0);
  CHECK(be.complete(req_of("", "this is draft 1")).text == "first");
  CHECK(be.complete(req_of("", "this is draft 2")).text == "generic");
}

TEST_CASE("the script itself never mutates across calls") {
  ScriptedBackend be({{ScriptEntry::Match::Contains, "a", "x"}}, 0);
  const auto before = be.script();
  be.complete(req_of("", "a"));
  be.complete(req_of("", "ab"));
  CHECK(be.script().size() == before.size());
  CHECK(be.script()[0].response == before[0].response);
}

TEST_CASE("an empty script is rejected") {
  CHECK_THROWS_AS(ScriptedBackend({}, 0), Error);
}

TEST_CASE("scripted backend loads from JSON") {
  const std::string json = R"({"entries": [
    {"match": "contains", "key": "ping", "response": "pong"}
  ]})";
  auto be = ScriptedBackend::from_json(json, 1);
  CHECK(be.complete(req_of("", "ping")).text == "pong");
}

TEST_CASE("token estimation uses the chars/4 heuristic") {
  CompletionRequest r = req_of("abcd", "efgh");
  CHECK(estimate_tokens(r) == 2);
  r.user_prompt = "efghi";  // 9 chars total -> ceil(9/4) = 3
  CHECK(estimate_tokens(r) == 3);
}

TEST_CASE("prompts beyond the 128K window raise ContextOverflow") {
  CompletionRequest r;
  r.system_prompt.assign(131072 * 4 + 8, 'x');
  ScriptedBackend be({{ScriptEntry::Match::Contains, "x", "y"}}, 0);
  try {
    be.complete(r);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ContextOverflow);
  }
}

TEST_CASE("backoff schedule doubles with bounded jitter") {
  HttpBackend be("http://127.0.0.1:1", "", "m", {}, 42, [](double) {});
  const auto delays = be.backoff_schedule();
  REQUIRE(delays.size() == 4);
  double base = 1.0;
  for (double d : delays) {
    CHECK(d >= base * 0.8 - 1e-9);
    CHECK(d <= base * 1.2 + 1e-9);
    base *= 2.0;
  }
}

namespace {

struct TestServer {
  httplib::Server server;
  int port = 0;
  std::thread thread;

  explicit TestServer(httplib::Server::Handler handler) {
    server.Post("/v1/chat/completions", std::move(handler));
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this]() { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~TestServer() {
    server.stop();
    thread.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port); }
};

}  // namespace

TEST_CASE("http backend round-trips an OpenAI-style completion") {
  std::string seen_body;
  TestServer srv([&seen_body](const httplib::Request& req, httplib::Response& res) {
    seen_body = req.body;
    nlohmann::json out;
    out["choices"] = {{{"message", {{"content", "PLAN: ok"}}}, {"finish_reason", "stop"}}};
    res.set_content(out.dump(), "application/json");
  });

  HttpBackend be(srv.url(), "secret-key", "test-model", {}, 0, [](double) {});
  auto req = req_of("sys", "user");
  req.temperature = 0.73;
  const auto result = be.complete(req);
  CHECK(result.text == "PLAN: ok");
  CHECK_FALSE(result.truncated);

  // Temperature passes through verbatim; the model name rides along.
  const auto payload = nlohmann::json::parse(seen_body);
  CHECK(payload.at("temperature").get<double>() == doctest::Approx(0.73));
  CHECK(payload.at("model").get<std::string>() == "test-model");
  CHECK(payload.at("messages").size() == 2);
}

TEST_CASE("a length finish_reason marks the result truncated") {
  TestServer srv([](const httplib::Request&, httplib::Response& res) {
    nlohmann::json out;
    out["choices"] = {{{"message", {{"content", "cut"}}}, {"finish_reason", "length"}}};
    res.set_content(out.dump(), "application/json");
  });
  HttpBackend be(srv.url(), "", "m", {}, 0, [](double) {});
  CHECK(be.complete(req_of("s", "u")).truncated);
}

TEST_CASE("five 429s exhaust the retries into ProviderUnavailable") {
  std::atomic<int> hits{0};
  TestServer srv([&hits](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 429;
  });

  std::vector<double> slept;
  RetryPolicy retry;
  retry.base_delay_s = 0.0001;
  HttpBackend be(srv.url(), "", "m", retry, 0, [&slept](double s) { slept.push_back(s); });
  try {
    be.complete(req_of("s", "u"));
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ProviderUnavailable);
  }
  CHECK(hits.load() == 5);
  CHECK(slept.size() == 4);
}

TEST_CASE("retries recover when the provider comes back") {
  std::atomic<int> hits{0};
  TestServer srv([&hits](const httplib::Request&, httplib::Response& res) {
    if (++hits < 3) {
      res.status = 503;
      return;
    }
    nlohmann::json out;
    out["choices"] = {{{"message", {{"content", "recovered"}}}, {"finish_reason", "stop"}}};
    res.set_content(out.dump(), "application/json");
  });
  RetryPolicy retry;
  retry.base_delay_s = 0.0001;
  HttpBackend be(srv.url(), "", "m", retry, 0, [](double) {});
  CHECK(be.complete(req_of("s", "u")).text == "recovered");
  CHECK(hits.load() == 3);
}

TEST_CASE("401 fails immediately with AuthError") {
  std::atomic<int> hits{0};
  TestServer srv([&hits](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 401;
  });
  HttpBackend be(srv.url(), "bad", "m", {}, 0, [](double) {});
  try {
    be.complete(req_of("s", "u"));
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::AuthError);
  }
  CHECK(hits.load() == 1);
}

TEST_SUITE_END();
