#include <doctest.h>
#include <httplib.h>

#include <atomic>
#include <deque>
#include <mutex>
#include <thread>

#include "manbench/agents.hpp"
#include "manbench/error.hpp"

using namespace manbench;
using nlohmann::json;

namespace {

// Local chat-completions endpoint replaying canned (status, body) pairs.
class FakeEndpoint {
 public:
  explicit FakeEndpoint(std::deque<std::pair<int, std::string>> replies) : replies_(std::move(replies)) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      std::lock_guard lock(mu_);
      bodies.push_back(req.body);
      auth.push_back(req.get_header_value("Authorization"));
      auto [status, body] = replies_.empty() ? std::pair<int, std::string>{500, "{}"} : replies_.front();
      if (!replies_.empty()) replies_.pop_front();
      res.status = status;
      res.set_content(body, "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeEndpoint() {
    server_.stop();
    thread_.join();
  }

  LiveConfig config(int attempts) const {
    LiveConfig c;
    c.base_url = "http://127.0.0.1:" + std::to_string(port_) + "/v1";
    c.api_key = "test-key";
    c.max_attempts = attempts;
    c.backoff = std::chrono::milliseconds(1);
    c.timeout = std::chrono::seconds(5);
    return c;
  }

  std::vector<std::string> bodies;
  std::vector<std::string> auth;

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::mutex mu_;
  std::deque<std::pair<int, std::string>> replies_;
};

std::string ok(const std::string& content) {
  return json{{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}}.dump();
}

std::vector<ChatTurn> question() { return {{Role::user, "Question: 1+1?", "You"}}; }

CompletionParams params() {
  CompletionParams p;
  p.model = "tiny";
  p.temperature = 0.0;
  p.max_tokens = 16;
  p.extra[std::string(kAgentTag)] = std::string("subject");
  return p;
}

}  // namespace

TEST_CASE("live backend posts the chat-completions shape and returns the content verbatim") {
  FakeEndpoint ep({{200, ok("You: The best answer is: \"(B) 2\"")}});
  LiveBackend b(ep.config(1));
  CHECK(b.complete(question(), params()) == "You: The best answer is: \"(B) 2\"");
  REQUIRE(ep.bodies.size() == 1);
  json body = json::parse(ep.bodies[0]);
  CHECK(body["model"] == "tiny");
  CHECK(body["temperature"] == 0.0);
  CHECK(body["max_tokens"] == 16);
  CHECK(body["messages"] == json::parse(R"([{"role":"user","content":"Question: 1+1?"}])"));
  CHECK_FALSE(body.contains(std::string(kAgentTag)));
  CHECK(ep.auth[0] == "Bearer test-key");
}

TEST_CASE("HTTP 429 surfaces as a retryable http_status error") {
  FakeEndpoint ep({{429, R"({"error":"slow down"})"}});
  LiveBackend b(ep.config(1));
  try {
    b.complete(question(), params());
    FAIL("expected BackendError");
  } catch (const BackendError& e) {
    CHECK(e.kind() == BackendError::Kind::http_status);
    CHECK(e.http_status() == 429);
    CHECK(e.retryable());
  }
}

TEST_CASE("429 and 5xx are retried up to the attempt limit") {
  FakeEndpoint ep({{429, "{}"}, {503, "{}"}, {200, ok("done")}});
  LiveBackend b(ep.config(3));
  CHECK(b.complete(question(), params()) == "done");
  CHECK(ep.bodies.size() == 3);
  // Every attempt sends the same body.
  CHECK(ep.bodies[0] == ep.bodies[2]);
}

TEST_CASE("other 4xx statuses are not retried") {
  FakeEndpoint ep({{400, R"({"error":"bad"})"}, {200, ok("never")}});
  LiveBackend b(ep.config(3));
  try {
    b.complete(question(), params());
    FAIL("expected BackendError");
  } catch (const BackendError& e) {
    CHECK(e.http_status() == 400);
    CHECK_FALSE(e.retryable());
  }
  CHECK(ep.bodies.size() == 1);
}

TEST_CASE("malformed bodies") {
  FakeEndpoint ep({{200, "not json"}, {200, R"({"choices":[]})"}});
  LiveBackend b(ep.config(1));
  for (int i = 0; i < 2; ++i) {
    try {
      b.complete(question(), params());
      FAIL("expected BackendError");
    } catch (const BackendError& e) {
      CHECK(e.kind() == BackendError::Kind::malformed_response);
      CHECK_FALSE(e.retryable());
    }
  }
}

TEST_CASE("unreachable endpoint is a transport error") {
  LiveConfig c;
  c.base_url = "http://127.0.0.1:1/v1";
  c.max_attempts = 1;
  c.timeout = std::chrono::seconds(2);
  LiveBackend b(c);
  try {
    b.complete(question(), params());
    FAIL("expected BackendError");
  } catch (const BackendError& e) {
    CHECK(e.kind() == BackendError::Kind::transport);
    CHECK(e.retryable());
  }
}

TEST_CASE("live backend without a base URL is a configuration error") {
  CHECK_THROWS_AS(LiveBackend(LiveConfig{}), ConfigError);
}
