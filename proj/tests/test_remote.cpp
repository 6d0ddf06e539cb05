#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <chrono>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "spectemp/remote.hpp"

using namespace spectemp;
using nlohmann::json;

namespace {

// In-process endpoint whose behavior is set per test case.
struct StubServer {
  httplib::Server svr;
  std::thread thread;
  int port = 0;
  std::atomic<int> hits{0};

  ~StubServer() {
    svr.stop();
    if (thread.joinable()) thread.join();
  }

  void start() {
    port = svr.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { svr.listen_after_bind(); });
    svr.wait_until_ready();
  }

  std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port); }
};

std::string chat_body(const std::string& content, int completion_tokens = -1) {
  json r;
  r["choices"] = json::array({json{{"message", json{{"content", content}}}}});
  if (completion_tokens >= 0) r["usage"] = {{"completion_tokens", completion_tokens}};
  return r.dump();
}

RemoteConfig make_cfg(const std::string& base_url) {
  RemoteConfig cfg;
  cfg.base_url = base_url;
  cfg.model = "stub-model";
  cfg.api_key = "sk-test";
  cfg.max_attempts = 3;
  cfg.timeout_s = 5.0;
  cfg.backoff_base_s = 0.01;
  return cfg;
}

FrameRef frame_at(double t) { return {t, {1.0f, 0.0f}}; }

}  // namespace

TEST_CASE("request body carries model, prompt, and frame placeholders") {
  RemoteConfig cfg = make_cfg("http://unused");
  auto body = json::parse(build_chat_request(cfg, "hello", {frame_at(4.0), frame_at(5.0)}));
  CHECK(body["model"] == "stub-model");
  std::string content = body["messages"][0]["content"].get<std::string>();
  CHECK(content.find("hello") != std::string::npos);
  CHECK(content.find("[frame t=4.0s]") != std::string::npos);
  CHECK(content.find("[frame t=5.0s]") != std::string::npos);
}

TEST_CASE("image attachment mode builds image_url entries from the pattern") {
  RemoteConfig cfg = make_cfg("http://unused");
  cfg.attach_images = true;
  cfg.image_url_pattern = "file:///frames/{t}.jpg";
  auto body = json::parse(build_chat_request(cfg, "hello", {frame_at(4.0)}));
  auto& content = body["messages"][0]["content"];
  REQUIRE(content.is_array());
  REQUIRE(content.size() == 2);
  CHECK(content[0]["type"] == "text");
  CHECK(content[1]["type"] == "image_url");
  CHECK(content[1]["image_url"]["url"] == "file:///frames/4.0.jpg");
}

TEST_CASE("missing configuration is rejected at construction") {
  RemoteConfig cfg;
  CHECK_THROWS_AS(RemoteModel{cfg}, ConfigError);
  cfg.base_url = "http://localhost:1";
  CHECK_THROWS_AS(RemoteModel{cfg}, ConfigError);  // model still missing
}

TEST_CASE("successful round trip parses content, tokens, and auth header") {
  StubServer stub;
  std::string seen_auth;
  stub.svr.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    ++stub.hits;
    seen_auth = req.get_header_value("Authorization");
    res.set_content(chat_body("<answer>ok</answer>", 7), "application/json");
  });
  stub.start();

  RemoteModel m(make_cfg(stub.base_url()));
  ModelReply r = m.invoke("question?", {frame_at(1.0)});
  CHECK(r.text == "<answer>ok</answer>");
  CHECK(r.decode_tokens == 7);
  CHECK(stub.hits == 1);
  CHECK(seen_auth == "Bearer sk-test");
}

TEST_CASE("missing usage falls back to a length-based token estimate") {
  StubServer stub;
  stub.svr.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    res.set_content(chat_body("12345678"), "application/json");
  });
  stub.start();
  ModelReply r = RemoteModel(make_cfg(stub.base_url())).invoke("q", {});
  CHECK(r.decode_tokens == 2);
}

TEST_CASE("server errors are retried until attempts are exhausted") {
  StubServer stub;
  stub.svr.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    ++stub.hits;
    res.status = 500;
    res.set_content("boom", "text/plain");
  });
  stub.start();
  CHECK_THROWS_AS(RemoteModel(make_cfg(stub.base_url())).invoke("q", {}), RemoteUnavailable);
  CHECK(stub.hits == 3);
}

TEST_CASE("a server error followed by success recovers") {
  StubServer stub;
  stub.svr.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    if (++stub.hits == 1) {
      res.status = 503;
    } else {
      res.set_content(chat_body("recovered"), "application/json");
    }
  });
  stub.start();
  ModelReply r = RemoteModel(make_cfg(stub.base_url())).invoke("q", {});
  CHECK(r.text == "recovered");
  CHECK(stub.hits == 2);
}

TEST_CASE("client errors are rejected without retrying") {
  StubServer stub;
  stub.svr.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    ++stub.hits;
    res.status = 401;
    res.set_content("bad key", "text/plain");
  });
  stub.start();
  try {
    (void)RemoteModel(make_cfg(stub.base_url())).invoke("q", {});
    FAIL("expected RemoteRejected");
  } catch (const RemoteRejected& e) {
    CHECK(e.status == 401);
    CHECK(e.body == "bad key");
  }
  CHECK(stub.hits == 1);
}

TEST_CASE("an endpoint slower than the timeout reports unavailability") {
  StubServer stub;
  stub.svr.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    std::this_thread::sleep_for(std::chrono::milliseconds(1500));
    res.set_content(chat_body("late"), "application/json");
  });
  stub.start();
  RemoteConfig cfg = make_cfg(stub.base_url());
  cfg.timeout_s = 0.3;
  cfg.max_attempts = 2;
  auto t0 = std::chrono::steady_clock::now();
  CHECK_THROWS_AS(RemoteModel(cfg).invoke("q", {}), RemoteUnavailable);
  auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(elapsed < 5.0);
}

TEST_CASE("no listener at all reports unavailability") {
  RemoteConfig cfg = make_cfg("http://127.0.0.1:1");
  cfg.timeout_s = 0.3;
  cfg.max_attempts = 2;
  CHECK_THROWS_AS(RemoteModel(cfg).invoke("q", {}), RemoteUnavailable);
}
