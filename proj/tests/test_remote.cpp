#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <atomic>
#include <thread>

#include "gcl/corrector.hpp"
#include "gcl/generation.hpp"
#include "gcl/prompt.hpp"
#include "support.hpp"

#include "httplib.h"

using namespace gcl;
using nlohmann::json;
using namespace std::chrono_literals;

namespace {

class MockEndpoint {
 public:
  MockEndpoint() {
    server_.Post("/echo", [this](const httplib::Request& req, httplib::Response& res) {
      ++hits;
      last_body = req.body;
      last_auth = req.get_header_value("Authorization");
      res.set_content(json{{"text", canned}}.dump(), "application/json");
    });
    server_.Post("/fail", [this](const httplib::Request&, httplib::Response& res) {
      ++hits;
      res.status = 500;
      res.set_content("boom", "text/plain");
    });
    server_.Post("/slow", [this](const httplib::Request&, httplib::Response& res) {
      ++hits;
      std::this_thread::sleep_for(600ms);
      res.set_content(json{{"text", "G21"}}.dump(), "application/json");
    });
    server_.Post("/garbage", [](const httplib::Request&, httplib::Response& res) {
      res.set_content("<html>not json</html>", "text/html");
    });
    server_.Post("/notext", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"choices":[]})", "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~MockEndpoint() {
    server_.stop();
    thread_.join();
  }

  EndpointConfig config(const std::string& path, double timeout = 5.0) const {
    EndpointConfig c;
    c.url = "http://127.0.0.1:" + std::to_string(port_) + path;
    c.api_key = "secret";
    c.model = "mock-model";
    c.timeout_secs = timeout;
    return c;
  }

  std::atomic<int> hits{0};
  std::string canned;
  std::string last_body;
  std::string last_auth;

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::PreconditionFailed;
}

}  // namespace

TEST_CASE("remote generator returns the endpoint text verbatim") {
  MockEndpoint mock;
  mock.canned = "```\n" + testing::read_fixture("task1_square.gcode") + "```";
  RemoteGenerator gen(mock.config("/echo"));
  CHECK(gen.generate({"PROMPT", 1, "s"}) == mock.canned);
  const auto sent = json::parse(mock.last_body);
  CHECK(sent["model"] == "mock-model");
  CHECK(sent["prompt"] == "PROMPT");
  CHECK(sent["max_tokens"] == 2048);
  CHECK(mock.last_auth == "Bearer secret");
  CHECK(gen.name() == "remote");
}

TEST_CASE("HTTP 500 surfaces without retry") {
  MockEndpoint mock;
  CHECK(code_of([&] { remote_complete(mock.config("/fail"), "p"); }) == ErrorCode::HttpError);
  CHECK(mock.hits == 1);
}

TEST_CASE("a slow endpoint times out") {
  MockEndpoint mock;
  const auto started = std::chrono::steady_clock::now();
  CHECK(code_of([&] { remote_complete(mock.config("/slow", 0.001), "p"); }) == ErrorCode::Timeout);
  CHECK(std::chrono::steady_clock::now() - started < 500ms);
}

TEST_CASE("malformed responses") {
  MockEndpoint mock;
  CHECK(code_of([&] { remote_complete(mock.config("/garbage"), "p"); }) == ErrorCode::MalformedResponse);
  CHECK(code_of([&] { remote_complete(mock.config("/notext"), "p"); }) == ErrorCode::MalformedResponse);
  CHECK(code_of([&] { remote_complete(mock.config("/missing"), "p"); }) == ErrorCode::HttpError);
}

TEST_CASE("unreachable and misconfigured endpoints") {
  EndpointConfig c;
  c.url = "http://127.0.0.1:1/v1";
  c.model = "m";
  c.timeout_secs = 2;
  CHECK(code_of([&] { remote_complete(c, "p"); }) == ErrorCode::HttpError);
  c.url = "ftp://example";
  CHECK(code_of([&] { remote_complete(c, "p"); }) == ErrorCode::GeneratorUnavailable);
}

TEST_CASE("cancel aborts an in-flight request") {
  MockEndpoint mock;
  RemoteGenerator gen(mock.config("/slow"));
  std::thread canceller([&] {
    std::this_thread::sleep_for(100ms);
    gen.cancel();
  });
  const auto started = std::chrono::steady_clock::now();
  CHECK(code_of([&] { gen.generate({"p", 1, "s"}); }) == ErrorCode::Timeout);
  CHECK(std::chrono::steady_clock::now() - started < 550ms);
  canceller.join();
}

TEST_CASE("remote extractor") {
  MockEndpoint mock;
  const auto expected = testing::task("1_square");
  mock.canned = "Here you go: " + to_json(expected).dump() + " hope that helps";
  CHECK(RemoteExtractor(mock.config("/echo")).extract("anything") == expected);
  CHECK(json::parse(mock.last_body)["prompt"].get<std::string>().find("DESCRIPTION: anything") != std::string::npos);

  CHECK(code_of([&] { RemoteExtractor(mock.config("/fail")).extract("x"); }) == ErrorCode::ExtractionFailed);
  const auto text = testing::read_fixture("descriptions/square.txt");
  const auto r = extract_parameters(text, RemoteExtractor(mock.config("/fail")));
  CHECK(r.warnings.size() == 1);
  CHECK(r.params == RuleBasedExtractor().extract(text));
}

TEST_CASE("the loop runs end to end against the mock endpoint") {
  MockEndpoint mock;
  const auto params = testing::task("1_square");
  mock.canned = "Sure, here is the program:\n```gcode\n" + template_generate(params) + "\n```\nLet me know.";
  RemoteGenerator gen(mock.config("/echo"));
  const auto result = run_loop(params, gen);
  CHECK(result.success);
  CHECK(result.iterations_used == 1);
  CHECK(result.final_gcode == serialize(parse_program(template_generate(params))));
}

TEST_CASE("the loop retries a failing endpoint once, then gives up") {
  MockEndpoint mock;
  RemoteGenerator gen(mock.config("/fail"));
  CHECK(code_of([&] { run_loop(testing::task("1_square"), gen); }) == ErrorCode::GeneratorUnavailable);
  CHECK(mock.hits == 2);
}
