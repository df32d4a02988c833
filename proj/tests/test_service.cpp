#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <thread>

#include "gcl/service.hpp"
#include "support.hpp"

#include "httplib.h"

using namespace gcl;
using nlohmann::json;

namespace {

std::string create_body(const std::string& description) { return json{{"description", description}}.dump(); }

std::size_t count_of(const std::string& haystack, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = haystack.find(needle); pos != std::string::npos; pos = haystack.find(needle, pos + 1)) ++n;
  return n;
}

const json kHomeAnswers = {{"home_position", {0, 0, 10}}, {"return_home", true}};

// A square session with every field filled, optionally approved.
std::string ready_square(SessionService& svc, bool approve = true) {
  const auto created = svc.create(create_body(testing::read_fixture("descriptions/square.txt")));
  const std::string id = created.body["id"];
  svc.patch_params(id, json{{"answers", kHomeAnswers}}.dump());
  if (approve) svc.verify(id, R"({"approved": true})");
  return id;
}

struct FakeClock {
  std::chrono::steady_clock::time_point now{};
  SessionService::Clock fn() {
    return [this] { return now; };
  }
};

}  // namespace

TEST_CASE("create extracts parameters and counts shapes") {
  SessionService svc;
  const auto r = svc.create(create_body(testing::read_fixture("descriptions/square.txt")));
  CHECK(r.status == 201);
  CHECK(r.body["id"].is_string());
  CHECK(r.body["shape_count"] == 1);
  CHECK(r.body["missing"] == json::array({"home_position", "return_home"}));
  CHECK(r.body["params"]["feed_rate"] == 100.0);
  CHECK(r.body["params"].size() == 11);
  CHECK(r.body["verified"] == false);

  const auto pocket = svc.create(create_body(testing::read_fixture("descriptions/pocket_islands.txt")));
  CHECK(pocket.body["shape_count"] == 3);
  CHECK(pocket.body["missing"].empty());

  CHECK(svc.create(create_body("")).status == 400);
  CHECK(svc.create(create_body("   ")).status == 400);
  CHECK(svc.create("not json").status == 400);
  CHECK(svc.create(R"({"text": "mill a square"})").status == 400);
  CHECK(svc.create(create_body("")).body["error"] == "bad_request");
  CHECK(svc.session_count() == 2);
}

TEST_CASE("patching parameters") {
  SessionService svc;
  const std::string id = svc.create(create_body(testing::read_fixture("descriptions/square.txt"))).body["id"];
  const auto partial = svc.patch_params(id, json{{"answers", {{"return_home", true}}}}.dump());
  CHECK(partial.status == 200);
  CHECK(partial.body["missing"] == json::array({"home_position"}));
  const auto bare = svc.patch_params(id, json{{"home_position", {0, 0, 10}}}.dump());
  CHECK(bare.body["missing"].empty());

  const auto bad = svc.patch_params(id, json{{"answers", {{"depth_of_cut", -1}}}}.dump());
  CHECK(bad.status == 422);
  CHECK(bad.body["error"] == "invalid_value");
  CHECK(svc.patch_params(id, json{{"answers", {{"nonsense", 1}}}}.dump()).status == 422);
  CHECK(svc.patch_params(id, "[1,2]").status == 400);
  CHECK(svc.patch_params("nope", json{{"answers", kHomeAnswers}}.dump()).status == 404);
}

TEST_CASE("preview") {
  SessionService svc;
  const auto id = ready_square(svc, false);
  const auto r = svc.preview(id);
  REQUIRE(r.status == 200);
  CHECK(count_of(r.body["svg"], "class=\"user feed\"") == 4);
  CHECK(r.body["toolpath"]["points"].size() == 5);

  const std::string hex = svc.create(create_body(testing::read_fixture("descriptions/hexagon.txt"))).body["id"];
  const auto h = svc.preview(hex);
  REQUIRE(h.status == 200);
  CHECK(count_of(h.body["svg"], "class=\"user feed\"") == 6);

  const std::string vague = svc.create(create_body("engrave something nice")).body["id"];
  const auto v = svc.preview(vague);
  CHECK(v.status == 409);
  CHECK(v.body["error"] == "insufficient_geometry");
  CHECK(svc.preview("nope").status == 404);
}

TEST_CASE("verification gates generation") {
  SessionService svc;
  const auto id = ready_square(svc, false);
  CHECK(svc.generate(id, "{}").status == 409);

  const auto rejected = svc.verify(id, R"({"approved": false})");
  CHECK(rejected.body["verified"] == false);
  CHECK(svc.generate(id, "{}").status == 409);

  CHECK(svc.verify(id, R"({"approved": "yes"})").status == 400);
  CHECK(svc.verify("nope", R"({"approved": true})").status == 404);

  const auto approved = svc.verify(id, R"({"approved": true})");
  CHECK(approved.status == 200);
  CHECK(approved.body["verified"] == true);

  // An answer for a field that is already set keeps the approval.
  svc.patch_params(id, json{{"answers", {{"feed_rate", 300}}}}.dump());
  CHECK(svc.generate(id, "{}").status == 200);
}

TEST_CASE("incomplete sessions cannot be approved or generated") {
  SessionService svc;
  const std::string id = svc.create(create_body(testing::read_fixture("descriptions/square.txt"))).body["id"];
  CHECK(svc.verify(id, R"({"approved": true})").status == 409);
  CHECK(svc.generate(id, "{}").status == 409);
  CHECK(svc.gcode(id).status == 404);
}

TEST_CASE("generate and download") {
  SessionService svc;
  const auto id = ready_square(svc);
  CHECK(svc.gcode(id).status == 404);

  const auto r = svc.generate(id, R"({"generator": "template"})");
  REQUIRE(r.status == 200);
  CHECK(r.body["success"] == true);
  CHECK(r.body["iterations_used"] == 1);
  CHECK(r.body["trace"][0]["functional"]["distance"] == 0.0);

  const auto g = svc.gcode(id);
  CHECK(g.status == 200);
  REQUIRE(g.text);
  CHECK(*g.text == r.body["final_gcode"].get<std::string>());
  CHECK(g.headers.at("Content-Disposition").find(".gcode") != std::string::npos);

  const auto faulty = svc.generate(id, R"({"generator": "fault", "faults": ["syntax", "none"]})");
  CHECK(faulty.body["iterations_used"] == 2);

  const auto failing = svc.generate(id, R"({"generator": "fault", "faults": ["functional"], "max_iterations": 2})");
  CHECK(failing.status == 200);
  CHECK(failing.body["success"] == false);
  const auto missing = svc.gcode(id);
  CHECK(missing.status == 404);
  CHECK(missing.headers.at("X-Failure-Summary").find("failed after 2 attempts") != std::string::npos);
  CHECK(missing.headers.at("X-Failure-Summary").find("10.000000") != std::string::npos);

  CHECK(svc.generate(id, R"({"generator": "oracle"})").status == 400);
  CHECK(svc.generate(id, R"({"max_iterations": 0})").status == 400);
  CHECK(svc.generate(id, R"({"generator": "fault", "faults": ["gremlins"]})").status == 400);
  CHECK(svc.generate("nope", "{}").status == 404);
}

TEST_CASE("remote generation that cannot reach its endpoint is a 502") {
  ServiceConfig cfg;
  EndpointConfig down;
  down.url = "http://127.0.0.1:1/v1";
  down.model = "m";
  down.timeout_secs = 2;
  cfg.remote = down;
  SessionService svc(cfg);
  const auto id = ready_square(svc);
  const auto r = svc.generate(id, R"({"generator": "remote"})");
  CHECK(r.status == 502);
  CHECK(r.body["error"] == "generator_unavailable");

  unsetenv("GLLM_ENDPOINT_URL");
  unsetenv("GLLM_MODEL");
  SessionService unconfigured;
  const auto id2 = ready_square(unconfigured);
  CHECK(unconfigured.generate(id2, R"({"generator": "remote"})").status == 502);
}

TEST_CASE("sessions expire after the TTL") {
  FakeClock clock;
  ServiceConfig cfg;
  cfg.ttl = std::chrono::seconds(60);
  SessionService svc(cfg, clock.fn());
  const auto id = ready_square(svc);
  clock.now += std::chrono::seconds(59);
  CHECK(svc.preview(id).status == 200);  // touching renews
  clock.now += std::chrono::seconds(59);
  CHECK(svc.preview(id).status == 200);
  clock.now += std::chrono::seconds(61);
  CHECK(svc.preview(id).status == 404);

  ready_square(svc);
  ready_square(svc);
  clock.now += std::chrono::seconds(120);
  CHECK(svc.purge_expired() == 2);
  CHECK(svc.session_count() == 0);
}

TEST_CASE("sessions do not share state") {
  SessionService svc;
  const auto a = ready_square(svc);
  const auto b = ready_square(svc);
  CHECK(a != b);
  std::thread ta([&] {
    for (int i = 0; i < 10; ++i) svc.generate(a, R"({"generator": "fault", "faults": ["syntax", "none"]})");
  });
  std::thread tb([&] {
    for (int i = 0; i < 10; ++i) svc.generate(b, R"({"generator": "template"})");
  });
  ta.join();
  tb.join();
  const auto ra = svc.generate(a, R"({"generator": "fault", "faults": ["syntax", "none"]})");
  const auto rb = svc.generate(b, R"({"generator": "template"})");
  CHECK(ra.body["iterations_used"] == 2);
  CHECK(rb.body["iterations_used"] == 1);
  for (const auto& rec : rb.body["trace"]) CHECK(rec["prompt"].get<std::string>().find("PREVIOUS ERRORS") == std::string::npos);
}

TEST_CASE("HTTP routes on a loopback port") {
  SessionService svc;
  HttpServer server(svc);
  REQUIRE(server.bind("127.0.0.1", 0));
  std::thread runner([&] { server.listen(); });
  httplib::Client client("127.0.0.1", server.port());

  auto health = client.Get("/health");
  REQUIRE(health);
  CHECK(health->status == 200);
  CHECK(json::parse(health->body)["status"] == "ok");
  CHECK(health->get_header_value("Access-Control-Allow-Origin") == "*");

  auto pre = client.Options("/sessions");
  REQUIRE(pre);
  CHECK(pre->status == 204);
  CHECK(pre->get_header_value("Access-Control-Allow-Methods").find("PATCH") != std::string::npos);

  auto created = client.Post("/sessions", create_body(testing::read_fixture("descriptions/square.txt")), "application/json");
  REQUIRE(created);
  CHECK(created->status == 201);
  const std::string id = json::parse(created->body)["id"];
  const std::string base = "/sessions/" + id;

  auto patched = client.Patch(base + "/params", json{{"answers", kHomeAnswers}}.dump(), "application/json");
  REQUIRE(patched);
  CHECK(json::parse(patched->body)["missing"].empty());

  auto preview = client.Get(base + "/preview");
  REQUIRE(preview);
  CHECK(count_of(json::parse(preview->body)["svg"], "class=\"user feed\"") == 4);

  CHECK(client.Post(base + "/generate", "{}", "application/json")->status == 409);
  CHECK(client.Post(base + "/verify", R"({"approved": true})", "application/json")->status == 200);

  auto failed = client.Post(base + "/generate", R"({"generator": "fault", "faults": ["rapid"], "max_iterations": 1})",
                            "application/json");
  REQUIRE(failed);
  CHECK(json::parse(failed->body)["success"] == false);
  auto no_file = client.Get(base + "/gcode");
  REQUIRE(no_file);
  CHECK(no_file->status == 404);
  CHECK(no_file->get_header_value("X-Failure-Summary").find("RAPID_WHILE_CUTTING") != std::string::npos);

  auto generated = client.Post(base + "/generate", R"({"generator": "template"})", "application/json");
  REQUIRE(generated);
  CHECK(generated->status == 200);
  auto file = client.Get(base + "/gcode");
  REQUIRE(file);
  CHECK(file->status == 200);
  CHECK(file->get_header_value("Content-Type").find("text/plain") == 0);
  CHECK(file->body == json::parse(generated->body)["final_gcode"].get<std::string>());

  auto unknown = client.Get("/sessions/doesnotexist/preview");
  REQUIRE(unknown);
  CHECK(unknown->status == 404);
  CHECK(json::parse(unknown->body)["error"] == "not_found");
  auto no_route = client.Get("/nowhere");
  REQUIRE(no_route);
  CHECK(no_route->status == 404);
  CHECK(json::parse(no_route->body)["error"] == "not_found");

  server.stop();
  runner.join();
}

TEST_CASE("a second server cannot take a bound port") {
  SessionService svc;
  HttpServer first(svc);
  REQUIRE(first.bind("127.0.0.1", 0));
  HttpServer second(svc);
  CHECK_FALSE(second.bind("127.0.0.1", first.port()));
}
