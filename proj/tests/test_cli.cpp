#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <csignal>
#include <spawn.h>
#include <sys/wait.h>
#include <thread>

#include "gcl/generation.hpp"
#include "support.hpp"

#include "httplib.h"

extern char** environ;

namespace fs = std::filesystem;
using nlohmann::json;
using namespace std::chrono_literals;

namespace {

struct Run {
  int code = -1;
  std::string out;  // stdout and stderr interleaved
};

std::string quote(const std::string& s) {
  std::string q = "'";
  for (char c : s) q += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return q + "'";
}

Run gcl_run(const std::vector<std::string>& args, const std::string& env = "") {
  std::string cmd = env + " " + quote(GCL_BINARY);
  for (const auto& a : args) cmd += " " + quote(a);
  cmd += " 2>&1";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  for (std::size_t n; (n = fread(buf, 1, sizeof buf, pipe)) > 0;) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("gcl_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name, const std::string& content) const {
    const auto p = path / name;
    std::ofstream(p, std::ios::binary) << content;
    return p.string();
  }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
  static int& counter() {
    static int n = 0;
    return n;
  }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int free_port() {
  const int fd = socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  socklen_t len = sizeof(addr);
  bind(fd, reinterpret_cast<sockaddr*>(&addr), len);
  getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  close(fd);
  return ntohs(addr.sin_port);
}

gcl::TaskParameters wide_square() {
  auto p = testing::task("1_square");
  gcl::Shape s;
  s.kind = gcl::ShapeKind::Rectangle;
  s.width = 60;
  s.height = 50;
  p.shape = s;
  return p;
}

}  // namespace

TEST_CASE("validate") {
  const auto clean = gcl_run({"validate", testing::fixture_path("task1_square.gcode")});
  CHECK(clean.code == 0);
  CHECK(clean.out == "OK\n");

  const auto bad = gcl_run({"validate", testing::fixture_path("g022.gcode")});
  CHECK(bad.code == 1);
  CHECK(bad.out.find(": SYNTAX:") != std::string::npos);
  CHECK(std::count(bad.out.begin(), bad.out.end(), '\n') == 1);

  CHECK(gcl_run({"validate", testing::fixture_path("nope.gcode")}).code == 3);
  CHECK(gcl_run({"validate"}).code == 2);
  CHECK(gcl_run({"frobnicate"}).code == 2);

  const auto drilling = gcl_run({"validate", "--drilling", testing::fixture_path("drilling/pos1.gcode")});
  CHECK(drilling.code == 1);
  CHECK(drilling.out.find("UNSAFE_DRILL_MOVE") != std::string::npos);
  CHECK(gcl_run({"validate", testing::fixture_path("drilling/pos1.gcode")}).code == 0);
  CHECK(gcl_run({"validate", "--drilling", testing::fixture_path("drilling/neg1.gcode")}).code == 0);

  TempDir dir;
  const auto registry = dir.file("registry.txt", "G0\nG1\nM30\n");
  const auto strict = gcl_run({"validate", "--registry", registry, testing::fixture_path("task1_square.gcode")});
  CHECK(strict.code == 1);
  CHECK(strict.out.find("G21") != std::string::npos);
}

TEST_CASE("simulate") {
  TempDir dir;
  const auto svg = dir / "out.svg";
  const auto js = dir / "out.json";
  const auto r = gcl_run({"simulate", testing::fixture_path("task1_square.gcode"), "--svg", svg, "--json", js});
  CHECK(r.code == 0);
  CHECK(r.out.find("5 points, 4 feed segments, 0 rapid segments") != std::string::npos);
  CHECK(slurp(svg) == testing::read_fixture("golden/task1_square.svg"));
  CHECK(json::parse(slurp(js))["points"].size() == 5);

  const auto still = gcl_run({"simulate", testing::fixture_path("no_motion.gcode"), "--svg", dir / "none.svg"});
  CHECK(still.code == 1);
  CHECK(still.out.find("EmptyPath") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "none.svg"));
}

TEST_CASE("compare") {
  TempDir dir;
  const auto params = testing::fixture_path("tasks/1_square.json");
  const auto ok = gcl_run({"compare", testing::fixture_path("task1_square.gcode"), "--params", params});
  CHECK(ok.code == 0);
  CHECK(ok.out == "tool paths match within tolerance\nd=0.000000\n");

  const auto wide = dir.file("wide.gcode", gcl::template_generate(wide_square()));
  const auto off = gcl_run({"compare", wide, "--params", params});
  CHECK(off.code == 1);
  CHECK(off.out.find("d=10.000000") != std::string::npos);
  CHECK(gcl_run({"compare", wide, "--params", params, "--tolerance", "10"}).code == 0);
  CHECK(gcl_run({"compare", wide, "--params", dir.file("bad.json", "{oops")}).code == 2);
  CHECK(gcl_run({"compare", wide}).code == 2);
}

TEST_CASE("generate") {
  TempDir dir;
  const auto out = dir / "square.gcode";
  const auto trace = dir / "trace.json";
  const auto r = gcl_run({"generate", "--params", testing::fixture_path("tasks/1_square.json"), "--out", out, "--trace",
                          trace});
  CHECK(r.code == 0);
  CHECK(slurp(out) == gcl::serialize(gcl::parse_program(gcl::template_generate(testing::task("1_square")))) + "\n");
  CHECK(json::parse(slurp(trace))["trace"].size() == 1);

  const auto faulty = gcl_run({"generate", "--params", testing::fixture_path("tasks/6_hole_grid.json"), "--generator",
                               "fault", "--faults", "drilling,none", "--trace", trace});
  CHECK(faulty.code == 0);
  CHECK(json::parse(slurp(trace))["iterations_used"] == 2);

  const auto stuck = gcl_run({"generate", "--params", testing::fixture_path("tasks/1_square.json"), "--generator",
                              "fault", "--faults", "functional", "--max-iter", "2"});
  CHECK(stuck.code == 1);

  auto partial = to_json(testing::task("1_square"));
  partial["feed_rate"] = nullptr;
  partial["spindle_speed"] = nullptr;
  const auto missing = gcl_run({"generate", "--params", dir.file("partial.json", partial.dump())});
  CHECK(missing.code == 2);
  CHECK(missing.out.find("feed_rate spindle_speed") != std::string::npos);

  const auto remote = gcl_run({"generate", "--params", testing::fixture_path("tasks/1_square.json"), "--generator",
                               "remote"},
                              "env -u GLLM_ENDPOINT_URL -u GLLM_MODEL");
  CHECK(remote.code == 3);
}

TEST_CASE("decompose") {
  const auto pocket = gcl_run({"decompose", "--description", testing::read_fixture("descriptions/pocket_islands.txt")});
  CHECK(pocket.code == 0);
  CHECK(pocket.out.rfind("1. ", 0) == 0);
  CHECK(pocket.out.find("\n2. ") != std::string::npos);
  CHECK(pocket.out.find("\n3. ") != std::string::npos);
  CHECK(std::count(pocket.out.begin(), pocket.out.end(), '\n') == 3);

  const auto single = gcl_run({"decompose", "--description", "mill a square"});
  CHECK(single.code == 0);
  CHECK(single.out == "1. mill a square\n");
  CHECK(gcl_run({"decompose", "--description", ""}).code == 2);
}

TEST_CASE("bench") {
  TempDir dir;
  const auto csv = dir / "bench.csv";
  const auto r = gcl_run({"bench", "--tasks", testing::fixture_path("tasks"), "--runs", "5", "--csv", csv});
  CHECK(r.code == 0);
  CHECK(r.out.find("success_rate=1.000") != std::string::npos);
  CHECK(r.out.find("avg_iterations=1.000") != std::string::npos);
  const auto rows = slurp(csv);
  CHECK(std::count(rows.begin(), rows.end(), '\n') == 31);

  const auto faulty = gcl_run({"bench", "--tasks", testing::fixture_path("tasks"), "--runs", "2", "--generator",
                               "fault", "--faults", "syntax,none", "--csv", csv});
  CHECK(faulty.code == 0);
  CHECK(faulty.out.find("avg_iterations=2.000") != std::string::npos);

  CHECK(gcl_run({"bench", "--tasks", testing::fixture_path("tasks"), "--runs", "0", "--csv", csv}).code == 2);
  CHECK(gcl_run({"bench", "--tasks", dir / "empty", "--csv", csv}).code != 0);
}

TEST_CASE("serve answers health checks and stops on SIGINT") {
  const int port = free_port();
  const std::string port_arg = std::to_string(port);
  const char* argv[] = {GCL_BINARY, "serve", "--port", port_arg.c_str(), nullptr};
  pid_t pid = 0;
  REQUIRE(posix_spawn(&pid, GCL_BINARY, nullptr, nullptr, const_cast<char* const*>(argv), environ) == 0);

  httplib::Client client("127.0.0.1", port);
  client.set_read_timeout(2s);
  int health_status = 0;
  for (int i = 0; i < 100 && health_status == 0; ++i) {
    std::this_thread::sleep_for(50ms);
    if (auto res = client.Get("/health")) health_status = res->status;
  }

  kill(pid, SIGINT);
  int status = 0;
  REQUIRE(waitpid(pid, &status, 0) == pid);
  CHECK(health_status == 200);
  CHECK(WIFEXITED(status));
  CHECK(WEXITSTATUS(status) == 0);
}

TEST_CASE("serve on a busy port exits with an IO error") {
  httplib::Server holder;
  const int port = holder.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  const auto r = gcl_run({"serve", "--port", std::to_string(port)});
  CHECK(r.code == 3);
}
