#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "gcl/corrector.hpp"
#include "gcl/format.hpp"
#include "gcl/prompt.hpp"
#include "support.hpp"

using namespace gcl;

namespace {

class CountingGenerator final : public Generator {
 public:
  explicit CountingGenerator(Generator& inner) : inner_(inner) {}
  std::string generate(const GeneratorRequest& request) override {
    ++calls;
    attempts.push_back(request.attempt);
    return inner_.generate(request);
  }
  std::string name() const override { return "counting"; }
  int calls = 0;
  std::vector<int> attempts;

 private:
  Generator& inner_;
};

class ThrowingGenerator final : public Generator {
 public:
  explicit ThrowingGenerator(ErrorCode code) : code_(code) {}
  std::string generate(const GeneratorRequest&) override {
    ++calls;
    throw Error(code_, "scripted failure");
  }
  std::string name() const override { return "throwing"; }
  int calls = 0;

 private:
  ErrorCode code_;
};

class FlakyGenerator final : public Generator {
 public:
  std::string generate(const GeneratorRequest& request) override {
    if (++calls == 1) throw Error(ErrorCode::Timeout, "first call times out");
    return template_.generate(request);
  }
  std::string name() const override { return "flaky"; }
  int calls = 0;

 private:
  TemplateGenerator template_;
};

std::vector<BenchmarkTask> canonical_tasks() {
  std::vector<BenchmarkTask> out;
  for (const auto& name : testing::task_names()) out.push_back({name, testing::task(name)});
  return out;
}

const std::vector<FaultKind> kFaults = {FaultKind::Syntax, FaultKind::Unreachable, FaultKind::Rapid,
                                        FaultKind::Functional, FaultKind::NoGCode, FaultKind::None};

}  // namespace

TEST_CASE("template generator converges at once") {
  TemplateGenerator gen;
  const auto result = run_loop(testing::task("1_square"), gen);
  CHECK(result.success);
  CHECK(result.iterations_used == 1);
  REQUIRE(result.trace.size() == 1);
  CHECK(result.final_distance() == 0.0);
  CHECK(result.trace[0].feedback.empty());
  CHECK(result.final_gcode == result.trace[0].gcode);
}

TEST_CASE("a syntax fault is repaired on the second attempt") {
  FaultInjectingGenerator gen({FaultKind::Syntax, FaultKind::None});
  const auto result = run_loop(testing::task("1_square"), gen);
  CHECK(result.success);
  CHECK(result.iterations_used == 2);
  REQUIRE(result.trace.size() == 2);
  const auto& first = result.trace[0];
  CHECK_FALSE(first.report.passed);
  REQUIRE(!first.report.diagnostics.empty());
  CHECK(first.report.diagnostics[0].rule == Rule::Syntax);
  CHECK_FALSE(first.functional);
  CHECK(result.trace[1].prompt.find("G022") != std::string::npos);
  CHECK(result.trace[1].prompt.find(first.feedback) != std::string::npos);
  CHECK(result.trace[0].prompt.find("PREVIOUS ERRORS") == std::string::npos);
}

TEST_CASE("a persistent 60x50 answer fails after five attempts") {
  FaultInjectingGenerator gen({FaultKind::Functional});
  const auto result = run_loop(testing::task("1_square"), gen);
  CHECK_FALSE(result.success);
  CHECK_FALSE(result.final_gcode);
  CHECK(result.iterations_used == 5);
  REQUIRE(result.trace.size() == 5);
  for (std::size_t i = 0; i < result.trace.size(); ++i) {
    const auto& rec = result.trace[i];
    CHECK(rec.attempt == static_cast<int>(i) + 1);
    CHECK(rec.report.passed);
    REQUIRE(rec.functional);
    CHECK(std::abs(rec.functional->distance - 10.0) <= 1e-9);
    CHECK_FALSE(rec.functional->matched);
    if (i > 0) CHECK(rec.prompt.find("d=10.000000") != std::string::npos);
  }
}

TEST_CASE("no G-code in the answer is a failed attempt, not an abort") {
  FaultInjectingGenerator gen({FaultKind::NoGCode, FaultKind::None});
  const auto result = run_loop(testing::task("4_circle"), gen);
  CHECK(result.success);
  CHECK(result.iterations_used == 2);
  CHECK_FALSE(result.trace[0].gcode);
  CHECK_FALSE(result.trace[0].report.passed);
}

TEST_CASE("every fault class converges on attempt two") {
  for (const auto& name : testing::task_names()) {
    const auto params = testing::task(name);
    for (auto kind : {FaultKind::Syntax, FaultKind::Unreachable, FaultKind::Rapid, FaultKind::Drilling,
                      FaultKind::Functional}) {
      if (kind == FaultKind::Drilling && params.operation != Operation::Drilling) continue;
      CAPTURE(name);
      CAPTURE(to_string(kind));
      FaultInjectingGenerator gen({kind, FaultKind::None});
      const auto result = run_loop(params, gen);
      CHECK(result.success);
      CHECK(result.iterations_used == 2);
      CHECK_FALSE(result.trace[0].feedback.empty());
      CHECK(result.trace[1].prompt.find(result.trace[0].feedback) != std::string::npos);
    }
  }
}

TEST_CASE("loop invariants over random fault scripts") {
  std::mt19937 rng(11);
  for (int t = 0; t < 120; ++t) {
    std::vector<FaultKind> script;
    const int len = 1 + static_cast<int>(rng() % 6);
    for (int i = 0; i < len; ++i) script.push_back(kFaults[rng() % kFaults.size()]);
    const auto names = testing::task_names();
    const auto params = testing::task(names[rng() % names.size()]);
    LoopConfig cfg;
    cfg.max_iterations = 1 + static_cast<int>(rng() % 5);

    FaultInjectingGenerator inner(script);
    CountingGenerator gen(inner);
    const auto result = run_loop(params, gen, cfg);

    // Bounded, with attempts numbered from one.
    CHECK(gen.calls == result.iterations_used);
    CHECK(result.iterations_used <= cfg.max_iterations);
    CHECK(static_cast<int>(result.trace.size()) == result.iterations_used);
    for (std::size_t i = 0; i < gen.attempts.size(); ++i) CHECK(gen.attempts[i] == static_cast<int>(i) + 1);

    for (std::size_t i = 0; i < result.trace.size(); ++i) {
      const auto& rec = result.trace[i];
      // Syntax gates the other checks.
      const bool syntax = std::any_of(rec.report.diagnostics.begin(), rec.report.diagnostics.end(),
                                      [](const Diagnostic& d) { return d.rule == Rule::Syntax; });
      if (syntax) {
        for (const auto& d : rec.report.diagnostics) CHECK(d.rule == Rule::Syntax);
      }
      CHECK(rec.functional.has_value() == rec.report.passed);
      // Failures are carried forward verbatim.
      const bool failed = !rec.report.passed || !rec.functional || !rec.functional->matched;
      if (failed && i + 1 < result.trace.size()) {
        const auto& next = result.trace[i + 1].prompt;
        for (const auto& d : rec.report.diagnostics) CHECK(next.find(d.message) != std::string::npos);
        if (rec.functional) CHECK(next.find(format_fixed(rec.functional->distance, 6)) != std::string::npos);
      }
    }
    if (result.success) {
      CHECK(result.trace.back().report.passed);
      CHECK(result.trace.back().functional->matched);
    }

    FaultInjectingGenerator again(script);
    const auto repeat = run_loop(params, again, cfg);
    CHECK(to_json(repeat) == to_json(result));
  }
}

TEST_CASE("loop preconditions and generator failures") {
  TemplateGenerator gen;
  auto partial = testing::task("1_square");
  partial.spindle_speed.reset();
  CHECK_THROWS_AS(run_loop(partial, gen), Error);
  LoopConfig bad;
  bad.max_iterations = 0;
  CHECK_THROWS_AS(run_loop(testing::task("1_square"), gen, bad), Error);

  ThrowingGenerator down(ErrorCode::HttpError);
  try {
    run_loop(testing::task("1_square"), down);
    FAIL("expected GeneratorUnavailable");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::GeneratorUnavailable);
  }
  CHECK(down.calls == 2);

  FlakyGenerator flaky;
  const auto result = run_loop(testing::task("1_square"), flaky);
  CHECK(result.success);
  CHECK(result.iterations_used == 1);
  CHECK(flaky.calls == 2);
}

TEST_CASE("multi-shape pocket with two islands") {
  TemplateGenerator gen;
  const auto result = run_multi_shape(testing::read_fixture("descriptions/pocket_islands.txt"), gen);
  CHECK(result.success);
  CHECK(result.failure.empty());
  REQUIRE(result.subtasks.size() == 3);
  for (const auto& s : result.subtasks) {
    CHECK(s.missing.empty());
    CHECK(s.loop.success);
    CHECK(s.loop.iterations_used == 1);
  }
  CHECK(result.subtasks[0].params.shape->kind == ShapeKind::Pocket);
  CHECK(result.subtasks[1].params.shape->kind == ShapeKind::Circle);
  CHECK(result.subtasks[1].params.shape->center == Point(40, 40));
  CHECK(result.subtasks[2].params.shape->center == Point(60, 40));
  REQUIRE(result.final_gcode);
  const auto program = parse_program(*result.final_gcode);
  const auto m30 = std::count_if(program.blocks.begin(), program.blocks.end(), [](const Block& b) { return b.has('M', 30); });
  CHECK(m30 == 1);
  REQUIRE(result.integrated_report);
  CHECK(result.integrated_report->passed);
  CHECK(validate(program, CommandRegistry::standard(), SafetyConfig{}, Operation::Milling).passed);
}

TEST_CASE("a single-shape description behaves like run_loop") {
  TemplateGenerator gen;
  const auto text = testing::read_fixture("descriptions/hexagon.txt");
  const auto multi = run_multi_shape(text, gen);
  REQUIRE(multi.subtasks.size() == 1);
  const auto single = run_loop(extract_parameters(text).params, gen);
  CHECK(multi.success == single.success);
  CHECK(multi.final_gcode == single.final_gcode);
  CHECK(to_json(multi.subtasks[0].loop) == to_json(single));
}

TEST_CASE("one island that never converges fails the whole job") {
  TemplateGenerator good;
  FaultInjectingGenerator bad({FaultKind::Functional});
  const GeneratorProvider provider = [&](const SubtaskDescription& s) -> Generator& {
    return s.index == 2 ? static_cast<Generator&>(bad) : static_cast<Generator&>(good);
  };
  const auto result = run_multi_shape(testing::read_fixture("descriptions/pocket_islands.txt"), provider);
  CHECK_FALSE(result.success);
  CHECK_FALSE(result.final_gcode);
  CHECK_FALSE(result.failure.empty());
  REQUIRE(result.subtasks.size() == 3);
  CHECK(result.subtasks[0].loop.success);
  CHECK(result.subtasks[1].loop.iterations_used == 5);
  CHECK(result.subtasks[1].loop.trace.size() == 5);
}

TEST_CASE("missing parameters stop a subtask before any generation") {
  TemplateGenerator gen;
  const auto result = run_multi_shape("Mill a circle and a hexagon, feed 100", gen);
  CHECK_FALSE(result.success);
  REQUIRE(result.subtasks.size() == 2);
  CHECK_FALSE(result.subtasks[0].missing.empty());
  CHECK(result.subtasks[0].loop.trace.empty());
}

TEST_CASE("benchmark over the canonical tasks") {
  const auto tasks = canonical_tasks();
  REQUIRE(tasks.size() == 6);
  TemplateGenerator gen;
  const auto result = run_benchmark(tasks, gen, LoopConfig{}, 5);
  CHECK(result.rows.size() == 30);
  CHECK(result.success_rate == 1.0);
  CHECK(result.avg_iterations == 1.0);
  for (const auto& t : tasks) CHECK(result.avg_iterations_for(t.name) == 1.0);

  const auto csv = result.to_csv();
  CHECK(csv.rfind("task,run,success,iterations,final_distance\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 31);
  CHECK(csv.find("1_square,1,1,1,0.000000") != std::string::npos);

  FaultInjectingGenerator once({FaultKind::Syntax, FaultKind::None});
  const auto fail_once = run_benchmark(tasks, once, LoopConfig{}, 5);
  CHECK(fail_once.success_rate == 1.0);
  CHECK(fail_once.avg_iterations == 2.0);

  LoopConfig one;
  one.max_iterations = 1;
  const auto bound = run_benchmark(tasks, once, one, 5);
  CHECK(bound.success_rate == 0.0);
  CHECK(bound.avg_iterations == 1.0);

  CHECK_THROWS_AS(run_benchmark(tasks, gen, LoopConfig{}, 0), Error);
}

TEST_CASE("trace JSON") {
  FaultInjectingGenerator gen({FaultKind::Syntax, FaultKind::None});
  const auto j = to_json(run_loop(testing::task("1_square"), gen));
  CHECK(j["success"] == true);
  CHECK(j["iterations_used"] == 2);
  REQUIRE(j["trace"].size() == 2);
  CHECK(j["trace"][0]["functional"].is_null());
  CHECK(j["trace"][0]["report"]["passed"] == false);
  CHECK(j["trace"][1]["functional"]["distance"] == 0.0);
}
