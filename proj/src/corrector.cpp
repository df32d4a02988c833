#include "gcl/corrector.hpp"

#include <algorithm>

#include "gcl/error.hpp"
#include "gcl/format.hpp"
#include "gcl/prompt.hpp"

namespace gcl {
namespace {

bool retryable(ErrorCode c) {
  return c == ErrorCode::Timeout || c == ErrorCode::HttpError || c == ErrorCode::MalformedResponse ||
         c == ErrorCode::GeneratorUnavailable;
}

std::string call_generator(Generator& generator, const GeneratorRequest& request) {
  for (int tries = 1;; ++tries) {
    try {
      return generator.generate(request);
    } catch (const Error& e) {
      if (!retryable(e.code())) throw;
      if (tries >= 2) {
        throw Error(ErrorCode::GeneratorUnavailable, generator.name() + " generator failed twice: " +
                                                         std::string(to_string(e.code())) + ": " + e.what());
      }
    }
  }
}

std::string join_lines(const std::vector<PriorError>& errors) {
  std::string s;
  for (const auto& e : errors) s += (s.empty() ? "" : "\n") + format_prior_error(e);
  return s;
}

Operation operation_of(const TaskParameters& p) { return p.operation.value_or(Operation::Milling); }

}  // namespace

void LoopConfig::check() const {
  if (max_iterations < 1) throw Error(ErrorCode::PreconditionFailed, "max_iterations must be at least 1");
  if (!(tolerance > 0)) throw Error(ErrorCode::PreconditionFailed, "tolerance must be positive");
  if (!(dedup_eps > 0)) throw Error(ErrorCode::PreconditionFailed, "dedup_eps must be positive");
  if (!(chord_tol > 0)) throw Error(ErrorCode::PreconditionFailed, "chord_tol must be positive");
  if (!(safety.safe_height > 0)) throw Error(ErrorCode::PreconditionFailed, "safe_height must be positive");
  if (!(bridge_height > 0)) throw Error(ErrorCode::PreconditionFailed, "bridge_height must be positive");
}

std::optional<double> LoopResult::final_distance() const {
  if (trace.empty() || !trace.back().functional) return std::nullopt;
  return trace.back().functional->distance;
}

LoopResult run_loop(const TaskParameters& params, Generator& generator, const LoopConfig& config) {
  config.check();
  LoopResult result;
  std::vector<PriorError> prior;
  for (int attempt = 1; attempt <= config.max_iterations; ++attempt) {
    IterationRecord rec;
    rec.attempt = attempt;
    rec.prompt = render_prompt(params, config.prompt_template, prior);
    rec.raw_output = call_generator(generator, {rec.prompt, attempt, config.session});
    prior.clear();

    std::optional<GCodeProgram> program;
    try {
      program = adjust_parameters(parse_program(extract_gcode(rec.raw_output)), params);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoGCodeFound) throw;
      rec.report = {{Diagnostic{Rule::Syntax, 0, e.what()}}, false};
    }
    if (program) {
      rec.gcode = serialize(*program);
      rec.report = validate(*program, config.registry, config.safety, operation_of(params));
    }
    if (!rec.report.passed) {
      for (const auto& d : rec.report.diagnostics) prior.emplace_back(d);
    } else {
      try {
        rec.functional = validate_functional(*rec.gcode, params, config.tolerance,
                                             FunctionalOptions{config.dedup_eps, config.chord_tol});
        if (!rec.functional->matched) prior.emplace_back(*rec.functional);
      } catch (const Error& e) {
        prior.emplace_back("FUNCTIONAL: " + std::string(to_string(e.code())) + ": " + e.what());
      }
    }
    rec.feedback = join_lines(prior);
    const bool done = rec.functional && rec.functional->matched;
    result.trace.push_back(std::move(rec));
    result.iterations_used = attempt;
    if (done) {
      result.success = true;
      result.final_gcode = result.trace.back().gcode;
      break;
    }
  }
  return result;
}

MultiShapeResult run_multi_shape(std::string_view description, const GeneratorProvider& generators,
                                 const LoopConfig& config, const nlohmann::json& answers, const Extractor& extractor) {
  config.check();
  MultiShapeResult out;
  std::vector<GCodeProgram> segments;
  IntegrationOptions integration;
  integration.registry = config.registry;
  integration.safety = config.safety;
  integration.bridge_height = config.bridge_height;

  for (const auto& sub : decompose(description, config.session)) {
    SubtaskRun run;
    run.subtask = sub;
    run.params = merge_user_answers(extract_parameters(sub.text, extractor).params, answers);
    run.missing = find_missing(run.params, config.prompt_template);
    if (!run.missing.empty()) {
      std::string names;
      for (const auto& m : run.missing) names += (names.empty() ? "" : ", ") + m;
      if (out.failure.empty()) out.failure = "subtask " + std::to_string(sub.index) + " is missing: " + names;
      out.subtasks.push_back(std::move(run));
      continue;
    }
    LoopConfig sub_config = config;
    sub_config.session = config.session + "/" + std::to_string(sub.index);
    run.loop = run_loop(run.params, generators(sub), sub_config);
    if (run.loop.success) {
      segments.push_back(parse_program(*run.loop.final_gcode));
      integration.operations.push_back(operation_of(run.params));
    } else if (out.failure.empty()) {
      out.failure = "subtask " + std::to_string(sub.index) + " failed after " +
                    std::to_string(run.loop.iterations_used) + " attempts";
    }
    out.subtasks.push_back(std::move(run));
  }
  if (!out.failure.empty()) return out;

  const GCodeProgram merged = integrate_segments(segments, integration);
  // The drilling check only fits a program made entirely of hole cycles.
  const bool all_drilling = std::all_of(integration.operations.begin(), integration.operations.end(),
                                        [](Operation op) { return op == Operation::Drilling; });
  out.integrated_report =
      validate(merged, config.registry, config.safety, all_drilling ? Operation::Drilling : Operation::Milling);
  if (!out.integrated_report->passed) {
    out.failure = "integrated program is invalid: " + format_diagnostic(out.integrated_report->diagnostics.front());
    return out;
  }
  out.final_gcode = serialize(merged);
  out.success = true;
  return out;
}

MultiShapeResult run_multi_shape(std::string_view description, Generator& generator, const LoopConfig& config,
                                 const nlohmann::json& answers) {
  return run_multi_shape(
      description, [&generator](const SubtaskDescription&) -> Generator& { return generator; }, config, answers);
}

std::string BenchmarkResult::to_csv() const {
  std::string csv = "task,run,success,iterations,final_distance\n";
  for (const auto& r : rows) {
    csv += r.task + "," + std::to_string(r.run) + "," + (r.success ? "1" : "0") + "," + std::to_string(r.iterations) +
           "," + (r.final_distance ? format_fixed(*r.final_distance, 6) : std::string{}) + "\n";
  }
  return csv;
}

double BenchmarkResult::avg_iterations_for(const std::string& task) const {
  double sum = 0.0;
  int n = 0;
  for (const auto& r : rows) {
    if (r.task != task) continue;
    sum += r.iterations;
    ++n;
  }
  return n ? sum / n : 0.0;
}

BenchmarkResult run_benchmark(std::span<const BenchmarkTask> tasks, Generator& generator, const LoopConfig& config,
                              int runs) {
  if (runs < 1) throw Error(ErrorCode::PreconditionFailed, "runs must be at least 1");
  BenchmarkResult out;
  int successes = 0;
  long iterations = 0;
  for (const auto& task : tasks) {
    for (int run = 1; run <= runs; ++run) {
      LoopConfig c = config;
      c.session = task.name + "#" + std::to_string(run);
      const LoopResult r = run_loop(task.params, generator, c);
      out.rows.push_back({task.name, run, r.success, r.iterations_used, r.final_distance()});
      successes += r.success ? 1 : 0;
      iterations += r.iterations_used;
    }
  }
  if (!out.rows.empty()) {
    out.success_rate = static_cast<double>(successes) / static_cast<double>(out.rows.size());
    out.avg_iterations = static_cast<double>(iterations) / static_cast<double>(out.rows.size());
  }
  return out;
}

nlohmann::json to_json(const ValidationReport& report) {
  nlohmann::json diags = nlohmann::json::array();
  for (const auto& d : report.diagnostics) {
    diags.push_back({{"rule", std::string(to_string(d.rule))},
                     {"line", d.line_no},
                     {"message", d.message},
                     {"text", format_diagnostic(d)}});
  }
  return {{"passed", report.passed}, {"diagnostics", diags}};
}

nlohmann::json to_json(const IterationRecord& r) {
  nlohmann::json j = {{"attempt", r.attempt},       {"prompt", r.prompt},
                      {"raw_output", r.raw_output}, {"gcode", nullptr},
                      {"report", to_json(r.report)}, {"functional", nullptr},
                      {"feedback", r.feedback}};
  if (r.gcode) j["gcode"] = *r.gcode;
  if (r.functional) {
    j["functional"] = {{"distance", r.functional->distance},
                       {"matched", r.functional->matched},
                       {"message", r.functional->message},
                       {"tolerance", r.functional->tolerance}};
  }
  return j;
}

nlohmann::json to_json(const LoopResult& r) {
  nlohmann::json trace = nlohmann::json::array();
  for (const auto& rec : r.trace) trace.push_back(to_json(rec));
  nlohmann::json j = {{"success", r.success},
                      {"final_gcode", nullptr},
                      {"iterations_used", r.iterations_used},
                      {"final_distance", nullptr},
                      {"trace", trace}};
  if (r.final_gcode) j["final_gcode"] = *r.final_gcode;
  if (auto d = r.final_distance()) j["final_distance"] = *d;
  return j;
}

nlohmann::json to_json(const MultiShapeResult& r) {
  nlohmann::json subs = nlohmann::json::array();
  for (const auto& s : r.subtasks) {
    subs.push_back({{"index", s.subtask.index},
                    {"text", s.subtask.text},
                    {"params", to_json(s.params)},
                    {"missing", s.missing},
                    {"loop", to_json(s.loop)}});
  }
  nlohmann::json j = {{"success", r.success}, {"final_gcode", nullptr}, {"subtasks", subs},
                      {"integrated_report", nullptr}, {"failure", r.failure}};
  if (r.final_gcode) j["final_gcode"] = *r.final_gcode;
  if (r.integrated_report) j["integrated_report"] = to_json(*r.integrated_report);
  return j;
}

}  // namespace gcl
