#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "gcl/generation.hpp"
#include "gcl/similarity.hpp"
#include "gcl/taskparams.hpp"
#include "gcl/validation.hpp"

namespace gcl {

struct LoopConfig {
  int max_iterations = 5;
  double tolerance = kDefaultTolerance;  // mm
  SafetyConfig safety;
  double dedup_eps = kDefaultDedupEps;
  double chord_tol = kDefaultChordTolerance;
  double bridge_height = kDefaultSafeHeight;
  CommandRegistry registry = CommandRegistry::standard();
  PromptTemplate prompt_template = PromptTemplate::standard();
  std::string session = "local";

  /// Throws Error(PreconditionFailed) for non-positive settings.
  void check() const;
};

struct IterationRecord {
  int attempt = 0;
  std::string prompt;
  std::string raw_output;
  std::optional<std::string> gcode;
  ValidationReport report;
  std::optional<FunctionalResult> functional;  // only when report.passed
  std::string feedback;                        // what the next prompt carries
};

struct LoopResult {
  bool success = false;
  std::optional<std::string> final_gcode;
  int iterations_used = 0;
  std::vector<IterationRecord> trace;

  std::optional<double> final_distance() const;
};

/// Generate, extract, adjust, validate, compare; feed the latest failure into
/// the next prompt. Stops at the first match or after max_iterations.
///
/// Throws Error(MissingFields) for incomplete parameters and
/// Error(GeneratorUnavailable) when a generator call fails twice in a row.
LoopResult run_loop(const TaskParameters& params, Generator& generator, const LoopConfig& config = {});

struct SubtaskRun {
  SubtaskDescription subtask;
  TaskParameters params;
  std::vector<std::string> missing;
  LoopResult loop;
};

struct MultiShapeResult {
  bool success = false;
  std::optional<std::string> final_gcode;
  std::vector<SubtaskRun> subtasks;
  std::optional<ValidationReport> integrated_report;
  std::string failure;  // empty on success
};

using GeneratorProvider = std::function<Generator&(const SubtaskDescription&)>;

/// Decomposes the description, runs one loop per shape (answers fill missing
/// fields of every subtask), integrates the segments and validates the result.
MultiShapeResult run_multi_shape(std::string_view description, const GeneratorProvider& generators,
                                 const LoopConfig& config = {}, const nlohmann::json& answers = nlohmann::json::object(),
                                 const Extractor& extractor = RuleBasedExtractor{});
MultiShapeResult run_multi_shape(std::string_view description, Generator& generator, const LoopConfig& config = {},
                                 const nlohmann::json& answers = nlohmann::json::object());

struct BenchmarkTask {
  std::string name;
  TaskParameters params;
};

struct BenchmarkRow {
  std::string task;
  int run = 0;
  bool success = false;
  int iterations = 0;
  std::optional<double> final_distance;
};

struct BenchmarkResult {
  std::vector<BenchmarkRow> rows;
  double success_rate = 0.0;
  double avg_iterations = 0.0;

  /// Header "task,run,success,iterations,final_distance"; an absent distance is empty.
  std::string to_csv() const;
  double avg_iterations_for(const std::string& task) const;
};

/// Runs every task `runs` times. Throws Error(PreconditionFailed) if runs < 1.
BenchmarkResult run_benchmark(std::span<const BenchmarkTask> tasks, Generator& generator, const LoopConfig& config,
                              int runs);

nlohmann::json to_json(const ValidationReport& report);
nlohmann::json to_json(const IterationRecord& record);
nlohmann::json to_json(const LoopResult& result);
nlohmann::json to_json(const MultiShapeResult& result);

}  // namespace gcl
