#pragma once

#include <atomic>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gcl/gcode.hpp"
#include "gcl/taskparams.hpp"
#include "gcl/validation.hpp"

namespace gcl {

struct GeneratorRequest {
  std::string prompt;
  int attempt = 1;
  std::string session;
};

/// Turns a prompt into raw model output. Postprocessing happens downstream.
class Generator {
 public:
  virtual ~Generator() = default;
  virtual std::string generate(const GeneratorRequest& request) = 0;
  virtual std::string name() const = 0;
};

inline constexpr double kDefaultSafeHeight = 5.0;  // mm, retract and bridge height

struct TemplateOptions {
  double safe_height = kDefaultSafeHeight;
};

/// Deterministic program for a complete parameter set: preamble, rapid to
/// start at safe height, spindle on, plunge, contours, retract, spindle off,
/// optional return home, M30.
/// Throws Error(MissingFields) and Error(UnsupportedShape).
std::string template_generate(const TaskParameters& params, const TemplateOptions& options = {});

/// Reads the parameters embedded in the prompt and calls template_generate.
class TemplateGenerator final : public Generator {
 public:
  explicit TemplateGenerator(TemplateOptions options = {}) : options_(options) {}
  std::string generate(const GeneratorRequest& request) override;
  std::string name() const override { return "template"; }

 private:
  TemplateOptions options_;
};

enum class FaultKind { None, Syntax, Unreachable, Rapid, Drilling, Functional, NoGCode };

std::string_view to_string(FaultKind kind);
/// Accepts the lowercase names ("none", "syntax", ...). Throws Error(InvalidValue).
FaultKind parse_fault(std::string_view text);

/// The template program with one error of the given class planted in it.
std::string inject_fault(const TaskParameters& params, FaultKind kind, const TemplateOptions& options = {});

/// Attempt n uses script[n - 1]; the last entry repeats.
class FaultInjectingGenerator final : public Generator {
 public:
  explicit FaultInjectingGenerator(std::vector<FaultKind> script, TemplateOptions options = {});
  std::string generate(const GeneratorRequest& request) override;
  std::string name() const override { return "fault"; }

 private:
  std::vector<FaultKind> script_;
  TemplateOptions options_;
};

struct EndpointConfig {
  std::string url;  // http[s]://host[:port]/path
  std::string api_key;
  std::string model;
  double timeout_secs = 30.0;
  int max_tokens = 2048;

  /// GLLM_ENDPOINT_URL, GLLM_API_KEY, GLLM_MODEL, GLLM_TIMEOUT_SECS.
  /// Throws Error(GeneratorUnavailable) when the URL or model is not set.
  static EndpointConfig from_env();
};

/// POST {model, prompt, max_tokens} -> {text}. No retry at this layer.
/// Throws Error(Timeout | HttpError | MalformedResponse).
std::string remote_complete(const EndpointConfig& config, const std::string& prompt,
                            const std::atomic<bool>* cancel = nullptr);

class RemoteGenerator final : public Generator {
 public:
  explicit RemoteGenerator(EndpointConfig config) : config_(std::move(config)) {}
  std::string generate(const GeneratorRequest& request) override;
  std::string name() const override { return "remote"; }
  /// Aborts the in-flight request and any later one with Error(Timeout).
  void cancel() { cancelled_ = true; }

 private:
  EndpointConfig config_;
  std::atomic<bool> cancelled_{false};
};

/// Asks the endpoint for the parameter JSON. Any failure surfaces as
/// Error(ExtractionFailed) so extract_parameters can fall back.
class RemoteExtractor final : public Extractor {
 public:
  explicit RemoteExtractor(EndpointConfig config) : config_(std::move(config)) {}
  TaskParameters extract(std::string_view description) const override;

 private:
  EndpointConfig config_;
};

/// Keeps the runs of lines that read as G-code, dropping fences and prose.
/// Throws Error(NoGCodeFound).
std::string extract_gcode(std::string_view raw);

/// Rewrites S on spindle starts and every F on feed moves to the task values;
/// inserts F on the first feed move when none was set before it.
GCodeProgram adjust_parameters(const GCodeProgram& program, const TaskParameters& params);

struct IntegrationOptions {
  CommandRegistry registry = CommandRegistry::standard();
  SafetyConfig safety;
  double bridge_height = kDefaultSafeHeight;
  /// Operation per segment; segments past the end are milled.
  std::vector<Operation> operations;
};

/// One preamble, segment bodies joined by a retract and rapid reposition, one
/// final M30. Throws Error(SegmentInvalid) naming the first invalid segment.
GCodeProgram integrate_segments(std::span<const GCodeProgram> segments, const IntegrationOptions& options = {});

}  // namespace gcl
