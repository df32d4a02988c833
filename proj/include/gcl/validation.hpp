#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "gcl/gcode.hpp"
#include "gcl/operation.hpp"

namespace gcl {

enum class Rule { Syntax, Unreachable, RapidWhileCutting, UnsafeDrillMove };
enum class Severity { Error };

std::string_view to_string(Rule rule);

struct Diagnostic {
  Rule rule = Rule::Syntax;
  int line_no = 0;
  std::string message;
  Severity severity = Severity::Error;

  friend bool operator==(const Diagnostic&, const Diagnostic&) = default;
};

/// "LINE <n>: <RULE>: <message>", the form fed back into prompts.
std::string format_diagnostic(const Diagnostic& d);

struct ValidationReport {
  std::vector<Diagnostic> diagnostics;
  bool passed = true;

  friend bool operator==(const ValidationReport&, const ValidationReport&) = default;
};

struct SafetyConfig {
  double safe_height = 2.0;  // mm
  double surface_z = 0.0;    // mm, top of stock
};

/// Unrecognized G/M words, malformed tokens, letters outside the word set, and
/// axis words with no active motion mode.
std::vector<Diagnostic> check_syntax(const GCodeProgram& program, const CommandRegistry& registry);

/// Every non-empty block after the first M30.
std::vector<Diagnostic> check_unreachable(const GCodeProgram& program);

/// G0 motion while the spindle runs with Z at or below the stock surface.
/// A pure upward Z rapid is the retract that ends engagement and is allowed.
std::vector<Diagnostic> check_rapid_while_cutting(const GCodeProgram& program,
                                                  const SafetyConfig& cfg = {});

/// XY motion that starts below the safe height, unless the same move ends at
/// or above it. Heights are only judged once Z has been commanded.
std::vector<Diagnostic> check_safe_drilling(const GCodeProgram& program, const SafetyConfig& cfg = {});

/// Syntax first; later checks run only when syntax is clean. The drilling
/// check applies to drilling operations only.
ValidationReport validate(const GCodeProgram& program, const CommandRegistry& registry,
                          const SafetyConfig& cfg, Operation operation);

}  // namespace gcl
