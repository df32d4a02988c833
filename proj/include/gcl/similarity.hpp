#pragma once

#include <string>
#include <string_view>

#include "gcl/geometry.hpp"
#include "gcl/taskparams.hpp"

namespace gcl {

inline constexpr double kDefaultTolerance = 0.5;   // mm
inline constexpr double kDefaultDedupEps = 1e-6;   // mm

inline constexpr std::string_view kPathsMatch = "tool paths match within tolerance";
inline constexpr std::string_view kPathsDiffer = "tool paths do not match";

struct FunctionalResult {
  double distance = 0.0;  // mm
  bool matched = false;
  std::string message;
  double tolerance = kDefaultTolerance;

  friend bool operator==(const FunctionalResult&, const FunctionalResult&) = default;
};

/// "Hausdorff distance d=<d> exceeds tolerance <t>", the feedback line for a
/// failed functional check.
std::string format_functional_failure(const FunctionalResult& r);

struct FunctionalOptions {
  double dedup_eps = kDefaultDedupEps;
  double chord_tol = kDefaultChordTolerance;
};

/// Parses and interprets the G-code, builds the user path from the task
/// parameters, removes duplicates on both, and compares the Hausdorff
/// distance with `tolerance` (inclusive).
///
/// Throws Error(EmptySet) when the program has no motion, and propagates
/// InsufficientGeometry / ArcRadiusMismatch / UnknownMotion.
FunctionalResult validate_functional(std::string_view gcode_text, const TaskParameters& params,
                                     double tolerance = kDefaultTolerance,
                                     const FunctionalOptions& options = {});

}  // namespace gcl
