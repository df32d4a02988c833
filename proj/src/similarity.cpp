#include "gcl/similarity.hpp"

#include "gcl/format.hpp"
#include "gcl/gcode.hpp"
#include "gcl/toolpath.hpp"

namespace gcl {

std::string format_functional_failure(const FunctionalResult& r) {
  return "Hausdorff distance d=" + format_fixed(r.distance, 6) + " exceeds tolerance " +
         format_fixed(r.tolerance, 6);
}

FunctionalResult validate_functional(std::string_view gcode_text, const TaskParameters& params,
                                     double tolerance, const FunctionalOptions& options) {
  const GCodeProgram program = parse_program(gcode_text);
  if (!has_motion(program)) {
    throw Error(ErrorCode::EmptySet, "G-code contains no motion");
  }
  const Toolpath gcode_path =
      remove_duplicates(interpret(program, {options.chord_tol}), options.dedup_eps);
  const Toolpath user_path =
      remove_duplicates(construct_user_path(params, options.chord_tol), options.dedup_eps);

  FunctionalResult r;
  r.tolerance = tolerance;
  r.distance = hausdorff(gcode_path.points, user_path.points);
  r.matched = r.distance <= tolerance;
  r.message = std::string(r.matched ? kPathsMatch : kPathsDiffer);
  return r;
}

}  // namespace gcl
