#pragma once

#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "gcl/gcode.hpp"
#include "gcl/geometry.hpp"
#include "gcl/taskparams.hpp"

namespace gcl {

enum class SegmentKind { Rapid, Feed };

/// Ordered XY points; segment_kinds[i] describes points[i] -> points[i + 1].
struct Toolpath {
  std::vector<Point> points;
  std::vector<SegmentKind> segment_kinds;

  std::size_t segment_count() const { return segment_kinds.size(); }
  std::size_t count(SegmentKind kind) const;
  void append(const Point& p, SegmentKind kind);

  friend bool operator==(const Toolpath&, const Toolpath&) = default;
};

struct InterpretOptions {
  double chord_tol = kDefaultChordTolerance;
};

/// Folds the program through the machine model and records the XY projection.
/// A move whose XY endpoint equals the current XY (pure Z motion) adds no
/// point. Arcs are densified with sample_arc; a canned cycle adds its hole
/// position once. The initial point is the machine origin.
///
/// Throws Error(ArcRadiusMismatch) and Error(UnknownMotion).
Toolpath interpret(const GCodeProgram& program, const InterpretOptions& options = {});

/// True when the program commands at least one XY or Z motion.
bool has_motion(const GCodeProgram& program);

/// Collapses each point lying within `eps` of the last kept point. The
/// collapsed run's final segment kind is kept for the surviving segment.
Toolpath remove_duplicates(const Toolpath& path, double eps);

/// Geometric pieces of a task, in cutting order.
struct Contour {
  enum class Kind { Polyline, Circle, Holes };
  Kind kind = Kind::Polyline;
  std::vector<Point> points;  // polyline vertices (closed: last == first) or hole centers
  Point center = Point::Zero();
  double radius = 0.0;
  Point circle_start = Point::Zero();
};

/// Synthesizes contours from the shape and dimensions. Primitives start at the
/// vertex nearest the starting point and run counter-clockwise.
/// Throws Error(InsufficientGeometry).
std::vector<Contour> shape_contours(const TaskParameters& params);

/// The user-defined reference path: the explicit tool_path, or the
/// synthesized shape, with the starting point prepended when it differs from
/// the first point. Transitions between contours are rapid segments.
Toolpath construct_user_path(const TaskParameters& params, double chord_tol = kDefaultChordTolerance);

struct Canvas {
  int width_px = 800;
  int height_px = 800;
};

struct NamedPath {
  std::string name;  // becomes the stroke class, e.g. "gcode" or "user"
  Toolpath path;
};

/// Feed segments solid, rapid segments dashed, one <line> per segment, Y up.
/// Throws Error(EmptyPath) when no path has two points.
std::string render_svg(std::span<const NamedPath> paths, const Canvas& canvas = {});

nlohmann::json to_json(const Toolpath& path);

}  // namespace gcl
