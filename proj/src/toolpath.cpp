#include "gcl/toolpath.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "gcl/format.hpp"
#include "gcl/machine.hpp"

namespace gcl {
namespace {

ArcSpec arc_about(const Point& start, const Point& end, const Point& center, ArcDirection dir) {
  return ArcSpec{start, end, center - start, dir};
}

// Rotates a closed CCW vertex ring so it begins at the vertex nearest `anchor`
// (lowest index on ties) and closes it.
std::vector<Point> ring_from_nearest(std::vector<Point> ring, const std::optional<Point>& anchor) {
  std::size_t first = 0;
  if (anchor) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < ring.size(); ++i) {
      const double d = (ring[i] - *anchor).squaredNorm();
      if (d < best) {
        best = d;
        first = i;
      }
    }
  }
  std::rotate(ring.begin(), ring.begin() + static_cast<std::ptrdiff_t>(first), ring.end());
  ring.push_back(ring.front());
  return ring;
}

std::vector<Point> rectangle_ring(const Point& corner, double w, double h) {
  return {corner, corner + Point(w, 0), corner + Point(w, h), corner + Point(0, h)};
}

Contour circle_contour(const Point& center, double radius, const std::optional<Point>& anchor) {
  Contour c;
  c.kind = Contour::Kind::Circle;
  c.center = center;
  c.radius = radius;
  double angle = 0.0;
  if (anchor && *anchor != center) {
    angle = std::atan2(anchor->y() - center.y(), anchor->x() - center.x());
  }
  c.circle_start = center + radius * Point(std::cos(angle), std::sin(angle));
  return c;
}

[[noreturn]] void insufficient(const std::string& what) {
  throw Error(ErrorCode::InsufficientGeometry, what);
}

Point workpiece_center(const TaskParameters& p) {
  if (p.workpiece_dims) return {p.workpiece_dims->width / 2.0, p.workpiece_dims->height / 2.0};
  return Point::Zero();
}

}  // namespace

std::size_t Toolpath::count(SegmentKind kind) const {
  return static_cast<std::size_t>(std::count(segment_kinds.begin(), segment_kinds.end(), kind));
}

void Toolpath::append(const Point& p, SegmentKind kind) {
  if (!points.empty()) segment_kinds.push_back(kind);
  points.push_back(p);
}

Toolpath interpret(const GCodeProgram& program, const InterpretOptions& options) {
  Toolpath path;
  path.points.push_back(Point::Zero());
  MachineSimulator machine;
  for (const auto& block : program.blocks) {
    const BlockStep step = machine.step(block);
    if (step.error) throw *step.error;
    if (step.axis_words_without_mode) {
      throw Error(ErrorCode::UnknownMotion,
                  "line " + std::to_string(block.line_no) + ": axis words with no active motion mode");
    }
    for (const auto& m : step.moves) {
      const Point to = m.to.head<2>();
      switch (m.kind) {
        case MoveKind::Rapid:
        case MoveKind::Home:
        case MoveKind::CannedPosition:
          if (m.changes_xy()) path.append(to, SegmentKind::Rapid);
          break;
        case MoveKind::Linear:
          if (m.changes_xy()) path.append(to, SegmentKind::Feed);
          break;
        case MoveKind::ArcCW:
        case MoveKind::ArcCCW: {
          const auto dir = m.kind == MoveKind::ArcCW ? ArcDirection::CW : ArcDirection::CCW;
          for (const auto& p : sample_arc(arc_about(m.from.head<2>(), to, m.center, dir), options.chord_tol)) {
            path.append(p, SegmentKind::Feed);
          }
          break;
        }
        case MoveKind::CannedPlunge:
        case MoveKind::CannedRetract:
          break;
      }
    }
  }
  return path;
}

bool has_motion(const GCodeProgram& program) {
  MachineSimulator machine;
  for (const auto& block : program.blocks) {
    if (!machine.step(block).moves.empty()) return true;
  }
  return false;
}

Toolpath remove_duplicates(const Toolpath& path, double eps) {
  if (eps < 0) throw Error(ErrorCode::PreconditionFailed, "duplicate epsilon must be non-negative");
  Toolpath out;
  for (std::size_t i = 0; i < path.points.size(); ++i) {
    const Point& p = path.points[i];
    if (!out.points.empty() && (p - out.points.back()).norm() <= eps) continue;
    out.append(p, i == 0 ? SegmentKind::Feed : path.segment_kinds[i - 1]);
  }
  return out;
}

std::vector<Contour> shape_contours(const TaskParameters& params) {
  if (!params.shape) insufficient("no shape given");
  const Shape& s = *params.shape;
  const auto& anchor = params.starting_point;
  const auto dims = params.workpiece_dims;
  std::vector<Contour> out;

  auto polyline = [&](std::vector<Point> ring) {
    Contour c;
    c.kind = Contour::Kind::Polyline;
    c.points = ring_from_nearest(std::move(ring), anchor);
    out.push_back(std::move(c));
  };
  auto rect_size = [&](bool square) -> std::pair<double, double> {
    double w = s.width.value_or(s.side_length.value_or(dims ? dims->width : 0.0));
    double h = square ? w : s.height.value_or(dims ? dims->height : 0.0);
    if (!(w > 0 && h > 0)) insufficient("rectangle needs a width and height");
    return {w, h};
  };
  const Point corner = s.corner.value_or(anchor.value_or(Point::Zero()));

  switch (s.kind) {
    case ShapeKind::Square:
    case ShapeKind::Rectangle: {
      auto [w, h] = rect_size(s.kind == ShapeKind::Square);
      polyline(rectangle_ring(corner, w, h));
      break;
    }
    case ShapeKind::Polygon: {
      const int n = s.sides.value_or(0);
      if (n < 3) insufficient("polygon needs at least 3 sides");
      double radius = 0.0;
      if (s.side_length) {
        radius = *s.side_length / (2.0 * std::sin(std::numbers::pi / n));
      } else if (s.radius) {
        radius = *s.radius;
      } else if (dims) {
        radius = std::min(dims->width, dims->height) / 2.0;
      }
      if (!(radius > 0)) insufficient("polygon needs a side length or radius");
      const Point center = s.center.value_or(workpiece_center(params));
      std::vector<Point> ring;
      for (int k = 0; k < n; ++k) {
        const double a = 2.0 * std::numbers::pi * k / n;
        ring.push_back(center + radius * Point(std::cos(a), std::sin(a)));
      }
      polyline(std::move(ring));
      break;
    }
    case ShapeKind::Circle: {
      double radius = s.radius.value_or(dims ? std::min(dims->width, dims->height) / 2.0 : 0.0);
      if (!(radius > 0)) insufficient("circle needs a radius");
      out.push_back(circle_contour(s.center.value_or(workpiece_center(params)), radius, anchor));
      break;
    }
    case ShapeKind::Pocket: {
      auto [w, h] = rect_size(false);
      polyline(rectangle_ring(corner, w, h));
      for (const auto& island : s.islands) {
        if (!(island.radius > 0)) insufficient("island needs a positive radius");
        out.push_back(circle_contour(island.center, island.radius, anchor));
      }
      break;
    }
    case ShapeKind::HoleGrid: {
      const int rows = s.rows.value_or(0);
      const int cols = s.cols.value_or(0);
      const double spacing = s.spacing.value_or(0.0);
      if (rows < 1 || cols < 1 || !(spacing > 0)) insufficient("hole grid needs rows, cols and spacing");
      const Point origin = s.origin.value_or(anchor.value_or(Point::Zero()) + Point(spacing, spacing));
      Contour c;
      c.kind = Contour::Kind::Holes;
      for (int r = 0; r < rows; ++r) {
        for (int k = 0; k < cols; ++k) {
          const int col = r % 2 == 0 ? k : cols - 1 - k;  // serpentine
          c.points.push_back(origin + Point(col * spacing, r * spacing));
        }
      }
      out.push_back(std::move(c));
      break;
    }
    case ShapeKind::Custom:
      insufficient("custom shape needs an explicit tool path");
  }
  return out;
}

Toolpath construct_user_path(const TaskParameters& params, double chord_tol) {
  Toolpath path;
  if (params.tool_path && !params.tool_path->empty()) {
    for (const auto& p : *params.tool_path) path.append(p, SegmentKind::Feed);
  } else {
    for (const auto& c : shape_contours(params)) {
      switch (c.kind) {
        case Contour::Kind::Polyline:
          path.append(c.points.front(), SegmentKind::Rapid);
          for (std::size_t i = 1; i < c.points.size(); ++i) path.append(c.points[i], SegmentKind::Feed);
          break;
        case Contour::Kind::Circle: {
          path.append(c.circle_start, SegmentKind::Rapid);
          // Same reconstruction the interpreter performs from I/J offsets.
          const Point center = c.circle_start + (c.center - c.circle_start);
          for (const auto& p : sample_arc(arc_about(c.circle_start, c.circle_start, center, ArcDirection::CCW),
                                          chord_tol)) {
            path.append(p, SegmentKind::Feed);
          }
          break;
        }
        case Contour::Kind::Holes:
          for (const auto& p : c.points) path.append(p, SegmentKind::Rapid);
          break;
      }
    }
  }
  if (params.starting_point && !path.points.empty() && *params.starting_point != path.points.front()) {
    path.points.insert(path.points.begin(), *params.starting_point);
    path.segment_kinds.insert(path.segment_kinds.begin(), SegmentKind::Rapid);
  }
  return path;
}

std::string render_svg(std::span<const NamedPath> paths, const Canvas& canvas) {
  const bool drawable = std::any_of(paths.begin(), paths.end(),
                                    [](const NamedPath& p) { return p.path.points.size() >= 2; });
  if (!drawable) throw Error(ErrorCode::EmptyPath, "nothing to draw: no path with two points");

  Point lo = Point::Constant(std::numeric_limits<double>::infinity());
  Point hi = -lo;
  for (const auto& np : paths) {
    for (const auto& p : np.path.points) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
  }
  Point extent = hi - lo;
  const double span = std::max({extent.x(), extent.y(), 1e-6});
  const Point margin(0.05 * (extent.x() > 0 ? extent.x() : span), 0.05 * (extent.y() > 0 ? extent.y() : span));
  const double stroke = span * 0.004;
  auto num = [](double v) { return format_fixed(v, 4); };

  static constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
  std::string svg;
  svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" +
         std::to_string(canvas.width_px) + "\" height=\"" + std::to_string(canvas.height_px) +
         "\" viewBox=\"" + num(lo.x() - margin.x()) + " " + num(-(hi.y() + margin.y())) + " " +
         num(extent.x() + 2 * margin.x()) + " " + num(extent.y() + 2 * margin.y()) + "\">\n";
  svg += "<style>\n";
  svg += "line{fill:none;stroke-width:" + num(stroke) + ";stroke-linecap:round}\n";
  svg += ".rapid{stroke-dasharray:" + num(stroke * 4) + " " + num(stroke * 3) + ";stroke-opacity:0.6}\n";
  for (std::size_t i = 0; i < paths.size(); ++i) {
    svg += "." + paths[i].name + "{stroke:" + kPalette[i % std::size(kPalette)] + "}\n";
  }
  svg += "</style>\n";
  for (const auto& np : paths) {
    svg += "<g class=\"" + np.name + "\">\n";
    const auto& pts = np.path.points;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      const bool rapid = np.path.segment_kinds[i] == SegmentKind::Rapid;
      svg += "<line class=\"" + np.name + (rapid ? " rapid" : " feed") + "\" x1=\"" + num(pts[i].x()) +
             "\" y1=\"" + num(-pts[i].y()) + "\" x2=\"" + num(pts[i + 1].x()) + "\" y2=\"" +
             num(-pts[i + 1].y()) + "\"/>\n";
    }
    svg += "</g>\n";
  }
  svg += "</svg>\n";
  return svg;
}

nlohmann::json to_json(const Toolpath& path) {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : path.points) pts.push_back({p.x(), p.y()});
  nlohmann::json kinds = nlohmann::json::array();
  for (auto k : path.segment_kinds) kinds.push_back(k == SegmentKind::Rapid ? "RAPID" : "FEED");
  return {{"points", pts}, {"segment_kinds", kinds}};
}

}  // namespace gcl
