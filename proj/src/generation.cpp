#include "gcl/generation.hpp"

#include <algorithm>
#include <regex>
#include <sstream>

#include "gcl/error.hpp"
#include "gcl/format.hpp"
#include "gcl/machine.hpp"
#include "gcl/prompt.hpp"
#include "gcl/toolpath.hpp"

namespace gcl {
namespace {

std::string xy(const Point& p) { return "X" + format_decimal(p.x()) + " Y" + format_decimal(p.y()); }

// The template program as lines, with the places faults get planted.
struct Draft {
  std::vector<std::string> lines;
  int first_feed_xy = -1;  // first G1 contour move after a plunge
  int first_arc = -1;      // first full-circle G3
  int first_cycle = -1;    // first G81 block
  Point arc_start = Point::Zero();
  std::vector<Point> holes;
  double depth = 0.0;
  double feed = 0.0;
};

Draft draft_program(const TaskParameters& p, const TemplateOptions& opt) {
  const auto missing = find_missing(p);
  if (!missing.empty()) {
    std::string names;
    for (const auto& m : missing) names += (names.empty() ? "" : ", ") + m;
    throw Error(ErrorCode::MissingFields, "cannot generate, missing: " + names);
  }
  std::vector<Contour> contours;
  if (p.tool_path && !p.tool_path->empty()) {
    Contour c;
    c.points = *p.tool_path;
    contours.push_back(std::move(c));
  } else {
    try {
      contours = shape_contours(p);
    } catch (const Error& e) {
      throw Error(ErrorCode::UnsupportedShape, e.what());
    }
  }

  Draft d;
  d.depth = *p.depth_of_cut;
  d.feed = *p.feed_rate;
  auto& out = d.lines;
  const std::string safe = "G0 Z" + format_decimal(opt.safe_height);
  const std::string plunge = "G1 Z" + format_decimal(-d.depth) + " F" + format_decimal(d.feed);
  const std::string spindle = "M3 S" + format_decimal(*p.spindle_speed);

  out.push_back("(" + std::string(to_string(p.shape ? p.shape->kind : ShapeKind::Custom)) + ", " +
                *p.material + ")");
  out.push_back("G21");
  out.push_back("G90");
  out.push_back("G17");
  out.push_back(safe);
  out.push_back("G0 " + xy(*p.starting_point));
  Point at = *p.starting_point;
  auto rapid_to = [&](const Point& q) {
    if (q != at) out.push_back("G0 " + xy(q));
    at = q;
  };
  bool spindle_on = false;
  auto start_spindle = [&] {
    if (!spindle_on) out.push_back(spindle);
    spindle_on = true;
  };

  for (std::size_t i = 0; i < contours.size(); ++i) {
    const Contour& c = contours[i];
    if (i > 0) out.push_back(safe);
    switch (c.kind) {
      case Contour::Kind::Polyline:
        rapid_to(c.points.front());
        start_spindle();
        out.push_back(plunge);
        at = c.points.back();
        for (std::size_t k = 1; k < c.points.size(); ++k) {
          if (d.first_feed_xy < 0) d.first_feed_xy = static_cast<int>(out.size());
          out.push_back("G1 " + xy(c.points[k]));
        }
        break;
      case Contour::Kind::Circle: {
        rapid_to(c.circle_start);
        start_spindle();
        out.push_back(plunge);
        const Point ij = c.center - c.circle_start;
        if (d.first_arc < 0) {
          d.first_arc = static_cast<int>(out.size());
          d.arc_start = c.circle_start;
        }
        out.push_back("G3 " + xy(c.circle_start) + " I" + format_decimal(ij.x()) + " J" + format_decimal(ij.y()));
        break;
      }
      case Contour::Kind::Holes:
        rapid_to(c.points.front());
        at = c.points.back();
        start_spindle();
        d.first_cycle = static_cast<int>(out.size());
        d.holes = c.points;
        out.push_back("G81 " + xy(c.points.front()) + " Z" + format_decimal(-d.depth) + " R" +
                      format_decimal(opt.safe_height) + " F" + format_decimal(d.feed));
        for (std::size_t k = 1; k < c.points.size(); ++k) out.push_back(xy(c.points[k]));
        out.push_back("G80");
        break;
    }
  }
  if (!contours.empty() && contours.back().kind != Contour::Kind::Holes) out.push_back(safe);
  out.push_back("M5");
  if (*p.return_home) {
    const auto& h = *p.home_position;
    out.push_back("G0 " + xy(h.head<2>()));
    out.push_back("G0 Z" + format_decimal(h.z()));
  }
  out.push_back("M30");
  return d;
}

std::string join(const std::vector<std::string>& lines) {
  std::string s;
  for (const auto& l : lines) s += l + "\n";
  return s;
}

TaskParameters functional_variant(TaskParameters p) {
  if (p.tool_path && !p.tool_path->empty()) {
    for (auto& q : *p.tool_path) q.x() += 10.0;
    return p;
  }
  Shape& s = *p.shape;
  const auto dims = p.workpiece_dims;
  switch (s.kind) {
    case ShapeKind::Square:
    case ShapeKind::Rectangle:
    case ShapeKind::Pocket: {
      const double w = s.width.value_or(s.side_length.value_or(dims ? dims->width : 0.0));
      const double h = s.kind == ShapeKind::Square ? w : s.height.value_or(dims ? dims->height : 0.0);
      if (s.kind == ShapeKind::Square) s.kind = ShapeKind::Rectangle;
      s.width = w + 10.0;
      s.height = h;
      break;
    }
    case ShapeKind::Circle:
      s.radius = s.radius.value_or(dims ? std::min(dims->width, dims->height) / 2.0 : 0.0) + 10.0;
      break;
    case ShapeKind::Polygon: {
      const auto contour = shape_contours(p).front();
      const Point center = s.center.value_or(dims ? Point(dims->width / 2.0, dims->height / 2.0) : Point::Zero());
      s.center = center;
      s.radius = (contour.points.front() - center).norm() + 10.0;
      s.side_length.reset();
      break;
    }
    case ShapeKind::HoleGrid: {
      const double spacing = s.spacing.value_or(0.0);
      s.origin = s.origin.value_or(p.starting_point.value_or(Point::Zero()) + Point(spacing, spacing)) +
                 Point(10.0, 0.0);
      break;
    }
    case ShapeKind::Custom:
      break;
  }
  return p;
}

bool is_preamble(const Block& b) {
  static const std::vector<std::pair<char, int>> setup = {{'G', 17}, {'G', 20}, {'G', 21}, {'G', 40}, {'G', 49},
                                                          {'G', 54}, {'G', 80}, {'G', 90}, {'G', 91}, {'G', 94}};
  if (!b.errors.empty()) return false;
  return std::all_of(b.words.begin(), b.words.end(), [](const Command& w) {
    return std::any_of(setup.begin(), setup.end(), [&](const auto& s) {
      return w.letter == s.first && w.value == static_cast<double>(s.second);
    });
  });
}

Command word(char letter, double value) {
  return Command{letter, value, std::string(1, letter) + format_decimal(value)};
}

}  // namespace

std::string template_generate(const TaskParameters& params, const TemplateOptions& options) {
  return join(draft_program(params, options).lines);
}

std::string TemplateGenerator::generate(const GeneratorRequest& request) {
  return template_generate(parameters_from_prompt(request.prompt), options_);
}

std::string_view to_string(FaultKind kind) {
  switch (kind) {
    case FaultKind::None: return "none";
    case FaultKind::Syntax: return "syntax";
    case FaultKind::Unreachable: return "unreachable";
    case FaultKind::Rapid: return "rapid";
    case FaultKind::Drilling: return "drilling";
    case FaultKind::Functional: return "functional";
    case FaultKind::NoGCode: return "nogcode";
  }
  return "none";
}

FaultKind parse_fault(std::string_view text) {
  for (auto k : {FaultKind::None, FaultKind::Syntax, FaultKind::Unreachable, FaultKind::Rapid, FaultKind::Drilling,
                 FaultKind::Functional, FaultKind::NoGCode}) {
    if (text == to_string(k)) return k;
  }
  throw Error(ErrorCode::InvalidValue, "unknown fault kind '" + std::string(text) + "'");
}

std::string inject_fault(const TaskParameters& params, FaultKind kind, const TemplateOptions& options) {
  if (kind == FaultKind::NoGCode) return "I cannot help with that.";
  if (kind == FaultKind::Functional) return template_generate(functional_variant(params), options);
  Draft d = draft_program(params, options);
  auto& lines = d.lines;
  const std::string safe = "G0 Z" + format_decimal(options.safe_height);
  auto at_depth_after_cycle = [&](const std::string& move) {
    const Point next = d.holes.size() > 1 ? d.holes[1] : d.holes.front() + Point(1.0, 0.0);
    lines.insert(lines.begin() + d.first_cycle + 1,
                 {"G1 Z" + format_decimal(-d.depth) + " F" + format_decimal(d.feed), move + " " + xy(next), safe});
  };
  switch (kind) {
    case FaultKind::Syntax: {
      const int at = d.first_feed_xy >= 0 ? d.first_feed_xy : (d.first_arc >= 0 ? d.first_arc : d.first_cycle);
      auto& line = lines[static_cast<std::size_t>(at)];
      line = "G022" + line.substr(line.find(' '));
      break;
    }
    case FaultKind::Unreachable:
      lines.push_back("G0 X0 Y0");
      break;
    case FaultKind::Rapid:
      if (d.first_feed_xy >= 0) {
        auto& line = lines[static_cast<std::size_t>(d.first_feed_xy)];
        line = "G0" + line.substr(line.find(' '));
      } else if (d.first_arc >= 0) {
        lines.insert(lines.begin() + d.first_arc,
                     {"G0 " + xy(d.arc_start + Point(1.0, 0.0)), "G1 " + xy(d.arc_start)});
      } else {
        at_depth_after_cycle("G0");
      }
      break;
    case FaultKind::Drilling:
      if (d.first_cycle >= 0) {
        at_depth_after_cycle("G1");
      } else {
        throw Error(ErrorCode::UnsupportedShape, "drilling fault needs a hole pattern");
      }
      break;
    default:
      break;
  }
  return join(lines);
}

FaultInjectingGenerator::FaultInjectingGenerator(std::vector<FaultKind> script, TemplateOptions options)
    : script_(std::move(script)), options_(options) {
  if (script_.empty()) script_.push_back(FaultKind::None);
}

std::string FaultInjectingGenerator::generate(const GeneratorRequest& request) {
  const auto i = static_cast<std::size_t>(std::max(1, request.attempt) - 1);
  const FaultKind kind = script_[std::min(i, script_.size() - 1)];
  return inject_fault(parameters_from_prompt(request.prompt), kind, options_);
}

std::string extract_gcode(std::string_view raw) {
  static const std::regex leading_word(R"(^\s*(?:[A-Za-z][-+]?(?:\d|\.\d)|\(|;))");
  std::vector<std::string> lines;
  {
    std::istringstream in{std::string(raw)};
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      lines.push_back(line);
    }
  }
  std::vector<std::string> kept;
  std::vector<std::string> pending;  // neutral lines inside the current run
  bool in_run = false;
  for (const auto& line : lines) {
    const auto first = line.find_first_not_of(" \t");
    if (first != std::string::npos && line.compare(first, 3, "```") == 0) {
      in_run = false;
      pending.clear();
      continue;
    }
    const Block b = tokenize_line(line, 0);
    if (b.words.empty() && !b.comment && b.errors.empty()) {
      if (in_run) pending.push_back(line);
      continue;
    }
    const bool candidate = (!b.words.empty() || b.comment) && std::regex_search(line, leading_word);
    if (candidate) {
      kept.insert(kept.end(), pending.begin(), pending.end());
      pending.clear();
      kept.push_back(line);
      in_run = true;
    } else {
      in_run = false;
      pending.clear();
    }
  }
  if (kept.empty()) throw Error(ErrorCode::NoGCodeFound, "no G-code lines in generator output");
  std::string out;
  for (std::size_t i = 0; i < kept.size(); ++i) out += (i ? "\n" : "") + kept[i];
  return out;
}

GCodeProgram adjust_parameters(const GCodeProgram& program, const TaskParameters& params) {
  if (!params.feed_rate || !params.spindle_speed) {
    throw Error(ErrorCode::MissingFields, "adjust_parameters needs feed_rate and spindle_speed");
  }
  const double feed = *params.feed_rate;
  const double speed = *params.spindle_speed;
  GCodeProgram out = program;
  int mode = -1;
  bool feed_seen = false;
  for (auto& b : out.blocks) {
    for (const auto& w : b.words) {
      if (w.letter != 'G') continue;
      const int g = static_cast<int>(w.value);
      if (w.value == g && (g == 0 || g == 1 || g == 2 || g == 3 || g == 81 || g == 83)) mode = g;
      if (w.value == 80) mode = -1;
    }
    const bool spindle_start = b.has('M', 3) || b.has('M', 4);
    bool has_s = false;
    bool has_f = false;
    for (auto& w : b.words) {
      if (w.letter == 'S' && spindle_start) {
        has_s = true;
        if (w.value != speed) w = word('S', speed);
      }
      if (w.letter == 'F') {
        has_f = true;
        if (w.value != feed) w = word('F', feed);
      }
    }
    if (spindle_start && !has_s) b.words.push_back(word('S', speed));
    const bool axis = std::any_of(b.words.begin(), b.words.end(), [](const Command& w) {
      return w.letter == 'X' || w.letter == 'Y' || w.letter == 'Z' || w.letter == 'I' || w.letter == 'J' ||
             w.letter == 'R';
    });
    const bool feed_move = axis && mode > 0;
    if (feed_move && !feed_seen && !has_f) {
      b.words.push_back(word('F', feed));
      has_f = true;
    }
    if (has_f) feed_seen = true;
  }
  return out;
}

GCodeProgram integrate_segments(std::span<const GCodeProgram> segments, const IntegrationOptions& options) {
  if (segments.empty()) throw Error(ErrorCode::PreconditionFailed, "no segments to integrate");
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const Operation op = i < options.operations.size() ? options.operations[i] : Operation::Milling;
    const auto report = validate(segments[i], options.registry, options.safety, op);
    if (!report.passed) {
      throw Error(ErrorCode::SegmentInvalid, "segment " + std::to_string(i + 1) + " is invalid: " +
                                                 format_diagnostic(report.diagnostics.front()));
    }
  }
  if (segments.size() == 1) return normalize(segments.front());

  std::vector<std::string> lines;
  const std::string safe = "G0 Z" + format_decimal(options.bridge_height);
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& blocks = segments[i].blocks;
    std::size_t start = 0;
    if (i > 0) {
      while (start < blocks.size() && is_preamble(blocks[start])) ++start;
      // Bridge: retract, then rapid to where the next segment first moves in XY.
      lines.push_back(safe);
      MachineSimulator sim;
      std::optional<Point> target;
      for (const auto& b : blocks) {
        for (const auto& m : sim.step(b).moves) {
          if (!target && m.changes_xy()) target = m.to.head<2>();
        }
        if (target) break;
      }
      if (target) lines.push_back("G0 " + xy(*target));
    }
    for (std::size_t k = start; k < blocks.size(); ++k) {
      Block b = blocks[k];
      std::erase_if(b.words, [](const Command& w) {
        return w.letter == 'M' && (w.value == 30 || w.value == 2);
      });
      if (b.empty() && !b.comment) continue;
      lines.push_back(serialize(b));
    }
  }
  lines.push_back("M30");
  std::string text;
  for (std::size_t i = 0; i < lines.size(); ++i) text += (i ? "\n" : "") + lines[i];
  return parse_program(text);
}

}  // namespace gcl
