#include "gcl/taskparams.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <regex>

#include "gcl/error.hpp"
#include "gcl/toolpath.hpp"

namespace gcl {
namespace {

using nlohmann::json;

[[noreturn]] void invalid(std::string_view field, const std::string& why) {
  throw Error(ErrorCode::InvalidValue, std::string(field) + ": " + why);
}

double number(std::string_view field, const json& v) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    double out = 0.0;
    auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec == std::errc{} && end == s.data() + s.size()) return out;
  }
  invalid(field, "expected a number, got " + v.dump());
}

double positive(std::string_view field, const json& v) {
  const double x = number(field, v);
  if (!(x > 0) || !std::isfinite(x)) invalid(field, "must be positive, got " + v.dump());
  return x;
}

std::vector<double> numbers(std::string_view field, const json& v, std::size_t min_n, std::size_t max_n) {
  if (!v.is_array() || v.size() < min_n || v.size() > max_n) {
    invalid(field, "expected an array of " + std::to_string(min_n) +
                       (min_n == max_n ? "" : "-" + std::to_string(max_n)) + " numbers, got " + v.dump());
  }
  std::vector<double> out;
  for (const auto& e : v) {
    if (e.is_null()) {
      out.push_back(std::nan(""));
      continue;
    }
    const double x = number(field, e);
    if (!std::isfinite(x)) invalid(field, "non-finite coordinate");
    out.push_back(x);
  }
  return out;
}

Point point(std::string_view field, const json& v) {
  auto xs = numbers(field, v, 2, 2);
  if (std::isnan(xs[0]) || std::isnan(xs[1])) invalid(field, "coordinates must not be null");
  return {xs[0], xs[1]};
}

json point_json(const Point& p) { return json::array({p.x(), p.y()}); }

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::optional<ShapeKind> parse_kind(std::string_view text, std::optional<int>& sides) {
  const std::string k = lower(text);
  if (k == "rectangle") return ShapeKind::Rectangle;
  if (k == "square") return ShapeKind::Square;
  if (k == "circle") return ShapeKind::Circle;
  if (k == "custom" || k == "irregular") return ShapeKind::Custom;
  if (k == "hole_grid") return ShapeKind::HoleGrid;
  if (k == "pocket") return ShapeKind::Pocket;
  if (k == "polygon") return ShapeKind::Polygon;
  if (k == "triangle") { sides = 3; return ShapeKind::Polygon; }
  if (k == "pentagon") { sides = 5; return ShapeKind::Polygon; }
  if (k == "hexagon") { sides = 6; return ShapeKind::Polygon; }
  if (k == "octagon") { sides = 8; return ShapeKind::Polygon; }
  static const std::regex poly(R"(polygon\((\d+)\))");
  std::smatch m;
  if (std::regex_match(k, m, poly)) {
    sides = std::stoi(m[1]);
    return ShapeKind::Polygon;
  }
  return std::nullopt;
}

void set_field(TaskParameters& p, std::string_view key, const json& v) {
  if (key == "material") {
    if (!v.is_string() || v.get<std::string>().empty()) invalid(key, "expected non-empty text");
    p.material = v.get<std::string>();
  } else if (key == "operation") {
    auto op = v.is_string() ? parse_operation(v.get<std::string>()) : std::nullopt;
    if (!op) invalid(key, "expected \"milling\" or \"drilling\", got " + v.dump());
    p.operation = op;
  } else if (key == "shape") {
    p.shape = shape_from_json(v);
  } else if (key == "workpiece_dims") {
    auto xs = numbers(key, v, 2, 3);
    if (!(xs[0] > 0) || !(xs[1] > 0)) invalid(key, "width and height must be positive");
    WorkpieceDims d{xs[0], xs[1], std::nullopt};
    if (xs.size() == 3 && !std::isnan(xs[2])) {
      if (!(xs[2] > 0)) invalid(key, "thickness must be positive");
      d.thickness = xs[2];
    }
    p.workpiece_dims = d;
  } else if (key == "starting_point") {
    p.starting_point = point(key, v);
  } else if (key == "home_position") {
    auto xs = numbers(key, v, 3, 3);
    if (std::any_of(xs.begin(), xs.end(), [](double x) { return std::isnan(x); })) {
      invalid(key, "coordinates must not be null");
    }
    p.home_position = Eigen::Vector3d(xs[0], xs[1], xs[2]);
  } else if (key == "tool_path") {
    if (!v.is_array()) invalid(key, "expected an array of [x, y] points");
    std::vector<Point> pts;
    for (const auto& e : v) pts.push_back(point(key, e));
    p.tool_path = std::move(pts);
  } else if (key == "return_home") {
    if (v.is_boolean()) {
      p.return_home = v.get<bool>();
    } else if (v.is_string()) {
      const std::string s = lower(v.get<std::string>());
      if (s == "true" || s == "yes") p.return_home = true;
      else if (s == "false" || s == "no") p.return_home = false;
      else invalid(key, "expected a boolean, got " + v.dump());
    } else {
      invalid(key, "expected a boolean, got " + v.dump());
    }
  } else if (key == "depth_of_cut") {
    p.depth_of_cut = positive(key, v);
  } else if (key == "feed_rate") {
    p.feed_rate = positive(key, v);
  } else if (key == "spindle_speed") {
    p.spindle_speed = positive(key, v);
  } else {
    invalid(key, "unknown parameter");
  }
}

bool is_populated(const TaskParameters& p, std::string_view key) {
  if (key == "material") return p.material.has_value();
  if (key == "operation") return p.operation.has_value();
  if (key == "shape") return p.shape.has_value();
  if (key == "workpiece_dims") return p.workpiece_dims.has_value();
  if (key == "starting_point") return p.starting_point.has_value();
  if (key == "home_position") return p.home_position.has_value();
  if (key == "tool_path") return p.tool_path.has_value() && !p.tool_path->empty();
  if (key == "return_home") return p.return_home.has_value();
  if (key == "depth_of_cut") return p.depth_of_cut.has_value();
  if (key == "feed_rate") return p.feed_rate.has_value();
  if (key == "spindle_speed") return p.spindle_speed.has_value();
  return false;
}

}  // namespace

std::string_view to_string(ShapeKind kind) {
  switch (kind) {
    case ShapeKind::Rectangle: return "rectangle";
    case ShapeKind::Square: return "square";
    case ShapeKind::Polygon: return "polygon";
    case ShapeKind::Circle: return "circle";
    case ShapeKind::Custom: return "custom";
    case ShapeKind::HoleGrid: return "hole_grid";
    case ShapeKind::Pocket: return "pocket";
  }
  return "custom";
}

PromptTemplate PromptTemplate::standard() {
  PromptTemplate t;
  for (auto k : kParameterFields) t.required_keys.emplace_back(k);
  t.body =
      "Generate a complete G-code program for the following CNC machining task.\n"
      "Material: {material}\n"
      "Operation: {operation}\n"
      "Shape: {shape}\n"
      "Workpiece dimensions: {workpiece_dims}\n"
      "Starting point: {starting_point}\n"
      "Home position: {home_position}\n"
      "Tool path: {tool_path}\n"
      "Return home: {return_home}\n"
      "Depth of cut: {depth_of_cut}\n"
      "Feed rate: {feed_rate}\n"
      "Spindle speed: {spindle_speed}\n"
      "Rules: use millimeters (G21) and absolute positioning (G90); move at a safe height "
      "before starting the spindle; never use G0 while cutting; end the program with a single M30.\n"
      "PARAMETERS: {parameters_json}\n";
  return t;
}

ShapeLexicon ShapeLexicon::standard() {
  return {{"square", "rectangle", "circle", "hexagon", "polygon", "pocket", "island", "hole", "grid",
           "triangle", "pentagon", "octagon"}};
}

std::vector<std::string> find_missing(const TaskParameters& params, const PromptTemplate& tmpl) {
  std::vector<std::string> missing;
  for (const auto& key : tmpl.required_keys) {
    if (is_populated(params, key)) continue;
    if (key == "tool_path" && params.shape) {
      try {
        (void)shape_contours(params);
        continue;
      } catch (const Error&) {
      }
    }
    missing.push_back(key);
  }
  return missing;
}

TaskParameters merge_user_answers(const TaskParameters& params, const json& answers) {
  if (!answers.is_object()) {
    throw Error(ErrorCode::InvalidValue, "answers must be a JSON object");
  }
  TaskParameters out = params;
  TaskParameters scratch;
  for (const auto& [key, value] : answers.items()) {
    if (std::find(kParameterFields.begin(), kParameterFields.end(), key) == kParameterFields.end()) {
      invalid(key, "unknown parameter");
    }
    if (value.is_null()) continue;
    set_field(scratch, key, value);  // validates even when the field is already set
    if (!is_populated(out, key)) set_field(out, key, value);
  }
  return out;
}

json to_json(const Shape& s) {
  json j = {{"kind", std::string(to_string(s.kind))}};
  if (s.sides) j["sides"] = *s.sides;
  if (s.side_length) j["side_length"] = *s.side_length;
  if (s.radius) j["radius"] = *s.radius;
  if (s.width) j["width"] = *s.width;
  if (s.height) j["height"] = *s.height;
  if (s.center) j["center"] = point_json(*s.center);
  if (s.corner) j["corner"] = point_json(*s.corner);
  if (s.rows) j["rows"] = *s.rows;
  if (s.cols) j["cols"] = *s.cols;
  if (s.spacing) j["spacing"] = *s.spacing;
  if (s.origin) j["origin"] = point_json(*s.origin);
  if (!s.islands.empty()) {
    json islands = json::array();
    for (const auto& i : s.islands) islands.push_back({{"center", point_json(i.center)}, {"radius", i.radius}});
    j["islands"] = islands;
  }
  return j;
}

Shape shape_from_json(const json& j) {
  Shape s;
  std::optional<int> sides;
  if (j.is_string()) {
    auto kind = parse_kind(j.get<std::string>(), sides);
    if (!kind) invalid("shape", "unknown shape " + j.dump());
    s.kind = *kind;
    s.sides = sides;
    return s;
  }
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) {
    invalid("shape", "expected a shape name or an object with a \"kind\"");
  }
  auto kind = parse_kind(j["kind"].get<std::string>(), sides);
  if (!kind) invalid("shape", "unknown shape kind " + j["kind"].dump());
  s.kind = *kind;
  s.sides = sides;
  auto count = [&](const char* key) -> std::optional<int> {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    const double x = positive(std::string("shape.") + key, j[key]);
    if (x != std::floor(x)) invalid(std::string("shape.") + key, "must be an integer");
    return static_cast<int>(x);
  };
  auto length = [&](const char* key) -> std::optional<double> {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    return positive(std::string("shape.") + key, j[key]);
  };
  auto pos = [&](const char* key) -> std::optional<Point> {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    return point(std::string("shape.") + key, j[key]);
  };
  for (const auto& [key, value] : j.items()) {
    static const std::vector<std::string> known = {"kind",  "sides",  "side_length", "radius",
                                                   "width", "height", "center",      "corner",
                                                   "rows",  "cols",   "spacing",     "origin",
                                                   "islands"};
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      invalid("shape", "unknown attribute \"" + key + "\"");
    }
  }
  if (auto n = count("sides")) s.sides = n;
  s.side_length = length("side_length");
  s.radius = length("radius");
  s.width = length("width");
  s.height = length("height");
  s.center = pos("center");
  s.corner = pos("corner");
  s.rows = count("rows");
  s.cols = count("cols");
  s.spacing = length("spacing");
  s.origin = pos("origin");
  if (j.contains("islands") && !j["islands"].is_null()) {
    if (!j["islands"].is_array()) invalid("shape.islands", "expected an array");
    for (const auto& i : j["islands"]) {
      if (!i.is_object() || !i.contains("center") || !i.contains("radius")) {
        invalid("shape.islands", "each island needs center and radius");
      }
      s.islands.push_back({point("shape.islands.center", i["center"]), positive("shape.islands.radius", i["radius"])});
    }
  }
  return s;
}

json to_json(const TaskParameters& p) {
  json j = json::object();
  j["material"] = p.material ? json(*p.material) : json(nullptr);
  j["operation"] = p.operation ? json(std::string(to_string(*p.operation))) : json(nullptr);
  j["shape"] = p.shape ? to_json(*p.shape) : json(nullptr);
  if (p.workpiece_dims) {
    const auto& d = *p.workpiece_dims;
    j["workpiece_dims"] = json::array({d.width, d.height, d.thickness ? json(*d.thickness) : json(nullptr)});
  } else {
    j["workpiece_dims"] = nullptr;
  }
  j["starting_point"] = p.starting_point ? point_json(*p.starting_point) : json(nullptr);
  j["home_position"] = p.home_position
                           ? json::array({p.home_position->x(), p.home_position->y(), p.home_position->z()})
                           : json(nullptr);
  if (p.tool_path) {
    json pts = json::array();
    for (const auto& q : *p.tool_path) pts.push_back(point_json(q));
    j["tool_path"] = pts;
  } else {
    j["tool_path"] = nullptr;
  }
  j["return_home"] = p.return_home ? json(*p.return_home) : json(nullptr);
  j["depth_of_cut"] = p.depth_of_cut ? json(*p.depth_of_cut) : json(nullptr);
  j["feed_rate"] = p.feed_rate ? json(*p.feed_rate) : json(nullptr);
  j["spindle_speed"] = p.spindle_speed ? json(*p.spindle_speed) : json(nullptr);
  return j;
}

TaskParameters parameters_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidValue, "parameters must be a JSON object");
  TaskParameters p;
  for (const auto& [key, value] : j.items()) {
    if (value.is_null()) {
      if (std::find(kParameterFields.begin(), kParameterFields.end(), key) == kParameterFields.end()) {
        invalid(key, "unknown parameter");
      }
      continue;
    }
    set_field(p, key, value);
  }
  return p;
}

}  // namespace gcl
