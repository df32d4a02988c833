#pragma once

#include <array>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include "json.hpp"

#include "gcl/geometry.hpp"
#include "gcl/operation.hpp"

namespace gcl {

enum class ShapeKind { Rectangle, Square, Polygon, Circle, Custom, HoleGrid, Pocket };

std::string_view to_string(ShapeKind kind);

struct Island {
  Point center = Point::Zero();
  double radius = 0.0;

  friend bool operator==(const Island&, const Island&) = default;
};

/// Desired shape plus whatever geometry the description pinned down. Unset
/// attributes fall back to the workpiece dimensions and starting point.
struct Shape {
  ShapeKind kind = ShapeKind::Custom;
  std::optional<int> sides;            // polygon
  std::optional<double> side_length;   // square, polygon
  std::optional<double> radius;        // circle; polygon circumradius
  std::optional<double> width;         // rectangle, pocket
  std::optional<double> height;
  std::optional<Point> center;         // circle, polygon
  std::optional<Point> corner;         // rectangle, square, pocket (lower-left)
  std::optional<int> rows;             // hole grid
  std::optional<int> cols;
  std::optional<double> spacing;
  std::optional<Point> origin;         // first hole
  std::vector<Island> islands;         // pocket

  friend bool operator==(const Shape&, const Shape&) = default;
};

struct WorkpieceDims {
  double width = 0.0;
  double height = 0.0;
  std::optional<double> thickness;

  friend bool operator==(const WorkpieceDims&, const WorkpieceDims&) = default;
};

/// The eleven-field task record. Every field is optional while extracting.
struct TaskParameters {
  std::optional<std::string> material;
  std::optional<Operation> operation;
  std::optional<Shape> shape;
  std::optional<WorkpieceDims> workpiece_dims;
  std::optional<Point> starting_point;
  std::optional<Eigen::Vector3d> home_position;
  std::optional<std::vector<Point>> tool_path;
  std::optional<bool> return_home;
  std::optional<double> depth_of_cut;
  std::optional<double> feed_rate;
  std::optional<double> spindle_speed;

  friend bool operator==(const TaskParameters&, const TaskParameters&) = default;
};

inline constexpr std::array<std::string_view, 11> kParameterFields = {
    "material",    "operation",   "shape",     "workpiece_dims", "starting_point", "home_position",
    "tool_path",   "return_home", "depth_of_cut", "feed_rate",   "spindle_speed"};

/// The fixed generation template; its keys double as the completeness checklist.
struct PromptTemplate {
  std::vector<std::string> required_keys;
  std::string body;  // "{field}" placeholders plus "{parameters_json}"

  static PromptTemplate standard();
};

struct SubtaskDescription {
  int index = 1;
  std::string text;
  std::string parent_ref;

  friend bool operator==(const SubtaskDescription&, const SubtaskDescription&) = default;
};

// --- extraction ------------------------------------------------------------

class Extractor {
 public:
  virtual ~Extractor() = default;
  /// May throw Error(ExtractionFailed | Timeout | HttpError | MalformedResponse).
  virtual TaskParameters extract(std::string_view description) const = 0;
};

/// Keyword and number patterns: units, feed, spindle, "50x50" dimensions,
/// coordinate tuples, shape nouns.
class RuleBasedExtractor final : public Extractor {
 public:
  TaskParameters extract(std::string_view description) const override;
};

struct ExtractionResult {
  TaskParameters params;
  std::vector<std::string> warnings;
};

/// Runs `extractor`; if it fails the rule-based extractor is used instead and
/// the failure is reported as a warning. Empty descriptions are rejected.
ExtractionResult extract_parameters(std::string_view description, const Extractor& extractor);
ExtractionResult extract_parameters(std::string_view description);

// --- checklist ---------------------------------------------------------------

/// Unpopulated required keys in template order. tool_path counts as present
/// when the shape alone determines the path.
std::vector<std::string> find_missing(const TaskParameters& params,
                                      const PromptTemplate& tmpl = PromptTemplate::standard());

/// Fills only missing fields. Throws Error(InvalidValue) for unknown keys,
/// out-of-range numbers and malformed coordinates.
TaskParameters merge_user_answers(const TaskParameters& params, const nlohmann::json& answers);

// --- shapes ------------------------------------------------------------------

struct ShapeLexicon {
  std::vector<std::string> nouns;
  static ShapeLexicon standard();
};

int count_shapes(std::string_view description, const ShapeLexicon& lexicon = ShapeLexicon::standard());

std::vector<SubtaskDescription> decompose(std::string_view description,
                                          const std::string& parent_ref = "task",
                                          const ShapeLexicon& lexicon = ShapeLexicon::standard());

// --- JSON --------------------------------------------------------------------

/// Flat object with exactly the eleven snake_case keys; absent fields are null.
nlohmann::json to_json(const TaskParameters& params);
/// Throws Error(InvalidValue) on unknown keys or malformed values.
TaskParameters parameters_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Shape& shape);
Shape shape_from_json(const nlohmann::json& j);

}  // namespace gcl
