#include <algorithm>
#include <cctype>
#include <regex>
#include <string>

#include "gcl/error.hpp"
#include "gcl/taskparams.hpp"

namespace gcl {
namespace {

const std::string kNum = R"((-?\d+(?:\.\d+)?))";

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::optional<double> first_number(const std::string& text, const std::vector<std::string>& patterns) {
  for (const auto& pat : patterns) {
    std::smatch m;
    if (std::regex_search(text, m, std::regex(pat))) return std::stod(m[1]);
  }
  return std::nullopt;
}

bool contains_word(const std::string& text, const std::string& pattern) {
  return std::regex_search(text, std::regex(R"(\b)" + pattern + R"(\b)"));
}

struct Tuple {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::vector<double> values;
};

std::vector<Tuple> find_tuples(const std::string& text) {
  static const std::regex re(R"(\(\s*)" + kNum + R"(\s*,\s*)" + kNum + R"(\s*(?:,\s*)" + kNum + R"(\s*)?\))");
  std::vector<Tuple> out;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), re); it != std::sregex_iterator(); ++it) {
    Tuple t;
    t.begin = static_cast<std::size_t>(it->position(0));
    t.end = t.begin + static_cast<std::size_t>(it->length(0));
    for (int g = 1; g <= 3; ++g) {
      if ((*it)[g].matched) t.values.push_back(std::stod((*it)[g]));
    }
    out.push_back(std::move(t));
  }
  return out;
}

enum class TupleRole { None, Start, Home, Center, Corner, Origin, Path };

// The role of a coordinate tuple comes from the last keyword between it and
// the previous tuple; a bare separator ("and", ",", "then") continues a list.
TupleRole classify(const std::string& between, TupleRole previous) {
  static const std::regex separator(R"(^[\s,;]*(?:and|then|to|->)?[\s,;]*$)");
  if (previous != TupleRole::None && std::regex_match(between, separator)) return previous;
  static const std::vector<std::pair<std::string, TupleRole>> keys = {
      {"start", TupleRole::Start},     {"begin", TupleRole::Start},   {"home", TupleRole::Home},
      {"cent", TupleRole::Center},     {"corner", TupleRole::Corner}, {"origin", TupleRole::Origin},
      {"first hole", TupleRole::Origin}, {"through", TupleRole::Path}, {"path", TupleRole::Path},
      {"vertices", TupleRole::Path},   {"points", TupleRole::Path},   {"via", TupleRole::Path}};
  std::size_t best_pos = 0;
  TupleRole role = TupleRole::None;
  for (const auto& [key, r] : keys) {
    auto pos = between.rfind(key);
    if (pos != std::string::npos && (role == TupleRole::None || pos >= best_pos)) {
      best_pos = pos;
      role = r;
    }
  }
  if (role == TupleRole::None && std::regex_search(between, std::regex(R"(\bat\s*$)"))) role = TupleRole::Corner;
  return role;
}

const std::vector<std::pair<std::string, std::string>>& materials() {
  static const std::vector<std::pair<std::string, std::string>> m = {
      {"stainless steel", "stainless steel"}, {"aluminium", "aluminum"}, {"aluminum", "aluminum"},
      {"steel", "steel"},   {"brass", "brass"},     {"copper", "copper"},   {"bronze", "bronze"},
      {"titanium", "titanium"}, {"plywood", "plywood"}, {"mdf", "mdf"},    {"wood", "wood"},
      {"acrylic", "acrylic"}, {"delrin", "delrin"},   {"hdpe", "hdpe"},     {"pvc", "pvc"},
      {"plastic", "plastic"}, {"foam", "foam"}};
  return m;
}

std::optional<Shape> detect_shape(const std::string& t) {
  Shape s;
  auto polygon = [&](int n) {
    s.kind = ShapeKind::Polygon;
    s.sides = n;
  };
  std::smatch m;
  if (contains_word(t, "pockets?")) {
    s.kind = ShapeKind::Pocket;
  } else if (contains_word(t, "(grid|array|pattern)") && contains_word(t, "holes?")) {
    s.kind = ShapeKind::HoleGrid;
  } else if (contains_word(t, "(irregular|custom|freeform)")) {
    s.kind = ShapeKind::Custom;
  } else if (contains_word(t, "(hexagon|hexagonal)")) {
    polygon(6);
  } else if (contains_word(t, "(pentagon|pentagonal)")) {
    polygon(5);
  } else if (contains_word(t, "(octagon|octagonal)")) {
    polygon(8);
  } else if (contains_word(t, "(triangle|triangular)")) {
    polygon(3);
  } else if (std::regex_search(t, m, std::regex(R"((\d+)[- ]sided polygon|polygon with (\d+) sides)"))) {
    polygon(std::stoi(m[1].matched ? m[1].str() : m[2].str()));
  } else if (contains_word(t, "polygon")) {
    s.kind = ShapeKind::Polygon;
  } else if (contains_word(t, "squares?")) {
    s.kind = ShapeKind::Square;
  } else if (contains_word(t, "(rectangles?|rectangular)")) {
    s.kind = ShapeKind::Rectangle;
  } else if (contains_word(t, "(circles?|circular|round|islands?)")) {
    s.kind = ShapeKind::Circle;
  } else {
    return std::nullopt;
  }
  return s;
}

}  // namespace

TaskParameters RuleBasedExtractor::extract(std::string_view description) const {
  TaskParameters p;
  const std::string t = lower(description);
  try {
    // material: earliest mention wins
    std::size_t best = std::string::npos;
    for (const auto& [word, canonical] : materials()) {
      std::smatch m;
      if (std::regex_search(t, m, std::regex(R"(\b)" + word + R"(\b)")) &&
          static_cast<std::size_t>(m.position(0)) < best) {
        best = static_cast<std::size_t>(m.position(0));
        p.material = canonical;
      }
    }

    if (contains_word(t, "drill\\w*")) {
      p.operation = Operation::Drilling;
    } else if (contains_word(t, "(mill\\w*|cut\\w*|pocket\\w*|engrav\\w*|contour\\w*|fac(e|ing))")) {
      p.operation = Operation::Milling;
    }

    p.shape = detect_shape(t);

    // "AxB[xC]" dimensions: what follows decides what they measure.
    static const std::regex dims(kNum + R"(\s*(?:mm\s*)?(?:x|\*|×|by)\s*)" + kNum +
                                 R"((?:\s*(?:mm\s*)?(?:x|\*|×|by)\s*)" + kNum + R"()?)");
    static const std::regex next_words(R"(^\s*(?:mm\b)?\s*(?:[a-z]+\s+){0,3}?(grid|array|block|workpiece|stock|plate|sheet|blank|board|bar|square|rectangle|rectangular|pocket|circle|circular|hexagon|polygon|triangle|pentagon|octagon|hole|island)\b)");
    std::optional<WorkpieceDims> shape_dims;
    for (auto it = std::sregex_iterator(t.begin(), t.end(), dims); it != std::sregex_iterator(); ++it) {
      const auto& m = *it;
      const double a = std::stod(m[1]);
      const double b = std::stod(m[2]);
      std::optional<double> c;
      if (m[3].matched) c = std::stod(m[3]);
      const std::string rest = t.substr(static_cast<std::size_t>(m.position(0) + m.length(0)));
      std::smatch w;
      const std::string noun = std::regex_search(rest, w, next_words) ? w[1].str() : std::string{};
      if (noun == "grid" || noun == "array") {
        if (p.shape && p.shape->kind == ShapeKind::HoleGrid) {
          p.shape->rows = static_cast<int>(a);
          p.shape->cols = static_cast<int>(b);
        }
      } else if (noun == "block" || noun == "workpiece" || noun == "stock" || noun == "plate" ||
                 noun == "sheet" || noun == "blank" || noun == "board" || noun == "bar" || noun.empty()) {
        if (!p.workpiece_dims) p.workpiece_dims = WorkpieceDims{a, b, c};
      } else if (!shape_dims) {
        shape_dims = WorkpieceDims{a, b, c};
      }
    }
    if (shape_dims) {
      if (p.shape && p.shape->kind != ShapeKind::HoleGrid) {
        p.shape->width = shape_dims->width;
        p.shape->height = shape_dims->height;
      }
      if (!p.workpiece_dims) p.workpiece_dims = WorkpieceDims{shape_dims->width, shape_dims->height, shape_dims->thickness};
    }

    if (p.shape) {
      Shape& s = *p.shape;
      if (auto v = first_number(t, {R"(side(?:\s+length)?(?:\s+of)?\s*)" + kNum})) s.side_length = *v;
      if (auto v = first_number(t, {R"(radius(?:\s+of)?\s*)" + kNum, kNum + R"(\s*mm\s+radius)"})) s.radius = *v;
      if (!s.radius) {
        if (auto v = first_number(t, {R"(diameter(?:\s+of)?\s*)" + kNum, kNum + R"(\s*mm\s+diameter)"})) {
          s.radius = *v / 2.0;
        }
      }
      if (auto v = first_number(t, {R"(spacing(?:\s+of)?\s*)" + kNum, kNum + R"(\s*mm\s+apart)",
                                    R"(spaced(?:\s+by)?\s*)" + kNum})) {
        s.spacing = *v;
      }
      if (s.kind == ShapeKind::Square && s.width && s.height && *s.width == *s.height) {
        s.side_length = s.width;
        s.width.reset();
        s.height.reset();
      }
    }

    std::vector<Point> centers;
    std::vector<Point> path;
    TupleRole previous = TupleRole::None;
    std::size_t cursor = 0;
    for (const auto& tup : find_tuples(t)) {
      const TupleRole role = classify(t.substr(cursor, tup.begin - cursor), previous);
      cursor = tup.end;
      previous = role;
      const Point xy(tup.values[0], tup.values[1]);
      switch (role) {
        case TupleRole::Start:
          if (!p.starting_point) p.starting_point = xy;
          break;
        case TupleRole::Home:
          if (!p.home_position) p.home_position = Eigen::Vector3d(xy.x(), xy.y(), tup.values.size() > 2 ? tup.values[2] : 0.0);
          break;
        case TupleRole::Center: centers.push_back(xy); break;
        case TupleRole::Corner:
          if (p.shape && !p.shape->corner) p.shape->corner = xy;
          break;
        case TupleRole::Origin:
          if (p.shape && !p.shape->origin) p.shape->origin = xy;
          break;
        case TupleRole::Path: path.push_back(xy); break;
        case TupleRole::None: break;
      }
    }
    if (!path.empty()) p.tool_path = path;
    if (p.shape && !centers.empty()) {
      if (p.shape->kind == ShapeKind::Pocket && contains_word(t, "islands?")) {
        for (const auto& c : centers) p.shape->islands.push_back({c, p.shape->radius.value_or(0.0)});
        if (p.shape->radius) p.shape->radius.reset();
        // An island without a radius cannot be cut.
        if (std::any_of(p.shape->islands.begin(), p.shape->islands.end(),
                        [](const Island& i) { return !(i.radius > 0); })) {
          p.shape->islands.clear();
        }
      } else {
        p.shape->center = centers.front();
      }
    }

    p.depth_of_cut = first_number(t, {R"(depth(?:\s+of\s+cut)?(?:\s+of|\s+is|\s*:)?\s*)" + kNum,
                                      kNum + R"(\s*mm\s+deep)", kNum + R"(\s*mm\s+depth)"});
    p.feed_rate = first_number(t, {R"(feed(?:\s*rate)?(?:\s+of|\s+at|\s+is|\s*:)?\s*)" + kNum,
                                   kNum + R"(\s*mm\s*/\s*min)"});
    p.spindle_speed = first_number(t, {R"(spindle(?:\s+speed)?(?:\s+of|\s+at|\s+is|\s*:)?\s*)" + kNum,
                                       kNum + R"(\s*rpm)"});
    for (auto* v : {&p.depth_of_cut, &p.feed_rate, &p.spindle_speed}) {
      if (*v && !(**v > 0)) v->reset();
    }
    if (p.depth_of_cut) p.depth_of_cut = std::abs(*p.depth_of_cut);

    if (std::regex_search(t, std::regex(R"((do\s+not|don't|without|no)\s+return)"))) {
      p.return_home = false;
    } else if (std::regex_search(t, std::regex(R"(return(?:ing)?(?:\s+the\s+tool)?(?:\s+to)?\s+(?:the\s+)?home)"))) {
      p.return_home = true;
    }
  } catch (const std::regex_error&) {
    // Extraction is total: keep whatever was found.
  }
  return p;
}

ExtractionResult extract_parameters(std::string_view description, const Extractor& extractor) {
  if (description.find_first_not_of(" \t\r\n") == std::string_view::npos) {
    throw Error(ErrorCode::PreconditionFailed, "task description is empty");
  }
  ExtractionResult out;
  try {
    out.params = extractor.extract(description);
  } catch (const Error& e) {
    out.warnings.push_back("extractor failed (" + std::string(to_string(e.code())) + ": " + e.what() +
                           "); used rule-based extraction");
    out.params = RuleBasedExtractor{}.extract(description);
  }
  return out;
}

ExtractionResult extract_parameters(std::string_view description) {
  return extract_parameters(description, RuleBasedExtractor{});
}

}  // namespace gcl
