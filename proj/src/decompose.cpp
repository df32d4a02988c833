#include <algorithm>
#include <cctype>
#include <map>
#include <regex>
#include <set>
#include <string>

#include "gcl/taskparams.hpp"

namespace gcl {
namespace {

struct Token {
  std::string text;  // lowercased
  std::size_t begin = 0;
  std::size_t end = 0;
  bool punct = false;
};

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::vector<Token> tokenize(const std::string& text) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (std::isspace(c)) {
      ++i;
    } else if (std::isalnum(c)) {
      std::size_t j = i;
      while (j < text.size() && (std::isalnum(static_cast<unsigned char>(text[j])) ||
                                 (text[j] == '.' && j + 1 < text.size() &&
                                  std::isdigit(static_cast<unsigned char>(text[j + 1])) && j > i &&
                                  std::isdigit(static_cast<unsigned char>(text[j - 1]))))) {
        ++j;
      }
      out.push_back({lower(text.substr(i, j - i)), i, j, false});
      i = j;
    } else {
      out.push_back({std::string(1, text[i]), i, i + 1, true});
      ++i;
    }
  }
  return out;
}

const std::map<std::string, int>& number_words() {
  static const std::map<std::string, int> m = {
      {"one", 1},   {"two", 2},   {"three", 3}, {"four", 4},   {"five", 5},    {"six", 6},
      {"seven", 7}, {"eight", 8}, {"nine", 9},  {"ten", 10},   {"eleven", 11}, {"twelve", 12},
      {"single", 1}, {"twin", 2}, {"pair", 2}};
  return m;
}

bool is_stop(const Token& t) {
  static const std::set<std::string> stops = {"a",    "an",       "the",        "and",       "with", "of",
                                              "featuring", "containing", "including", "mm",   "at",
                                              "in",   "on",       "mill",       "drill",     "cut"};
  return t.punct || stops.count(t.text) > 0;
}

bool is_dimension_keyword(const std::string& w) {
  static const std::set<std::string> keys = {"radius", "diameter", "side", "depth", "spacing", "feed",
                                             "spindle", "speed",  "width", "height", "length", "rate"};
  return keys.count(w) > 0;
}

// The singular lexicon noun this token names, or "".
std::string noun_of(const std::string& word, const ShapeLexicon& lexicon) {
  for (const auto& n : lexicon.nouns) {
    if (word == n || word == n + "s" || word == n + "es") return n;
  }
  return {};
}

struct Feature {
  std::size_t token = 0;  // index of the noun token
  std::string noun;
  int multiplicity = 1;
};

std::vector<Feature> find_features(const std::vector<Token>& toks, const ShapeLexicon& lexicon) {
  std::vector<Feature> out;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (toks[i].punct) continue;
    const std::string noun = noun_of(toks[i].text, lexicon);
    if (noun.empty()) continue;
    // "hole grid", "circle pocket": the first noun modifies the second.
    if (i + 1 < toks.size() && !noun_of(toks[i + 1].text, lexicon).empty()) continue;
    // Holes of a pattern are part of that single feature.
    if (noun == "hole" && i >= 2 && toks[i - 1].text == "of") {
      static const std::set<std::string> patterns = {"grid", "pattern", "array", "set", "row", "rows"};
      if (patterns.count(toks[i - 2].text) > 0) continue;
    }
    Feature f{i, noun, 1};
    for (std::size_t back = 1; back <= 3 && back <= i; ++back) {
      const Token& t = toks[i - back];
      if (auto it = number_words().find(t.text); it != number_words().end()) {
        f.multiplicity = it->second;
        break;
      }
      if (std::all_of(t.text.begin(), t.text.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
        const bool keyed = i - back >= 1 && is_dimension_keyword(toks[i - back - 1].text);
        if (!keyed) f.multiplicity = std::max(1, std::stoi(t.text));
        break;
      }
      if (is_stop(t)) break;
    }
    out.push_back(f);
  }
  return out;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// Text following the noun that qualifies it, up to the next clause boundary.
std::string attribute_text(const std::string& text, std::size_t from) {
  static const std::vector<std::string> boundaries = {" and a ", " and an ", " featuring", " containing",
                                                      " including", " and two", " and three", " and four"};
  const std::string low = lower(text);
  std::size_t stop = text.size();
  int depth = 0;
  for (std::size_t i = from; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '(') ++depth;
    if (c == ')') depth = std::max(0, depth - 1);
    if (depth > 0) continue;
    if (c == ',' || c == ';' || (c == '.' && (i + 1 == text.size() || std::isspace(static_cast<unsigned char>(text[i + 1]))))) {
      stop = i;
      break;
    }
    bool hit = false;
    for (const auto& b : boundaries) {
      if (low.compare(i, b.size(), b) == 0) hit = true;
    }
    if (hit) {
      stop = i;
      break;
    }
  }
  return text.substr(from, stop - from);
}

// Keeps only the k-th coordinate tuple of a listed run such as
// "(40,40) and (60,40)".
std::string pick_tuple(const std::string& attr, int k, int of) {
  static const std::regex tuple(R"(\(\s*-?\d+(?:\.\d+)?\s*,\s*-?\d+(?:\.\d+)?(?:\s*,\s*-?\d+(?:\.\d+)?)?\s*\))");
  std::vector<std::pair<std::size_t, std::size_t>> spans;
  for (auto it = std::sregex_iterator(attr.begin(), attr.end(), tuple); it != std::sregex_iterator(); ++it) {
    spans.emplace_back(static_cast<std::size_t>(it->position(0)), static_cast<std::size_t>(it->length(0)));
  }
  if (static_cast<int>(spans.size()) != of || of < 2) return attr;
  const auto& chosen = spans[static_cast<std::size_t>(k)];
  const std::size_t first = spans.front().first;
  const std::size_t last = spans.back().first + spans.back().second;
  return attr.substr(0, first) + attr.substr(chosen.first, chosen.second) + attr.substr(last);
}

std::vector<std::string> shared_phrases(const std::string& text) {
  static const std::string num = R"(-?\d+(?:\.\d+)?)";
  static const std::string tup = R"(\(\s*)" + num + R"(\s*,\s*)" + num + R"((?:\s*,\s*)" + num + R"()?\s*\))";
  static const std::vector<std::regex> patterns = {
      std::regex(R"(\b(?:in|from|on)\s+an?\s+[^,.;()]*?\b(?:block|workpiece|stock|plate|sheet|blank|board|bar)\b)", std::regex::icase),
      std::regex(R"(\bdepth(?:\s+of\s+cut)?(?:\s+of|\s+is|\s*:)?\s*)" + num + R"((?:\s*mm)?|)" + num + R"(\s*mm\s+(?:deep|depth))", std::regex::icase),
      std::regex(R"(\bfeed(?:\s*rate)?(?:\s+of|\s+at|\s+is|\s*:)?\s*)" + num + R"((?:\s*mm\s*/\s*min)?|)" + num + R"(\s*mm\s*/\s*min)", std::regex::icase),
      std::regex(R"(\bspindle(?:\s+speed)?(?:\s+of|\s+at|\s+is|\s*:)?\s*)" + num + R"((?:\s*rpm)?|)" + num + R"(\s*rpm)", std::regex::icase),
      std::regex(R"(\b(?:start|begin)\w*(?:\s+point)?(?:\s+at|\s+from)?\s*)" + tup, std::regex::icase),
      std::regex(R"(\b(?:do\s+not|don't|without)\s+return\w*(?:\s+(?:to\s+)?(?:the\s+)?home)?)", std::regex::icase),
      std::regex(R"(\breturn\w*(?:\s+the\s+tool)?(?:\s+to)?\s+(?:the\s+)?home(?:\s+position)?(?:\s+at|\s+to)?(?:\s*)" + tup + R"()?)", std::regex::icase),
      std::regex(R"(\bhome(?:\s+position)?(?:\s+at|\s+is|\s*:)?\s*)" + tup, std::regex::icase),
  };
  std::vector<std::pair<std::size_t, std::string>> found;
  std::vector<std::pair<std::size_t, std::size_t>> taken;
  for (const auto& re : patterns) {
    std::smatch m;
    if (!std::regex_search(text, m, re)) continue;
    const auto b = static_cast<std::size_t>(m.position(0));
    const auto e = b + static_cast<std::size_t>(m.length(0));
    const bool overlaps = std::any_of(taken.begin(), taken.end(),
                                      [&](const auto& s) { return b < s.second && s.first < e; });
    if (overlaps) continue;
    taken.emplace_back(b, e);
    found.emplace_back(b, m.str(0));
  }
  // Materials not already carried by the workpiece phrase.
  static const std::regex material(R"(\b(stainless steel|aluminium|aluminum|steel|brass|copper|bronze|titanium|plywood|mdf|wood|acrylic|delrin|hdpe|pvc|plastic|foam)\b)", std::regex::icase);
  std::smatch mm;
  if (std::regex_search(text, mm, material)) {
    const auto b = static_cast<std::size_t>(mm.position(0));
    const bool inside = std::any_of(taken.begin(), taken.end(),
                                    [&](const auto& s) { return b >= s.first && b < s.second; });
    if (!inside) found.emplace_back(b, "in " + mm.str(0));
  }
  std::sort(found.begin(), found.end());
  std::vector<std::string> out;
  for (auto& [pos, s] : found) out.push_back(std::move(s));
  return out;
}

bool starts_with_vowel(const std::string& s) {
  if (s.empty()) return false;
  const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(s.front())));
  return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u';
}

}  // namespace

int count_shapes(std::string_view description, const ShapeLexicon& lexicon) {
  const auto features = find_features(tokenize(std::string(description)), lexicon);
  int total = 0;
  for (const auto& f : features) total += f.multiplicity;
  return std::max(1, total);
}

std::vector<SubtaskDescription> decompose(std::string_view description, const std::string& parent_ref,
                                          const ShapeLexicon& lexicon) {
  const std::string text(description);
  const auto toks = tokenize(text);
  const auto features = find_features(toks, lexicon);
  int total = 0;
  for (const auto& f : features) total += f.multiplicity;
  if (total <= 1) return {SubtaskDescription{1, text, parent_ref}};

  const auto shared = shared_phrases(text);
  std::vector<SubtaskDescription> out;
  for (const auto& f : features) {
    // Noun phrase: back to the nearest clause word.
    std::size_t first = f.token;
    while (first > 0) {
      const Token& t = toks[first - 1];
      if (t.punct || t.text == "and" || t.text == "with" || t.text == "featuring" || t.text == "containing" ||
          t.text == "including" || t.text == "mill" || t.text == "drill" || t.text == "cut" || t.text == "of" ||
          t.text == "a" || t.text == "an" || t.text == "the") {
        break;
      }
      --first;
    }
    std::vector<std::string> words;
    for (std::size_t i = first; i < f.token; ++i) {
      const Token& t = toks[i];
      const bool count_word = number_words().count(t.text) > 0 ||
                              (f.multiplicity > 1 && std::all_of(t.text.begin(), t.text.end(), [](char c) {
                                 return std::isdigit(static_cast<unsigned char>(c));
                               }));
      if (!count_word) words.push_back(text.substr(t.begin, t.end - t.begin));
    }
    words.push_back(f.noun);
    std::string phrase;
    for (const auto& w : words) phrase += (phrase.empty() ? "" : " ") + w;
    phrase = (starts_with_vowel(phrase) ? "an " : "a ") + phrase;

    const std::string verb = (f.noun == "hole" || f.noun == "grid") ? "Drill" : "Mill";
    const std::string attrs = attribute_text(text, toks[f.token].end);
    for (int k = 0; k < f.multiplicity; ++k) {
      std::string body = verb + " " + phrase + pick_tuple(attrs, k, f.multiplicity);
      body = trim(body);
      const std::string low = lower(body);
      for (const auto& s : shared) {
        if (low.find(lower(s)) == std::string::npos) body += ", " + s;
      }
      out.push_back({static_cast<int>(out.size()) + 1, body + ".", parent_ref});
    }
  }
  return out;
}

}  // namespace gcl
