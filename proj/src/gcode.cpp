#include "gcl/gcode.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <sstream>

#include "gcl/format.hpp"

namespace gcl {
namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }
bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\v' || c == '\f'; }

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

// Length of a signed decimal starting at `pos`, or 0 if there is none.
std::size_t scan_number(std::string_view text, std::size_t pos) {
  std::size_t i = pos;
  if (i < text.size() && (text[i] == '+' || text[i] == '-')) ++i;
  std::size_t digits = 0;
  while (i < text.size() && is_digit(text[i])) { ++i; ++digits; }
  if (i < text.size() && text[i] == '.') {
    ++i;
    while (i < text.size() && is_digit(text[i])) { ++i; ++digits; }
  }
  return digits == 0 ? 0 : i - pos;
}

double to_double(std::string_view token) {
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  double v = 0.0;
  std::from_chars(token.data(), token.data() + token.size(), v);
  return v == 0.0 ? 0.0 : v;  // fold -0
}

void append_comment(std::optional<std::string>& comment, std::string_view piece) {
  std::string t = trim(piece);
  if (t.empty()) {
    if (!comment) comment = std::string{};
    return;
  }
  if (comment && !comment->empty()) {
    *comment += ' ';
    *comment += t;
  } else {
    comment = std::move(t);
  }
}

}  // namespace

std::string_view Command::integer_digits() const {
  std::string_view s(raw);
  if (!s.empty() && is_alpha(s.front())) s.remove_prefix(1);
  if (!s.empty() && (s.front() == '+' || s.front() == '-')) s.remove_prefix(1);
  auto dot = s.find('.');
  return dot == std::string_view::npos ? s : s.substr(0, dot);
}

bool Command::has_fraction() const { return value != static_cast<double>(static_cast<long long>(value)); }

const Command* Block::find(char letter) const {
  for (const auto& w : words) {
    if (w.letter == letter) return &w;
  }
  return nullptr;
}

bool Block::has(char letter, int code) const {
  return std::any_of(words.begin(), words.end(), [&](const Command& w) {
    return w.letter == letter && !w.has_fraction() && static_cast<int>(w.value) == code;
  });
}

Block tokenize_line(std::string_view text, int line_no) {
  Block block;
  block.line_no = line_no;
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (is_space(c) || c == '%') {
      ++i;
    } else if (c == '(') {
      auto close = text.find(')', i + 1);
      auto stop = close == std::string_view::npos ? text.size() : close;
      append_comment(block.comment, text.substr(i + 1, stop - i - 1));
      i = close == std::string_view::npos ? text.size() : close + 1;
    } else if (c == ';') {
      append_comment(block.comment, text.substr(i + 1));
      i = text.size();
    } else if (is_alpha(c)) {
      std::size_t len = scan_number(text, i + 1);
      if (len == 0) {
        block.errors.push_back({std::string(1, c), "letter without a number"});
        ++i;
        continue;
      }
      Command word;
      word.letter = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      word.raw = std::string(text.substr(i, len + 1));
      word.value = to_double(text.substr(i + 1, len));
      block.words.push_back(std::move(word));
      i += len + 1;
    } else if (std::size_t len = scan_number(text, i); len > 0) {
      block.errors.push_back({std::string(text.substr(i, len)), "number without a letter"});
      i += len;
    } else {
      block.errors.push_back({std::string(1, c), "unexpected character"});
      ++i;
    }
  }
  return block;
}

GCodeProgram parse_program(std::string_view text) {
  GCodeProgram program;
  program.source = std::string(text);
  std::size_t start = 0;
  int line_no = 1;
  while (start < text.size()) {
    auto nl = text.find('\n', start);
    auto stop = nl == std::string_view::npos ? text.size() : nl;
    auto line = text.substr(start, stop - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    program.blocks.push_back(tokenize_line(line, line_no++));
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  return program;
}

std::string serialize(const Block& block) {
  std::string out;
  for (const auto& w : block.words) {
    if (!out.empty()) out += ' ';
    out += w.letter;
    out += format_decimal(w.value);
  }
  for (const auto& e : block.errors) {
    if (!out.empty()) out += ' ';
    out += e.token;
  }
  if (block.comment) {
    if (!out.empty()) out += ' ';
    out += ';';
    if (!block.comment->empty()) {
      out += ' ';
      out += *block.comment;
    }
  }
  return out;
}

std::string serialize(const GCodeProgram& program) {
  std::string out;
  for (std::size_t i = 0; i < program.blocks.size(); ++i) {
    if (i > 0) out += '\n';
    out += serialize(program.blocks[i]);
  }
  return out;
}

GCodeProgram normalize(const GCodeProgram& program) { return parse_program(serialize(program)); }

CommandRegistry CommandRegistry::standard() {
  CommandRegistry r;
  r.add('G', 0, "Rapid positioning");
  r.add('G', 1, "Linear interpolation");
  r.add('G', 2, "Circular interpolation, clockwise");
  r.add('G', 3, "Circular interpolation, counter-clockwise");
  r.add('G', 4, "Dwell");
  r.add('G', 17, "XY plane selection");
  r.add('G', 20, "Units: inches");
  r.add('G', 21, "Units: millimeters");
  r.add('G', 28, "Return to home position");
  r.add('G', 40, "Cutter compensation off");
  r.add('G', 41, "Cutter compensation left");
  r.add('G', 42, "Cutter compensation right");
  r.add('G', 43, "Tool length offset");
  r.add('G', 49, "Tool length offset cancel");
  r.add('G', 54, "Work coordinate system 1");
  r.add('G', 80, "Cancel canned cycle");
  r.add('G', 81, "Drilling cycle");
  r.add('G', 83, "Peck drilling cycle");
  r.add('G', 90, "Absolute positioning");
  r.add('G', 91, "Incremental positioning");
  r.add('G', 92, "Set position");
  r.add('G', 94, "Feed per minute");
  r.add('M', 0, "Program stop");
  r.add('M', 1, "Optional stop");
  r.add('M', 2, "Program end");
  r.add('M', 3, "Spindle on, clockwise");
  r.add('M', 4, "Spindle on, counter-clockwise");
  r.add('M', 5, "Spindle stop");
  r.add('M', 6, "Tool change");
  r.add('M', 7, "Mist coolant on");
  r.add('M', 8, "Flood coolant on");
  r.add('M', 9, "Coolant off");
  r.add('M', 30, "Program end and rewind");
  return r;
}

CommandRegistry CommandRegistry::parse(std::string_view text) {
  CommandRegistry r;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::string t = trim(line);
    if (t.empty()) continue;
    auto sp = t.find_first_of(" \t");
    std::string word = t.substr(0, sp);
    std::string desc = sp == std::string::npos ? std::string{} : trim(t.substr(sp));
    Block b = tokenize_line(word, 0);
    if (b.words.size() != 1 || !b.errors.empty() || b.words[0].has_fraction()) {
      continue;
    }
    r.add(b.words[0].letter, static_cast<int>(b.words[0].value), std::move(desc));
  }
  return r;
}

void CommandRegistry::add(char letter, int code, std::string description) {
  entries_[{static_cast<char>(std::toupper(static_cast<unsigned char>(letter))), code}] =
      std::move(description);
}

bool CommandRegistry::contains(char letter, int code) const {
  return entries_.count({letter, code}) > 0;
}

const std::string* CommandRegistry::description(char letter, int code) const {
  auto it = entries_.find({letter, code});
  return it == entries_.end() ? nullptr : &it->second;
}

bool is_recognized(const CommandRegistry& registry, const Command& word) {
  if (word.has_fraction() || word.value < 0) return false;
  const int code = static_cast<int>(word.value);
  if (!registry.contains(word.letter, code)) return false;
  const std::string canonical = std::to_string(code);
  const std::string_view written = word.integer_digits();
  if (word.raw.empty() || written == canonical) return true;
  // One leading zero is the common two-digit spelling (G02, M03).
  return canonical.size() == 1 && written.size() == 2 && written[0] == '0' &&
         written.substr(1) == canonical;
}

}  // namespace gcl
