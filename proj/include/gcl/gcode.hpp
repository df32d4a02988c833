#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace gcl {

/// One letter-number word, e.g. "G01" or "X-3.5".
///
/// For G and M words `value` is the command identifier; for every other letter
/// it is the operand. `raw` keeps the literal spelling so the syntax check can
/// tell "G022" apart from "G22".
struct Command {
  char letter = 0;
  double value = 0.0;
  std::string raw;

  /// Digits of the integer part as written, without sign ("022" for "G022").
  std::string_view integer_digits() const;
  bool has_fraction() const;

  // Semantic equality; raw spelling is ignored.
  friend bool operator==(const Command& a, const Command& b) {
    return a.letter == b.letter && a.value == b.value;
  }
};

/// A token on a line that could not be read as a word.
struct LexError {
  std::string token;
  std::string message;

  friend bool operator==(const LexError&, const LexError&) = default;
};

struct Block {
  int line_no = 0;
  std::vector<Command> words;
  std::optional<std::string> comment;
  std::vector<LexError> errors;

  bool empty() const { return words.empty() && errors.empty(); }
  const Command* find(char letter) const;
  bool has(char letter, int code) const;
  bool has_letter(char letter) const { return find(letter) != nullptr; }

  friend bool operator==(const Block&, const Block&) = default;
};

struct GCodeProgram {
  std::vector<Block> blocks;
  std::string source;

  // Blocks only; the source text is not part of program identity.
  friend bool operator==(const GCodeProgram& a, const GCodeProgram& b) {
    return a.blocks == b.blocks;
  }
};

Block tokenize_line(std::string_view text, int line_no);

/// One block per physical line; LF or CRLF. A trailing newline does not start
/// an extra block.
GCodeProgram parse_program(std::string_view text);

std::string serialize(const Block& block);
std::string serialize(const GCodeProgram& program);

/// parse(serialize(p)).
GCodeProgram normalize(const GCodeProgram& program);

/// The recognized G/M command set. Treated as configuration.
class CommandRegistry {
 public:
  CommandRegistry() = default;

  static CommandRegistry standard();
  /// Text format, one entry per line: "G0 Rapid positioning". '#' starts a comment.
  static CommandRegistry parse(std::string_view text);

  void add(char letter, int code, std::string description);
  bool contains(char letter, int code) const;
  const std::string* description(char letter, int code) const;
  std::size_t size() const { return entries_.size(); }

 private:
  std::map<std::pair<char, int>, std::string> entries_;
};

/// True iff the word is a registered G/M command written with at most one
/// leading zero ("G02" and "G2" match, "G022" does not).
bool is_recognized(const CommandRegistry& registry, const Command& word);

}  // namespace gcl
