#include "gcl/validation.hpp"

#include <algorithm>
#include <cctype>
#include <string_view>

#include "gcl/format.hpp"
#include "gcl/machine.hpp"

namespace gcl {
namespace {

constexpr std::string_view kWordLetters = "GMXYZIJRFSTPN";

std::string coords(const Eigen::Vector3d& p) {
  return "X" + format_decimal(p.x()) + " Y" + format_decimal(p.y()) + " Z" + format_decimal(p.z());
}

bool letter_allowed(const Block& block, char letter, MotionMode mode) {
  if (kWordLetters.find(letter) != std::string_view::npos) return true;
  switch (letter) {
    case 'Q': return block.has('G', 83) || mode == MotionMode::CannedPeck;  // peck depth
    case 'H': return block.has('G', 43);                                    // length offset
    case 'D': return block.has('G', 41) || block.has('G', 42);              // radius offset
    default: return false;
  }
}

}  // namespace

std::string_view to_string(Operation op) { return op == Operation::Drilling ? "drilling" : "milling"; }

std::optional<Operation> parse_operation(std::string_view text) {
  std::string lower;
  for (char c : text) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (lower == "milling" || lower == "mill") return Operation::Milling;
  if (lower == "drilling" || lower == "drill") return Operation::Drilling;
  return std::nullopt;
}

std::string_view to_string(Rule rule) {
  switch (rule) {
    case Rule::Syntax: return "SYNTAX";
    case Rule::Unreachable: return "UNREACHABLE";
    case Rule::RapidWhileCutting: return "RAPID_WHILE_CUTTING";
    case Rule::UnsafeDrillMove: return "UNSAFE_DRILL_MOVE";
  }
  return "UNKNOWN";
}

std::string format_diagnostic(const Diagnostic& d) {
  return "LINE " + std::to_string(d.line_no) + ": " + std::string(to_string(d.rule)) + ": " + d.message;
}

std::vector<Diagnostic> check_syntax(const GCodeProgram& program, const CommandRegistry& registry) {
  std::vector<Diagnostic> out;
  MachineSimulator machine;
  for (const auto& block : program.blocks) {
    auto report = [&](std::string message) {
      out.push_back({Rule::Syntax, block.line_no, std::move(message)});
    };
    for (const auto& e : block.errors) {
      report("malformed word '" + e.token + "': " + e.message);
    }
    const MotionMode mode_before = machine.state().motion_mode;
    bool unrecognized = false;
    for (const auto& w : block.words) {
      if (w.letter == 'G' || w.letter == 'M') {
        if (!is_recognized(registry, w)) {
          report("unrecognized command '" + w.raw + "'");
          unrecognized = true;
        }
      } else if (!letter_allowed(block, w.letter, mode_before)) {
        report("unknown word '" + w.raw + "'");
      }
    }
    const BlockStep step = machine.step(block);
    if (step.axis_words_without_mode && !unrecognized) {
      report("axis words without an active motion mode (no G0/G1/G2/G3 in effect)");
    }
  }
  return out;
}

std::vector<Diagnostic> check_unreachable(const GCodeProgram& program) {
  std::vector<Diagnostic> out;
  int end_line = 0;
  for (const auto& block : program.blocks) {
    if (end_line > 0) {
      if (!block.empty()) {
        out.push_back({Rule::Unreachable, block.line_no,
                       "'" + serialize(Block{0, block.words, std::nullopt, block.errors}) +
                           "' follows M30 on line " + std::to_string(end_line) +
                           " and is unreachable"});
      }
    } else if (block.has('M', 30)) {
      end_line = block.line_no;
    }
  }
  return out;
}

std::vector<Diagnostic> check_rapid_while_cutting(const GCodeProgram& program,
                                                  const SafetyConfig& cfg) {
  std::vector<Diagnostic> out;
  MachineSimulator machine;
  bool ended = false;
  for (const auto& block : program.blocks) {
    if (ended) break;
    const BlockStep step = machine.step(block);
    ended = block.has('M', 30);
    if (!step.spindle_on_during_motion) continue;
    for (const auto& m : step.moves) {
      if (m.kind != MoveKind::Rapid || !m.z_known || m.from.z() > cfg.surface_z) continue;
      const bool retract = !m.changes_xy() && m.to.z() > m.from.z();
      if (retract || m.from == m.to) continue;
      out.push_back({Rule::RapidWhileCutting, block.line_no,
                     "rapid move (G0) to " + coords(m.to) + " while the tool is engaged (spindle on, Z=" +
                         format_decimal(m.from.z()) + " at or below surface " +
                         format_decimal(cfg.surface_z) + ")"});
      break;
    }
  }
  return out;
}

std::vector<Diagnostic> check_safe_drilling(const GCodeProgram& program, const SafetyConfig& cfg) {
  std::vector<Diagnostic> out;
  MachineSimulator machine;
  bool ended = false;
  for (const auto& block : program.blocks) {
    if (ended) break;
    const BlockStep step = machine.step(block);
    ended = block.has('M', 30);
    for (const auto& m : step.moves) {
      if (!m.changes_xy() || !m.z_known) continue;
      if (m.from.z() >= cfg.safe_height || m.to.z() >= cfg.safe_height) continue;
      out.push_back({Rule::UnsafeDrillMove, block.line_no,
                     "horizontal move to X" + format_decimal(m.to.x()) + " Y" +
                         format_decimal(m.to.y()) + " at Z=" + format_decimal(m.from.z()) +
                         ", below safe height " + format_decimal(cfg.safe_height)});
      break;
    }
  }
  return out;
}

ValidationReport validate(const GCodeProgram& program, const CommandRegistry& registry,
                          const SafetyConfig& cfg, Operation operation) {
  ValidationReport report;
  report.diagnostics = check_syntax(program, registry);
  if (report.diagnostics.empty()) {
    auto append = [&](std::vector<Diagnostic> more) {
      report.diagnostics.insert(report.diagnostics.end(), std::make_move_iterator(more.begin()),
                                std::make_move_iterator(more.end()));
    };
    append(check_unreachable(program));
    append(check_rapid_while_cutting(program, cfg));
    if (operation == Operation::Drilling) append(check_safe_drilling(program, cfg));
  }
  report.passed = report.diagnostics.empty();
  return report;
}

}  // namespace gcl
