#include "gcl/machine.hpp"

#include <cmath>

#include "gcl/format.hpp"

namespace gcl {
namespace {

constexpr double kRadiusTolerance = 1e-6;

bool has_axis(const Block& b) { return b.has_letter('X') || b.has_letter('Y') || b.has_letter('Z'); }

}  // namespace

double MachineSimulator::axis_target(const Block& block, char letter, double current,
                                     double offset) const {
  const Command* w = block.find(letter);
  if (w == nullptr) return current;
  return state_.absolute ? w->value * scale() + offset : current + w->value * scale();
}

BlockStep MachineSimulator::step(const Block& block) {
  BlockStep out;

  if (block.has('G', 20)) state_.units_mm = false;
  if (block.has('G', 21)) state_.units_mm = true;
  if (block.has('G', 90)) state_.absolute = true;
  if (block.has('G', 91)) state_.absolute = false;
  if (block.has('G', 80)) state_.motion_mode = MotionMode::None;

  if (const Command* f = block.find('F')) state_.feed = f->value * scale();
  if (const Command* s = block.find('S')) state_.spindle_speed = s->value;
  if (block.has('M', 3) || block.has('M', 4)) state_.spindle_on = true;

  bool cycle_word = false;
  for (const auto& w : block.words) {
    if (w.letter != 'G' || w.has_fraction()) continue;
    switch (static_cast<int>(w.value)) {
      case 0: state_.motion_mode = MotionMode::Rapid; break;
      case 1: state_.motion_mode = MotionMode::Linear; break;
      case 2: state_.motion_mode = MotionMode::ArcCW; break;
      case 3: state_.motion_mode = MotionMode::ArcCCW; break;
      case 81: state_.motion_mode = MotionMode::CannedDrill; cycle_word = true; break;
      case 83: state_.motion_mode = MotionMode::CannedPeck; cycle_word = true; break;
      default: break;
    }
  }
  out.spindle_on_during_motion = state_.spindle_on;

  const Eigen::Vector3d current = state_.position();
  const bool z_known_before = z_known_;
  auto push = [&](MoveKind kind, const Eigen::Vector3d& from, const Eigen::Vector3d& to,
                  bool known) {
    Move m;
    m.kind = kind;
    m.from = from;
    m.to = to;
    m.z_known = known;
    out.moves.push_back(m);
    return out.moves.size() - 1;
  };
  auto land = [&](const Eigen::Vector3d& p) {
    state_.x = p.x();
    state_.y = p.y();
    state_.z = p.z();
  };

  if (block.has('G', 92)) {
    // Current position now reads as the given coordinates.
    if (const Command* w = block.find('X')) offset_.x() = state_.x - w->value * scale();
    if (const Command* w = block.find('Y')) offset_.y() = state_.y - w->value * scale();
    if (const Command* w = block.find('Z')) {
      offset_.z() = state_.z - w->value * scale();
      z_known_ = true;
    }
  } else if (block.has('G', 28)) {
    Eigen::Vector3d via(axis_target(block, 'X', current.x(), offset_.x()),
                        axis_target(block, 'Y', current.y(), offset_.y()),
                        axis_target(block, 'Z', current.z(), offset_.z()));
    bool known = z_known_before;
    if (has_axis(block)) {
      push(MoveKind::Home, current, via, known);
      known = known || block.has_letter('Z');
    }
    push(MoveKind::Home, via, Eigen::Vector3d::Zero(), known);
    land(Eigen::Vector3d::Zero());
    z_known_ = true;
  } else if (has_axis(block) || (cycle_word && block.has_letter('R'))) {
    Eigen::Vector3d target(axis_target(block, 'X', current.x(), offset_.x()),
                           axis_target(block, 'Y', current.y(), offset_.y()),
                           axis_target(block, 'Z', current.z(), offset_.z()));
    switch (state_.motion_mode) {
      case MotionMode::None:
        out.axis_words_without_mode = true;
        break;
      case MotionMode::Rapid:
      case MotionMode::Linear:
        push(state_.motion_mode == MotionMode::Rapid ? MoveKind::Rapid : MoveKind::Linear, current,
             target, z_known_before);
        land(target);
        if (block.has_letter('Z') && (state_.absolute || z_known_)) z_known_ = true;
        break;
      case MotionMode::ArcCW:
      case MotionMode::ArcCCW: {
        const bool cw = state_.motion_mode == MotionMode::ArcCW;
        Eigen::Vector2d start = current.head<2>();
        Eigen::Vector2d end = target.head<2>();
        Eigen::Vector2d center;
        if (const Command* r = block.find('R')) {
          const double radius = r->value * scale();
          const Eigen::Vector2d chord = end - start;
          const double d = chord.norm();
          if (d == 0.0 || std::abs(radius) == 0.0 || d > 2.0 * std::abs(radius) + kRadiusTolerance) {
            out.error = Error(ErrorCode::ArcRadiusMismatch,
                              "line " + std::to_string(block.line_no) + ": R=" +
                                  format_decimal(r->value) + " cannot span the arc endpoints");
            break;
          }
          const double h = std::sqrt(std::max(0.0, radius * radius - 0.25 * d * d));
          const Eigen::Vector2d mid = 0.5 * (start + end);
          const Eigen::Vector2d left(-chord.y() / d, chord.x() / d);
          // Minor arc for R > 0: center lies right of the chord for CW, left for CCW.
          double side = cw ? -1.0 : 1.0;
          if (radius < 0) side = -side;
          center = mid + side * h * left;
        } else {
          const Command* i = block.find('I');
          const Command* j = block.find('J');
          center = start + Eigen::Vector2d(i ? i->value * scale() : 0.0, j ? j->value * scale() : 0.0);
          const double r0 = (start - center).norm();
          const double r1 = (end - center).norm();
          if (std::abs(r0 - r1) > kRadiusTolerance) {
            out.error = Error(ErrorCode::ArcRadiusMismatch,
                              "line " + std::to_string(block.line_no) +
                                  ": arc radius mismatch, start radius " + format_decimal(r0) +
                                  " vs end radius " + format_decimal(r1));
            break;
          }
        }
        auto idx = push(cw ? MoveKind::ArcCW : MoveKind::ArcCCW, current, target, z_known_before);
        out.moves[idx].center = center;
        land(target);
        if (block.has_letter('Z') && (state_.absolute || z_known_)) z_known_ = true;
        break;
      }
      case MotionMode::CannedDrill:
      case MotionMode::CannedPeck: {
        if (const Command* z = block.find('Z')) canned_depth_ = z->value * scale() + offset_.z();
        if (const Command* r = block.find('R')) canned_r_ = r->value * scale() + offset_.z();
        if (!canned_depth_) {
          out.axis_words_without_mode = !block.has_letter('X') && !block.has_letter('Y');
          break;
        }
        const double retract = canned_r_.value_or(current.z());
        Eigen::Vector3d above(target.x(), target.y(), current.z());
        push(MoveKind::CannedPosition, current, above, z_known_before);
        Eigen::Vector3d bottom(target.x(), target.y(), *canned_depth_);
        push(MoveKind::CannedPlunge, above, bottom, true);
        Eigen::Vector3d top(target.x(), target.y(), retract);
        push(MoveKind::CannedRetract, bottom, top, true);
        land(top);
        z_known_ = true;
        break;
      }
    }
  }

  if (block.has('M', 5)) state_.spindle_on = false;
  if (block.has('M', 30) || block.has('M', 2)) {
    state_.spindle_on = false;
    out.ends_program = true;
  }
  return out;
}

}  // namespace gcl
