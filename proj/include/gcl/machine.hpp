#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "gcl/error.hpp"
#include "gcl/gcode.hpp"

namespace gcl {

enum class MotionMode { None, Rapid, Linear, ArcCW, ArcCCW, CannedDrill, CannedPeck };

/// Modal machine state. Positions are machine coordinates in millimeters.
struct MachineState {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double feed = 0.0;
  double spindle_speed = 0.0;
  bool spindle_on = false;
  MotionMode motion_mode = MotionMode::None;
  bool absolute = true;
  bool units_mm = true;

  Eigen::Vector3d position() const { return {x, y, z}; }
};

enum class MoveKind { Rapid, Linear, ArcCW, ArcCCW, CannedPosition, CannedPlunge, CannedRetract, Home };

struct Move {
  MoveKind kind = MoveKind::Rapid;
  Eigen::Vector3d from = Eigen::Vector3d::Zero();
  Eigen::Vector3d to = Eigen::Vector3d::Zero();
  Eigen::Vector2d center = Eigen::Vector2d::Zero();  // arcs only
  bool z_known = false;                              // Z at `from` was ever commanded

  bool changes_xy() const { return from.x() != to.x() || from.y() != to.y(); }
};

/// Everything one block did to the machine.
struct BlockStep {
  std::vector<Move> moves;
  bool spindle_on_during_motion = false;
  bool axis_words_without_mode = false;
  bool ends_program = false;
  std::optional<Error> error;
};

/// Applies blocks one at a time, honoring modal state in the usual RS274
/// order: modes, feed/speed, spindle start, motion, spindle stop, program end.
///
/// Canned cycles (G81/G83) position in XY at the current height, drill to the
/// cycle Z and retract to the R plane. G28 returns to the machine origin.
class MachineSimulator {
 public:
  const MachineState& state() const { return state_; }
  bool z_known() const { return z_known_; }

  BlockStep step(const Block& block);

 private:
  double scale() const { return state_.units_mm ? 1.0 : 25.4; }
  double axis_target(const Block& block, char letter, double current, double offset) const;

  MachineState state_;
  Eigen::Vector3d offset_ = Eigen::Vector3d::Zero();  // G92
  bool z_known_ = false;
  std::optional<double> canned_depth_;
  std::optional<double> canned_r_;
};

}  // namespace gcl
