#include "gcl/geometry.hpp"

#include <cmath>
#include <numbers>

namespace gcl {

std::vector<Point> sample_arc(const ArcSpec& arc, double chord_tol) {
  if (!(chord_tol > 0.0)) {
    throw Error(ErrorCode::PreconditionFailed, "chord tolerance must be positive");
  }
  const Point center = arc.center();
  const double radius = arc.center_offset.norm();
  if (radius == 0.0) {
    throw Error(ErrorCode::DegenerateArc, "arc has zero radius");
  }
  constexpr double two_pi = 2.0 * std::numbers::pi;
  const double a0 = std::atan2(arc.start.y() - center.y(), arc.start.x() - center.x());
  const double a1 = std::atan2(arc.end.y() - center.y(), arc.end.x() - center.x());

  double sweep = 0.0;
  if (arc.start == arc.end) {
    sweep = two_pi;
  } else if (arc.direction == ArcDirection::CCW) {
    sweep = a1 - a0;
    while (sweep <= 0.0) sweep += two_pi;
  } else {
    sweep = a0 - a1;
    while (sweep <= 0.0) sweep += two_pi;
  }

  // Largest step whose sagitta r(1 - cos(step/2)) stays within tolerance.
  double step = chord_tol < radius ? 2.0 * std::acos(1.0 - chord_tol / radius) : std::numbers::pi;
  step = std::min(step, two_pi / kMinSamplesPerCircle);
  const int count = std::max(1, static_cast<int>(std::ceil(sweep / step - 1e-12)));
  const double sign = arc.direction == ArcDirection::CCW ? 1.0 : -1.0;

  std::vector<Point> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int k = 1; k < count; ++k) {
    const double a = a0 + sign * sweep * static_cast<double>(k) / count;
    out.emplace_back(center.x() + radius * std::cos(a), center.y() + radius * std::sin(a));
  }
  out.push_back(arc.end);
  return out;
}

}  // namespace gcl
