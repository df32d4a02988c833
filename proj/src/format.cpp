#include "gcl/format.hpp"

#include <array>
#include <charconv>
#include <cmath>

#include "gcl/error.hpp"

namespace gcl {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::PreconditionFailed: return "PreconditionFailed";
    case ErrorCode::ArcRadiusMismatch: return "ArcRadiusMismatch";
    case ErrorCode::UnknownMotion: return "UnknownMotion";
    case ErrorCode::DegenerateArc: return "DegenerateArc";
    case ErrorCode::EmptyPath: return "EmptyPath";
    case ErrorCode::EmptySet: return "EmptySet";
    case ErrorCode::InsufficientGeometry: return "InsufficientGeometry";
    case ErrorCode::ExtractionFailed: return "ExtractionFailed";
    case ErrorCode::InvalidValue: return "InvalidValue";
    case ErrorCode::MissingFields: return "MissingFields";
    case ErrorCode::UnsupportedShape: return "UnsupportedShape";
    case ErrorCode::NoGCodeFound: return "NoGCodeFound";
    case ErrorCode::SegmentInvalid: return "SegmentInvalid";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::HttpError: return "HttpError";
    case ErrorCode::MalformedResponse: return "MalformedResponse";
    case ErrorCode::GeneratorUnavailable: return "GeneratorUnavailable";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

std::string format_decimal(double value) {
  if (value == 0.0 || !std::isfinite(value)) {
    return std::isfinite(value) ? "0" : (std::isnan(value) ? "nan" : (value > 0 ? "inf" : "-inf"));
  }
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value,
                                 std::chars_format::fixed);
  if (ec != std::errc{}) {
    return "0";
  }
  return std::string(buf.data(), end);
}

std::string format_fixed(double value, int digits) {
  if (!std::isfinite(value)) {
    return format_decimal(value);
  }
  std::array<char, 128> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value,
                                 std::chars_format::fixed, digits);
  if (ec != std::errc{}) {
    return "0";
  }
  std::string out(buf.data(), end);
  // "-0.000" reads badly in reports.
  if (out.front() == '-' && out.find_first_not_of("-0.") == std::string::npos) {
    out.erase(0, 1);
  }
  return out;
}

}  // namespace gcl
