#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gcl {

enum class ErrorCode {
  PreconditionFailed,
  ArcRadiusMismatch,
  UnknownMotion,
  DegenerateArc,
  EmptyPath,
  EmptySet,
  InsufficientGeometry,
  ExtractionFailed,
  InvalidValue,
  MissingFields,
  UnsupportedShape,
  NoGCodeFound,
  SegmentInvalid,
  Timeout,
  HttpError,
  MalformedResponse,
  GeneratorUnavailable,
  Io,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the typed codes above so
/// callers (corrector, service, CLI) can map it without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace gcl
