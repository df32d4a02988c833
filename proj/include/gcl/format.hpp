#pragma once

#include <string>

namespace gcl {

// Locale-independent number formatting. Shortest round-trip decimal in fixed
// notation, no exponent, trailing zeros trimmed, "-0" printed as "0".
std::string format_decimal(double value);

// Fixed number of fractional digits, always with '.' as separator.
std::string format_fixed(double value, int digits);

}  // namespace gcl
