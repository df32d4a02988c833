#pragma once

#include <optional>
#include <string_view>

namespace gcl {

enum class Operation { Milling, Drilling };

std::string_view to_string(Operation op);
std::optional<Operation> parse_operation(std::string_view text);

}  // namespace gcl
