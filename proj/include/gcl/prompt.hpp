#pragma once

#include <span>
#include <string>
#include <variant>

#include "gcl/similarity.hpp"
#include "gcl/taskparams.hpp"
#include "gcl/validation.hpp"

namespace gcl {

/// One failure carried into the next prompt. Strings are passed verbatim.
using PriorError = std::variant<Diagnostic, FunctionalResult, std::string>;

std::string format_prior_error(const PriorError& e);

/// Substitutes every field into the template body. Prior errors, when any,
/// follow under a "PREVIOUS ERRORS:" heading, one per line.
/// Throws Error(MissingFields) naming the missing keys.
std::string render_prompt(const TaskParameters& params, const PromptTemplate& tmpl = PromptTemplate::standard(),
                          std::span<const PriorError> prior_errors = {});

/// Recovers the parameters embedded on the "PARAMETERS:" line of a prompt.
/// Throws Error(MalformedResponse) when the line is absent or unreadable.
TaskParameters parameters_from_prompt(std::string_view prompt);

}  // namespace gcl
