#include "gcl/prompt.hpp"

#include <sstream>

#include "gcl/error.hpp"

namespace gcl {
namespace {

constexpr std::string_view kParametersTag = "PARAMETERS: ";

std::string field_text(const nlohmann::json& all, const std::string& key, const TaskParameters& params) {
  if (key == "tool_path" && !params.tool_path) return "derived from shape";
  const auto& v = all.at(key);
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

void replace_all(std::string& s, const std::string& from, const std::string& to) {
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
}

}  // namespace

std::string format_prior_error(const PriorError& e) {
  if (const auto* d = std::get_if<Diagnostic>(&e)) return format_diagnostic(*d);
  if (const auto* f = std::get_if<FunctionalResult>(&e)) return format_functional_failure(*f);
  return std::get<std::string>(e);
}

std::string render_prompt(const TaskParameters& params, const PromptTemplate& tmpl,
                          std::span<const PriorError> prior_errors) {
  const auto missing = find_missing(params, tmpl);
  if (!missing.empty()) {
    std::string names;
    for (const auto& m : missing) names += (names.empty() ? "" : ", ") + m;
    throw Error(ErrorCode::MissingFields, "missing parameters: " + names);
  }
  const auto j = to_json(params);
  std::string out = tmpl.body;
  for (const auto& key : kParameterFields) {
    const std::string k(key);
    replace_all(out, "{" + k + "}", field_text(j, k, params));
  }
  replace_all(out, "{parameters_json}", j.dump());
  if (!prior_errors.empty()) {
    if (!out.empty() && out.back() != '\n') out += '\n';
    out += "PREVIOUS ERRORS:\n";
    for (const auto& e : prior_errors) out += format_prior_error(e) + "\n";
  }
  return out;
}

TaskParameters parameters_from_prompt(std::string_view prompt) {
  std::istringstream in{std::string(prompt)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind(kParametersTag, 0) != 0) continue;
    try {
      return parameters_from_json(nlohmann::json::parse(line.substr(kParametersTag.size())));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::MalformedResponse, std::string("unreadable PARAMETERS line: ") + e.what());
    } catch (const Error& e) {
      throw Error(ErrorCode::MalformedResponse, std::string("unreadable PARAMETERS line: ") + e.what());
    }
  }
  throw Error(ErrorCode::MalformedResponse, "prompt has no PARAMETERS line");
}

}  // namespace gcl
