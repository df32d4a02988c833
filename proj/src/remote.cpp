#include <chrono>
#include <cstdlib>
#include <future>
#include <regex>

#include "gcl/error.hpp"
#include "gcl/generation.hpp"

// After Eigen: resolv.h defines _res, which Eigen uses as a parameter name.
#include "httplib.h"

namespace gcl {
namespace {

struct ParsedUrl {
  std::string origin;  // scheme://host:port
  std::string path;
};

ParsedUrl parse_url(const std::string& url) {
  static const std::regex re(R"(^(https?)://([^/:]+)(?::(\d+))?(/.*)?$)", std::regex::icase);
  std::smatch m;
  if (!std::regex_match(url, m, re)) throw Error(ErrorCode::GeneratorUnavailable, "invalid endpoint URL '" + url + "'");
  std::string scheme = m[1].str();
  for (auto& c : scheme) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  const std::string port = m[3].matched ? m[3].str() : (scheme == "https" ? "443" : "80");
  return {scheme + "://" + m[2].str() + ":" + port, m[4].matched ? m[4].str() : "/"};
}

std::string env(const char* name) {
  const char* v = std::getenv(name);
  return v ? std::string(v) : std::string{};
}

}  // namespace

EndpointConfig EndpointConfig::from_env() {
  EndpointConfig c;
  c.url = env("GLLM_ENDPOINT_URL");
  c.api_key = env("GLLM_API_KEY");
  c.model = env("GLLM_MODEL");
  if (c.url.empty()) throw Error(ErrorCode::GeneratorUnavailable, "GLLM_ENDPOINT_URL is not set");
  if (c.model.empty()) throw Error(ErrorCode::GeneratorUnavailable, "GLLM_MODEL is not set");
  if (const auto t = env("GLLM_TIMEOUT_SECS"); !t.empty()) {
    char* end = nullptr;
    const double secs = std::strtod(t.c_str(), &end);
    if (end == t.c_str() || *end != '\0' || !(secs > 0)) {
      throw Error(ErrorCode::GeneratorUnavailable, "GLLM_TIMEOUT_SECS must be a positive number");
    }
    c.timeout_secs = secs;
  }
  return c;
}

std::string remote_complete(const EndpointConfig& config, const std::string& prompt, const std::atomic<bool>* cancel) {
  const ParsedUrl url = parse_url(config.url);
  httplib::Client client(url.origin);
  const auto timeout = std::chrono::microseconds(static_cast<long long>(config.timeout_secs * 1e6));
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);

  httplib::Request req;
  req.method = "POST";
  req.path = url.path;
  req.body = nlohmann::json{{"model", config.model}, {"prompt", prompt}, {"max_tokens", config.max_tokens}}.dump();
  req.set_header("Content-Type", "application/json");
  if (!config.api_key.empty()) req.set_header("Authorization", "Bearer " + config.api_key);
  req.progress = [cancel](uint64_t, uint64_t) { return cancel == nullptr || !cancel->load(); };

  const auto started = std::chrono::steady_clock::now();
  // The worker lets a cancel abort a request that is still waiting for headers.
  auto pending = std::async(std::launch::async, [&] { return client.send(req); });
  while (pending.wait_for(std::chrono::milliseconds(10)) != std::future_status::ready) {
    if (cancel != nullptr && cancel->load()) client.stop();
  }
  const auto result = pending.get();
  const auto elapsed = std::chrono::steady_clock::now() - started;
  if (!result) {
    const auto err = result.error();
    if ((cancel != nullptr && cancel->load()) || err == httplib::Error::Canceled) {
      throw Error(ErrorCode::Timeout, "request cancelled");
    }
    if (err == httplib::Error::ConnectionTimeout ||
        ((err == httplib::Error::Read || err == httplib::Error::Write) && elapsed >= timeout)) {
      throw Error(ErrorCode::Timeout, "no response within " + std::to_string(config.timeout_secs) + " s");
    }
    throw Error(ErrorCode::HttpError, "request to " + url.origin + " failed: " + httplib::to_string(err));
  }
  if (result->status != 200) {
    throw Error(ErrorCode::HttpError, "endpoint returned HTTP " + std::to_string(result->status));
  }
  nlohmann::json body;
  try {
    body = nlohmann::json::parse(result->body);
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::MalformedResponse, "response body is not JSON");
  }
  if (!body.is_object() || !body.contains("text") || !body["text"].is_string()) {
    throw Error(ErrorCode::MalformedResponse, "response has no string field 'text'");
  }
  return body["text"].get<std::string>();
}

std::string RemoteGenerator::generate(const GeneratorRequest& request) {
  return remote_complete(config_, request.prompt, &cancelled_);
}

TaskParameters RemoteExtractor::extract(std::string_view description) const {
  std::string prompt =
      "Extract the machining task parameters from the description below. Answer with one JSON object "
      "using exactly these keys, null when unknown:";
  for (const auto& k : kParameterFields) prompt += " " + std::string(k);
  prompt += ".\nDESCRIPTION: " + std::string(description) + "\n";
  try {
    const std::string text = remote_complete(config_, prompt);
    const auto open = text.find('{');
    const auto close = text.rfind('}');
    if (open == std::string::npos || close == std::string::npos || close < open) {
      throw Error(ErrorCode::MalformedResponse, "no JSON object in extractor response");
    }
    return parameters_from_json(nlohmann::json::parse(text.substr(open, close - open + 1)));
  } catch (const Error& e) {
    throw Error(ErrorCode::ExtractionFailed, std::string(to_string(e.code())) + ": " + e.what());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ExtractionFailed, std::string("unreadable extractor JSON: ") + e.what());
  }
}

}  // namespace gcl
