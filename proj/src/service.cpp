#include "gcl/error.hpp"
#include "gcl/service.hpp"
#include "gcl/toolpath.hpp"

#include <random>

// After Eigen: resolv.h defines _res, which Eigen uses as a parameter name.
#include "httplib.h"

namespace gcl {
namespace {

using nlohmann::json;

ApiResponse fail(int status, const std::string& error, const std::string& detail) {
  return {status, {{"error", error}, {"detail", detail}}, std::nullopt, {}};
}

ApiResponse not_found(const std::string& id) { return fail(404, "not_found", "no session '" + id + "'"); }

std::optional<json> parse_body(const std::string& body, ApiResponse& error) {
  try {
    json j = body.empty() ? json::object() : json::parse(body);
    if (!j.is_object()) {
      error = fail(400, "bad_request", "request body must be a JSON object");
      return std::nullopt;
    }
    return j;
  } catch (const json::exception& e) {
    error = fail(400, "bad_request", std::string("invalid JSON: ") + e.what());
    return std::nullopt;
  }
}

std::string new_id() {
  static std::mutex m;
  static std::mt19937_64 rng{std::random_device{}()};
  std::lock_guard lock(m);
  static const char* hex = "0123456789abcdef";
  std::string id;
  for (int i = 0; i < 2; ++i) {
    auto v = rng();
    for (int k = 0; k < 16; ++k, v >>= 4) id += hex[v & 0xF];
  }
  return id;
}

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

}  // namespace

SessionService::SessionService(ServiceConfig config, Clock clock) : config_(std::move(config)), clock_(std::move(clock)) {}

std::shared_ptr<SessionService::Entry> SessionService::find(const std::string& id) {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) return nullptr;
  const auto now = clock_();
  if (now - it->second->touched > config_.ttl) {
    sessions_.erase(it);
    return nullptr;
  }
  it->second->touched = now;
  return it->second;
}

std::size_t SessionService::session_count() const {
  std::lock_guard lock(mutex_);
  return sessions_.size();
}

std::size_t SessionService::purge_expired() {
  std::lock_guard lock(mutex_);
  const auto now = clock_();
  return std::erase_if(sessions_, [&](const auto& kv) { return now - kv.second->touched > config_.ttl; });
}

json SessionService::session_json(const Session& s) const {
  return {{"id", s.id},
          {"params", to_json(s.params)},
          {"missing", s.missing},
          {"shape_count", s.shape_count},
          {"verified", s.verified},
          {"warnings", s.warnings}};
}

ApiResponse SessionService::create(const std::string& body) {
  ApiResponse error;
  const auto j = parse_body(body, error);
  if (!j) return error;
  if (!j->contains("description") || !(*j)["description"].is_string()) {
    return fail(400, "bad_request", "'description' must be a string");
  }
  const std::string description = (*j)["description"].get<std::string>();
  Session s;
  try {
    auto extracted = extract_parameters(description);
    s.params = std::move(extracted.params);
    s.warnings = std::move(extracted.warnings);
  } catch (const Error& e) {
    return fail(400, "bad_request", e.what());
  }
  s.id = new_id();
  s.description = description;
  s.missing = find_missing(s.params, config_.loop.prompt_template);
  s.shape_count = count_shapes(description);

  purge_expired();
  auto entry = std::make_shared<Entry>();
  entry->session = s;
  entry->touched = clock_();
  {
    std::lock_guard lock(mutex_);
    sessions_[s.id] = entry;
  }
  return {201, session_json(s), std::nullopt, {}};
}

ApiResponse SessionService::patch_params(const std::string& id, const std::string& body) {
  auto entry = find(id);
  if (!entry) return not_found(id);
  ApiResponse error;
  const auto j = parse_body(body, error);
  if (!j) return error;
  const json answers = j->contains("answers") ? (*j)["answers"] : *j;
  std::lock_guard lock(entry->mutex);
  Session& s = entry->session;
  try {
    const TaskParameters merged = merge_user_answers(s.params, answers);
    if (!(merged == s.params)) {
      s.params = merged;
      s.verified = false;
      s.result.reset();
    }
  } catch (const Error& e) {
    return fail(422, "invalid_value", e.what());
  }
  s.missing = find_missing(s.params, config_.loop.prompt_template);
  return {200, {{"params", to_json(s.params)}, {"missing", s.missing}, {"verified", s.verified}}, std::nullopt, {}};
}

ApiResponse SessionService::preview(const std::string& id) {
  auto entry = find(id);
  if (!entry) return not_found(id);
  std::lock_guard lock(entry->mutex);
  try {
    const Toolpath path = construct_user_path(entry->session.params, config_.loop.chord_tol);
    const std::vector<NamedPath> paths = {{"user", path}};
    return {200, {{"svg", render_svg(paths)}, {"toolpath", to_json(path)}}, std::nullopt, {}};
  } catch (const Error& e) {
    return fail(409, "insufficient_geometry", e.what());
  }
}

ApiResponse SessionService::verify(const std::string& id, const std::string& body) {
  auto entry = find(id);
  if (!entry) return not_found(id);
  ApiResponse error;
  const auto j = parse_body(body, error);
  if (!j) return error;
  if (!j->contains("approved") || !(*j)["approved"].is_boolean()) {
    return fail(400, "bad_request", "'approved' must be a boolean");
  }
  std::lock_guard lock(entry->mutex);
  Session& s = entry->session;
  const bool approved = (*j)["approved"].get<bool>();
  if (approved && !s.missing.empty()) {
    return fail(409, "conflict", "parameters are incomplete; fill the missing fields first");
  }
  if (approved) {
    try {
      construct_user_path(s.params, config_.loop.chord_tol);
    } catch (const Error& e) {
      return fail(409, "insufficient_geometry", e.what());
    }
  }
  s.verified = approved;
  return {200, {{"verified", s.verified}}, std::nullopt, {}};
}

ApiResponse SessionService::generate(const std::string& id, const std::string& body) {
  auto entry = find(id);
  if (!entry) return not_found(id);
  ApiResponse error;
  const auto j = parse_body(body, error);
  if (!j) return error;
  std::lock_guard lock(entry->mutex);
  Session& s = entry->session;
  if (!s.missing.empty()) return fail(409, "conflict", "parameters are incomplete");
  if (!s.verified) return fail(409, "conflict", "the previewed tool path has not been approved");

  LoopConfig loop = config_.loop;
  loop.session = s.id;
  std::unique_ptr<Generator> generator;
  try {
    if (j->contains("max_iterations")) loop.max_iterations = (*j)["max_iterations"].get<int>();
    if (j->contains("tolerance")) loop.tolerance = (*j)["tolerance"].get<double>();
    loop.check();
    const std::string kind = j->value("generator", std::string("template"));
    if (kind == "template") {
      generator = std::make_unique<TemplateGenerator>();
    } else if (kind == "fault") {
      std::vector<FaultKind> script;
      for (const auto& f : j->value("faults", json::array())) script.push_back(parse_fault(f.get<std::string>()));
      generator = std::make_unique<FaultInjectingGenerator>(script);
    } else if (kind == "remote") {
      try {
        generator = std::make_unique<RemoteGenerator>(config_.remote ? *config_.remote : EndpointConfig::from_env());
      } catch (const Error& e) {
        return fail(502, "generator_unavailable", e.what());
      }
    } else {
      return fail(400, "bad_request", "unknown generator '" + kind + "'");
    }
  } catch (const json::exception& e) {
    return fail(400, "bad_request", e.what());
  } catch (const Error& e) {
    return fail(400, "bad_request", e.what());
  }

  try {
    s.result = run_loop(s.params, *generator, loop);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::GeneratorUnavailable) return fail(502, "generator_unavailable", e.what());
    return fail(500, "internal", e.what());
  }
  return {200, to_json(*s.result), std::nullopt, {}};
}

ApiResponse SessionService::gcode(const std::string& id) {
  auto entry = find(id);
  if (!entry) return not_found(id);
  std::lock_guard lock(entry->mutex);
  const Session& s = entry->session;
  if (!s.result) return fail(404, "not_found", "no program generated yet");
  if (!s.result->success) {
    ApiResponse r = fail(404, "not_found", "generation failed");
    const auto& last = s.result->trace.back();
    r.headers["X-Failure-Summary"] = "failed after " + std::to_string(s.result->iterations_used) +
                                     " attempts; last error: " + first_line(last.feedback);
    return r;
  }
  ApiResponse r{200, nullptr, *s.result->final_gcode, {}};
  r.headers["Content-Disposition"] = "attachment; filename=\"" + s.id + ".gcode\"";
  return r;
}

ApiResponse SessionService::health() const { return {200, {{"status", "ok"}}, std::nullopt, {}}; }

// --- HTTP ---------------------------------------------------------------------

struct HttpServer::Impl {
  httplib::Server server;
};

HttpServer::HttpServer(SessionService& service) : impl_(std::make_unique<Impl>()) {
  auto& srv = impl_->server;
  // The library default is SO_REUSEPORT, which lets a second server share a busy port.
  srv.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  srv.set_default_headers({{"Access-Control-Allow-Origin", service.config().cors_origin},
                           {"Access-Control-Allow-Methods", "GET, POST, PATCH, OPTIONS"},
                           {"Access-Control-Allow-Headers", "Content-Type"},
                           {"Access-Control-Expose-Headers", "X-Failure-Summary, Content-Disposition"}});
  auto send = [](httplib::Response& res, const ApiResponse& r) {
    res.status = r.status;
    for (const auto& [k, v] : r.headers) res.set_header(k, v);
    if (r.text) {
      res.set_content(*r.text, "text/plain");
    } else {
      res.set_content(r.body.dump(), "application/json");
    }
  };
  const std::string sid = R"(/sessions/([A-Za-z0-9]+))";
  srv.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  srv.Get("/health", [&service, send](const httplib::Request&, httplib::Response& res) { send(res, service.health()); });
  srv.Post("/sessions", [&service, send](const httplib::Request& req, httplib::Response& res) {
    send(res, service.create(req.body));
  });
  srv.Patch(sid + "/params", [&service, send](const httplib::Request& req, httplib::Response& res) {
    send(res, service.patch_params(req.matches[1], req.body));
  });
  srv.Get(sid + "/preview", [&service, send](const httplib::Request& req, httplib::Response& res) {
    send(res, service.preview(req.matches[1]));
  });
  srv.Post(sid + "/verify", [&service, send](const httplib::Request& req, httplib::Response& res) {
    send(res, service.verify(req.matches[1], req.body));
  });
  srv.Post(sid + "/generate", [&service, send](const httplib::Request& req, httplib::Response& res) {
    send(res, service.generate(req.matches[1], req.body));
  });
  srv.Get(sid + "/gcode", [&service, send](const httplib::Request& req, httplib::Response& res) {
    send(res, service.gcode(req.matches[1]));
  });
  srv.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) {
      res.set_content(json{{"error", "not_found"}, {"detail", "no such route"}}.dump(), "application/json");
    }
  });
}

HttpServer::~HttpServer() { stop(); }

bool HttpServer::bind(const std::string& host, int port) {
  if (port == 0) {
    port_ = impl_->server.bind_to_any_port(host);
    return port_ > 0;
  }
  if (!impl_->server.bind_to_port(host, port)) return false;
  port_ = port;
  return true;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_) impl_->server.stop();
}

}  // namespace gcl
