#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "gcl/corrector.hpp"
#include "gcl/generation.hpp"
#include "gcl/taskparams.hpp"

namespace gcl {

struct Session {
  std::string id;
  std::string description;
  TaskParameters params;
  std::vector<std::string> missing;
  int shape_count = 1;
  std::vector<std::string> warnings;
  bool verified = false;
  std::optional<LoopResult> result;
};

struct ServiceConfig {
  std::chrono::seconds ttl{3600};
  LoopConfig loop;
  /// Used by {"generator": "remote"}; when absent the GLLM_* variables are read.
  std::optional<EndpointConfig> remote;
  std::string cors_origin = "*";
};

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
  std::optional<std::string> text;  // text/plain payload instead of JSON
  std::map<std::string, std::string> headers;
};

/// The session state machine behind the HTTP routes; usable without a socket.
/// Requests on one session are serialized, sessions run independently.
class SessionService {
 public:
  using Clock = std::function<std::chrono::steady_clock::time_point()>;

  explicit SessionService(ServiceConfig config = {}, Clock clock = std::chrono::steady_clock::now);

  ApiResponse create(const std::string& body);
  ApiResponse patch_params(const std::string& id, const std::string& body);
  ApiResponse preview(const std::string& id);
  ApiResponse verify(const std::string& id, const std::string& body);
  ApiResponse generate(const std::string& id, const std::string& body);
  ApiResponse gcode(const std::string& id);
  ApiResponse health() const;

  std::size_t session_count() const;
  /// Drops sessions idle for longer than the TTL; returns how many.
  std::size_t purge_expired();

  const ServiceConfig& config() const { return config_; }

 private:
  struct Entry {
    std::mutex mutex;
    Session session;
    std::chrono::steady_clock::time_point touched;
  };

  std::shared_ptr<Entry> find(const std::string& id);
  nlohmann::json session_json(const Session& s) const;

  ServiceConfig config_;
  Clock clock_;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
};

/// HTTP/JSON facade over SessionService with CORS headers.
class HttpServer {
 public:
  explicit HttpServer(SessionService& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Port 0 picks a free port. Returns false when the address is taken.
  bool bind(const std::string& host, int port);
  int port() const { return port_; }
  /// Blocks until stop().
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int port_ = 0;
};

}  // namespace gcl
