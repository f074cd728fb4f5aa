#pragma once

// HTTP face of the gateway. Routing is a pure function over the gateway so
// it can be exercised without sockets; HttpServer binds it to a port.
//
//   GET  /1-wire/                     ids, one per line
//   GET  /1-wire/alarm/               ids currently in alarm
//   GET  /1-wire/{id}/{property}      temperature | temphigh | templow
//   PUT  /1-wire/{id}/{temphigh|templow}   plain-text integer, queued
//   GET  /actuators/{red|green}       "on\n" | "off\n"
//   PUT  /actuators/{red|green}       body "on" | "off", queued
//   GET  /status                      JSON snapshot
//   GET  /thermostat                  JSON rule or null
//   PUT  /thermostat                  JSON rule, queued
//
// Writes are applied by the next poll cycle; /status shows applied values.

#include <atomic>
#include <condition_variable>
#include <mutex>
#include <memory>
#include <string>
#include <string_view>
#include <thread>

#include "json.hpp"
#include "domo/gateway.hpp"

namespace domo {

struct ApiResponse {
  int status = 200;
  std::string body;
  std::string content_type = "text/plain";
};

nlohmann::json to_json(const Snapshot& snap);
nlohmann::json to_json(const ThermostatRule& rule);
/// Throws ConfigError on missing or mistyped fields.
ThermostatRule thermostat_from_json(const nlohmann::json& doc);

ApiResponse handle_request(Gateway& gateway, std::string_view method, std::string_view path,
                           std::string_view body);

class HttpServer {
 public:
  explicit HttpServer(Gateway& gateway);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds host:port (port 0 picks a free port) and serves on a background
  /// thread. Returns the bound port. Throws Error if binding fails.
  int start(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Runs poll cycles on a dedicated thread every `wall_interval_ms` of real
/// time (the simulated clock still advances by the configured interval).
class PollLoop {
 public:
  PollLoop(Gateway& gateway, std::uint64_t wall_interval_ms);
  ~PollLoop();
  PollLoop(const PollLoop&) = delete;
  PollLoop& operator=(const PollLoop&) = delete;

  void start();
  void stop();

 private:
  Gateway& gateway_;
  std::uint64_t wall_interval_ms_;
  std::mutex mutex_;
  std::condition_variable wake_;
  bool stop_ = false;
  std::thread thread_;
};

}  // namespace domo
