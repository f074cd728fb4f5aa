#include "domo/http_api.hpp"

#include <chrono>
#include <cstdio>
#include <iostream>

#include "httplib.h"
#include "domo/error.hpp"

namespace domo {

using nlohmann::json;

json to_json(const ThermostatRule& rule) {
  return {{"sensor", rule.sensor.to_string()},
          {"actuator", std::string(to_string(rule.actuator))},
          {"setpoint", rule.setpoint},
          {"hysteresis", rule.hysteresis},
          {"enabled", rule.enabled}};
}

ThermostatRule thermostat_from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigError("thermostat rule must be a JSON object");
  try {
    ThermostatRule rule;
    rule.sensor = parse_rom_text(doc.at("sensor").get<std::string>());
    rule.actuator = parse_led_color(doc.value("actuator", std::string("red")));
    rule.setpoint = doc.at("setpoint").get<double>();
    rule.hysteresis = doc.value("hysteresis", 0.5);
    rule.enabled = doc.value("enabled", true);
    return rule;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("thermostat rule: ") + e.what());
  } catch (const FormatError& e) {
    throw ConfigError(std::string("thermostat rule: ") + e.what());
  }
}

json to_json(const Snapshot& snap) {
  json devices = json::array();
  for (const auto& d : snap.devices) {
    devices.push_back({
        {"id", d.rom.to_string()},
        {"path", d.path},
        {"temperature", d.temperature ? json(d.temperature->celsius()) : json(nullptr)},
        {"temphigh", d.temphigh ? json(*d.temphigh) : json(nullptr)},
        {"templow", d.templow ? json(*d.templow) : json(nullptr)},
        {"stale", d.stale},
        {"in_alarm", d.in_alarm},
        {"last_poll_ms", d.last_poll_ms},
    });
  }
  json alarm = json::array();
  for (const auto& r : snap.alarm) alarm.push_back(r.to_string());
  return {
      {"clock_ms", snap.clock_ms},
      {"cycles", snap.cycles},
      {"running", snap.running},
      {"devices", devices},
      {"alarm", alarm},
      {"alarm_stale", snap.alarm_stale},
      {"actuators", {{"red", snap.actuator(LedColor::Red)}, {"green", snap.actuator(LedColor::Green)}}},
      {"thermostat", snap.thermostat ? to_json(*snap.thermostat) : json(nullptr)},
      {"pending_writes", snap.pending_writes},
      {"last_error", snap.last_error},
  };
}

namespace {

ApiResponse from_vfs(VfsResult r) { return {r.status, std::move(r.body)}; }

ApiResponse json_response(const json& j) { return {200, j.dump(2) + "\n", "application/json"}; }

constexpr std::string_view kActuators = "/actuators/";

}  // namespace

ApiResponse handle_request(Gateway& gateway, std::string_view method, std::string_view path,
                           std::string_view body) {
  const bool get = method == "GET";
  const bool put = method == "PUT";
  if (!get && !put) return {405, "method not allowed\n"};

  if (path == "/status") {
    if (!get) return {405, "method not allowed\n"};
    auto doc = to_json(*gateway.snapshot());
    doc["pending_writes"] = gateway.pending_writes();
    return json_response(doc);
  }

  if (path == "/thermostat") {
    if (get) {
      const auto snap = gateway.snapshot();
      return json_response(snap->thermostat ? to_json(*snap->thermostat) : json(nullptr));
    }
    json doc;
    try {
      doc = json::parse(body);
    } catch (const json::parse_error&) {
      return {400, "thermostat body must be JSON\n"};
    }
    try {
      return from_vfs(gateway.write_thermostat(thermostat_from_json(doc)));
    } catch (const ConfigError& e) {
      return {400, std::string(e.what()) + "\n"};
    }
  }

  if (path.substr(0, kActuators.size()) == kActuators) {
    LedColor color;
    try {
      color = parse_led_color(path.substr(kActuators.size()));
    } catch (const FormatError&) {
      return {404, "unknown actuator\n"};
    }
    if (get) return {200, gateway.snapshot()->actuator(color) ? "on\n" : "off\n"};
    return from_vfs(gateway.write_actuator(color, body));
  }

  if (get) return from_vfs(gateway.read(path));
  return from_vfs(gateway.write(path, body));
}

// --- HttpServer -----------------------------------------------------------

struct HttpServer::Impl {
  explicit Impl(Gateway& g) : gateway(g) {}
  Gateway& gateway;
  httplib::Server server;
  std::thread thread;
};

HttpServer::HttpServer(Gateway& gateway) : impl_(std::make_unique<Impl>(gateway)) {
  auto route = [this](const httplib::Request& req, httplib::Response& res) {
    const auto r = handle_request(impl_->gateway, req.method, req.path, req.body);
    res.status = r.status;
    res.set_content(r.body, r.content_type);
  };
  impl_->server.Get(".*", route);
  impl_->server.Put(".*", route);
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound <= 0) throw Error("cannot bind HTTP server to " + host + ":" + std::to_string(port));
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void HttpServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

// --- PollLoop -------------------------------------------------------------

PollLoop::PollLoop(Gateway& gateway, std::uint64_t wall_interval_ms)
    : gateway_(gateway), wall_interval_ms_(wall_interval_ms) {}

PollLoop::~PollLoop() { stop(); }

void PollLoop::start() {
  if (thread_.joinable()) return;
  stop_ = false;
  gateway_.set_running(true);
  thread_ = std::thread([this] {
    std::unique_lock lock(mutex_);
    while (!stop_) {
      lock.unlock();
      try {
        gateway_.poll_cycle();
      } catch (const std::exception& e) {
        std::cerr << "poll cycle failed: " << e.what() << "\n";
      }
      lock.lock();
      wake_.wait_for(lock, std::chrono::milliseconds(wall_interval_ms_), [this] { return stop_; });
    }
  });
}

void PollLoop::stop() {
  {
    std::lock_guard lock(mutex_);
    stop_ = true;
  }
  wake_.notify_all();
  if (thread_.joinable()) thread_.join();
  gateway_.set_running(false);
}

}  // namespace domo
