#include "domo/gateway.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

#include "domo/error.hpp"
#include "domo/sensor.hpp"

namespace domo {

namespace {

constexpr std::string_view kRoot = "/1-wire";

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

struct ParsedPath {
  enum class Kind { Root, Alarm, Device, Property, Invalid } kind = Kind::Invalid;
  std::optional<RomCode> rom;
  std::string property;
};

ParsedPath parse_path(std::string_view path) {
  ParsedPath out;
  if (path.substr(0, kRoot.size()) != kRoot) return out;
  path.remove_prefix(kRoot.size());
  if (path.empty() || path == "/") {
    out.kind = ParsedPath::Kind::Root;
    return out;
  }
  if (path.front() != '/') return out;
  path.remove_prefix(1);
  if (path == "alarm" || path == "alarm/") {
    out.kind = ParsedPath::Kind::Alarm;
    return out;
  }
  const auto slash = path.find('/');
  const auto id = path.substr(0, slash);
  try {
    out.rom = parse_rom_text(id);
  } catch (const Error&) {
    return out;
  }
  if (slash == std::string_view::npos || slash + 1 == path.size()) {
    out.kind = ParsedPath::Kind::Device;
    return out;
  }
  const auto prop = path.substr(slash + 1);
  if (prop.find('/') != std::string_view::npos) return out;
  out.kind = ParsedPath::Kind::Property;
  out.property = std::string(prop);
  return out;
}

std::string id_lines(const std::vector<RomCode>& roms) {
  std::string out;
  for (const auto& r : roms) out += r.to_string() + "\n";
  return out;
}

bool by_text(const RomCode& a, const RomCode& b) { return a.to_string() < b.to_string(); }

VfsResult not_found(std::string_view path) { return {404, "not found: " + std::string(path) + "\n"}; }

}  // namespace

void validate(const GatewayConfig& config) {
  if (config.http_port != 0 && config.http_port == config.control_port) {
    throw ConfigError("http and control ports must differ");
  }
  if (config.poll_interval_ms < SensorDevice::kConversionMs) {
    throw ConfigError("poll interval must be at least the 750 ms conversion time");
  }
  if (config.retry_limit < 0) throw ConfigError("retry limit must be non-negative");
}

void validate(const ThermostatRule& rule) {
  if (!(rule.hysteresis >= 0.5)) throw ConfigError("thermostat hysteresis must be at least 0.5 C");
  if (!(rule.setpoint >= -55.0 && rule.setpoint <= 125.0)) {
    throw ConfigError("thermostat setpoint outside the sensor range");
  }
}

bool thermostat_eval(const ThermostatRule& rule, std::optional<TemperatureValue> reading,
                     bool stale, bool heater_on) {
  if (!rule.enabled || stale || !reading) return heater_on;
  const double t = reading->celsius();
  if (t < rule.setpoint - rule.hysteresis) return true;
  if (t > rule.setpoint + rule.hysteresis) return false;
  return heater_on;
}

const DeviceNode* Snapshot::find(const RomCode& rom) const {
  for (const auto& d : devices) {
    if (d.rom == rom) return &d;
  }
  return nullptr;
}

VfsResult vfs_read(const Snapshot& snap, std::string_view path) {
  const auto parsed = parse_path(path);
  switch (parsed.kind) {
    case ParsedPath::Kind::Invalid:
      return not_found(path);
    case ParsedPath::Kind::Root: {
      std::vector<RomCode> ids;
      for (const auto& d : snap.devices) ids.push_back(d.rom);
      return {200, id_lines(ids)};
    }
    case ParsedPath::Kind::Alarm:
      return {200, id_lines(snap.alarm)};
    case ParsedPath::Kind::Device:
      if (!snap.find(*parsed.rom)) return not_found(path);
      return {200, "temperature\ntemphigh\ntemplow\n"};
    case ParsedPath::Kind::Property:
      break;
  }
  const DeviceNode* node = snap.find(*parsed.rom);
  if (!node) return not_found(path);
  if (parsed.property == "temperature") {
    if (!node->temperature) return {503, "no reading yet\n"};
    return {200, node->temperature->to_string() + "\n"};
  }
  if (parsed.property == "temphigh" || parsed.property == "templow") {
    const auto& v = parsed.property == "temphigh" ? node->temphigh : node->templow;
    if (!v) return {503, "no reading yet\n"};
    return {200, std::to_string(*v) + "\n"};
  }
  return not_found(path);
}

// --- Gateway --------------------------------------------------------------

Gateway::Gateway(GatewayLinks links, GatewayConfig config)
    : links_(std::move(links)), config_(config) {
  validate(config_);
  publish();
}

std::shared_ptr<const Snapshot> Gateway::snapshot() const { return std::atomic_load(&snapshot_); }

void Gateway::set_running(bool on) {
  running_.store(on);
  std::lock_guard lock(cycle_mutex_);
  publish();
}

std::optional<VfsResult> Gateway::enqueue(GatewayCommand cmd) {
  if (!running()) return VfsResult{503, "poll loop not running\n"};
  std::lock_guard lock(queue_mutex_);
  if (queue_.size() >= kMaxPendingWrites) return VfsResult{503, "write queue full\n"};
  queue_.push_back(std::move(cmd));
  return std::nullopt;
}

std::size_t Gateway::pending_writes() const {
  std::lock_guard lock(queue_mutex_);
  return queue_.size();
}

VfsResult Gateway::write(std::string_view path, std::string_view value) {
  const auto parsed = parse_path(path);
  const auto snap = snapshot();
  if (parsed.kind == ParsedPath::Kind::Invalid) return not_found(path);
  if (parsed.kind != ParsedPath::Kind::Property) return {405, "not writable\n"};
  if (!snap->find(*parsed.rom)) return not_found(path);
  if (parsed.property == "temperature") return {405, "temperature is read-only\n"};
  if (parsed.property != "temphigh" && parsed.property != "templow") return not_found(path);

  const auto text = trim(value);
  int v = 0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || end != text.data() + text.size()) {
    return {400, "expected an integer temperature\n"};
  }
  if (v < -55 || v > 125) return {400, "threshold outside [-55, 125]\n"};
  const auto kind = parsed.property == "temphigh" ? ThresholdKind::High : ThresholdKind::Low;
  if (auto refused = enqueue(SetThreshold{*parsed.rom, kind, v})) return *refused;
  return {202, "queued\n"};
}

VfsResult Gateway::write_actuator(LedColor color, std::string_view value) {
  const auto on = parse_on_off(value);
  if (!on) return {400, "expected on or off\n"};
  if (auto refused = enqueue(SetActuator{color, *on})) return *refused;
  return {202, "queued\n"};
}

VfsResult Gateway::write_thermostat(const ThermostatRule& rule) {
  try {
    validate(rule);
  } catch (const ConfigError& e) {
    return {400, std::string(e.what()) + "\n"};
  }
  if (!snapshot()->find(rule.sensor)) return {404, "unknown sensor " + rule.sensor.to_string() + "\n"};
  if (auto refused = enqueue(SetThermostat{rule})) return *refused;
  return {202, "queued\n"};
}

void Gateway::start() {
  std::lock_guard lock(cycle_mutex_);
  if (started_) return;
  auto found = search(links_.bus, false, config_.retry_limit).roms;
  std::sort(found.begin(), found.end(), by_text);
  nodes_.clear();
  for (const auto& rom : found) {
    DeviceNode node;
    node.rom = rom;
    node.path = std::string(kRoot) + "/" + rom.to_string();
    nodes_.push_back(node);
  }
  for (auto color : {LedColor::Red, LedColor::Green}) {
    try {
      actuators_[static_cast<std::size_t>(color)] = links_.leds.query_led(color);
    } catch (const LinkError& e) {
      last_error_ = e.what();
    }
  }
  started_ = true;
  publish();
}

void Gateway::set_actuator(LedColor color, bool on) {
  try {
    links_.leds.set_led(color, on);
    actuators_[static_cast<std::size_t>(color)] = on;
  } catch (const LinkError& e) {
    last_error_ = e.what();
  }
}

void Gateway::apply(const GatewayCommand& cmd) {
  if (const auto* t = std::get_if<SetThreshold>(&cmd)) {
    auto it = std::find_if(nodes_.begin(), nodes_.end(), [&](const DeviceNode& n) { return n.rom == t->rom; });
    if (it == nodes_.end()) return;
    if (!it->temphigh || !it->templow) read_node(*it);
    if (!it->temphigh || !it->templow) {
      last_error_ = "cannot write thresholds of unreachable " + t->rom.to_string();
      return;
    }
    const int th = t->kind == ThresholdKind::High ? t->value : *it->temphigh;
    const int tl = t->kind == ThresholdKind::Low ? t->value : *it->templow;
    for (int attempt = 0; attempt <= config_.retry_limit; ++attempt) {
      if (!select(links_.bus, t->rom)) continue;
      const std::array<Byte, 3> write{sensor_cmd::kWriteScratchpad, static_cast<Byte>(th),
                                      static_cast<Byte>(tl)};
      links_.bus.write_bytes(write);
      if (!select(links_.bus, t->rom)) continue;
      links_.bus.write_byte(sensor_cmd::kCopyScratchpad);
      it->temphigh = th;
      it->templow = tl;
      return;
    }
    last_error_ = "threshold write to " + t->rom.to_string() + " failed";
  } else if (const auto* a = std::get_if<SetActuator>(&cmd)) {
    set_actuator(a->color, a->on);
  } else if (const auto* r = std::get_if<SetThermostat>(&cmd)) {
    thermostat_ = r->rule;
  }
}

bool Gateway::read_node(DeviceNode& node) {
  for (int attempt = 0; attempt <= config_.retry_limit; ++attempt) {
    if (!select(links_.bus, node.rom)) continue;
    links_.bus.write_byte(sensor_cmd::kReadScratchpad);
    const auto bytes = links_.bus.read_bytes(Scratchpad::kSize);
    try {
      const auto pad = parse_scratchpad(std::span<const Byte, Scratchpad::kSize>(bytes.data(), bytes.size()));
      node.temperature = pad.temperature();
      node.temphigh = pad.th;
      node.templow = pad.tl;
      node.stale = false;
      node.last_poll_ms = links_.now_ms();
      return true;
    } catch (const CrcError&) {
    } catch (const RangeError&) {
    }
  }
  node.stale = true;
  return false;
}

void Gateway::poll_cycle() {
  if (!started_) start();
  std::lock_guard lock(cycle_mutex_);

  std::deque<GatewayCommand> commands;
  {
    std::lock_guard qlock(queue_mutex_);
    commands.swap(queue_);
  }
  for (const auto& cmd : commands) apply(cmd);

  for (auto& node : nodes_) {
    for (int attempt = 0; attempt <= config_.retry_limit; ++attempt) {
      if (select(links_.bus, node.rom)) {
        links_.bus.write_byte(sensor_cmd::kConvertT);
        break;
      }
    }
  }
  links_.advance_time(SensorDevice::kConversionMs);

  for (auto& node : nodes_) read_node(node);

  try {
    alarm_ = search(links_.bus, true, config_.retry_limit).roms;
    std::sort(alarm_.begin(), alarm_.end(), by_text);
    alarm_stale_ = false;
  } catch (const SearchError& e) {
    alarm_stale_ = true;
    last_error_ = e.what();
  }
  for (auto& node : nodes_) {
    node.in_alarm = std::find(alarm_.begin(), alarm_.end(), node.rom) != alarm_.end();
  }

  if (thermostat_ && thermostat_->enabled) {
    auto it = std::find_if(nodes_.begin(), nodes_.end(),
                           [&](const DeviceNode& n) { return n.rom == thermostat_->sensor; });
    if (it != nodes_.end()) {
      const bool current = actuators_[static_cast<std::size_t>(thermostat_->actuator)];
      const bool desired = thermostat_eval(*thermostat_, it->temperature, it->stale, current);
      if (desired != current) set_actuator(thermostat_->actuator, desired);
    }
  }

  links_.advance_time(config_.poll_interval_ms - SensorDevice::kConversionMs);
  ++cycles_;
  publish();
}

void Gateway::publish() {
  auto snap = std::make_shared<Snapshot>();
  snap->devices = nodes_;
  snap->alarm = alarm_;
  snap->alarm_stale = alarm_stale_;
  snap->actuators = actuators_;
  snap->thermostat = thermostat_;
  snap->clock_ms = links_.now_ms();
  snap->cycles = cycles_;
  snap->running = running_.load();
  snap->last_error = last_error_;
  {
    std::lock_guard qlock(queue_mutex_);
    snap->pending_writes = queue_.size();
  }
  std::atomic_store(&snapshot_, std::shared_ptr<const Snapshot>(std::move(snap)));
}

}  // namespace domo
