#pragma once

// The bus-owning service: a poll loop that alone issues bus transactions,
// a cached OWFS-style device tree, and the thermostat relay.
//
// Threading: poll_cycle() runs on exactly one context. Readers (HTTP
// handlers) only ever see an immutable Snapshot swapped in atomically after
// each cycle, and hand writes to the loop through a locked command queue.

#include <array>
#include <atomic>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "domo/firmware.hpp"
#include "domo/master.hpp"
#include "domo/onewire.hpp"

namespace domo {

struct GatewayConfig {
  std::uint16_t http_port = 8888;
  /// Accepted for compatibility with the owserver command line; never bound.
  std::uint16_t control_port = 4304;
  std::uint64_t poll_interval_ms = 1000;
  int retry_limit = 3;
};

/// Throws ConfigError if the ports collide or the poll interval is shorter
/// than a temperature conversion.
void validate(const GatewayConfig& config);

struct ThermostatRule {
  RomCode sensor;
  LedColor actuator = LedColor::Red;
  double setpoint = 21.0;
  double hysteresis = 0.5;
  bool enabled = true;
};

/// Throws ConfigError when hysteresis < 0.5 C.
void validate(const ThermostatRule& rule);

/// Hysteresis relay: on below setpoint - hysteresis, off above
/// setpoint + hysteresis, otherwise the current state. A missing or stale
/// reading holds the current state.
bool thermostat_eval(const ThermostatRule& rule, std::optional<TemperatureValue> reading,
                     bool stale, bool heater_on);

struct DeviceNode {
  RomCode rom;
  std::string path;
  std::optional<TemperatureValue> temperature;
  std::optional<int> temphigh;
  std::optional<int> templow;
  std::uint64_t last_poll_ms = 0;
  bool stale = true;
  bool in_alarm = false;
};

struct Snapshot {
  std::vector<DeviceNode> devices;  // sorted by id text
  std::vector<RomCode> alarm;       // sorted by id text
  bool alarm_stale = false;
  std::array<bool, 2> actuators{};  // indexed by LedColor
  std::optional<ThermostatRule> thermostat;
  std::uint64_t clock_ms = 0;
  std::uint64_t cycles = 0;
  std::size_t pending_writes = 0;
  bool running = false;
  std::string last_error;

  const DeviceNode* find(const RomCode& rom) const;
  bool actuator(LedColor c) const { return actuators[static_cast<std::size_t>(c)]; }
};

enum class ThresholdKind { High, Low };

struct SetThreshold {
  RomCode rom;
  ThresholdKind kind = ThresholdKind::High;
  int value = 0;
};
struct SetActuator {
  LedColor color = LedColor::Red;
  bool on = false;
};
struct SetThermostat {
  ThermostatRule rule;
};
using GatewayCommand = std::variant<SetThreshold, SetActuator, SetThermostat>;

/// Result of a virtual-filesystem access, with HTTP-style status codes.
struct VfsResult {
  int status = 200;
  std::string body;
};

/// Renders a cached property and resolves writes into queued commands.
VfsResult vfs_read(const Snapshot& snap, std::string_view path);

/// Everything the poll loop drives. The gateway never owns the hardware.
struct GatewayLinks {
  BusMaster& bus;
  LedClient& leds;
  std::function<void(std::uint64_t)> advance_time;
  std::function<std::uint64_t()> now_ms;
};

class Gateway {
 public:
  Gateway(GatewayLinks links, GatewayConfig config);

  /// Discovers the devices on the bus and reads the actuator states.
  /// Called implicitly by the first poll_cycle().
  void start();

  /// One full cycle: apply queued writes, convert and read every sensor,
  /// refresh the alarm set, run the thermostat, advance simulated time by
  /// the poll interval, publish a new snapshot.
  void poll_cycle();

  std::shared_ptr<const Snapshot> snapshot() const;

  VfsResult read(std::string_view path) const { return vfs_read(*snapshot(), path); }

  /// Validates and queues a property write (temphigh/templow only).
  VfsResult write(std::string_view path, std::string_view value);
  VfsResult write_actuator(LedColor color, std::string_view value);
  VfsResult write_thermostat(const ThermostatRule& rule);

  /// Writes queued but not yet applied by a cycle.
  std::size_t pending_writes() const;

  /// Queued writes beyond this are refused until a cycle drains the queue.
  static constexpr std::size_t kMaxPendingWrites = 256;

  /// Whether writes are accepted (a poll loop, or a manual driver, is live).
  bool running() const { return running_.load(); }
  void set_running(bool on);

  const GatewayConfig& config() const { return config_; }

 private:
  /// Empty on success, otherwise the refusal to return to the client.
  std::optional<VfsResult> enqueue(GatewayCommand cmd);
  void apply(const GatewayCommand& cmd);
  void set_actuator(LedColor color, bool on);
  bool read_node(DeviceNode& node);
  void publish();

  GatewayLinks links_;
  GatewayConfig config_;
  bool started_ = false;

  // Owned by the poll context.
  std::vector<DeviceNode> nodes_;
  std::vector<RomCode> alarm_;
  bool alarm_stale_ = false;
  std::array<bool, 2> actuators_{};
  std::optional<ThermostatRule> thermostat_;
  std::uint64_t cycles_ = 0;
  std::string last_error_;
  std::mutex cycle_mutex_;

  mutable std::mutex queue_mutex_;
  std::deque<GatewayCommand> queue_;

  std::shared_ptr<const Snapshot> snapshot_;
  std::atomic<bool> running_{false};
};

}  // namespace domo
