#pragma once

// A whole simulated installation built from a JSON house file: sensors in
// their rooms, the 1-Wire bus behind its serial bridge, and the LED
// controller whose outputs double as heater relays.

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "domo/bridge.hpp"
#include "domo/bus.hpp"
#include "domo/firmware.hpp"
#include "domo/sensor.hpp"

namespace domo {

struct SensorConfig {
  /// Either an explicit id, or a seed from which a family-0x10 id is derived.
  std::optional<RomCode> id;
  std::uint64_t seed = 0;
  ThermalParams thermal;
  Thresholds thresholds{75, 10};
  bool parasite = false;
};

struct ActuatorBinding {
  LedColor actuator = LedColor::Red;
  std::vector<std::size_t> sensors;  // indices into HouseConfig::sensors
};

struct HouseConfig {
  Topology topology;
  std::vector<SensorConfig> sensors;
  std::vector<ActuatorBinding> bindings;
  /// Where `<rom-id>.eeprom` files live; empty keeps EEPROM in memory.
  std::filesystem::path eeprom_dir;
};

/// Family-0x10 id derived deterministically from a seed.
RomCode rom_from_seed(std::uint64_t seed);

/// Parses the house schema. Relative eeprom_dir values resolve against
/// `base_dir`. Throws ConfigError on any schema violation.
HouseConfig parse_house_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
HouseConfig load_house_config(const std::filesystem::path& file);

class House {
 public:
  /// Throws TopologyError for an unacceptable network radius.
  explicit House(const HouseConfig& config);
  House(const House&) = delete;
  House& operator=(const House&) = delete;

  SimClock& clock() { return clock_; }
  Bus& bus() { return bus_; }
  Bridge& bridge() { return bridge_; }
  SerialPort& bridge_port() { return bridge_port_; }
  Firmware& firmware() { return firmware_; }
  SerialPort& firmware_port() { return firmware_port_; }
  EepromStore& eeprom() { return *eeprom_; }

  std::size_t sensor_count() const { return sensors_.size(); }
  SensorDevice& sensor(std::size_t i) { return *sensors_.at(i); }
  ThermalModel& thermal(std::size_t i) { return *thermals_.at(i); }
  std::optional<std::size_t> index_of(const RomCode& rom) const;

  const std::optional<std::string>& topology_warning() const { return topology_.warning; }
  const Topology& topology() const { return topology_.effective; }

  /// Drives heaters from the controller outputs, then integrates every room
  /// and moves the clock forward by `ms`.
  void advance(std::uint64_t ms);

 private:
  SimClock clock_;
  std::unique_ptr<EepromStore> eeprom_;
  ValidatedTopology topology_;
  Bus bus_;
  Bridge bridge_;
  BridgePort bridge_port_;
  Firmware firmware_;
  FirmwarePort firmware_port_;
  std::vector<std::unique_ptr<ThermalModel>> thermals_;
  std::vector<SensorDevice*> sensors_;
  std::vector<ActuatorBinding> bindings_;
};

}  // namespace domo
