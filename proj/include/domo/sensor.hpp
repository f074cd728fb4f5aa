#pragma once

// Emulated DS18S20 thermometer and the room it sits in.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "domo/bus.hpp"
#include "domo/onewire.hpp"

namespace domo {

/// Simulated time in milliseconds. Only advanced between bus transactions.
class SimClock {
 public:
  std::uint64_t now_ms() const { return now_ms_; }
  void advance(std::uint64_t ms) { now_ms_ += ms; }

 private:
  std::uint64_t now_ms_ = 0;
};

struct ThermalParams {
  double t_room = 20.0;
  double t_ambient = 20.0;
  double k_loss = 0.01;    // 1/s
  double q_heater = 0.0;   // C/s while the heater runs
  double dt = 0.1;         // seconds per step
};

/// Lumped single-room model integrated with explicit Euler:
///   t_room += dt * (-k_loss * (t_room - t_ambient) + heater_on * q_heater)
class ThermalModel {
 public:
  /// Throws ConfigError unless k_loss > 0, dt > 0 and dt * k_loss < 1.
  explicit ThermalModel(const ThermalParams& params);

  void step();
  /// Integrates over `ms` of simulated time, carrying any partial step.
  void advance_ms(std::uint64_t ms);

  double t_room() const { return params_.t_room; }
  double t_ambient() const { return params_.t_ambient; }
  void set_t_room(double t) { params_.t_room = t; }
  void set_t_ambient(double t) { params_.t_ambient = t; }
  bool heater_on() const { return heater_on_; }
  void set_heater(bool on) { heater_on_ = on; }
  const ThermalParams& params() const { return params_; }

  /// Fixed point with the heater held on.
  double heated_equilibrium() const { return params_.t_ambient + params_.q_heater / params_.k_loss; }

 private:
  ThermalParams params_;
  bool heater_on_ = false;
  double carry_s_ = 0.0;
};

/// Nearest half degree, ties away from zero, clamped to the sensor range.
TemperatureValue quantize_temperature(double celsius);

struct Thresholds {
  std::int8_t th = 0;
  std::int8_t tl = 0;
  friend bool operator==(const Thresholds&, const Thresholds&) = default;
};

/// Non-volatile TH/TL storage keyed by ROM id.
class EepromStore {
 public:
  virtual ~EepromStore() = default;
  virtual std::optional<Thresholds> load(const RomCode& rom) const = 0;
  virtual void save(const RomCode& rom, Thresholds values) = 0;
};

class MemoryEepromStore final : public EepromStore {
 public:
  std::optional<Thresholds> load(const RomCode& rom) const override;
  void save(const RomCode& rom, Thresholds values) override;

 private:
  std::map<RomCode, Thresholds> cells_;
};

/// One `<rom-id>.eeprom` file per device holding "TH=<int>" and "TL=<int>".
class DirectoryEepromStore final : public EepromStore {
 public:
  explicit DirectoryEepromStore(std::filesystem::path dir);
  std::optional<Thresholds> load(const RomCode& rom) const override;
  void save(const RomCode& rom, Thresholds values) override;
  std::filesystem::path path_for(const RomCode& rom) const;

 private:
  std::filesystem::path dir_;
};

namespace sensor_cmd {
inline constexpr Byte kConvertT = 0x44;
inline constexpr Byte kReadScratchpad = 0xBE;
inline constexpr Byte kWriteScratchpad = 0x4E;
inline constexpr Byte kCopyScratchpad = 0x48;
inline constexpr Byte kRecallEeprom = 0xB8;
inline constexpr Byte kReadPowerSupply = 0xB4;
}  // namespace sensor_cmd

struct SensorOptions {
  Thresholds defaults{};         // used when the EEPROM holds nothing yet
  bool parasite_powered = false;
};

class SensorDevice final : public RomLayerDevice {
 public:
  static constexpr std::uint64_t kConversionMs = 750;
  /// Register content before the first conversion.
  static constexpr int kPowerOnHalfDegrees = 170;

  /// Power-up recalls TH/TL from `eeprom` (falling back to the defaults).
  SensorDevice(RomCode rom, const SimClock& clock, std::function<double()> temperature_source,
               EepromStore& eeprom, SensorOptions options = {});

  bool alarm_flag() const override;

  /// Scratchpad as it would be read now (a finished conversion is applied).
  const Scratchpad& scratchpad() const;
  std::optional<TemperatureValue> last_conversion() const;
  bool parasite_powered() const { return parasite_; }
  bool converting() const;

 protected:
  void function_reset() override;
  bool function_drive() override;
  void function_observe(bool line) override;

 private:
  enum class Phase { Command, Transmit, ReceiveThresholds, BusyPoll, PowerReport, Ignore };

  void settle() const;
  void start_command(Byte cmd);

  const SimClock& clock_;
  std::function<double()> source_;
  EepromStore& eeprom_;
  bool parasite_;

  mutable Scratchpad pad_;
  mutable bool alarm_ = false;
  mutable std::optional<TemperatureValue> last_;
  mutable std::optional<TemperatureValue> pending_;
  std::uint64_t busy_until_ = 0;

  Phase phase_ = Phase::Command;
  Byte rx_byte_ = 0;
  int rx_bits_ = 0;
  std::vector<Byte> rx_data_;
  std::vector<bool> tx_bits_;
  std::size_t tx_pos_ = 0;
};

}  // namespace domo
