#include "domo/sensor.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "domo/error.hpp"

namespace domo {

ThermalModel::ThermalModel(const ThermalParams& params) : params_(params) {
  if (!(params.k_loss > 0.0)) throw ConfigError("k_loss must be positive");
  if (!(params.dt > 0.0)) throw ConfigError("dt must be positive");
  if (!(params.dt * params.k_loss < 1.0)) throw ConfigError("dt * k_loss must be below 1");
  if (!std::isfinite(params.t_room) || !std::isfinite(params.t_ambient) ||
      !std::isfinite(params.q_heater)) {
    throw ConfigError("thermal parameters must be finite");
  }
}

void ThermalModel::step() {
  const double heat = heater_on_ ? params_.q_heater : 0.0;
  params_.t_room += params_.dt * (-params_.k_loss * (params_.t_room - params_.t_ambient) + heat);
}

void ThermalModel::advance_ms(std::uint64_t ms) {
  carry_s_ += static_cast<double>(ms) / 1000.0;
  // Tolerance absorbs binary rounding of dt so whole multiples step exactly.
  while (carry_s_ + 1e-9 >= params_.dt) {
    step();
    carry_s_ -= params_.dt;
  }
}

TemperatureValue quantize_temperature(double celsius) {
  double halves = std::round(celsius * 2.0);
  halves = std::clamp(halves, static_cast<double>(TemperatureValue::kMinHalfDegrees),
                      static_cast<double>(TemperatureValue::kMaxHalfDegrees));
  return TemperatureValue::from_half_degrees(static_cast<int>(halves));
}

// --- EEPROM stores --------------------------------------------------------

std::optional<Thresholds> MemoryEepromStore::load(const RomCode& rom) const {
  auto it = cells_.find(rom);
  if (it == cells_.end()) return std::nullopt;
  return it->second;
}

void MemoryEepromStore::save(const RomCode& rom, Thresholds values) { cells_[rom] = values; }

DirectoryEepromStore::DirectoryEepromStore(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::filesystem::path DirectoryEepromStore::path_for(const RomCode& rom) const {
  return dir_ / (rom.to_string() + ".eeprom");
}

std::optional<Thresholds> DirectoryEepromStore::load(const RomCode& rom) const {
  std::ifstream in(path_for(rom));
  if (!in) return std::nullopt;
  std::optional<int> th;
  std::optional<int> tl;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const auto key = line.substr(0, eq);
    int value = 0;
    try {
      value = std::stoi(line.substr(eq + 1));
    } catch (const std::exception&) {
      throw FormatError("bad EEPROM line in " + path_for(rom).string() + ": " + line);
    }
    if (value < -128 || value > 127) throw FormatError("EEPROM value out of range: " + line);
    if (key == "TH") th = value;
    if (key == "TL") tl = value;
  }
  if (!th || !tl) throw FormatError("EEPROM file incomplete: " + path_for(rom).string());
  return Thresholds{static_cast<std::int8_t>(*th), static_cast<std::int8_t>(*tl)};
}

void DirectoryEepromStore::save(const RomCode& rom, Thresholds values) {
  const auto target = path_for(rom);
  const auto tmp = std::filesystem::path(target.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << "TH=" << static_cast<int>(values.th) << "\n"
        << "TL=" << static_cast<int>(values.tl) << "\n";
    if (!out) throw Error("cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, target);
}

// --- SensorDevice ---------------------------------------------------------

SensorDevice::SensorDevice(RomCode rom, const SimClock& clock,
                           std::function<double()> temperature_source, EepromStore& eeprom,
                           SensorOptions options)
    : RomLayerDevice(rom),
      clock_(clock),
      source_(std::move(temperature_source)),
      eeprom_(eeprom),
      parasite_(options.parasite_powered) {
  const Thresholds stored = eeprom_.load(rom).value_or(options.defaults);
  pad_ = build_scratchpad(TemperatureValue::from_half_degrees(kPowerOnHalfDegrees), stored.th,
                          stored.tl);
}

void SensorDevice::settle() const {
  if (!pending_ || clock_.now_ms() < busy_until_) return;
  const auto reg = encode_temperature(*pending_);
  pad_.temp_lsb = reg.lsb;
  pad_.temp_msb = reg.msb;
  pad_.seal();
  const int whole = pending_->whole_degrees();
  alarm_ = whole > pad_.th || whole < pad_.tl;
  last_ = pending_;
  pending_.reset();
}

bool SensorDevice::alarm_flag() const {
  settle();
  return alarm_;
}

const Scratchpad& SensorDevice::scratchpad() const {
  settle();
  return pad_;
}

std::optional<TemperatureValue> SensorDevice::last_conversion() const {
  settle();
  return last_;
}

bool SensorDevice::converting() const {
  settle();
  return pending_.has_value();
}

void SensorDevice::function_reset() {
  phase_ = Phase::Command;
  rx_byte_ = 0;
  rx_bits_ = 0;
  rx_data_.clear();
  tx_bits_.clear();
  tx_pos_ = 0;
}

bool SensorDevice::function_drive() {
  switch (phase_) {
    case Phase::Transmit:
      return tx_pos_ < tx_bits_.size() ? tx_bits_[tx_pos_] : true;
    case Phase::BusyPoll:
      return !converting();
    case Phase::PowerReport:
      return !parasite_;
    case Phase::Command:
    case Phase::ReceiveThresholds:
    case Phase::Ignore:
      return true;
  }
  return true;
}

void SensorDevice::function_observe(bool line) {
  switch (phase_) {
    case Phase::Command:
    case Phase::ReceiveThresholds: {
      rx_byte_ = static_cast<Byte>(rx_byte_ | (line ? 1U << rx_bits_ : 0U));
      if (++rx_bits_ < 8) return;
      const Byte b = rx_byte_;
      rx_byte_ = 0;
      rx_bits_ = 0;
      if (phase_ == Phase::Command) {
        start_command(b);
        return;
      }
      rx_data_.push_back(b);
      if (rx_data_.size() == 2) {
        settle();
        pad_.th = static_cast<std::int8_t>(rx_data_[0]);
        pad_.tl = static_cast<std::int8_t>(rx_data_[1]);
        pad_.seal();
        phase_ = Phase::Ignore;
      }
      return;
    }
    case Phase::Transmit:
      if (tx_pos_ < tx_bits_.size()) ++tx_pos_;
      return;
    case Phase::BusyPoll:
    case Phase::PowerReport:
    case Phase::Ignore:
      return;
  }
}

void SensorDevice::start_command(Byte cmd) {
  settle();
  switch (cmd) {
    case sensor_cmd::kConvertT:
      pending_ = quantize_temperature(source_());
      busy_until_ = clock_.now_ms() + kConversionMs;
      phase_ = Phase::BusyPoll;
      return;
    case sensor_cmd::kReadScratchpad: {
      tx_bits_.clear();
      tx_pos_ = 0;
      for (Byte b : pad_.to_bytes()) {
        for (int i = 0; i < 8; ++i) tx_bits_.push_back(((b >> i) & 1U) != 0);
      }
      phase_ = Phase::Transmit;
      return;
    }
    case sensor_cmd::kWriteScratchpad:
      rx_data_.clear();
      phase_ = Phase::ReceiveThresholds;
      return;
    case sensor_cmd::kCopyScratchpad:
      eeprom_.save(rom(), Thresholds{pad_.th, pad_.tl});
      phase_ = Phase::Ignore;
      return;
    case sensor_cmd::kRecallEeprom:
      if (auto stored = eeprom_.load(rom())) {
        pad_.th = stored->th;
        pad_.tl = stored->tl;
        pad_.seal();
      }
      phase_ = Phase::Ignore;
      return;
    case sensor_cmd::kReadPowerSupply:
      phase_ = Phase::PowerReport;
      return;
    default:
      phase_ = Phase::Ignore;
      return;
  }
}

}  // namespace domo
