#pragma once

// Shared test helpers: independent oracles and population builders. Nothing
// in here calls the code paths it is used to check.

#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <random>
#include <set>
#include <span>
#include <vector>

#include "domo/bus.hpp"
#include "domo/master.hpp"
#include "domo/onewire.hpp"
#include "domo/sensor.hpp"

namespace domo::test {

/// CRC8 by literal polynomial division: an 8-stage shift register with
/// feedback taps at x^4 and x^5 (x^8 + x^5 + x^4 + 1), fed LSB-first.
inline Byte crc8_oracle(std::span<const Byte> data) {
  std::array<int, 8> stage{};  // stage[i] holds the x^i coefficient
  for (Byte b : data) {
    for (int i = 0; i < 8; ++i) {
      const int in = (b >> i) & 1;
      const int feedback = stage[7] ^ in;
      for (int s = 7; s > 0; --s) stage[s] = stage[s - 1];
      stage[0] = feedback;
      stage[4] ^= feedback;
      stage[5] ^= feedback;
    }
  }
  Byte out = 0;
  for (int i = 0; i < 8; ++i) out = static_cast<Byte>(out | stage[7 - i] << i);
  return out;
}

/// Nearest half degree, ties away from zero; written from the rule, not the
/// implementation.
inline int quantize_oracle(double celsius) {
  const double scaled = celsius * 2.0;
  const double magnitude = std::floor(std::fabs(scaled) + 0.5);
  int halves = static_cast<int>(scaled < 0 ? -magnitude : magnitude);
  if (halves < -110) halves = -110;
  if (halves > 250) halves = 250;
  return halves;
}

inline bool alarm_oracle(int half_degrees, int th, int tl) {
  const int whole = static_cast<int>(std::floor(half_degrees / 2.0));
  return whole > th || whole < tl;
}

inline RomCode random_rom(std::mt19937_64& rng) {
  std::array<Byte, 6> serial{};
  for (auto& b : serial) b = static_cast<Byte>(rng());
  return RomCode::make(RomCode::kSensorFamily, serial);
}

inline std::vector<RomCode> unique_roms(std::mt19937_64& rng, std::size_t n) {
  std::set<RomCode> seen;
  std::vector<RomCode> out;
  while (out.size() < n) {
    auto r = random_rom(rng);
    if (seen.insert(r).second) out.push_back(r);
  }
  return out;
}

/// A bare bus with sensors at fixed temperatures sharing one clock/EEPROM.
struct SensorBench {
  explicit SensorBench(const Topology& topology = {}) : bus(topology) {}

  SensorDevice& add(const RomCode& rom, double celsius, Thresholds thresholds = {75, 10},
                    bool parasite = false) {
    temps.push_back(std::make_unique<double>(celsius));
    double* t = temps.back().get();
    auto& dev = bus.emplace<SensorDevice>(rom, clock, [t] { return *t; }, eeprom,
                                          SensorOptions{thresholds, parasite});
    sensors.push_back(&dev);
    return dev;
  }

  void set_temperature(std::size_t i, double c) { *temps.at(i) = c; }

  SimClock clock;
  MemoryEepromStore eeprom;
  Bus bus;
  std::vector<std::unique_ptr<double>> temps;
  std::vector<SensorDevice*> sensors;
};

/// Scripted slave for bus-level tests: presence on reset, then streams a
/// fixed output pattern regardless of what the master writes.
class PatternDevice final : public SlaveDevice {
 public:
  PatternDevice(RomCode rom, std::vector<bool> pattern) : rom_(rom), pattern_(std::move(pattern)) {}
  const RomCode& rom() const override { return rom_; }
  bool on_reset() override {
    pos_ = 0;
    return true;
  }
  bool read_bit_output() override { return pos_ < pattern_.size() ? pattern_[pos_] : true; }
  void on_master_bit(bool) override { ++pos_; }
  bool selected() const override { return true; }

 private:
  RomCode rom_;
  std::vector<bool> pattern_;
  std::size_t pos_ = 0;
};

inline std::vector<bool> byte_bits(Byte b) {
  std::vector<bool> out;
  for (int i = 0; i < 8; ++i) out.push_back(((b >> i) & 1U) != 0);
  return out;
}

inline std::size_t presence_resets(const Transcript& t) {
  std::size_t n = 0;
  for (const auto& op : t.ops()) n += op.kind == BusOp::Kind::Reset && op.value == 1;
  return n;
}

}  // namespace domo::test

namespace domo::test {

/// Random master scripts for differential runs.
struct ScriptOp {
  enum class Kind { Reset, Skip, Match, Convert, ReadScratchpad, Search, AlarmSearch, Advance };
  Kind kind = Kind::Reset;
  std::size_t target = 0;
};

inline std::vector<ScriptOp> random_script(std::mt19937_64& rng, std::size_t devices, std::size_t length) {
  std::vector<ScriptOp> out;
  for (std::size_t i = 0; i < length; ++i) {
    ScriptOp op;
    op.kind = static_cast<ScriptOp::Kind>(rng() % 8);
    op.target = devices == 0 ? 0 : rng() % devices;
    out.push_back(op);
  }
  return out;
}

inline void run_script(BusMaster& m, SensorBench& bench, const std::vector<RomCode>& roms,
                       const std::vector<ScriptOp>& script) {
  using K = ScriptOp::Kind;
  for (const auto& op : script) {
    switch (op.kind) {
      case K::Reset:
        m.reset();
        break;
      case K::Skip:
        m.reset();
        rom_skip(m);
        break;
      case K::Match:
        if (!roms.empty()) select(m, roms[op.target]);
        break;
      case K::Convert:
        m.write_byte(0x44);
        break;
      case K::ReadScratchpad:
        m.write_byte(0xBE);
        m.read_bytes(9);
        break;
      case K::Search:
        search(m, false);
        break;
      case K::AlarmSearch:
        search(m, true);
        break;
      case K::Advance:
        bench.clock.advance(800);
        break;
    }
  }
}

}  // namespace domo::test
