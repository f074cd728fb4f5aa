#pragma once

// Logical-slot 1-Wire bus: one master port, N slaves, wired-AND line,
// seeded read noise, and a transcript of every master operation.

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "domo/onewire.hpp"

namespace domo {

/// ROM-layer command bytes.
namespace rom_cmd {
inline constexpr Byte kReadRom = 0x33;
inline constexpr Byte kMatchRom = 0x55;
inline constexpr Byte kSkipRom = 0xCC;
inline constexpr Byte kSearchRom = 0xF0;
inline constexpr Byte kAlarmSearch = 0xEC;
}  // namespace rom_cmd

struct BusOp {
  enum class Kind { Reset, WriteBit, ReadBit, WriteByte, ReadByte };
  std::uint64_t seq = 0;
  Kind kind = Kind::Reset;
  /// Presence for Reset; for slot ops the line level the master observed.
  Byte value = 0;

  friend bool operator==(const BusOp&, const BusOp&) = default;
};

/// One entry of a bit-normalized transcript: either a reset with its
/// presence result, or a single slot with the line level the master saw.
struct NormalizedSlot {
  bool is_reset = false;
  bool level = false;
  friend bool operator==(const NormalizedSlot&, const NormalizedSlot&) = default;
};

class Transcript {
 public:
  void append(BusOp::Kind kind, Byte value);
  const std::vector<BusOp>& ops() const { return ops_; }
  std::size_t size() const { return ops_.size(); }
  void clear() { ops_.clear(); }

  /// Expands byte ops into eight LSB-first slots. Write and read slots
  /// both normalize to the line level, so a byte written by one master
  /// compares equal to the same byte shifted through a bridge.
  std::vector<NormalizedSlot> normalized() const;

  /// One op per line: "seq kind value", kind in {RST, WBIT, RBIT, WBYTE, RBYTE};
  /// bytes are rendered as two uppercase hex digits.
  std::string to_text() const;

 private:
  std::vector<BusOp> ops_;
  std::uint64_t next_seq_ = 0;
};

struct Topology {
  double radius_m = 0.0;
  double bit_error_rate = 0.0;
  std::uint64_t rng_seed = 0;
};

struct ValidatedTopology {
  Topology effective;
  std::optional<std::string> warning;
};

/// Accepts radius <= 200 m as given; 200 < radius <= 500 m scales the
/// bit error rate by radius/200 and warns; anything larger throws TopologyError.
ValidatedTopology validate_topology(const Topology& topology);

/// Behaviour every attached device implements. A slot is resolved in two
/// steps: every device reports the level it drives (1 = released), then
/// every device observes the resolved line level.
class SlaveDevice {
 public:
  virtual ~SlaveDevice() = default;

  virtual const RomCode& rom() const = 0;

  /// Returns the presence pulse; all devices fall back to ROM-command wait.
  virtual bool on_reset() = 0;

  virtual bool read_bit_output() = 0;
  virtual void on_master_bit(bool line) = 0;

  virtual bool alarm_flag() const { return false; }
  virtual bool selected() const = 0;
};

/// Implements the ROM command layer (read, match, skip, search, alarm
/// search) for any device; derived classes provide the function layer,
/// which is entered once the device is selected.
class RomLayerDevice : public SlaveDevice {
 public:
  explicit RomLayerDevice(RomCode rom) : rom_(rom) {}

  const RomCode& rom() const override { return rom_; }
  bool on_reset() final;
  bool read_bit_output() final;
  void on_master_bit(bool line) final;
  bool selected() const override { return state_ == State::Function; }

 protected:
  virtual void function_reset() {}
  virtual bool function_drive() { return true; }
  virtual void function_observe(bool /*line*/) {}

 private:
  enum class State { WaitRomCommand, ReadRom, MatchRom, Search, Function, Deselected };

  void dispatch_rom_command(Byte cmd);

  RomCode rom_;
  State state_ = State::Deselected;
  Byte rx_byte_ = 0;
  int rx_bits_ = 0;
  int bit_index_ = 0;
  int search_phase_ = 0;
};

class Bus {
 public:
  explicit Bus(const Topology& topology = {});

  /// Throws ConfigError on a duplicate ROM. The device participates from
  /// the next reset.
  SlaveDevice& attach(std::unique_ptr<SlaveDevice> device);

  template <typename Device, typename... Args>
  Device& emplace(Args&&... args) {
    return static_cast<Device&>(attach(std::make_unique<Device>(std::forward<Args>(args)...)));
  }

  std::size_t device_count() const { return devices_.size(); }
  SlaveDevice& device(std::size_t index) { return *devices_.at(index); }
  const SlaveDevice& device(std::size_t index) const { return *devices_.at(index); }
  SlaveDevice* find(const RomCode& rom);

  bool reset();
  void write_bit(bool bit);
  bool read_bit();
  void write_byte(Byte value);
  Byte read_byte();

  /// Write-and-sample slot as issued by a line driver. Logged as WriteBit(0)
  /// when driving low and as ReadBit(sample) when releasing.
  bool touch_bit(bool bit);
  Byte touch_byte(Byte value);

  /// Post-validation bit error rate currently applied to master samples.
  double bit_error_rate() const { return bit_error_rate_; }
  void set_bit_error_rate(double ber) { bit_error_rate_ = ber; }

  const Transcript& transcript() const { return transcript_; }
  Transcript& transcript() { return transcript_; }
  void set_recording(bool on) { recording_ = on; }

  /// Total master operations issued, counted even when recording is off.
  std::uint64_t op_count() const { return op_count_; }
  std::uint64_t reset_count() const { return reset_count_; }
  bool has_been_reset() const { return reset_count_ > 0; }

 private:
  bool slot(bool master_bit);
  void log(BusOp::Kind kind, Byte value);

  std::vector<std::unique_ptr<SlaveDevice>> devices_;
  double bit_error_rate_ = 0.0;
  std::mt19937_64 rng_;
  Transcript transcript_;
  bool recording_ = true;
  std::uint64_t op_count_ = 0;
  std::uint64_t reset_count_ = 0;
};

}  // namespace domo
