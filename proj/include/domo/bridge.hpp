#pragma once

// Serial-to-1-Wire line driver: the byte-level bridge emulator that drives a
// Bus, the in-process serial channel, and the host-side driver.
//
// Wire contract
//   COMMAND mode  C1 reset (first byte: also timing calibration) -> CD | CF
//                 E1 enter DATA mode
//                 A1 / B1 search accelerator off / on
//                 81 / 91 write-and-sample single bit 0 / 1 -> 80 | 81
//   DATA mode     any byte is shifted LSB-first and the sampled byte returned;
//                 E3 returns to COMMAND; a literal E3 is sent as E3 E3.
//   Accelerated search (DATA mode, accelerator on): 16 bytes = 64 bit pairs,
//   pair k bit 1 = desired direction at ROM bit k; the reply pair k holds
//   (bit 0) the discrepancy flag and (bit 1) the direction taken.

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "domo/bus.hpp"
#include "domo/master.hpp"

namespace domo {

namespace bridge_cmd {
inline constexpr Byte kReset = 0xC1;
inline constexpr Byte kDataMode = 0xE1;
inline constexpr Byte kCommandMode = 0xE3;
inline constexpr Byte kAcceleratorOff = 0xA1;
inline constexpr Byte kAcceleratorOn = 0xB1;
inline constexpr Byte kBit0 = 0x81;
inline constexpr Byte kBit1 = 0x91;

inline constexpr Byte kPresence = 0xCD;
inline constexpr Byte kNoPresence = 0xCF;
inline constexpr Byte kBitSampled0 = 0x80;
inline constexpr Byte kBitSampled1 = 0x81;
inline constexpr Byte kProtocolError = 0x00;
}  // namespace bridge_cmd

enum class BridgeMode { Command, Data };

struct BridgeState {
  BridgeMode mode = BridgeMode::Command;
  bool search_accelerator = false;
  bool calibrated = false;
  bool pending_escape = false;
  friend bool operator==(const BridgeState&, const BridgeState&) = default;
};

struct BridgeFrame {
  enum class Direction { HostToBridge, BridgeToHost };
  Direction direction = Direction::HostToBridge;
  Byte byte = 0;
  BridgeMode mode_at_time = BridgeMode::Command;
};

/// Lines of the form ">| C1 COMMAND" and "<| CD COMMAND".
std::string format_session_log(std::span<const BridgeFrame> frames);

class Bridge {
 public:
  explicit Bridge(Bus& bus) : bus_(bus) {}

  /// Feeds one host byte; returns the reply byte, if the byte has one.
  std::optional<Byte> feed(Byte b);

  const BridgeState& state() const { return state_; }
  const std::vector<BridgeFrame>& session() const { return session_; }
  void set_logging(bool on) { logging_ = on; }
  void clear_session() { session_.clear(); }

 private:
  std::optional<Byte> feed_command(Byte b);
  Byte feed_data(Byte b);
  Byte accelerated_search_byte(Byte desired);

  Bus& bus_;
  BridgeState state_;
  std::vector<BridgeFrame> session_;
  bool logging_ = true;
};

/// Byte channel between host and a peripheral. read_byte() returns nullopt
/// when nothing arrives in time.
class SerialPort {
 public:
  virtual ~SerialPort() = default;
  virtual void write(std::span<const Byte> bytes) = 0;
  virtual std::optional<Byte> read_byte() = 0;

  void write_byte(Byte b) { write(std::span<const Byte>(&b, 1)); }
};

/// In-process serial link wired straight into a Bridge.
class BridgePort final : public SerialPort {
 public:
  explicit BridgePort(Bridge& bridge) : bridge_(bridge) {}
  void write(std::span<const Byte> bytes) override;
  std::optional<Byte> read_byte() override;

 private:
  Bridge& bridge_;
  std::deque<Byte> rx_;
};

/// Escape-by-doubling for DATA mode payloads.
std::vector<Byte> escape_data(std::span<const Byte> bytes);

/// Host half of the bridge protocol, usable wherever a BusMaster is.
class BridgeMaster final : public BusMaster {
 public:
  enum class SearchStrategy { Accelerated, Triplet };

  /// Opening the link sends the calibration/reset byte. Throws LinkError if
  /// the bridge does not answer.
  explicit BridgeMaster(SerialPort& port, SearchStrategy strategy = SearchStrategy::Accelerated);

  bool reset() override;
  void write_bit(bool bit) override;
  bool read_bit() override;
  void write_byte(Byte value) override;
  Byte read_byte() override;
  void write_bytes(std::span<const Byte> bytes) override;
  std::vector<Byte> read_bytes(std::size_t count) override;
  SearchPass search_pass(Byte command, const std::bitset<64>& desired) override;

  /// DATA-mode transfer with transparent escaping; returns the sampled bytes.
  std::vector<Byte> send_data(std::span<const Byte> bytes);

  bool presence_at_open() const { return presence_at_open_; }
  SearchStrategy strategy() const { return strategy_; }
  void set_strategy(SearchStrategy s) { strategy_ = s; }

 private:
  void to_command_mode();
  void to_data_mode();
  Byte read_reply();

  SerialPort& port_;
  SearchStrategy strategy_;
  BridgeMode mode_ = BridgeMode::Command;
  bool presence_at_open_ = false;
};

}  // namespace domo
