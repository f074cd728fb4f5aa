#pragma once

// Master-side view of a 1-Wire network. The same ROM-level helpers and
// search run either directly against a Bus or through the serial bridge.

#include <bitset>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "domo/bus.hpp"
#include "domo/error.hpp"
#include "domo/onewire.hpp"

namespace domo {

/// Result of one search pass: the ROM bits taken and, per bit position,
/// whether both a 0 and a 1 responder were seen.
struct SearchPass {
  bool presence = false;
  std::array<Byte, 8> rom{};
  std::bitset<64> discrepancy;
  /// First bit position where neither value answered, or -1.
  int silent_at = -1;
};

class BusMaster {
 public:
  virtual ~BusMaster() = default;

  virtual bool reset() = 0;
  virtual void write_bit(bool bit) = 0;
  virtual bool read_bit() = 0;
  virtual void write_byte(Byte value) = 0;
  virtual Byte read_byte() = 0;

  virtual void write_bytes(std::span<const Byte> bytes);
  virtual std::vector<Byte> read_bytes(std::size_t count);

  /// Reset, send the search command, then 64 read/complement/write triplets
  /// steering by `desired` wherever responders disagree.
  virtual SearchPass search_pass(Byte command, const std::bitset<64>& desired);
};

class DirectMaster final : public BusMaster {
 public:
  explicit DirectMaster(Bus& bus) : bus_(bus) {}

  bool reset() override { return bus_.reset(); }
  void write_bit(bool bit) override { bus_.write_bit(bit); }
  bool read_bit() override { return bus_.read_bit(); }
  void write_byte(Byte value) override { bus_.write_byte(value); }
  Byte read_byte() override { return bus_.read_byte(); }

  Bus& bus() { return bus_; }

 private:
  Bus& bus_;
};

/// Read ROM; valid only with a single device attached. Throws PresenceError
/// on an empty bus and CrcError when the id does not check (collision/noise).
RomCode rom_read(BusMaster& master);

/// Match ROM / Skip ROM; the caller has already issued a reset.
void rom_match(BusMaster& master, const RomCode& rom);
void rom_skip(BusMaster& master);

/// Reset followed by Match ROM. Returns the presence result.
bool select(BusMaster& master, const RomCode& rom);

class SearchError : public Error {
 public:
  SearchError(const std::string& what, std::vector<RomCode> partial)
      : Error(what), partial_(std::move(partial)) {}
  const std::vector<RomCode>& partial() const { return partial_; }

 private:
  std::vector<RomCode> partial_;
};

struct SearchResult {
  std::vector<RomCode> roms;
  /// Completed reset cycles that each yielded one id (retries excluded).
  int passes = 0;
  /// All search passes attempted, including retried ones.
  int attempts = 0;
  int triplets = 0;
};

/// Binary-tree ROM search; each failing pass is retried up to `retry_limit`
/// times before a SearchError carrying the ids found so far is thrown.
/// Ids come back in bit-path order (zero branch first).
SearchResult search(BusMaster& master, bool alarm_only, int retry_limit = 3);

}  // namespace domo
