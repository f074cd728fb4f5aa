#include "domo/master.hpp"

#include <algorithm>

namespace domo {

void BusMaster::write_bytes(std::span<const Byte> bytes) {
  for (Byte b : bytes) write_byte(b);
}

std::vector<Byte> BusMaster::read_bytes(std::size_t count) {
  std::vector<Byte> out(count);
  for (auto& b : out) b = read_byte();
  return out;
}

SearchPass BusMaster::search_pass(Byte command, const std::bitset<64>& desired) {
  SearchPass pass;
  pass.presence = reset();
  if (!pass.presence) return pass;
  write_byte(command);
  for (int k = 0; k < 64; ++k) {
    const bool bit = read_bit();
    const bool complement = read_bit();
    bool direction = bit;
    if (bit == complement) {
      // 00: responders disagree; 11: nobody answered.
      pass.discrepancy[k] = true;
      direction = bit ? true : desired[k];
      if (bit && pass.silent_at < 0) pass.silent_at = k;
    }
    write_bit(direction);
    if (direction) pass.rom[k / 8] = static_cast<Byte>(pass.rom[k / 8] | 1U << (k % 8));
  }
  return pass;
}

RomCode rom_read(BusMaster& master) {
  if (!master.reset()) throw PresenceError("no device answered the reset");
  master.write_byte(rom_cmd::kReadRom);
  const auto bytes = master.read_bytes(8);
  return RomCode::from_wire(std::span<const Byte, 8>(bytes.data(), 8));
}

void rom_match(BusMaster& master, const RomCode& rom) {
  master.write_byte(rom_cmd::kMatchRom);
  master.write_bytes(rom.wire_bytes());
}

void rom_skip(BusMaster& master) { master.write_byte(rom_cmd::kSkipRom); }

bool select(BusMaster& master, const RomCode& rom) {
  if (!master.reset()) return false;
  rom_match(master, rom);
  return true;
}

SearchResult search(BusMaster& master, bool alarm_only, int retry_limit) {
  const Byte command = alarm_only ? rom_cmd::kAlarmSearch : rom_cmd::kSearchRom;
  SearchResult result;
  int last_zero = -1;
  std::bitset<64> previous;
  int silent_starts = 0;

  for (;;) {
    std::bitset<64> desired;
    for (int k = 0; k < 64; ++k) desired[k] = k < last_zero ? previous[k] : k == last_zero;

    int failures = 0;
    SearchPass pass;
    RomCode found;
    for (;;) {
      pass = master.search_pass(command, desired);
      ++result.attempts;
      if (pass.presence) result.triplets += 64;

      const bool first_pass = result.roms.empty() && last_zero < 0;
      if (!pass.presence && first_pass) return result;  // empty bus; reset is not noisy
      // Nobody answered bit 0 on the opening pass: an empty (alarm) set,
      // accepted once seen twice so a single flipped sample cannot fake it.
      if (pass.presence && pass.silent_at == 0 && first_pass) {
        if (++silent_starts == 2) return result;
        continue;
      }
      bool ok = pass.presence && pass.silent_at < 0;
      if (ok) {
        try {
          found = RomCode::from_wire(pass.rom);
          ok = std::find(result.roms.begin(), result.roms.end(), found) == result.roms.end();
        } catch (const CrcError&) {
          ok = false;
        }
      }
      if (ok) break;
      if (++failures > retry_limit) {
        throw SearchError("ROM search failed after " + std::to_string(retry_limit) + " retries",
                          result.roms);
      }
    }

    result.roms.push_back(found);
    ++result.passes;

    int next_zero = -1;
    for (int k = 0; k < 64; ++k) {
      if (pass.discrepancy[k] && !found.bit(k)) next_zero = k;
    }
    if (next_zero < 0) return result;
    last_zero = next_zero;
    for (int k = 0; k < 64; ++k) previous[k] = found.bit(k);
  }
}

}  // namespace domo
