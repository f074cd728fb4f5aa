#include "domo/onewire.hpp"

#include <algorithm>
#include <cstdio>

#include "domo/error.hpp"

namespace domo {

namespace {

// Reflected form of 0x31 (X^8 + X^5 + X^4 + 1).
constexpr Byte kReflectedPoly = 0x8C;

constexpr std::array<Byte, 256> make_crc_table() {
  std::array<Byte, 256> table{};
  for (int i = 0; i < 256; ++i) {
    Byte crc = static_cast<Byte>(i);
    for (int bit = 0; bit < 8; ++bit) {
      crc = (crc & 1U) ? static_cast<Byte>((crc >> 1) ^ kReflectedPoly)
                       : static_cast<Byte>(crc >> 1);
    }
    table[i] = crc;
  }
  return table;
}

constexpr auto kCrcTable = make_crc_table();

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

Byte crc8(std::span<const Byte> data) {
  Byte crc = 0;
  for (Byte b : data) crc = kCrcTable[crc ^ b];
  return crc;
}

TemperatureValue TemperatureValue::from_half_degrees(int half_degrees) {
  if (half_degrees < kMinHalfDegrees || half_degrees > kMaxHalfDegrees) {
    throw RangeError("temperature " + std::to_string(half_degrees) +
                     " half-degrees outside [-55.0, +125.0]");
  }
  return TemperatureValue(half_degrees);
}

std::string TemperatureValue::to_string() const {
  const int magnitude = half_degrees_ < 0 ? -half_degrees_ : half_degrees_;
  std::string out = half_degrees_ < 0 ? "-" : "";
  out += std::to_string(magnitude / 2);
  out += (magnitude % 2) ? ".5" : ".0";
  return out;
}

TemperatureRegister encode_temperature(TemperatureValue t) {
  const auto raw = static_cast<std::uint16_t>(static_cast<std::int16_t>(t.half_degrees()));
  return {static_cast<Byte>(raw & 0xFF), static_cast<Byte>(raw >> 8)};
}

TemperatureValue decode_temperature(Byte lsb, Byte msb) {
  const auto raw = static_cast<std::int16_t>(static_cast<std::uint16_t>(msb << 8 | lsb));
  return TemperatureValue::from_half_degrees(raw);
}

RomCode RomCode::make(Byte family, const std::array<Byte, 6>& serial_wire_order) {
  RomCode rom;
  rom.bytes_[0] = family;
  std::copy(serial_wire_order.begin(), serial_wire_order.end(), rom.bytes_.begin() + 1);
  rom.bytes_[7] = crc8(std::span<const Byte>(rom.bytes_.data(), 7));
  return rom;
}

RomCode RomCode::from_wire(std::span<const Byte, 8> bytes) {
  if (crc8(bytes.first<7>()) != bytes[7]) {
    throw CrcError("ROM code CRC mismatch");
  }
  RomCode rom;
  std::copy(bytes.begin(), bytes.end(), rom.bytes_.begin());
  return rom;
}

std::array<Byte, 6> RomCode::serial() const {
  std::array<Byte, 6> out{};
  std::copy(bytes_.begin() + 1, bytes_.begin() + 7, out.begin());
  return out;
}

std::string RomCode::to_string() const {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02X.%02X%02X%02X%02X%02X%02X", bytes_[0], bytes_[6],
                bytes_[5], bytes_[4], bytes_[3], bytes_[2], bytes_[1]);
  return buf;
}

bool bit_path_less(const RomCode& a, const RomCode& b) {
  for (int k = 0; k < 64; ++k) {
    if (a.bit(k) != b.bit(k)) return !a.bit(k);
  }
  return false;
}

std::string format_rom_text(const RomCode& rom) { return rom.to_string(); }

RomCode parse_rom_text(std::string_view text) {
  if (text.size() != 15 || text[2] != '.') {
    throw FormatError("ROM id must have the form FF.SSSSSSSSSSSS: '" + std::string(text) + "'");
  }
  auto byte_at = [&](std::size_t pos) {
    const int hi = hex_value(text[pos]);
    const int lo = hex_value(text[pos + 1]);
    if (hi < 0 || lo < 0) {
      throw FormatError("ROM id contains a non-uppercase-hex digit: '" + std::string(text) + "'");
    }
    return static_cast<Byte>(hi << 4 | lo);
  };
  std::array<Byte, 8> wire{};
  wire[0] = byte_at(0);
  // Display order is most-significant serial byte first; wire order is the reverse.
  for (int i = 0; i < 6; ++i) wire[6 - i] = byte_at(3 + 2 * i);
  wire[7] = crc8(std::span<const Byte>(wire.data(), 7));
  return RomCode::from_wire(wire);
}

std::array<Byte, Scratchpad::kSize> Scratchpad::to_bytes() const {
  return {temp_lsb,
          temp_msb,
          static_cast<Byte>(th),
          static_cast<Byte>(tl),
          reserved[0],
          reserved[1],
          count_remain,
          count_per_c,
          crc};
}

void Scratchpad::seal() {
  const auto bytes = to_bytes();
  crc = crc8(std::span<const Byte>(bytes.data(), 8));
}

Scratchpad build_scratchpad(TemperatureValue t, std::int8_t th, std::int8_t tl) {
  const auto reg = encode_temperature(t);
  Scratchpad pad;
  pad.temp_lsb = reg.lsb;
  pad.temp_msb = reg.msb;
  pad.th = th;
  pad.tl = tl;
  pad.seal();
  return pad;
}

Scratchpad parse_scratchpad(std::span<const Byte, Scratchpad::kSize> bytes) {
  if (crc8(bytes.first<8>()) != bytes[8]) {
    throw CrcError("scratchpad CRC mismatch");
  }
  Scratchpad pad;
  pad.temp_lsb = bytes[0];
  pad.temp_msb = bytes[1];
  pad.th = static_cast<std::int8_t>(bytes[2]);
  pad.tl = static_cast<std::int8_t>(bytes[3]);
  pad.reserved = {bytes[4], bytes[5]};
  pad.count_remain = bytes[6];
  pad.count_per_c = bytes[7];
  pad.crc = bytes[8];
  if (pad.reserved[0] != Scratchpad::kReserved || pad.reserved[1] != Scratchpad::kReserved ||
      pad.count_remain != Scratchpad::kCountRemain || pad.count_per_c != Scratchpad::kCountPerC) {
    throw RangeError("scratchpad fixed bytes invalid");
  }
  (void)pad.temperature();
  return pad;
}

}  // namespace domo
