#pragma once

// Codec layer shared by every part of the emulator: CRC8, ROM identities,
// the half-degree temperature register, and the 9-byte scratchpad image.

#include <array>
#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace domo {

using Byte = std::uint8_t;

/// Dallas/Maxim CRC8: X^8 + X^5 + X^4 + 1, LSB-first, init 0x00, no final XOR.
Byte crc8(std::span<const Byte> data);

/// Temperature in exact half-degree steps, valid range [-55.0, +125.0] C.
class TemperatureValue {
 public:
  static constexpr int kMinHalfDegrees = -110;
  static constexpr int kMaxHalfDegrees = 250;

  constexpr TemperatureValue() = default;

  /// Throws RangeError outside [-110, 250].
  static TemperatureValue from_half_degrees(int half_degrees);

  constexpr int half_degrees() const { return half_degrees_; }
  double celsius() const { return half_degrees_ / 2.0; }

  /// Signed integer degrees (floor), as compared against TH/TL.
  constexpr int whole_degrees() const {
    return half_degrees_ >= 0 ? half_degrees_ / 2 : -((-half_degrees_ + 1) / 2);
  }

  /// "22.5", "-0.5", "125.0": exactly one fractional digit.
  std::string to_string() const;

  friend constexpr auto operator<=>(TemperatureValue, TemperatureValue) = default;

 private:
  constexpr explicit TemperatureValue(int half_degrees) : half_degrees_(half_degrees) {}
  int half_degrees_ = 0;
};

struct TemperatureRegister {
  Byte lsb = 0;
  Byte msb = 0;
  friend bool operator==(const TemperatureRegister&, const TemperatureRegister&) = default;
};

TemperatureRegister encode_temperature(TemperatureValue t);

/// Throws RangeError when the register holds a value outside the sensor range.
TemperatureValue decode_temperature(Byte lsb, Byte msb);

/// 64-bit device identity. Serial bytes are stored in wire order
/// (serial()[0] is transmitted first, right after the family code).
class RomCode {
 public:
  static constexpr Byte kSensorFamily = 0x10;

  RomCode() = default;

  /// Builds an id and computes its CRC.
  static RomCode make(Byte family, const std::array<Byte, 6>& serial_wire_order);

  /// From 8 bytes in wire order; throws CrcError on a bad check byte.
  static RomCode from_wire(std::span<const Byte, 8> bytes);

  Byte family() const { return bytes_[0]; }
  std::array<Byte, 6> serial() const;
  Byte crc() const { return bytes_[7]; }
  const std::array<Byte, 8>& wire_bytes() const { return bytes_; }

  /// Bit k of the 64-bit wire sequence (k = 0 is the family LSB).
  bool bit(int k) const { return (bytes_[k / 8] >> (k % 8)) & 1U; }

  /// Canonical text "FF.SSSSSSSSSSSS" (serial shown most-significant byte first).
  std::string to_string() const;

  friend bool operator==(const RomCode&, const RomCode&) = default;
  /// Orders by wire bytes; use bit_path_less for search discovery order.
  friend auto operator<=>(const RomCode&, const RomCode&) = default;

 private:
  std::array<Byte, 8> bytes_{};
};

/// Order in which a zero-first binary-tree search discovers ids.
bool bit_path_less(const RomCode& a, const RomCode& b);

std::string format_rom_text(const RomCode& rom);

/// Strict parse of "FF.SSSSSSSSSSSS" (uppercase hex only). Throws FormatError.
RomCode parse_rom_text(std::string_view text);

struct Scratchpad {
  static constexpr std::size_t kSize = 9;
  static constexpr Byte kReserved = 0xFF;
  static constexpr Byte kCountRemain = 0x0C;
  static constexpr Byte kCountPerC = 0x10;

  Byte temp_lsb = 0;
  Byte temp_msb = 0;
  std::int8_t th = 0;
  std::int8_t tl = 0;
  std::array<Byte, 2> reserved{kReserved, kReserved};
  Byte count_remain = kCountRemain;
  Byte count_per_c = kCountPerC;
  Byte crc = 0;

  TemperatureValue temperature() const { return decode_temperature(temp_lsb, temp_msb); }

  std::array<Byte, kSize> to_bytes() const;

  /// Recomputes crc from bytes 0..7.
  void seal();

  friend bool operator==(const Scratchpad&, const Scratchpad&) = default;
};

Scratchpad build_scratchpad(TemperatureValue t, std::int8_t th, std::int8_t tl);

/// Verifies the CRC first (CrcError), then the fixed bytes and the
/// temperature range (RangeError).
Scratchpad parse_scratchpad(std::span<const Byte, Scratchpad::kSize> bytes);

}  // namespace domo
