#pragma once

// Actuator microcontroller: two LED outputs (red on PD4, green on PD6) driven
// by single-character commands over a serial link, plus the host client.

#include <deque>
#include <optional>
#include <span>
#include <string>

#include "domo/bridge.hpp"

namespace domo {

enum class LedColor { Red, Green };

std::string_view to_string(LedColor color);
/// Accepts "red" / "green". Throws FormatError otherwise.
LedColor parse_led_color(std::string_view text);

struct FirmwareState {
  bool pd4_red = false;
  bool pd6_green = false;
  friend bool operator==(const FirmwareState&, const FirmwareState&) = default;
};

/// Byte-exact command table. Returns the text the firmware prints, which is
/// empty for bytes outside the command alphabet.
std::string fw_handle_byte(FirmwareState& state, Byte b);

class Firmware {
 public:
  std::string handle_byte(Byte b) { return fw_handle_byte(state_, b); }
  const FirmwareState& state() const { return state_; }
  bool pin(LedColor color) const { return color == LedColor::Red ? state_.pd4_red : state_.pd6_green; }

 private:
  FirmwareState state_;
};

/// In-process serial link into the firmware's UART.
class FirmwarePort final : public SerialPort {
 public:
  explicit FirmwarePort(Firmware& fw) : fw_(fw) {}
  void write(std::span<const Byte> bytes) override;
  std::optional<Byte> read_byte() override;

 private:
  Firmware& fw_;
  std::deque<Byte> rx_;
};

/// Host side of the LED protocol.
class LedClient {
 public:
  explicit LedClient(SerialPort& port) : port_(port) {}

  /// Sends the set command and returns the acknowledgement line (without
  /// the trailing newline). Throws LinkError on timeout or a bad ack.
  std::string set_led(LedColor color, bool on);

  /// Sends the query command; the reply is matched case-insensitively
  /// after trimming, so "On\n", "on\n" and "OFF \n" all parse.
  bool query_led(LedColor color);

 private:
  std::string read_line();

  SerialPort& port_;
};

/// "on"/"off" in any casing, surrounding whitespace ignored.
std::optional<bool> parse_on_off(std::string_view text);

}  // namespace domo
