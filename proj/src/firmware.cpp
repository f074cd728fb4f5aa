#include "domo/firmware.hpp"

#include <algorithm>
#include <cctype>

#include "domo/error.hpp"

namespace domo {

std::string_view to_string(LedColor color) { return color == LedColor::Red ? "red" : "green"; }

LedColor parse_led_color(std::string_view text) {
  if (text == "red") return LedColor::Red;
  if (text == "green") return LedColor::Green;
  throw FormatError("unknown actuator '" + std::string(text) + "'");
}

// Replies mirror the original listing verbatim, casing and trailing spaces
// included. Queries test the pin without modifying the port.
std::string fw_handle_byte(FirmwareState& state, Byte b) {
  switch (b) {
    case 'b':
      state.pd4_red = true;
      return "ON\n";
    case 'z':
      state.pd4_red = false;
      return "OFF\n";
    case 'Y':
      return state.pd4_red ? "on\n" : "off \n";
    case 'a':
      state.pd6_green = true;
      return "ON\n";
    case 's':
      state.pd6_green = false;
      return "OFF\n";
    case 'X':
      return state.pd6_green ? "On\n" : "OFF \n";
    default:
      return {};
  }
}

void FirmwarePort::write(std::span<const Byte> bytes) {
  for (Byte b : bytes) {
    for (char c : fw_.handle_byte(b)) rx_.push_back(static_cast<Byte>(c));
  }
}

std::optional<Byte> FirmwarePort::read_byte() {
  if (rx_.empty()) return std::nullopt;
  const Byte b = rx_.front();
  rx_.pop_front();
  return b;
}

std::optional<bool> parse_on_off(std::string_view text) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  auto first = std::find_if(text.begin(), text.end(), not_space);
  auto last = std::find_if(text.rbegin(), text.rend(), not_space).base();
  if (first >= last) return std::nullopt;
  std::string word(first, last);
  std::transform(word.begin(), word.end(), word.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (word == "on") return true;
  if (word == "off") return false;
  return std::nullopt;
}

std::string LedClient::read_line() {
  std::string line;
  for (;;) {
    auto b = port_.read_byte();
    if (!b) throw LinkError("firmware reply timed out after '" + line + "'");
    if (*b == '\n') return line;
    line.push_back(static_cast<char>(*b));
  }
}

std::string LedClient::set_led(LedColor color, bool on) {
  const Byte cmd = color == LedColor::Red ? (on ? 'b' : 'z') : (on ? 'a' : 's');
  port_.write_byte(cmd);
  auto line = read_line();
  const auto parsed = parse_on_off(line);
  if (!parsed || *parsed != on) throw LinkError("unexpected firmware acknowledgement '" + line + "'");
  return line;
}

bool LedClient::query_led(LedColor color) {
  port_.write_byte(color == LedColor::Red ? 'Y' : 'X');
  const auto line = read_line();
  const auto parsed = parse_on_off(line);
  if (!parsed) throw LinkError("unparseable firmware reply '" + line + "'");
  return *parsed;
}

}  // namespace domo
