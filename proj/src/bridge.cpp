#include "domo/bridge.hpp"

#include <cstdio>

#include "domo/error.hpp"

namespace domo {

std::string format_session_log(std::span<const BridgeFrame> frames) {
  std::string out;
  char line[32];
  for (const auto& f : frames) {
    std::snprintf(line, sizeof line, "%s %02X %s\n",
                  f.direction == BridgeFrame::Direction::HostToBridge ? ">|" : "<|", f.byte,
                  f.mode_at_time == BridgeMode::Command ? "COMMAND" : "DATA");
    out += line;
  }
  return out;
}

// --- Bridge emulator ------------------------------------------------------

std::optional<Byte> Bridge::feed(Byte b) {
  const BridgeMode mode_before = state_.mode;
  if (logging_) session_.push_back({BridgeFrame::Direction::HostToBridge, b, mode_before});

  std::optional<Byte> reply;
  if (state_.mode == BridgeMode::Command) {
    reply = feed_command(b);
  } else if (state_.pending_escape) {
    state_.pending_escape = false;
    if (b == bridge_cmd::kCommandMode) {
      reply = feed_data(b);
    } else {
      state_.mode = BridgeMode::Command;
      reply = feed_command(b);
    }
  } else if (b == bridge_cmd::kCommandMode) {
    state_.pending_escape = true;
  } else {
    reply = feed_data(b);
  }

  if (logging_ && reply) {
    session_.push_back({BridgeFrame::Direction::BridgeToHost, *reply, mode_before});
  }
  return reply;
}

std::optional<Byte> Bridge::feed_command(Byte b) {
  if (!state_.calibrated) {
    if (b != bridge_cmd::kReset) return bridge_cmd::kProtocolError;
    state_.calibrated = true;
  }
  switch (b) {
    case bridge_cmd::kReset:
      return bus_.reset() ? bridge_cmd::kPresence : bridge_cmd::kNoPresence;
    case bridge_cmd::kDataMode:
      state_.mode = BridgeMode::Data;
      return std::nullopt;
    case bridge_cmd::kAcceleratorOff:
      state_.search_accelerator = false;
      return std::nullopt;
    case bridge_cmd::kAcceleratorOn:
      state_.search_accelerator = true;
      return std::nullopt;
    case bridge_cmd::kBit0:
    case bridge_cmd::kBit1:
      return bus_.touch_bit(b == bridge_cmd::kBit1) ? bridge_cmd::kBitSampled1
                                                    : bridge_cmd::kBitSampled0;
    default:
      return std::nullopt;
  }
}

Byte Bridge::feed_data(Byte b) {
  if (state_.search_accelerator) return accelerated_search_byte(b);
  return bus_.touch_byte(b);
}

Byte Bridge::accelerated_search_byte(Byte desired) {
  Byte reply = 0;
  for (int pair = 0; pair < 4; ++pair) {
    const bool want = ((desired >> (2 * pair + 1)) & 1U) != 0;
    const bool bit = bus_.read_bit();
    const bool complement = bus_.read_bit();
    bool discrepancy = false;
    bool direction = bit;
    if (bit == complement) {
      discrepancy = true;
      direction = bit ? true : want;
    }
    bus_.write_bit(direction);
    if (discrepancy) reply = static_cast<Byte>(reply | 1U << (2 * pair));
    if (direction) reply = static_cast<Byte>(reply | 1U << (2 * pair + 1));
  }
  return reply;
}

// --- In-process port ------------------------------------------------------

void BridgePort::write(std::span<const Byte> bytes) {
  for (Byte b : bytes) {
    if (auto reply = bridge_.feed(b)) rx_.push_back(*reply);
  }
}

std::optional<Byte> BridgePort::read_byte() {
  if (rx_.empty()) return std::nullopt;
  const Byte b = rx_.front();
  rx_.pop_front();
  return b;
}

std::vector<Byte> escape_data(std::span<const Byte> bytes) {
  std::vector<Byte> out;
  out.reserve(bytes.size() + 4);
  for (Byte b : bytes) {
    out.push_back(b);
    if (b == bridge_cmd::kCommandMode) out.push_back(b);
  }
  return out;
}

// --- Host driver ----------------------------------------------------------

BridgeMaster::BridgeMaster(SerialPort& port, SearchStrategy strategy)
    : port_(port), strategy_(strategy) {
  port_.write_byte(bridge_cmd::kReset);
  const Byte reply = read_reply();
  if (reply != bridge_cmd::kPresence && reply != bridge_cmd::kNoPresence) {
    throw LinkError("bridge rejected calibration byte");
  }
  presence_at_open_ = reply == bridge_cmd::kPresence;
}

Byte BridgeMaster::read_reply() {
  auto b = port_.read_byte();
  if (!b) throw LinkError("bridge response timed out");
  return *b;
}

void BridgeMaster::to_command_mode() {
  if (mode_ == BridgeMode::Command) return;
  port_.write_byte(bridge_cmd::kCommandMode);
  mode_ = BridgeMode::Command;
}

void BridgeMaster::to_data_mode() {
  if (mode_ == BridgeMode::Data) return;
  port_.write_byte(bridge_cmd::kDataMode);
  mode_ = BridgeMode::Data;
}

bool BridgeMaster::reset() {
  to_command_mode();
  port_.write_byte(bridge_cmd::kReset);
  const Byte reply = read_reply();
  if (reply == bridge_cmd::kPresence) return true;
  if (reply == bridge_cmd::kNoPresence) return false;
  throw LinkError("unexpected reset reply from bridge");
}

void BridgeMaster::write_bit(bool bit) {
  to_command_mode();
  port_.write_byte(bit ? bridge_cmd::kBit1 : bridge_cmd::kBit0);
  const Byte reply = read_reply();
  if ((reply & 0xFE) != bridge_cmd::kBitSampled0) throw LinkError("unexpected bit reply");
}

bool BridgeMaster::read_bit() {
  to_command_mode();
  port_.write_byte(bridge_cmd::kBit1);
  const Byte reply = read_reply();
  if ((reply & 0xFE) != bridge_cmd::kBitSampled0) throw LinkError("unexpected bit reply");
  return (reply & 1U) != 0;
}

std::vector<Byte> BridgeMaster::send_data(std::span<const Byte> bytes) {
  to_data_mode();
  port_.write(escape_data(bytes));
  std::vector<Byte> sampled;
  sampled.reserve(bytes.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    auto b = port_.read_byte();
    if (!b) {
      throw LinkError("short response from bridge: " + std::to_string(sampled.size()) + " of " +
                      std::to_string(bytes.size()) + " bytes");
    }
    sampled.push_back(*b);
  }
  return sampled;
}

void BridgeMaster::write_byte(Byte value) { send_data(std::span<const Byte>(&value, 1)); }

Byte BridgeMaster::read_byte() {
  const Byte ones = 0xFF;
  return send_data(std::span<const Byte>(&ones, 1)).front();
}

void BridgeMaster::write_bytes(std::span<const Byte> bytes) { send_data(bytes); }

std::vector<Byte> BridgeMaster::read_bytes(std::size_t count) {
  const std::vector<Byte> ones(count, 0xFF);
  return send_data(ones);
}

SearchPass BridgeMaster::search_pass(Byte command, const std::bitset<64>& desired) {
  if (strategy_ == SearchStrategy::Triplet) return BusMaster::search_pass(command, desired);

  SearchPass pass;
  pass.presence = reset();
  if (!pass.presence) return pass;
  write_byte(command);

  std::vector<Byte> request(16, 0);
  for (int k = 0; k < 64; ++k) {
    if (desired[k]) request[k / 4] = static_cast<Byte>(request[k / 4] | 1U << (2 * (k % 4) + 1));
  }
  to_command_mode();
  port_.write_byte(bridge_cmd::kAcceleratorOn);
  const auto reply = send_data(request);
  to_command_mode();
  port_.write_byte(bridge_cmd::kAcceleratorOff);

  bool all_silent = true;
  for (int k = 0; k < 64; ++k) {
    const Byte pair = static_cast<Byte>(reply[k / 4] >> (2 * (k % 4)));
    const bool discrepancy = (pair & 1U) != 0;
    const bool direction = (pair & 2U) != 0;
    pass.discrepancy[k] = discrepancy;
    if (direction) pass.rom[k / 8] = static_cast<Byte>(pass.rom[k / 8] | 1U << (k % 8));
    all_silent = all_silent && discrepancy && direction;
  }
  // Silence and a 00 discrepancy steered to 1 look alike per bit; a full
  // run of them can only mean no device took part.
  if (all_silent) pass.silent_at = 0;
  return pass;
}

}  // namespace domo
