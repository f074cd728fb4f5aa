#include "domo/bus.hpp"

#include <cstdio>

#include "domo/error.hpp"

namespace domo {

void Transcript::append(BusOp::Kind kind, Byte value) {
  ops_.push_back(BusOp{next_seq_++, kind, value});
}

std::vector<NormalizedSlot> Transcript::normalized() const {
  std::vector<NormalizedSlot> out;
  out.reserve(ops_.size() * 2);
  for (const auto& op : ops_) {
    switch (op.kind) {
      case BusOp::Kind::Reset:
        out.push_back({true, op.value != 0});
        break;
      case BusOp::Kind::WriteBit:
      case BusOp::Kind::ReadBit:
        out.push_back({false, op.value != 0});
        break;
      case BusOp::Kind::WriteByte:
      case BusOp::Kind::ReadByte:
        for (int i = 0; i < 8; ++i) out.push_back({false, ((op.value >> i) & 1U) != 0});
        break;
    }
  }
  return out;
}

std::string Transcript::to_text() const {
  std::string out;
  char line[48];
  for (const auto& op : ops_) {
    const char* kind = "";
    bool as_hex = false;
    switch (op.kind) {
      case BusOp::Kind::Reset: kind = "RST"; break;
      case BusOp::Kind::WriteBit: kind = "WBIT"; break;
      case BusOp::Kind::ReadBit: kind = "RBIT"; break;
      case BusOp::Kind::WriteByte: kind = "WBYTE"; as_hex = true; break;
      case BusOp::Kind::ReadByte: kind = "RBYTE"; as_hex = true; break;
    }
    if (as_hex) {
      std::snprintf(line, sizeof line, "%llu %s %02X\n", static_cast<unsigned long long>(op.seq),
                    kind, op.value);
    } else {
      std::snprintf(line, sizeof line, "%llu %s %u\n", static_cast<unsigned long long>(op.seq),
                    kind, static_cast<unsigned>(op.value));
    }
    out += line;
  }
  return out;
}

ValidatedTopology validate_topology(const Topology& topology) {
  if (!(topology.radius_m >= 0.0)) {
    throw TopologyError("network radius must be non-negative");
  }
  if (!(topology.bit_error_rate >= 0.0 && topology.bit_error_rate <= 0.01)) {
    throw TopologyError("bit_error_rate must lie in [0, 0.01]");
  }
  if (topology.radius_m > 500.0) {
    throw TopologyError("network radius " + std::to_string(topology.radius_m) +
                        " m exceeds the 500 m ceiling");
  }
  ValidatedTopology result{topology, std::nullopt};
  if (topology.radius_m > 200.0) {
    result.effective.bit_error_rate = topology.bit_error_rate * (topology.radius_m / 200.0);
    result.warning = "network radius " + std::to_string(topology.radius_m) +
                     " m beyond 200 m: bit error rate scaled to " +
                     std::to_string(result.effective.bit_error_rate);
  }
  return result;
}

// --- RomLayerDevice -------------------------------------------------------

bool RomLayerDevice::on_reset() {
  state_ = State::WaitRomCommand;
  rx_byte_ = 0;
  rx_bits_ = 0;
  bit_index_ = 0;
  search_phase_ = 0;
  function_reset();
  return true;
}

bool RomLayerDevice::read_bit_output() {
  switch (state_) {
    case State::ReadRom:
      return rom_.bit(bit_index_);
    case State::Search:
      if (search_phase_ == 0) return rom_.bit(bit_index_);
      if (search_phase_ == 1) return !rom_.bit(bit_index_);
      return true;
    case State::Function:
      return function_drive();
    case State::WaitRomCommand:
    case State::MatchRom:
    case State::Deselected:
      return true;
  }
  return true;
}

void RomLayerDevice::on_master_bit(bool line) {
  switch (state_) {
    case State::WaitRomCommand:
      rx_byte_ = static_cast<Byte>(rx_byte_ | (line ? 1U << rx_bits_ : 0U));
      if (++rx_bits_ == 8) dispatch_rom_command(rx_byte_);
      return;
    case State::ReadRom:
      if (++bit_index_ == 64) state_ = State::Function;
      return;
    case State::MatchRom:
      if (line != rom_.bit(bit_index_)) {
        state_ = State::Deselected;
      } else if (++bit_index_ == 64) {
        state_ = State::Function;
      }
      return;
    case State::Search:
      if (search_phase_ < 2) {
        ++search_phase_;
        return;
      }
      search_phase_ = 0;
      if (line != rom_.bit(bit_index_)) {
        state_ = State::Deselected;
      } else if (++bit_index_ == 64) {
        state_ = State::Function;
      }
      return;
    case State::Function:
      function_observe(line);
      return;
    case State::Deselected:
      return;
  }
}

void RomLayerDevice::dispatch_rom_command(Byte cmd) {
  bit_index_ = 0;
  search_phase_ = 0;
  switch (cmd) {
    case rom_cmd::kReadRom: state_ = State::ReadRom; break;
    case rom_cmd::kMatchRom: state_ = State::MatchRom; break;
    case rom_cmd::kSkipRom: state_ = State::Function; break;
    case rom_cmd::kSearchRom: state_ = State::Search; break;
    case rom_cmd::kAlarmSearch: state_ = alarm_flag() ? State::Search : State::Deselected; break;
    default: state_ = State::Deselected; break;
  }
}

// --- Bus ------------------------------------------------------------------

Bus::Bus(const Topology& topology)
    : bit_error_rate_(topology.bit_error_rate), rng_(topology.rng_seed) {}

SlaveDevice& Bus::attach(std::unique_ptr<SlaveDevice> device) {
  if (find(device->rom()) != nullptr) {
    throw ConfigError("duplicate ROM on bus: " + device->rom().to_string());
  }
  devices_.push_back(std::move(device));
  return *devices_.back();
}

SlaveDevice* Bus::find(const RomCode& rom) {
  for (auto& d : devices_) {
    if (d->rom() == rom) return d.get();
  }
  return nullptr;
}

void Bus::log(BusOp::Kind kind, Byte value) {
  ++op_count_;
  if (recording_) transcript_.append(kind, value);
}

bool Bus::slot(bool master_bit) {
  bool line = master_bit;
  for (auto& d : devices_) line = d->read_bit_output() && line;
  for (auto& d : devices_) d->on_master_bit(line);
  bool sampled = line;
  if (master_bit && bit_error_rate_ > 0.0) {
    const double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
    if (u < bit_error_rate_) sampled = !sampled;
  }
  return sampled;
}

bool Bus::reset() {
  bool presence = false;
  for (auto& d : devices_) presence = d->on_reset() || presence;
  ++reset_count_;
  log(BusOp::Kind::Reset, presence ? 1 : 0);
  return presence;
}

// Write ops log the level the master saw, which differs from the written
// value only when a slave holds the line low through a 1 slot.
void Bus::write_bit(bool bit) {
  log(BusOp::Kind::WriteBit, slot(bit) ? 1 : 0);
}

bool Bus::read_bit() {
  const bool b = slot(true);
  log(BusOp::Kind::ReadBit, b ? 1 : 0);
  return b;
}

void Bus::write_byte(Byte value) {
  Byte seen = 0;
  for (int i = 0; i < 8; ++i) {
    if (slot(((value >> i) & 1U) != 0)) seen = static_cast<Byte>(seen | 1U << i);
  }
  log(BusOp::Kind::WriteByte, seen);
}

Byte Bus::read_byte() {
  Byte value = 0;
  for (int i = 0; i < 8; ++i) {
    if (slot(true)) value = static_cast<Byte>(value | 1U << i);
  }
  log(BusOp::Kind::ReadByte, value);
  return value;
}

bool Bus::touch_bit(bool bit) {
  if (!bit) {
    write_bit(false);
    return false;
  }
  return read_bit();
}

Byte Bus::touch_byte(Byte value) {
  Byte sampled = 0;
  for (int i = 0; i < 8; ++i) {
    if (touch_bit(((value >> i) & 1U) != 0)) sampled = static_cast<Byte>(sampled | 1U << i);
  }
  return sampled;
}

}  // namespace domo
