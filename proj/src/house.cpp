#include "domo/house.hpp"

#include <fstream>
#include <random>
#include <set>

#include "domo/error.hpp"

namespace domo {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& obj, std::initializer_list<std::string_view> allowed,
                         std::string_view where) {
  for (const auto& [key, _] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError("unknown key '" + key + "' in " + std::string(where));
    }
  }
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

std::int8_t threshold_field(const json& obj, const char* key, int fallback) {
  const int v = get_or<int>(obj, key, fallback);
  if (v < -55 || v > 125) throw ConfigError(std::string(key) + " must lie in [-55, 125]");
  return static_cast<std::int8_t>(v);
}

}  // namespace

RomCode rom_from_seed(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::uint64_t bits = rng();
  std::array<Byte, 6> serial{};
  for (int i = 0; i < 6; ++i) serial[i] = static_cast<Byte>(bits >> (8 * i));
  return RomCode::make(RomCode::kSensorFamily, serial);
}

HouseConfig parse_house_config(const json& doc, const std::filesystem::path& base_dir) {
  if (!doc.is_object()) throw ConfigError("house config must be a JSON object");
  reject_unknown_keys(doc, {"topology", "sensors", "actuators", "eeprom_dir"}, "house config");

  HouseConfig cfg;
  if (doc.contains("topology")) {
    const auto& t = doc.at("topology");
    if (!t.is_object()) throw ConfigError("topology must be an object");
    reject_unknown_keys(t, {"radius_m", "bit_error_rate", "seed"}, "topology");
    cfg.topology.radius_m = get_or<double>(t, "radius_m", 0.0);
    cfg.topology.bit_error_rate = get_or<double>(t, "bit_error_rate", 0.0);
    cfg.topology.rng_seed = get_or<std::uint64_t>(t, "seed", 0);
  }

  if (doc.contains("eeprom_dir")) {
    std::filesystem::path dir = get_or<std::string>(doc, "eeprom_dir", "");
    cfg.eeprom_dir = dir.is_relative() && !base_dir.empty() ? base_dir / dir : dir;
  }

  std::set<RomCode> seen;
  if (doc.contains("sensors")) {
    const auto& list = doc.at("sensors");
    if (!list.is_array()) throw ConfigError("sensors must be an array");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const auto& s = list[i];
      if (!s.is_object()) throw ConfigError("sensor entry must be an object");
      reject_unknown_keys(s,
                          {"id", "seed", "ambient", "initial", "k_loss", "q_heater", "dt", "th",
                           "tl", "parasite"},
                          "sensor");
      SensorConfig sc;
      if (s.contains("id")) {
        try {
          sc.id = parse_rom_text(get_or<std::string>(s, "id", ""));
        } catch (const Error& e) {
          throw ConfigError(std::string("sensor id: ") + e.what());
        }
      } else if (s.contains("seed")) {
        sc.seed = get_or<std::uint64_t>(s, "seed", 0);
        sc.id = rom_from_seed(sc.seed);
      } else {
        throw ConfigError("sensor entry needs an 'id' or a 'seed'");
      }
      if (!seen.insert(*sc.id).second) throw ConfigError("duplicate sensor id " + sc.id->to_string());
      sc.thermal.t_ambient = get_or<double>(s, "ambient", 20.0);
      sc.thermal.t_room = get_or<double>(s, "initial", sc.thermal.t_ambient);
      sc.thermal.k_loss = get_or<double>(s, "k_loss", 0.01);
      sc.thermal.q_heater = get_or<double>(s, "q_heater", 0.0);
      sc.thermal.dt = get_or<double>(s, "dt", 0.1);
      sc.thresholds.th = threshold_field(s, "th", 75);
      sc.thresholds.tl = threshold_field(s, "tl", 10);
      sc.parasite = get_or<bool>(s, "parasite", false);
      cfg.sensors.push_back(sc);
    }
  }

  if (doc.contains("actuators")) {
    const auto& list = doc.at("actuators");
    if (!list.is_array()) throw ConfigError("actuators must be an array");
    for (const auto& a : list) {
      if (!a.is_object()) throw ConfigError("actuator binding must be an object");
      reject_unknown_keys(a, {"actuator", "heats"}, "actuator binding");
      ActuatorBinding binding;
      try {
        binding.actuator = parse_led_color(get_or<std::string>(a, "actuator", ""));
      } catch (const Error& e) {
        throw ConfigError(e.what());
      }
      for (const auto& target : a.value("heats", json::array())) {
        std::optional<std::size_t> index;
        if (target.is_number_unsigned()) {
          index = target.get<std::size_t>();
          if (*index >= cfg.sensors.size()) throw ConfigError("actuator binding index out of range");
        } else if (target.is_string()) {
          const auto rom = parse_rom_text(target.get<std::string>());
          for (std::size_t i = 0; i < cfg.sensors.size(); ++i) {
            if (cfg.sensors[i].id == rom) index = i;
          }
          if (!index) throw ConfigError("actuator binding names unknown sensor " + rom.to_string());
        } else {
          throw ConfigError("actuator 'heats' entries must be sensor ids or indices");
        }
        binding.sensors.push_back(*index);
      }
      cfg.bindings.push_back(binding);
    }
  }
  return cfg;
}

HouseConfig load_house_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open house config " + file.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("house config " + file.string() + ": " + e.what());
  }
  return parse_house_config(doc, file.parent_path());
}

House::House(const HouseConfig& config)
    : eeprom_(config.eeprom_dir.empty()
                  ? std::unique_ptr<EepromStore>(std::make_unique<MemoryEepromStore>())
                  : std::make_unique<DirectoryEepromStore>(config.eeprom_dir)),
      topology_(validate_topology(config.topology)),
      bus_(topology_.effective),
      bridge_(bus_),
      bridge_port_(bridge_),
      firmware_port_(firmware_),
      bindings_(config.bindings) {
  for (const auto& sc : config.sensors) {
    thermals_.push_back(std::make_unique<ThermalModel>(sc.thermal));
    ThermalModel* room = thermals_.back().get();
    auto& dev = bus_.emplace<SensorDevice>(sc.id.value_or(rom_from_seed(sc.seed)), clock_,
                                           [room] { return room->t_room(); }, *eeprom_,
                                           SensorOptions{sc.thresholds, sc.parasite});
    sensors_.push_back(&dev);
  }
}

std::optional<std::size_t> House::index_of(const RomCode& rom) const {
  for (std::size_t i = 0; i < sensors_.size(); ++i) {
    if (sensors_[i]->rom() == rom) return i;
  }
  return std::nullopt;
}

void House::advance(std::uint64_t ms) {
  for (const auto& b : bindings_) {
    for (std::size_t i : b.sensors) thermals_.at(i)->set_heater(firmware_.pin(b.actuator));
  }
  for (auto& t : thermals_) t->advance_ms(ms);
  clock_.advance(ms);
}

}  // namespace domo
