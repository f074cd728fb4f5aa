#include "domo/scenario.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "domo/error.hpp"
#include "domo/http_api.hpp"
#include "domo/installation.hpp"

namespace domo {

using nlohmann::json;

namespace {

std::string trimmed(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

std::size_t resolve_sensor(const json& ref, const HouseConfig& house) {
  if (ref.is_number_unsigned()) {
    const auto i = ref.get<std::size_t>();
    if (i >= house.sensors.size()) throw ConfigError("sensor index out of range");
    return i;
  }
  if (ref.is_string()) {
    const auto rom = parse_rom_text(ref.get<std::string>());
    for (std::size_t i = 0; i < house.sensors.size(); ++i) {
      if (house.sensors[i].id == rom) return i;
    }
    throw ConfigError("scenario names unknown sensor " + rom.to_string());
  }
  throw ConfigError("sensor reference must be an id or an index");
}

ExpectProperty parse_expect(const json& s) {
  ExpectProperty e;
  e.path = s.at("path").get<std::string>();
  if (e.path.empty() || e.path.front() != '/') throw ConfigError("expectation path must be absolute");
  if (s.contains("equals")) {
    const auto& v = s.at("equals");
    if (v.is_number()) {
      e.equals_number = v.get<double>();
    } else if (v.is_string()) {
      e.equals_text = v.get<std::string>();
    } else {
      throw ConfigError("'equals' must be a number or a string");
    }
  }
  e.tolerance = s.value("tolerance", 0.0);
  if (!(e.tolerance >= 0.0)) throw ConfigError("tolerance must be non-negative");
  if (s.contains("min")) e.min = s.at("min").get<double>();
  if (s.contains("max")) e.max = s.at("max").get<double>();
  if (!e.equals_number && !e.equals_text && !e.min && !e.max) {
    throw ConfigError("expect-property needs 'equals', 'min' or 'max'");
  }
  if (e.equals_text && (e.min || e.max)) throw ConfigError("text expectations take no bounds");
  return e;
}

ScenarioStep parse_step(const json& s, const HouseConfig& house) {
  if (!s.is_object()) throw ConfigError("step must be an object");
  const auto op = s.at("op").get<std::string>();
  if (op == "advance-clock") {
    AdvanceClock a;
    a.cycles = s.value("cycles", 1);
    if (a.cycles < 1) throw ConfigError("cycles must be positive");
    for (const auto& e : s.value("each_cycle", json::array())) a.each_cycle.push_back(parse_expect(e));
    return a;
  }
  if (op == "set-ambient") {
    return SetAmbient{resolve_sensor(s.at("sensor"), house), s.at("value").get<double>()};
  }
  if (op == "expect-property") return parse_expect(s);
  if (op == "http-call") {
    HttpCall h;
    h.method = s.value("method", std::string("GET"));
    if (h.method != "GET" && h.method != "PUT") throw ConfigError("http-call method must be GET or PUT");
    h.path = s.at("path").get<std::string>();
    h.body = s.value("body", std::string());
    if (s.contains("expect_status")) h.expect_status = s.at("expect_status").get<int>();
    return h;
  }
  if (op == "inject-ber") {
    InjectBer b{s.at("value").get<double>()};
    if (!(b.value >= 0.0 && b.value <= 0.01)) throw ConfigError("inject-ber value must lie in [0, 0.01]");
    return b;
  }
  throw ConfigError("unknown scenario op '" + op + "'");
}

std::string op_name(const ScenarioStep& step) {
  return std::visit(
      [](const auto& s) -> std::string {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, AdvanceClock>) return "advance-clock";
        if constexpr (std::is_same_v<T, SetAmbient>) return "set-ambient";
        if constexpr (std::is_same_v<T, ExpectProperty>) return "expect-property";
        if constexpr (std::is_same_v<T, HttpCall>) return "http-call";
        return "inject-ber";
      },
      step);
}

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

class Runner {
 public:
  explicit Runner(const Scenario& sc) : install_(sc.house, sc.gateway) {
    install_.gateway().start();
    install_.gateway().set_running(true);
  }

  /// Empty on success, otherwise a description of the mismatch.
  std::string check(const ExpectProperty& e) {
    std::string actual;
    if (e.path.rfind("/sim/", 0) == 0) {
      const auto rest = std::string_view(e.path).substr(5);
      const auto slash = rest.find('/');
      if (slash == std::string_view::npos) return e.path + ": malformed simulation path";
      std::optional<std::size_t> index;
      try {
        index = install_.house().index_of(parse_rom_text(rest.substr(0, slash)));
      } catch (const Error&) {
      }
      if (!index) return e.path + ": unknown sensor";
      const auto field = rest.substr(slash + 1);
      auto& room = install_.house().thermal(*index);
      if (field == "room") {
        actual = fmt(room.t_room());
      } else if (field == "heater") {
        actual = room.heater_on() ? "on" : "off";
      } else {
        return e.path + ": unknown simulation field";
      }
    } else {
      const auto r = handle_request(install_.gateway(), "GET", e.path, "");
      if (r.status != 200) return e.path + ": HTTP " + std::to_string(r.status) + " " + trimmed(r.body);
      actual = trimmed(r.body);
    }
    ++checked_;

    if (e.equals_text) {
      if (actual != *e.equals_text) return e.path + ": expected '" + *e.equals_text + "', actual '" + actual + "'";
      return {};
    }
    double value = 0.0;
    const auto [end, ec] = std::from_chars(actual.data(), actual.data() + actual.size(), value);
    if (ec != std::errc() || end != actual.data() + actual.size()) {
      return e.path + ": expected a number, actual '" + actual + "'";
    }
    if (e.equals_number && std::fabs(value - *e.equals_number) > e.tolerance) {
      return e.path + ": expected " + fmt(*e.equals_number) + " +/- " + fmt(e.tolerance) +
             ", actual " + actual;
    }
    if (e.min && value < *e.min) return e.path + ": expected >= " + fmt(*e.min) + ", actual " + actual;
    if (e.max && value > *e.max) return e.path + ": expected <= " + fmt(*e.max) + ", actual " + actual;
    return {};
  }

  std::string run(const ScenarioStep& step) {
    if (const auto* a = std::get_if<AdvanceClock>(&step)) {
      for (int c = 0; c < a->cycles; ++c) {
        install_.gateway().poll_cycle();
        for (const auto& e : a->each_cycle) {
          if (auto err = check(e); !err.empty()) return "cycle " + std::to_string(c + 1) + ": " + err;
        }
      }
      return {};
    }
    if (const auto* s = std::get_if<SetAmbient>(&step)) {
      install_.house().thermal(s->sensor).set_t_ambient(s->value);
      return {};
    }
    if (const auto* e = std::get_if<ExpectProperty>(&step)) return check(*e);
    if (const auto* h = std::get_if<HttpCall>(&step)) {
      const auto r = handle_request(install_.gateway(), h->method, h->path, h->body);
      if (h->expect_status && r.status != *h->expect_status) {
        return h->method + " " + h->path + ": expected status " + std::to_string(*h->expect_status) +
               ", actual " + std::to_string(r.status);
      }
      return {};
    }
    if (const auto* b = std::get_if<InjectBer>(&step)) {
      install_.house().bus().set_bit_error_rate(b->value);
      return {};
    }
    return {};
  }

  std::size_t checked() const { return checked_; }

 private:
  Installation install_;
  std::size_t checked_ = 0;
};

}  // namespace

Scenario parse_scenario(const json& doc, const std::filesystem::path& base_dir) {
  if (!doc.is_object()) throw ConfigError("scenario must be a JSON object");
  try {
    Scenario sc;
    const auto& house = doc.at("house");
    if (house.is_string()) {
      std::filesystem::path p = house.get<std::string>();
      sc.house = load_house_config(p.is_relative() ? base_dir / p : p);
    } else {
      sc.house = parse_house_config(house, base_dir);
    }
    if (doc.contains("gateway")) {
      const auto& g = doc.at("gateway");
      sc.gateway.poll_interval_ms = g.value("poll_interval_ms", sc.gateway.poll_interval_ms);
      sc.gateway.retry_limit = g.value("retry_limit", sc.gateway.retry_limit);
    }
    validate(sc.gateway);
    for (const auto& s : doc.at("steps")) sc.steps.push_back(parse_step(s, sc.house));
    return sc;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scenario: ") + e.what());
  } catch (const FormatError& e) {
    throw ConfigError(std::string("scenario: ") + e.what());
  }
}

Scenario load_scenario(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open scenario " + file.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("scenario " + file.string() + ": " + e.what());
  }
  return parse_scenario(doc, file.parent_path());
}

ScenarioReport run_scenario(const Scenario& scenario) {
  ScenarioReport report;
  Runner runner(scenario);
  for (std::size_t i = 0; i < scenario.steps.size(); ++i) {
    const auto& step = scenario.steps[i];
    const auto err = runner.run(step);
    ++report.steps_run;
    if (!err.empty()) {
      report.passed = false;
      report.failure = "step " + std::to_string(i) + " (" + op_name(step) + "): " + err;
      break;
    }
    report.log.push_back("step " + std::to_string(i) + " (" + op_name(step) + ") ok");
  }
  report.expectations_checked = runner.checked();
  return report;
}

}  // namespace domo
