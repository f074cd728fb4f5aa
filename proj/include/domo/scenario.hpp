#pragma once

// Scripted runs against an in-process installation on the simulated clock.
//
// File layout:
//   {
//     "house":   { ...house config... } | "relative/path/house.json",
//     "gateway": { "poll_interval_ms": 1000, "retry_limit": 3 },
//     "steps": [
//       {"op": "advance-clock", "cycles": 10, "each_cycle": [ <expect-property>... ]},
//       {"op": "set-ambient", "sensor": "10.5F7B8D020800" | 0, "value": 15.0},
//       {"op": "expect-property", "path": "/1-wire/<id>/temperature",
//        "equals": 22.5 | "on", "tolerance": 0.0}            (or "min"/"max")
//       {"op": "http-call", "method": "PUT", "path": "/actuators/red", "body": "on",
//        "expect_status": 202},
//       {"op": "inject-ber", "value": 0.001}
//     ]
//   }
//
// Besides every GET endpoint, expectations may read "/sim/<id>/room" (the
// true room temperature) and "/sim/<id>/heater".

#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "domo/gateway.hpp"
#include "domo/house.hpp"

namespace domo {

struct ExpectProperty {
  std::string path;
  std::optional<double> equals_number;
  std::optional<std::string> equals_text;
  double tolerance = 0.0;
  std::optional<double> min;
  std::optional<double> max;
};

struct AdvanceClock {
  int cycles = 1;
  std::vector<ExpectProperty> each_cycle;
};

struct SetAmbient {
  std::size_t sensor = 0;
  double value = 0.0;
};

struct HttpCall {
  std::string method = "GET";
  std::string path;
  std::string body;
  std::optional<int> expect_status;
};

struct InjectBer {
  double value = 0.0;
};

using ScenarioStep = std::variant<AdvanceClock, SetAmbient, ExpectProperty, HttpCall, InjectBer>;

struct Scenario {
  HouseConfig house;
  GatewayConfig gateway;
  std::vector<ScenarioStep> steps;
};

/// Parses and validates every step up front. Throws ConfigError.
Scenario parse_scenario(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
Scenario load_scenario(const std::filesystem::path& file);

struct ScenarioReport {
  bool passed = true;
  std::size_t steps_run = 0;
  std::size_t expectations_checked = 0;
  /// Set on failure: "step <i> (<op>): <path>: expected <x>, actual <y>".
  std::string failure;
  std::vector<std::string> log;
};

ScenarioReport run_scenario(const Scenario& scenario);

}  // namespace domo
