// domosim: operator front door for the emulated installation.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <csignal>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "httplib.h"

#include "domo/error.hpp"
#include "domo/http_api.hpp"
#include "domo/installation.hpp"
#include "domo/scenario.hpp"

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

struct GlobalOptions {
  std::string house;
  std::optional<std::uint64_t> seed;
  int http_port = 8888;
};

domo::HouseConfig load_house(const GlobalOptions& g) {
  if (g.house.empty()) throw domo::ConfigError("--house is required");
  auto cfg = domo::load_house_config(g.house);
  if (g.seed) cfg.topology.rng_seed = *g.seed;
  return cfg;
}

std::string normalize_path(std::string path) {
  if (path.empty() || path.front() != '/') path = "/1-wire/" + path;
  return path;
}

int cmd_serve(const GlobalOptions& g, int control_port, std::uint64_t poll_ms,
              std::optional<std::uint64_t> wall_ms, const std::string& host) {
  domo::GatewayConfig gc;
  gc.http_port = static_cast<std::uint16_t>(g.http_port);
  gc.control_port = static_cast<std::uint16_t>(control_port);
  gc.poll_interval_ms = poll_ms;
  domo::validate(gc);

  domo::Installation install(load_house(g), gc);
  if (const auto& w = install.house().topology_warning()) std::cerr << "warning: " << *w << "\n";
  install.gateway().start();

  domo::HttpServer server(install.gateway());
  const int port = server.start(host, g.http_port);
  domo::PollLoop loop(install.gateway(), wall_ms.value_or(poll_ms));
  loop.start();
  std::cerr << "serving " << install.gateway().snapshot()->devices.size() << " device(s) on http://"
            << host << ":" << port << "\n";

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(50));
  loop.stop();
  server.stop();
  return 0;
}

int cmd_scan(const GlobalOptions& g) {
  domo::House house(load_house(g));
  if (const auto& w = house.topology_warning()) std::cerr << "warning: " << *w << "\n";
  domo::BridgeMaster master(house.bridge_port());
  auto roms = domo::search(master, false).roms;
  std::vector<std::string> ids;
  for (const auto& r : roms) ids.push_back(r.to_string());
  std::sort(ids.begin(), ids.end());
  for (const auto& id : ids) std::cout << id << "\n";
  return 0;
}

int cmd_cat(const GlobalOptions& g, const std::string& path) {
  httplib::Client client("127.0.0.1", g.http_port);
  auto res = client.Get(normalize_path(path));
  if (!res) {
    std::cerr << "error: gateway unreachable on port " << g.http_port << "\n";
    return 1;
  }
  if (res->status != 200) {
    std::cerr << "error: HTTP " << res->status << " " << res->body;
    return 1;
  }
  std::cout << res->body;
  return 0;
}

int cmd_set(const GlobalOptions& g, const std::string& path, const std::string& value) {
  httplib::Client client("127.0.0.1", g.http_port);
  auto res = client.Put(normalize_path(path), value, "text/plain");
  if (!res) {
    std::cerr << "error: gateway unreachable on port " << g.http_port << "\n";
    return 1;
  }
  if (res->status != 202 && res->status != 200) {
    std::cerr << "error: HTTP " << res->status << " " << res->body;
    return 1;
  }
  std::cout << res->body;
  return 0;
}

int cmd_scenario(const GlobalOptions& g, const std::string& file, bool verbose) {
  auto sc = domo::load_scenario(file);
  if (g.seed) sc.house.topology.rng_seed = *g.seed;
  const auto report = domo::run_scenario(sc);
  if (verbose) {
    for (const auto& line : report.log) std::cout << line << "\n";
  }
  if (!report.passed) {
    std::cout << "FAIL " << report.failure << "\n";
    return 1;
  }
  std::cout << "PASS " << report.steps_run << " steps, " << report.expectations_checked
            << " expectations\n";
  return 0;
}

int cmd_transcript(const GlobalOptions& g, int cycles, bool session) {
  domo::GatewayConfig gc;
  domo::Installation install(load_house(g), gc);
  install.gateway().start();
  for (int i = 0; i < cycles; ++i) install.gateway().poll_cycle();
  if (session) {
    std::cout << domo::format_session_log(install.house().bridge().session());
  } else {
    std::cout << install.house().bus().transcript().to_text();
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"domosim - emulated 1-Wire home-automation installation"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  app.add_option("--house", g.house, "House configuration (JSON)");
  app.add_option("--seed", g.seed, "Override the bus noise seed");
  app.add_option("--http-port", g.http_port, "Gateway HTTP port")->check(CLI::Range(0, 65535));

  auto* serve = app.add_subcommand("serve", "Run the gateway with its HTTP API");
  int control_port = 4304;
  std::uint64_t poll_ms = 1000;
  std::optional<std::uint64_t> wall_ms;
  std::string host = "127.0.0.1";
  serve->add_option("--control-port", control_port, "Reserved control port (not bound)");
  serve->add_option("--poll-interval-ms", poll_ms, "Simulated milliseconds per poll cycle");
  serve->add_option("--wall-interval-ms", wall_ms, "Real milliseconds between cycles");
  serve->add_option("--host", host, "Listen address");

  auto* scan = app.add_subcommand("scan", "Enumerate the bus through the bridge");

  auto* cat = app.add_subcommand("cat", "Print a property from a running gateway");
  std::string cat_path;
  cat->add_option("path", cat_path, "e.g. /1-wire/10.5F7B8D020800/temperature")->required();

  auto* set = app.add_subcommand("set", "Write a property on a running gateway");
  std::string set_path;
  std::string set_value;
  set->add_option("path", set_path)->required();
  set->add_option("value", set_value)->required();

  auto* scenario = app.add_subcommand("scenario", "Run a scripted scenario on the simulated clock");
  std::string scenario_file;
  bool verbose = false;
  scenario->add_option("file", scenario_file)->required()->check(CLI::ExistingFile);
  scenario->add_flag("-v,--verbose", verbose, "Print every step");

  auto* transcript = app.add_subcommand("transcript", "Dump the bus transcript of N poll cycles");
  int cycles = 1;
  bool session = false;
  transcript->add_option("--cycles", cycles, "Poll cycles to run")->check(CLI::NonNegativeNumber);
  transcript->add_flag("--session", session, "Print the bridge serial session instead");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*serve) return cmd_serve(g, control_port, poll_ms, wall_ms, host);
    if (*scan) return cmd_scan(g);
    if (*cat) return cmd_cat(g, cat_path);
    if (*set) return cmd_set(g, set_path, set_value);
    if (*scenario) return cmd_scenario(g, scenario_file, verbose);
    if (*transcript) return cmd_transcript(g, cycles, session);
  } catch (const domo::TopologyError& e) {
    std::cerr << "topology error: " << e.what() << "\n";
    return 3;
  } catch (const domo::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
