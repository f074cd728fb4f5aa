// Acceptance runner: one line per criterion, nonzero exit if any fails.
//
//   acceptance <path-to-domosim> <source-dir>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <thread>

#include <fcntl.h>
#include <netinet/in.h>
#include <signal.h>
#include <spawn.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include "httplib.h"
#include "json.hpp"

#include "domo/bridge.hpp"
#include "domo/error.hpp"
#include "domo/firmware.hpp"
#include "domo/http_api.hpp"
#include "domo/installation.hpp"
#include "domo/master.hpp"
#include "domo/scenario.hpp"
#include "support.hpp"

extern char** environ;

using namespace domo;

namespace {

std::string g_domosim;
std::filesystem::path g_source;

/// Thrown by a criterion body to report why it failed.
struct Failure {
  std::string why;
};

void expect(bool ok, const std::string& why) {
  if (!ok) throw Failure{why};
}

struct Criterion {
  int id;
  std::string name;
  double limit_s;  // 0 = no time limit
  std::function<std::string()> body;
};

// --- 1 ---------------------------------------------------------------------

std::string crc_soundness() {
  std::mt19937_64 rng(1001);
  for (int i = 0; i < 10000; ++i) {
    std::vector<Byte> data(1 + rng() % 32);
    for (auto& b : data) b = static_cast<Byte>(rng());
    expect(crc8(data) == test::crc8_oracle(data), "table crc disagrees with polynomial division");
    data.push_back(crc8(data));
    expect(crc8(data) == 0x00, "payload with appended crc does not check to zero");
  }
  long detected = 0;
  for (int i = 0; i < 10000; ++i) {
    const auto pad = build_scratchpad(TemperatureValue::from_half_degrees(static_cast<int>(rng() % 361) - 110),
                                      static_cast<std::int8_t>(rng()), static_cast<std::int8_t>(rng()));
    const auto clean = pad.to_bytes();
    for (int bit = 0; bit < 72; ++bit) {
      auto bad = clean;
      bad[bit / 8] ^= static_cast<Byte>(1U << (bit % 8));
      try {
        parse_scratchpad(bad);
      } catch (const CrcError&) {
        ++detected;
        continue;
      }
      throw Failure{"undetected corruption at bit " + std::to_string(bit)};
    }
  }
  return "10000 payloads, " + std::to_string(detected) + " corruptions detected";
}

// --- 2 ---------------------------------------------------------------------

std::string temperature_codec() {
  int n = 0;
  for (int h = -110; h <= 250; ++h, ++n) {
    const auto t = TemperatureValue::from_half_degrees(h);
    const auto reg = encode_temperature(t);
    // Independent register oracle: 16-bit two's complement of the half-degree count.
    const auto raw = static_cast<std::uint16_t>(static_cast<std::int16_t>(h));
    expect(reg.lsb == (raw & 0xFF) && reg.msb == (raw >> 8), "register layout mismatch at " + t.to_string());
    expect(decode_temperature(reg.lsb, reg.msb) == t, "round-trip mismatch at " + t.to_string());
  }
  expect(n == 361, "wrong value count");
  return "361 values round-trip";
}

// --- 3 ---------------------------------------------------------------------

std::string search_completeness() {
  std::size_t runs = 0;
  for (std::size_t n : {0U, 1U, 2U, 5U, 20U, 64U}) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      std::mt19937_64 rng(3000 + seed * 131 + n);
      const auto roms = test::unique_roms(rng, n);
      test::SensorBench bench;
      for (const auto& r : roms) bench.add(r, 20.0);
      DirectMaster m(bench.bus);
      const auto result = search(m, false);
      const std::set<RomCode> got(result.roms.begin(), result.roms.end());
      const std::set<RomCode> want(roms.begin(), roms.end());
      expect(got == want && result.roms.size() == n,
             "N=" + std::to_string(n) + " seed " + std::to_string(seed) + ": wrong set");
      const auto resets = test::presence_resets(bench.bus.transcript());
      expect(resets == n, "N=" + std::to_string(n) + " seed " + std::to_string(seed) + ": " +
                              std::to_string(resets) + " reset cycles");
      ++runs;
    }
  }
  return std::to_string(runs) + " populations exact, N reset cycles each";
}

// --- 4 ---------------------------------------------------------------------

std::string alarm_correctness() {
  std::mt19937_64 rng(4004);
  std::size_t flagged_total = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto roms = test::unique_roms(rng, 1 + rng() % 16);
    test::SensorBench bench;
    std::set<RomCode> oracle;
    for (const auto& r : roms) {
      const double celsius = std::uniform_real_distribution<double>(-55.0, 125.0)(rng);
      const auto th = static_cast<std::int8_t>(static_cast<int>(rng() % 181) - 55);
      const auto tl = static_cast<std::int8_t>(static_cast<int>(rng() % 181) - 55);
      bench.add(r, celsius, {th, tl});
      if (test::alarm_oracle(test::quantize_oracle(celsius), th, tl)) oracle.insert(r);
    }
    DirectMaster m(bench.bus);
    m.reset();
    rom_skip(m);
    m.write_byte(sensor_cmd::kConvertT);
    bench.clock.advance(SensorDevice::kConversionMs);
    const auto found = search(m, true).roms;
    const std::set<RomCode> got(found.begin(), found.end());
    expect(got == oracle && found.size() == got.size(), "trial " + std::to_string(trial) + " differs from oracle");
    flagged_total += oracle.size();
  }
  return "1000 trials match, " + std::to_string(flagged_total) + " alarms total";
}

// --- 5 ---------------------------------------------------------------------

std::string bridge_differential() {
  std::mt19937_64 rng(5005);
  std::size_t slots = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const auto roms = test::unique_roms(rng, rng() % 8);
    const auto script = test::random_script(rng, roms.size(), 5 + rng() % 25);
    test::SensorBench direct_bench;
    test::SensorBench bridge_bench;
    for (const auto& r : roms) {
      const double t = std::uniform_real_distribution<double>(-10.0, 50.0)(rng);
      const Thresholds th{static_cast<std::int8_t>(rng() % 40), static_cast<std::int8_t>(rng() % 20)};
      direct_bench.add(r, t, th);
      bridge_bench.add(r, t, th);
    }
    DirectMaster direct(direct_bench.bus);
    direct.reset();  // mirrors the calibration reset sent when the link opens
    test::run_script(direct, direct_bench, roms, script);

    Bridge bridge(bridge_bench.bus);
    bridge.set_logging(false);
    BridgePort port(bridge);
    BridgeMaster host(port, trial % 2 ? BridgeMaster::SearchStrategy::Accelerated
                                      : BridgeMaster::SearchStrategy::Triplet);
    test::run_script(host, bridge_bench, roms, script);

    const auto a = direct_bench.bus.transcript().normalized();
    const auto b = bridge_bench.bus.transcript().normalized();
    expect(a == b, "script " + std::to_string(trial) + " transcripts differ");
    slots += a.size();
  }

  Bus idle;
  Bridge bridge(idle);
  bridge.set_logging(false);
  BridgePort port(bridge);
  BridgeMaster host(port);
  std::size_t escapes = 0;
  for (int i = 0; i < 10000; ++i) {
    std::vector<Byte> data(rng() % 65);
    const int density = i % 4;  // 0: random, 1: 50% E3, 2: 90% E3, 3: all E3
    for (auto& b : data) {
      const bool e3 = density == 3 || (density == 1 && rng() % 2 == 0) || (density == 2 && rng() % 10 != 0);
      b = e3 ? 0xE3 : static_cast<Byte>(rng());
    }
    escapes += static_cast<std::size_t>(std::count(data.begin(), data.end(), 0xE3));
    expect(host.send_data(data) == data, "escape round-trip failed for case " + std::to_string(i));
  }
  return "500 scripts (" + std::to_string(slots) + " slots) identical; 10000 escape cases (" +
         std::to_string(escapes) + " E3 bytes)";
}

// --- 6 ---------------------------------------------------------------------

std::string firmware_golden() {
  struct Row {
    char cmd;
    bool pin_before;
    const char* out;
  };
  const Row rows[] = {{'b', false, "ON\n"},  {'b', true, "ON\n"},    {'z', false, "OFF\n"},
                      {'z', true, "OFF\n"},  {'Y', false, "off \n"}, {'Y', true, "on\n"},
                      {'a', false, "ON\n"},  {'a', true, "ON\n"},    {'s', false, "OFF\n"},
                      {'s', true, "OFF\n"},  {'X', false, "OFF \n"}, {'X', true, "On\n"}};
  for (const auto& r : rows) {
    const bool red = r.cmd == 'b' || r.cmd == 'z' || r.cmd == 'Y';
    FirmwareState s{red && r.pin_before, !red && r.pin_before};
    const auto out = fw_handle_byte(s, static_cast<Byte>(r.cmd));
    expect(out == r.out, std::string("command '") + r.cmd + "' emitted wrong text");
  }
  std::mt19937_64 rng(6006);
  for (int pins = 0; pins < 4; ++pins) {
    FirmwareState s{(pins & 1) != 0, (pins & 2) != 0};
    const auto before = s;
    for (int i = 0; i < 1000; ++i) {
      Byte b;
      do {
        b = static_cast<Byte>(rng());
      } while (b == 'a' || b == 's' || b == 'b' || b == 'z');
      fw_handle_byte(s, b);
      expect(s == before, "fuzz byte changed a pin");
    }
  }
  return "12 golden rows exact; 4000 fuzz bytes changed no pin";
}

// --- 7 ---------------------------------------------------------------------

std::string noise_resilience() {
  HouseConfig cfg;
  cfg.topology = {0.0, 1e-3, 7007};
  const double temps[] = {22.5, -10.0, 85.5};
  for (int i = 0; i < 3; ++i) {
    SensorConfig s;
    s.id = rom_from_seed(70 + i);
    s.thermal.t_ambient = s.thermal.t_room = temps[i];
    cfg.sensors.push_back(s);
  }
  GatewayConfig gc;
  gc.retry_limit = 3;
  Installation in(cfg, gc);
  long good = 0, delivered = 0, wrong = 0;
  const long total = 1000L * 3;
  for (int cycle = 0; cycle < 1000; ++cycle) {
    in.gateway().poll_cycle();
    const auto snap = in.gateway().snapshot();
    for (int i = 0; i < 3; ++i) {
      const auto* node = snap->find(*cfg.sensors[static_cast<std::size_t>(i)].id);
      if (!node || !node->temperature) continue;
      ++delivered;
      if (node->temperature->half_degrees() != test::quantize_oracle(temps[i])) {
        ++wrong;
        continue;
      }
      if (!node->stale) ++good;
    }
  }
  const double rate = static_cast<double>(good) / static_cast<double>(total);
  expect(wrong == 0, std::to_string(wrong) + " wrong values delivered");
  expect(rate >= 0.995, "fresh correct rate " + std::to_string(rate));
  char buf[128];
  std::snprintf(buf, sizeof buf, "%.4f fresh and correct over %ld node-cycles, 0 wrong", rate, total);
  return buf;
}

// --- 8 ---------------------------------------------------------------------

int free_port() {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = 0;
  ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr);
  socklen_t len = sizeof addr;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  ::close(fd);
  return ntohs(addr.sin_port);
}

class Process {
 public:
  explicit Process(std::vector<std::string> args) {
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    argv.push_back(nullptr);
    posix_spawn_file_actions_t fa;
    posix_spawn_file_actions_init(&fa);
    posix_spawn_file_actions_addopen(&fa, 1, "/dev/null", O_WRONLY, 0);
    posix_spawn_file_actions_addopen(&fa, 2, "/dev/null", O_WRONLY, 0);
    if (posix_spawn(&pid_, argv[0], &fa, nullptr, argv.data(), environ) != 0) pid_ = -1;
    posix_spawn_file_actions_destroy(&fa);
    expect(pid_ > 0, "cannot start " + args[0]);
  }
  ~Process() { stop(); }

  /// SIGTERM and wait; returns the exit status.
  int stop() {
    if (pid_ <= 0) return status_;
    ::kill(pid_, SIGTERM);
    int st = 0;
    ::waitpid(pid_, &st, 0);
    pid_ = -1;
    status_ = WIFEXITED(st) ? WEXITSTATUS(st) : 128 + WTERMSIG(st);
    return status_;
  }

 private:
  pid_t pid_ = -1;
  int status_ = -1;
};

template <typename Pred>
bool wait_for(Pred pred, int timeout_ms) {
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
  while (std::chrono::steady_clock::now() < deadline) {
    if (pred()) return true;
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
  return false;
}

std::string persistence() {
  const auto dir = std::filesystem::temp_directory_path() / ("domo-accept-" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const std::string id = "10.5F7B8D020800";
  {
    std::ofstream out(dir / "house.json");
    out << R"({"eeprom_dir": "eeprom", "sensors": [{"id": ")" << id << R"(", "ambient": 22.5, "th": 75}]})";
  }
  std::filesystem::create_directories(dir / "eeprom");
  const int port = free_port();
  auto launch = [&] {
    return Process({g_domosim, "--house", (dir / "house.json").string(), "--http-port", std::to_string(port),
                    "serve", "--wall-interval-ms", "20"});
  };
  httplib::Client client("127.0.0.1", port);
  client.set_connection_timeout(1);
  auto temphigh = [&]() -> std::string {
    auto res = client.Get("/1-wire/" + id + "/temphigh");
    return res && res->status == 200 ? res->body : std::string();
  };

  std::string result;
  {
    auto first = launch();
    expect(wait_for([&] { return temphigh() == "75\n"; }, 10000), "first gateway never served temphigh");
    auto res = client.Put("/1-wire/" + id + "/temphigh", "25", "text/plain");
    expect(res && res->status == 202, "PUT temphigh not accepted");
    expect(wait_for([&] { return temphigh() == "25\n"; }, 10000), "write never applied");
    expect(first.stop() == 0, "gateway did not exit cleanly");
  }
  expect(!temphigh().size(), "gateway still answering after stop");
  {
    auto second = launch();
    expect(wait_for([&] { return !temphigh().empty(); }, 10000), "restarted gateway never served temphigh");
    const auto v = temphigh();
    expect(v == "25\n", "restarted gateway recalled '" + v + "'");
    second.stop();
  }
  std::filesystem::remove_all(dir);
  return "temphigh 25 recalled after process restart";
}

// --- 9 ---------------------------------------------------------------------

std::string closed_loop() {
  const auto sc = load_scenario(g_source / "configs/thermostat_scenario.json");
  const auto report = run_scenario(sc);
  expect(report.passed, report.failure);

  // Same loop driven directly, reporting the observed envelope.
  Installation in(sc.house, sc.gateway);
  in.gateway().start();
  in.gateway().set_running(true);
  ThermostatRule rule;
  rule.sensor = *sc.house.sensors[0].id;
  rule.setpoint = 22.0;
  rule.hysteresis = 1.0;
  expect(in.gateway().write_thermostat(rule).status == 202, "thermostat rejected");
  for (int i = 0; i < 10; ++i) in.gateway().poll_cycle();
  double lo = 1e9, hi = -1e9;
  for (int i = 0; i < 100; ++i) {
    in.gateway().poll_cycle();
    lo = std::min(lo, in.house().thermal(0).t_room());
    hi = std::max(hi, in.house().thermal(0).t_room());
  }
  expect(lo >= 20.5 && hi <= 23.5, "room left the band");
  char buf[96];
  std::snprintf(buf, sizeof buf, "t_room in [%.2f, %.2f] over 100 cycles", lo, hi);
  return buf;
}

// --- 10 --------------------------------------------------------------------

std::string read_path() {
  HouseConfig cfg;
  const double temps[] = {22.5, 22.3, -0.3, -55.0, 125.0, 0.0};
  for (int i = 0; i < 6; ++i) {
    SensorConfig s;
    s.id = i == 0 ? parse_rom_text("10.5F7B8D020800") : rom_from_seed(1000 + i);
    s.thermal.t_ambient = s.thermal.t_room = temps[i];
    cfg.sensors.push_back(s);
  }
  Installation in(cfg, {});
  in.gateway().start();
  HttpServer server(in.gateway());
  const int port = server.start("127.0.0.1", 0);
  in.gateway().poll_cycle();

  httplib::Client client("127.0.0.1", port);
  const std::regex format(R"(^-?[0-9]+\.[05]\n$)");
  std::string sample;
  for (std::size_t i = 0; i < cfg.sensors.size(); ++i) {
    const auto& id = *cfg.sensors[i].id;
    auto res = client.Get("/1-wire/" + id.to_string() + "/temperature");
    expect(res && res->status == 200, "GET failed for " + id.to_string());
    const auto expected = in.house().sensor(i).last_conversion()->to_string() + "\n";
    expect(res->body == expected, id.to_string() + ": got '" + res->body + "'");
    expect(std::regex_match(res->body, format), "bad format '" + res->body + "'");
    if (i == 0) sample = res->body.substr(0, res->body.size() - 1);
  }
  server.stop();
  return "6 devices; 10.5F7B8D020800 -> " + sample;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 3) {
    std::cerr << "usage: acceptance <domosim> <source-dir>\n";
    return 2;
  }
  g_domosim = argv[1];
  g_source = argv[2];
  ::signal(SIGPIPE, SIG_IGN);

  const std::vector<Criterion> criteria{
      {1, "crc soundness", 5.0, crc_soundness},
      {2, "temperature codec", 1.0, temperature_codec},
      {3, "search completeness", 10.0, search_completeness},
      {4, "alarm correctness", 10.0, alarm_correctness},
      {5, "bridge differential", 30.0, bridge_differential},
      {6, "firmware golden table", 1.0, firmware_golden},
      {7, "noise resilience", 30.0, noise_resilience},
      {8, "threshold persistence", 0.0, persistence},
      {9, "closed loop", 10.0, closed_loop},
      {10, "end-to-end read path", 0.0, read_path},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    std::string detail;
    bool ok = true;
    try {
      detail = c.body();
    } catch (const Failure& f) {
      ok = false;
      detail = f.why;
    } catch (const std::exception& e) {
      ok = false;
      detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (ok && c.limit_s > 0 && secs > c.limit_s) {
      ok = false;
      detail += " (over the " + std::to_string(static_cast<int>(c.limit_s)) + " s limit)";
    }
    failed += ok ? 0 : 1;
    std::printf("[%s] AC%-2d %-22s %7.3f s  %s\n", ok ? "PASS" : "FAIL", c.id, c.name.c_str(), secs,
                detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
